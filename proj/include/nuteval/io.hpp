#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace nuteval::io {

// Whole-file helpers; both throw IoError.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

nlohmann::json read_json(const std::filesystem::path& path);

// Calls fn(line_number, line) for every non-blank line. Line numbers are 1-based.
void for_each_line(std::string_view text,
                   const std::function<void(std::size_t, std::string_view)>& fn);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace nuteval::io
