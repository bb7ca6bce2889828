#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nuteval::schedule {

inline constexpr double kDefaultMu = 0.99;
inline constexpr double kDefaultEpsilon = 1e-8;

// EMA of the priming loss relative to its first observed value. Plain value
// type; copy it to checkpoint.
struct AdaptiveWeightState {
    double ema = 0.0;
    double initial_loss = 0.0;
    double mu = kDefaultMu;
    double epsilon = kDefaultEpsilon;
    std::uint64_t step = 0;
};

// ema and initial_loss both start at the first observed loss.
// Throws PreconditionError unless first_loss > 0, 0 < mu < 1 and epsilon > 0.
AdaptiveWeightState init_state(double first_loss, double mu = kDefaultMu, double epsilon = kDefaultEpsilon);

// clamp(ema / (initial_loss + epsilon), 0, 1)
double lambda(const AdaptiveWeightState& state) noexcept;

struct StepResult {
    AdaptiveWeightState state;
    double lambda = 0.0;
};

// ema' = mu * ema + (1 - mu) * loss. Throws PreconditionError on a negative
// or non-finite loss.
StepResult step(const AdaptiveWeightState& state, double priming_loss);

struct CombinedLossReport {
    double joint_loss = 0.0;
    double priming_loss = 0.0;
    double lambda = 0.0;
    double total = 0.0;  // joint_loss + lambda * priming_loss
};

// Throws PreconditionError when lambda is outside [0, 1].
CombinedLossReport combine(double joint_loss, double priming_loss, double lambda);

struct TrajectoryRow {
    std::uint64_t step = 0;
    double priming_loss = 0.0;
    double ema = 0.0;
    double lambda = 0.0;
};

// Runs step() over the losses; losses[0] initialises the state and is row 0.
std::vector<TrajectoryRow> trajectory(std::span<const double> losses, double mu = kDefaultMu,
                                      double epsilon = kDefaultEpsilon);

// Tab-separated with a header row: step, priming_loss, ema, lambda.
std::string trajectory_tsv(std::span<const TrajectoryRow> rows);
void write_trajectory(const std::filesystem::path& path, std::span<const TrajectoryRow> rows);

}  // namespace nuteval::schedule
