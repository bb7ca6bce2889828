#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nuteval::codebook {

// Dense row-major point matrix.
class PointSet {
public:
    PointSet() = default;
    PointSet(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}
    // Throws PreconditionError when rows differ in length or dim is 0.
    static PointSet from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t size() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * dim_, dim_}; }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * dim_, dim_}; }

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;
double euclidean_distance(std::span<const double> a, std::span<const double> b) noexcept;

struct KMeansOptions {
    std::size_t k = 2;
    std::uint64_t seed = 0;
    std::size_t max_iterations = 300;
    std::size_t n_init = 1;  // independent k-means++ restarts; lowest SSE wins
};

struct KMeansResult {
    std::vector<std::size_t> assignment;  // cluster index per point, in [0, k)
    PointSet centroids;
    double sse = 0.0;                 // within-cluster sum of squared distances
    std::vector<double> sse_history;  // after every update step of the kept run
    std::size_t iterations = 0;
};

// Lloyd iterations from k-means++ seeding. A cluster that empties is re-seeded
// with the point farthest from its centroid (taken from a cluster with >= 2
// members). Deterministic for fixed (points, options).
// Throws PreconditionError unless 2 <= k <= points.size().
KMeansResult kmeans(const PointSet& points, const KMeansOptions& options);

struct Silhouette {
    std::vector<double> per_point;  // s_i in [-1, 1]
    double score = 0.0;             // mean of per_point
};

// Euclidean silhouette. Singleton clusters get s_i = 0, as do points with
// a_i = b_i = 0. Labels may be any integers; throws PreconditionError when
// fewer than two distinct labels occur or sizes mismatch.
Silhouette silhouette(const PointSet& points, std::span<const std::size_t> assignment);

// Mean after dropping the floor(tau * n) lowest values. 0 <= tau < 0.5.
double trimmed_silhouette(std::span<const double> per_point, double tau);

struct SweepRow {
    std::size_t k = 0;
    double tau = 0.0;
    double score = 0.0;  // trimmed silhouette
};

struct DimensionSelection {
    std::size_t k = 0;
    double tau = 0.0;
    double score = 0.0;
    std::vector<SweepRow> table;  // ks ascending, taus ascending within k
};

// Clusters once per k and scores every tau. The maximum wins; ties prefer the
// larger k, then the smaller tau.
DimensionSelection select_dimension(const PointSet& points, std::span<const std::size_t> ks,
                                    std::span<const double> taus, std::uint64_t seed, std::size_t n_init = 4);

}  // namespace nuteval::codebook
