#include "nuteval/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "nuteval/error.hpp"
#include "nuteval/random.hpp"

namespace nuteval::codebook {

PointSet PointSet::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    const auto dim = rows.front().size();
    if (dim == 0) throw PreconditionError("points need dimension >= 1");
    PointSet p(rows.size(), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != dim) {
            throw PreconditionError("point " + std::to_string(i) + " has dimension " + std::to_string(rows[i].size()) +
                                    ", expected " + std::to_string(dim));
        }
        std::copy(rows[i].begin(), rows[i].end(), p.row(i).begin());
    }
    return p;
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) noexcept {
    return std::sqrt(squared_distance(a, b));
}

// ---------------------------------------------------------------------------
// k-means

namespace {

std::vector<std::size_t> plus_plus_seeds(const PointSet& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.size();
    std::vector<std::size_t> centers;
    std::vector<bool> chosen(n, false);
    centers.push_back(static_cast<std::size_t>(rng.below(n)));
    chosen[centers.back()] = true;
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        const auto last = points.row(centers.back());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points.row(i), last));
            if (!chosen[i]) total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double r = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i]) continue;
                pick = i;  // fall back to the last candidate on rounding
                r -= d2[i];
                if (r < 0.0 && d2[i] > 0.0) break;
            }
        } else {
            // all remaining points coincide with a center
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) rest.push_back(i);
            }
            pick = rest[static_cast<std::size_t>(rng.below(rest.size()))];
        }
        centers.push_back(pick);
        chosen[pick] = true;
    }
    return centers;
}

double total_sse(const PointSet& points, const PointSet& centroids, const std::vector<std::size_t>& assignment) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) s += squared_distance(points.row(i), centroids.row(assignment[i]));
    return s;
}

KMeansResult lloyd(const PointSet& points, std::size_t k, std::size_t max_iterations, Rng rng) {
    const std::size_t n = points.size(), dim = points.dim();
    KMeansResult r;
    r.centroids = PointSet(k, dim);
    const auto seeds = plus_plus_seeds(points, k, rng);
    for (std::size_t c = 0; c < k; ++c) {
        std::copy(points.row(seeds[c]).begin(), points.row(seeds[c]).end(), r.centroids.row(c).begin());
    }
    r.assignment.assign(n, k);  // k = unassigned

    std::vector<std::size_t> counts(k);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(points.row(i), r.centroids.row(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (best != r.assignment[i]) {
                r.assignment[i] = best;
                changed = true;
            }
        }

        std::fill(counts.begin(), counts.end(), 0);
        for (auto a : r.assignment) ++counts[a];
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[r.assignment[i]] < 2) continue;
                const double d = squared_distance(points.row(i), r.centroids.row(r.assignment[i]));
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            --counts[r.assignment[far]];
            r.assignment[far] = c;
            counts[c] = 1;
            changed = true;
        }

        if (!changed && iter > 0) break;

        for (std::size_t c = 0; c < k; ++c) std::fill(r.centroids.row(c).begin(), r.centroids.row(c).end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = r.centroids.row(r.assignment[i]);
            const auto src = points.row(i);
            for (std::size_t d = 0; d < dim; ++d) dst[d] += src[d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            for (auto& x : r.centroids.row(c)) x /= static_cast<double>(counts[c]);
        }
        r.sse_history.push_back(total_sse(points, r.centroids, r.assignment));
        r.iterations = iter + 1;
    }
    r.sse = total_sse(points, r.centroids, r.assignment);
    return r;
}

}  // namespace

KMeansResult kmeans(const PointSet& points, const KMeansOptions& options) {
    if (options.k < 2) throw PreconditionError("k-means needs k >= 2");
    if (points.size() < options.k) {
        throw PreconditionError("k-means with k = " + std::to_string(options.k) + " needs at least k points, got " +
                                std::to_string(points.size()));
    }
    const Rng root = Rng(options.seed).split("kmeans");
    const std::size_t runs = std::max<std::size_t>(options.n_init, 1);
    KMeansResult best;
    for (std::size_t run = 0; run < runs; ++run) {
        auto r = lloyd(points, options.k, std::max<std::size_t>(options.max_iterations, 1),
                       root.split("init-" + std::to_string(run)));
        if (run == 0 || r.sse < best.sse) best = std::move(r);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Silhouette

Silhouette silhouette(const PointSet& points, std::span<const std::size_t> assignment) {
    const std::size_t n = points.size();
    if (assignment.size() != n) throw PreconditionError("silhouette: assignment size differs from point count");
    std::map<std::size_t, std::size_t> label_index;
    for (auto a : assignment) label_index.emplace(a, 0);
    if (label_index.size() < 2) throw PreconditionError("silhouette needs at least two clusters");
    std::size_t next = 0;
    for (auto& [label, idx] : label_index) idx = next++;
    const std::size_t k = label_index.size();

    std::vector<std::size_t> cluster(n), sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        cluster[i] = label_index[assignment[i]];
        ++sizes[cluster[i]];
    }
    // sums[i * k + c] = total distance from point i to members of cluster c
    std::vector<double> sums(n * k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = euclidean_distance(points.row(i), points.row(j));
            sums[i * k + cluster[j]] += d;
            sums[j * k + cluster[i]] += d;
        }
    }

    Silhouette s;
    s.per_point.resize(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = cluster[i];
        if (sizes[own] < 2) continue;
        const double a = sums[i * k + own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own) b = std::min(b, sums[i * k + c] / static_cast<double>(sizes[c]));
        }
        const double m = std::max(a, b);
        s.per_point[i] = m > 0.0 ? std::clamp((b - a) / m, -1.0, 1.0) : 0.0;
    }
    s.score = n == 0 ? 0.0 : std::accumulate(s.per_point.begin(), s.per_point.end(), 0.0) / static_cast<double>(n);
    return s;
}

double trimmed_silhouette(std::span<const double> per_point, double tau) {
    if (!(tau >= 0.0 && tau < 0.5)) throw PreconditionError("trim fraction must satisfy 0 <= tau < 0.5");
    if (per_point.empty()) throw PreconditionError("trimmed_silhouette of an empty list");
    std::vector<double> sorted(per_point.begin(), per_point.end());
    // 1e-9 absorbs products like 0.1 * 30 = 3.0000000000000004 going the other way
    const auto drop = static_cast<std::size_t>(std::floor(tau * static_cast<double>(sorted.size()) + 1e-9));
    if (drop == 0) {
        return std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    }
    std::sort(sorted.begin(), sorted.end());
    return std::accumulate(sorted.begin() + static_cast<std::ptrdiff_t>(drop), sorted.end(), 0.0) /
           static_cast<double>(sorted.size() - drop);
}

// ---------------------------------------------------------------------------
// Sweep

DimensionSelection select_dimension(const PointSet& points, std::span<const std::size_t> ks,
                                    std::span<const double> taus, std::uint64_t seed, std::size_t n_init) {
    if (ks.empty() || taus.empty()) throw PreconditionError("dimension sweep needs non-empty k and tau sets");
    std::vector<std::size_t> k_sorted(ks.begin(), ks.end());
    std::vector<double> tau_sorted(taus.begin(), taus.end());
    std::sort(k_sorted.begin(), k_sorted.end());
    k_sorted.erase(std::unique(k_sorted.begin(), k_sorted.end()), k_sorted.end());
    std::sort(tau_sorted.begin(), tau_sorted.end());
    tau_sorted.erase(std::unique(tau_sorted.begin(), tau_sorted.end()), tau_sorted.end());

    DimensionSelection out;
    bool have = false;
    constexpr double kTie = 1e-12;
    for (const auto k : k_sorted) {
        KMeansOptions opt;
        opt.k = k;
        opt.seed = seed;
        opt.n_init = n_init;
        const auto clusters = kmeans(points, opt);
        const auto sil = silhouette(points, clusters.assignment);
        for (const auto tau : tau_sorted) {
            const double score = trimmed_silhouette(sil.per_point, tau);
            out.table.push_back({k, tau, score});
            // ascending k: ">=" within tolerance lets a larger k take a tie;
            // ascending tau: a tie keeps the smaller tau of the same k.
            const bool better = !have || score > out.score + kTie ||
                                (std::abs(score - out.score) <= kTie && k > out.k);
            if (better) {
                out.k = k;
                out.tau = tau;
                out.score = score;
                have = true;
            }
        }
    }
    return out;
}

}  // namespace nuteval::codebook
