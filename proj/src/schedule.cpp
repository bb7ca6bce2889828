#include "nuteval/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "nuteval/error.hpp"
#include "nuteval/io.hpp"

namespace nuteval::schedule {

AdaptiveWeightState init_state(double first_loss, double mu, double epsilon) {
    if (!(first_loss > 0.0) || !std::isfinite(first_loss)) {
        throw PreconditionError("first priming loss must be positive and finite");
    }
    if (!(mu > 0.0 && mu < 1.0)) throw PreconditionError("mu must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be positive");
    return {first_loss, first_loss, mu, epsilon, 0};
}

double lambda(const AdaptiveWeightState& state) noexcept {
    return std::clamp(state.ema / (state.initial_loss + state.epsilon), 0.0, 1.0);
}

StepResult step(const AdaptiveWeightState& state, double priming_loss) {
    if (!(priming_loss >= 0.0) || !std::isfinite(priming_loss)) {
        throw PreconditionError("priming loss must be non-negative and finite");
    }
    StepResult r{state, 0.0};
    r.state.ema = state.mu * state.ema + (1.0 - state.mu) * priming_loss;
    ++r.state.step;
    r.lambda = lambda(r.state);
    return r;
}

CombinedLossReport combine(double joint_loss, double priming_loss, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw PreconditionError("lambda must lie in [0, 1]");
    return {joint_loss, priming_loss, lambda, joint_loss + lambda * priming_loss};
}

std::vector<TrajectoryRow> trajectory(std::span<const double> losses, double mu, double epsilon) {
    std::vector<TrajectoryRow> rows;
    if (losses.empty()) return rows;
    auto state = init_state(losses[0], mu, epsilon);
    rows.push_back({0, losses[0], state.ema, lambda(state)});
    for (std::size_t i = 1; i < losses.size(); ++i) {
        const auto r = step(state, losses[i]);
        state = r.state;
        rows.push_back({state.step, losses[i], state.ema, r.lambda});
    }
    return rows;
}

std::string trajectory_tsv(std::span<const TrajectoryRow> rows) {
    std::string out = "step\tpriming_loss\tema\tlambda\n";
    for (const auto& r : rows) {
        out += std::to_string(r.step) + '\t' + io::format_double(r.priming_loss) + '\t' + io::format_double(r.ema) +
               '\t' + io::format_double(r.lambda) + '\n';
    }
    return out;
}

void write_trajectory(const std::filesystem::path& path, std::span<const TrajectoryRow> rows) {
    io::write_file(path, trajectory_tsv(rows));
}

}  // namespace nuteval::schedule
