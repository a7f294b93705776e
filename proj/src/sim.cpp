#include "spikectl/sim.hpp"

#include "spikectl/errors.hpp"
#include "spikectl/hjb.hpp"
#include "spikectl/rng.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spikectl {

Policy zero_policy() {
    return [](double, double, double, int) { return 0.0; };
}

Policy constant_policy(double gamma) {
    return [gamma](double, double, double, int) { return gamma; };
}

Policy pde_policy(const ValueGrid& grid) {
    return [&grid](double t, double y, double z, int n) { return grid.eval_policy(t, y, z, n); };
}

void advance(const Model& model, const Policy& policy, PathState& state, double t_stop,
             double dt_flow) {
    const double span = t_stop - state.t;
    if (!(span > 0.0)) return;
    const int steps = std::max(1, static_cast<int>(std::ceil(span / dt_flow - 1e-9)));
    const double h = span / steps;
    FlowState flow{state.t, state.y, state.z};
    for (int s = 0; s < steps; ++s) {
        const double gamma = policy(flow.t, flow.y, flow.z, state.n);
        if (!std::isfinite(gamma)) throw NumericalError("policy returned a nonfinite control");
        flow = flow_step(model, flow, gamma, h);
        state.control_cost += 0.5 * gamma * gamma * h;
    }
    state.t = t_stop;
    state.y = flow.y;
    state.z = flow.z;
}

namespace {

double sample_lambda(const Prior& prior, CounterRng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (const auto& node : prior.nodes()) {
        acc += node.weight;
        if (u < acc) return node.lambda;
    }
    return prior.nodes().back().lambda;
}

std::vector<double> record_times(double t0, double horizon, double dt_record) {
    std::vector<double> times;
    for (long k = 1;; ++k) {
        const double t = t0 + k * dt_record;
        if (t >= horizon - 1e-12 * std::max(1.0, horizon)) break;
        times.push_back(t);
    }
    times.push_back(horizon);
    return times;
}

}  // namespace

Trajectory simulate(const Model& model, const Prior& prior, const Policy& policy,
                    std::optional<double> lambda, const SimOptions& options) {
    if (!(options.dt_record > 0.0) || !(options.dt_flow > 0.0))
        throw ValidationError("simulate: dt_record and dt_flow must be positive");
    if (!(options.horizon > options.start.t))
        throw ValidationError("simulate: horizon must exceed the start time");

    CounterRng rng(options.seed, options.path_index);
    Trajectory traj;
    traj.seed = options.seed;
    traj.path_index = options.path_index;
    traj.lambda_true = lambda ? *lambda : sample_lambda(prior, rng);
    if (!(traj.lambda_true >= 0.0 && traj.lambda_true <= prior.lambda_max()))
        throw ValidationError("simulate: lambda must lie in [0, lambda_max]");

    PathState s = options.start;
    const double horizon = options.horizon;

    auto record = [&] {
        const auto m = posterior_moments(prior, s.n, s.z);
        const double gamma = s.t < horizon ? policy(s.t, s.y, s.z, s.n) : 0.0;
        if (!std::isfinite(gamma)) throw NumericalError("policy returned a nonfinite control");
        traj.times.push_back(s.t);
        traj.y.push_back(s.y);
        traj.gamma.push_back(gamma);
        traj.n.push_back(s.n);
        traj.z.push_back(s.z);
        traj.post_mean.push_back(m.mean);
        traj.post_var.push_back(m.variance);
    };

    const double dominating = traj.lambda_true * model.shape_max;
    const double inf = std::numeric_limits<double>::infinity();
    double candidate = dominating > 0.0 ? s.t + rng.exponential(dominating) : inf;
    const auto grid = record_times(s.t, horizon, options.dt_record);
    std::size_t next_record = 0;
    double segment_z = s.z;

    record();
    while (next_record < grid.size()) {
        const double t_stop = std::min(candidate, grid[next_record]);
        advance(model, policy, s, t_stop, options.dt_flow);
        if (candidate <= grid[next_record]) {
            const double intensity = traj.lambda_true * model.shape(s.y);
            if (rng.uniform() * dominating < intensity) {
                traj.compensator += log_phi(prior, s.n, segment_z) - log_phi(prior, s.n, s.z);
                segment_z = s.z;
                ++s.n;
                s.y = 0.0;
                traj.jump_times.push_back(s.t);
                record();
            }
            candidate = s.t + rng.exponential(dominating);
        } else {
            record();
            ++next_record;
        }
    }
    traj.compensator += log_phi(prior, s.n, segment_z) - log_phi(prior, s.n, s.z);
    traj.control_cost = s.control_cost;
    return traj;
}

std::vector<Trajectory> simulate_batch(const Model& model, const Prior& prior,
                                       const Policy& policy, std::optional<double> lambda,
                                       const SimOptions& options, int count) {
    std::vector<Trajectory> out(static_cast<std::size_t>(std::max(count, 0)));
    detail::parallel_for(count, [&](int p) {
        SimOptions o = options;
        o.path_index = options.path_index + static_cast<std::uint64_t>(p);
        out[p] = simulate(model, prior, policy, lambda, o);
    });
    return out;
}

std::vector<PosteriorPoint> posterior_trace(const Trajectory& trajectory, const Prior& prior) {
    std::vector<PosteriorPoint> out;
    out.reserve(trajectory.rows());
    for (std::size_t r = 0; r < trajectory.rows(); ++r) {
        const auto m = posterior_moments(prior, trajectory.n[r], trajectory.z[r]);
        out.push_back({trajectory.times[r], m.mean, m.variance});
    }
    return out;
}

}  // namespace spikectl
