#pragma once

#include "spikectl/model.hpp"
#include "spikectl/prior.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace spikectl {

class ValueGrid;

/// Feedback control gamma(t, y, z, n).
using Policy = std::function<double(double t, double y, double z, int n)>;

Policy zero_policy();
Policy constant_policy(double gamma);
/// Reads the interpolated PDE policy. The grid must outlive the policy.
Policy pde_policy(const ValueGrid& grid);

/// Path state carried by both the thinning simulator and the reference-measure
/// evaluator.
struct PathState {
    double t = 0.0;
    double y = 0.0;
    double z = 0.0;
    int n = 0;
    double control_cost = 0.0;  // running integral of gamma^2 / 2
};

/// Integrates the flow from state.t to t_stop in equal RK4 substeps of at most
/// dt_flow, holding the policy's control fixed over each substep.
void advance(const Model& model, const Policy& policy, PathState& state, double t_stop,
             double dt_flow);

struct SimOptions {
    double horizon = 1.0;
    double dt_record = 0.01;
    double dt_flow = 0.001;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    PathState start{};
};

/// Recorded controlled path under the model measure. Rows are taken on the
/// dt_record grid and right after every spike (post-reset state).
struct Trajectory {
    std::vector<double> times;
    std::vector<double> y;
    std::vector<double> gamma;
    std::vector<int> n;
    std::vector<double> z;
    std::vector<double> post_mean;
    std::vector<double> post_var;
    std::vector<double> jump_times;
    double lambda_true = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    double control_cost = 0.0;
    // Integral of post_mean * g(Y) over the horizon (the compensator of N).
    double compensator = 0.0;

    std::size_t rows() const { return times.size(); }
};

/// Simulates one path with spike intensity lambda * g(Y_{t-}) by thinning a
/// rate lambda * g_max clock. `lambda` = nullopt samples it from the prior.
Trajectory simulate(const Model& model, const Prior& prior, const Policy& policy,
                    std::optional<double> lambda, const SimOptions& options);

/// Paths 0..count-1 of the stream family (options.seed, path index).
std::vector<Trajectory> simulate_batch(const Model& model, const Prior& prior,
                                       const Policy& policy, std::optional<double> lambda,
                                       const SimOptions& options, int count);

struct PosteriorPoint {
    double t = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

/// Recomputes posterior mean and variance from the recorded (n, z).
std::vector<PosteriorPoint> posterior_trace(const Trajectory& trajectory, const Prior& prior);

}  // namespace spikectl
