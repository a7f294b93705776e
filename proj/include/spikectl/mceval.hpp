#pragma once

#include "spikectl/hjb.hpp"
#include "spikectl/model.hpp"
#include "spikectl/prior.hpp"
#include "spikectl/sim.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace spikectl {

struct EvalPoint {
    double t = 0.0;
    double y = 0.0;
    double z = 0.0;
    int n = 0;
};

struct EvalOptions {
    double horizon = 1.0;
    double kappa = 1.0;
    int paths = 1000;
    std::uint64_t seed = 0;
    double dt_flow = 0.001;
};

struct EvalReport {
    double estimate = 0.0;
    double std_error = 0.0;
    int paths = 0;
    double control_part = 0.0;   // weighted mean of the integral of gamma^2/2
    double variance_part = 0.0;  // weighted mean of kappa * terminal posterior variance
    double mean_weight = 0.0;    // plain mean of the likelihood weight; 1 in expectation
    double weight_std_error = 0.0;
};

/// Estimates the cost J of `policy` from `start` by simulating spikes as a
/// rate-1 Poisson process (the reference measure) and weighting each path by
/// its likelihood averaged over the posterior m(n, z) at the start.
/// Path i uses the stream (seed, i), so two policies evaluated with the same
/// seed share their spike times.
EvalReport evaluate(const Model& model, const Prior& prior, const Policy& policy,
                    const EvalPoint& start, const EvalOptions& options);

struct ComparisonRow {
    EvalPoint point;
    double pde_value = 0.0;
    EvalReport pde_policy;
    std::optional<EvalReport> zero_policy;
    double gap = 0.0;        // |v_pde - J_mc(pde policy)|
    double tolerance = 0.0;  // 3 std_error + scheme tolerance
    bool pass = false;
    bool dominance_pass = true;  // J(zero) >= J(pde) - 3 combined std error
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    double scheme_tolerance = 0.0;
    bool all_pass() const;
};

/// Cross-checks the PDE value against the Monte Carlo cost of its own policy
/// (and optionally the zero policy, with common random numbers). The flow
/// step defaults to a quarter of the grid time step.
ComparisonReport compare_to_pde(const ValueGrid& grid, const Model& model, const Prior& prior,
                                std::span<const EvalPoint> points, int paths, std::uint64_t seed,
                                double scheme_tolerance, bool with_zero_policy = true,
                                std::optional<double> dt_flow = std::nullopt);

}  // namespace spikectl
