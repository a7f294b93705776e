#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spikectl {

/// Potential dynamics between spikes, dy/dt = drift(y) + gamma, and the
/// intensity shape g, so that the spike rate is lambda * g(y).
struct Model {
    std::string name;
    std::function<double(double)> drift;
    std::function<double(double)> shape;
    double drift_lipschitz = 0.0;        // sup |b'|
    double shape_max = 1.0;              // sup g
    double shape_log_deriv_bound = 0.0;  // sup |g'/g|
    double intensity_cap = 1.0;          // cap applied to g
};

/// Catalog: "ou_exp", "ou_sigmoid", "const_unit". `cap` overrides the
/// default cap on g (e^2 for ou_exp, g's own supremum otherwise).
Model builtin_model(std::string_view name, std::optional<double> cap = std::nullopt);

/// Replaces g by the piecewise-linear interpolant of (y, g) knots, constant
/// beyond the end knots. Knots must be strictly increasing in y with g >= 0.
Model with_shape_table(Model base, std::vector<std::pair<double, double>> knots);

struct FlowState {
    double t = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// One RK4 step of dy/dt = b(y) + gamma, dz/dt = g(y) with gamma held fixed.
FlowState flow_step(const Model& model, const FlowState& state, double gamma, double dt);

/// Spike reset: y := 0, t and z unchanged.
inline FlowState reset(const FlowState& state) { return {state.t, 0.0, state.z}; }

}  // namespace spikectl
