#include "spikectl/model.hpp"

#include "spikectl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace spikectl {

Model builtin_model(std::string_view name, std::optional<double> cap) {
    if (cap && !(*cap > 0.0 && std::isfinite(*cap)))
        throw ValidationError("intensity_cap must be positive and finite");

    Model m;
    m.name = std::string(name);
    if (name == "ou_exp") {
        const double c = cap.value_or(std::exp(2.0));
        m.drift = [](double y) { return -y; };
        m.shape = [c](double y) { return std::min(std::exp(2.0 * (y - 1.0)), c); };
        m.drift_lipschitz = 1.0;
        m.shape_max = c;
        m.shape_log_deriv_bound = 2.0;
        m.intensity_cap = c;
    } else if (name == "ou_sigmoid") {
        const double c = cap.value_or(1.0);
        m.drift = [](double y) { return -y; };
        m.shape = [c](double y) { return std::min(1.0 / (1.0 + std::exp(-100.0 * (y - 1.0))), c); };
        m.drift_lipschitz = 1.0;
        m.shape_max = std::min(1.0, c);
        m.shape_log_deriv_bound = 100.0;
        m.intensity_cap = c;
    } else if (name == "const_unit") {
        const double c = std::min(cap.value_or(1.0), 1.0);
        m.drift = [](double) { return 0.0; };
        m.shape = [c](double) { return c; };
        m.drift_lipschitz = 0.0;
        m.shape_max = c;
        m.shape_log_deriv_bound = 0.0;
        m.intensity_cap = c;
    } else {
        throw ValidationError("unknown model '" + std::string(name) + "'");
    }
    return m;
}

Model with_shape_table(Model base, std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw ValidationError("g_table: need at least two knots");
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!std::isfinite(knots[i].first) || !std::isfinite(knots[i].second) ||
            knots[i].second < 0.0)
            throw ValidationError("g_table: knots must be finite with g >= 0");
        if (i > 0 && !(knots[i].first > knots[i - 1].first))
            throw ValidationError("g_table: y knots must be strictly increasing");
    }
    const double cap = base.intensity_cap;
    double gmax = 0.0;
    double log_deriv = 0.0;
    for (std::size_t i = 0; i < knots.size(); ++i) {
        gmax = std::max(gmax, std::min(knots[i].second, cap));
        if (i > 0) {
            const double slope = (knots[i].second - knots[i - 1].second) /
                                 (knots[i].first - knots[i - 1].first);
            const double lo = std::min(knots[i].second, knots[i - 1].second);
            log_deriv = std::max(log_deriv, lo > 0.0 ? std::abs(slope) / lo
                                                     : (slope == 0.0 ? 0.0 : INFINITY));
        }
    }
    if (!(gmax > 0.0)) throw ValidationError("g_table: g must be positive somewhere");

    base.name += "+table";
    base.shape = [knots = std::move(knots), cap](double y) {
        if (y <= knots.front().first) return std::min(knots.front().second, cap);
        if (y >= knots.back().first) return std::min(knots.back().second, cap);
        auto hi = std::upper_bound(knots.begin(), knots.end(), y,
                                   [](double v, const auto& k) { return v < k.first; });
        auto lo = hi - 1;
        const double w = (y - lo->first) / (hi->first - lo->first);
        return std::min((1.0 - w) * lo->second + w * hi->second, cap);
    };
    base.shape_max = gmax;
    base.shape_log_deriv_bound = log_deriv;
    return base;
}

FlowState flow_step(const Model& model, const FlowState& s, double gamma, double dt) {
    if (!std::isfinite(s.y) || !std::isfinite(s.z) || !std::isfinite(gamma) || !std::isfinite(dt))
        throw NumericalError("flow_step: nonfinite input");
    if (!(dt > 0.0)) throw ValidationError("flow_step: dt must be positive");

    const auto& b = model.drift;
    const auto& g = model.shape;
    const double k1y = b(s.y) + gamma;
    const double k1z = g(s.y);
    const double y2 = s.y + 0.5 * dt * k1y;
    const double k2y = b(y2) + gamma;
    const double k2z = g(y2);
    const double y3 = s.y + 0.5 * dt * k2y;
    const double k3y = b(y3) + gamma;
    const double k3z = g(y3);
    const double y4 = s.y + dt * k3y;
    const double k4y = b(y4) + gamma;
    const double k4z = g(y4);

    return {s.t + dt, s.y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
            s.z + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)};
}

}  // namespace spikectl
