#include "spikectl/likelihood.hpp"

#include "spikectl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spikectl {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void validate(const PathRecord& path) {
    if (!(path.t1 >= path.t0)) throw ValidationError("path record: t1 < t0");
    if (path.jump_times.size() != path.shape_at_jumps.size())
        throw ValidationError("path record: jump_times and shape_at_jumps differ in length");
    for (std::size_t i = 0; i < path.jump_times.size(); ++i) {
        const double tau = path.jump_times[i];
        if (!(tau > path.t0 && tau <= path.t1))
            throw ValidationError("path record: jump time outside (t0, t1]");
        if (i > 0 && !(tau > path.jump_times[i - 1]))
            throw ValidationError("path record: jump times not strictly increasing");
    }
    if (!(path.integral_shape >= 0.0)) throw ValidationError("path record: negative integral");
}

double log_weight(const PathRecord& path, double lambda) {
    const double compensator = (path.t1 - path.t0) - lambda * path.integral_shape;
    if (path.shape_at_jumps.empty()) return compensator;
    if (lambda <= 0.0) return kNegInf;
    const double log_lambda = std::log(lambda);
    double acc = compensator;
    for (double g : path.shape_at_jumps) {
        if (g <= 0.0) return kNegInf;
        acc += log_lambda + std::log(g);
    }
    return acc;
}

std::vector<PriorNode> posterior_from_path(const Prior& prior, const PathRecord& path, int n0,
                                           double z0) {
    const auto nodes = prior.nodes();
    const auto log_lambda = prior.log_lambda();
    const auto log_w = prior.log_weight();
    std::vector<double> lw(nodes.size());
    double hi = kNegInf;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        double base = log_w[i] - nodes[i].lambda * z0;
        if (n0 > 0) base += n0 * log_lambda[i];
        lw[i] = base + log_weight(path, nodes[i].lambda);
        hi = std::max(hi, lw[i]);
    }
    if (hi == kNegInf) throw NumericalError("posterior_from_path: every node has zero likelihood");

    std::vector<PriorNode> out(nodes.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        out[i] = {nodes[i].lambda, std::exp(lw[i] - hi)};
        sum += out[i].weight;
    }
    for (auto& node : out) node.weight /= sum;
    return out;
}

}  // namespace spikectl
