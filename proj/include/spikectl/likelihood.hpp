#pragma once

#include "spikectl/prior.hpp"

#include <vector>

namespace spikectl {

/// Sufficient statistics of a path on [t0, t1] for the change-of-measure
/// weight: g(Y) just before each spike and the integral of g(Y) over the window.
struct PathRecord {
    double t0 = 0.0;
    double t1 = 0.0;
    std::vector<double> jump_times;
    std::vector<double> shape_at_jumps;
    double integral_shape = 0.0;
};

/// Throws ValidationError when the record is inconsistent.
void validate(const PathRecord& path);

/// log L(lambda) = sum_i log(lambda g(Y_{tau_i-})) + (t1 - t0) - lambda * integral_shape,
/// the density of the lambda-model path law against a rate-1 Poisson reference.
/// -inf encodes zero likelihood.
double log_weight(const PathRecord& path, double lambda);

/// Posterior over the prior nodes after observing `path`, starting from the
/// reduced posterior m(n0, z0). Throws NumericalError if every node has zero
/// likelihood.
std::vector<PriorNode> posterior_from_path(const Prior& prior, const PathRecord& path, int n0 = 0,
                                           double z0 = 0.0);

}  // namespace spikectl
