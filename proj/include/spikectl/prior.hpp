#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace spikectl {

struct PriorNode {
    double lambda = 0.0;
    double weight = 0.0;
};

enum class PriorKind { atomic, quadrature };

/// Discrete prior over the unknown intensity parameter, supported on
/// [0, lambda_max]. Continuous densities are carried as quadrature nodes.
///
/// Invariants: nodes strictly increasing in lambda, weights positive and
/// summing to one, every lambda in [0, lambda_max].
class Prior {
public:
    Prior(std::vector<PriorNode> nodes, double lambda_max, PriorKind kind);

    std::span<const PriorNode> nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    double lambda_max() const { return lambda_max_; }
    PriorKind kind() const { return kind_; }

    // Cached logs, -inf for lambda == 0.
    std::span<const double> log_lambda() const { return log_lambda_; }
    std::span<const double> log_weight() const { return log_weight_; }

    std::string describe() const;

private:
    std::vector<PriorNode> nodes_;
    std::vector<double> log_lambda_;
    std::vector<double> log_weight_;
    double lambda_max_;
    PriorKind kind_;
};

/// Sorts atoms, merges duplicate lambdas and normalizes the weights.
/// Throws ValidationError on an empty list, negative lambda or nonpositive weight.
Prior make_atomic_prior(std::span<const PriorNode> atoms);

/// Gauss-Legendre discretization of a density on [a, b] with `nodes` points.
/// lambda_max is b.
Prior make_quadrature_prior(const std::function<double(double)>& density, double a, double b,
                            int nodes = 64);

/// log of Phi(n, z) = sum_i w_i lambda_i^n exp(-lambda_i z). Returns -inf when
/// every node with positive weight sits at lambda = 0 and n >= 1.
double log_phi(const Prior& prior, int n, double z);

/// Normalized weights of the posterior family m(n, z). Throws NumericalError
/// when Phi(n, z) = 0. The weight of a lambda = 0 node is exactly 0 for n >= 1.
std::vector<PriorNode> posterior_weights(const Prior& prior, int n, double z);

struct PosteriorMoments {
    double mean = 0.0;
    double variance = 0.0;
    double third_central = 0.0;
};

PosteriorMoments posterior_moments(const Prior& prior, int n, double z);

/// Posterior mean Xi(n, z) = Phi(n+1, z) / Phi(n, z).
double xi(const Prior& prior, int n, double z);

/// Posterior variance Psi(n, z).
double psi(const Prior& prior, int n, double z);

/// d/dz Psi(n, z) via Xi [Psi(n) - Psi(n+1) - (Psi(n)/Xi(n))^2].
/// Zero when the posterior mean is zero (all mass at lambda = 0).
double dz_psi(const Prior& prior, int n, double z);

}  // namespace spikectl
