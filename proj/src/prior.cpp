#include "spikectl/prior.hpp"

#include "spikectl/errors.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace spikectl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Unnormalized log posterior weights, shifted so the largest finite entry is 0.
// Returns false when every entry is -inf.
bool shifted_log_weights(const Prior& prior, int n, double z, std::vector<double>& out,
                         double* log_max = nullptr) {
    const auto nodes = prior.nodes();
    const auto log_lambda = prior.log_lambda();
    const auto log_weight = prior.log_weight();
    out.resize(nodes.size());
    double hi = kNegInf;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        double lw = log_weight[i] - nodes[i].lambda * z;
        if (n > 0) lw += n * log_lambda[i];
        out[i] = lw;
        hi = std::max(hi, lw);
    }
    if (hi == kNegInf) return false;
    for (double& v : out) v -= hi;
    if (log_max) *log_max = hi;
    return true;
}

}  // namespace

Prior::Prior(std::vector<PriorNode> nodes, double lambda_max, PriorKind kind)
    : nodes_(std::move(nodes)), lambda_max_(lambda_max), kind_(kind) {
    if (nodes_.empty()) throw ValidationError("prior: no nodes");
    double total = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& node = nodes_[i];
        if (!(node.lambda >= 0.0) || !(node.lambda <= lambda_max_))
            throw ValidationError("prior: node lambda outside [0, lambda_max]");
        if (!(node.weight > 0.0)) throw ValidationError("prior: nonpositive weight");
        if (i > 0 && !(node.lambda > nodes_[i - 1].lambda))
            throw ValidationError("prior: nodes must be strictly increasing in lambda");
        total += node.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("prior: weights do not sum to 1");
    log_lambda_.reserve(nodes_.size());
    log_weight_.reserve(nodes_.size());
    for (const auto& node : nodes_) {
        log_lambda_.push_back(node.lambda > 0.0 ? std::log(node.lambda) : kNegInf);
        log_weight_.push_back(std::log(node.weight));
    }
}

std::string Prior::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << (kind_ == PriorKind::atomic ? "atomic" : "quadrature") << "(" << nodes_.size()
       << " nodes, lambda_max=" << lambda_max_ << ")";
    return os.str();
}

Prior make_atomic_prior(std::span<const PriorNode> atoms) {
    if (atoms.empty()) throw ValidationError("atomic prior: empty atom list");
    std::vector<PriorNode> sorted(atoms.begin(), atoms.end());
    for (const auto& a : sorted) {
        if (!std::isfinite(a.lambda) || a.lambda < 0.0)
            throw ValidationError("atomic prior: negative or nonfinite lambda");
        if (!std::isfinite(a.weight) || !(a.weight > 0.0))
            throw ValidationError("atomic prior: nonpositive weight");
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const PriorNode& a, const PriorNode& b) { return a.lambda < b.lambda; });
    std::vector<PriorNode> merged;
    for (const auto& a : sorted) {
        if (!merged.empty() && merged.back().lambda == a.lambda)
            merged.back().weight += a.weight;
        else
            merged.push_back(a);
    }
    double total = 0.0;
    for (const auto& a : merged) total += a.weight;
    for (auto& a : merged) a.weight /= total;
    const double lambda_max = merged.back().lambda;
    return Prior(std::move(merged), lambda_max, PriorKind::atomic);
}

Prior make_quadrature_prior(const std::function<double(double)>& density, double a, double b,
                            int nodes) {
    if (!(a >= 0.0) || !(b > a) || !std::isfinite(b))
        throw ValidationError("quadrature prior: support must satisfy 0 <= a < b");
    if (nodes < 2) throw ValidationError("quadrature prior: need at least 2 nodes");

    std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)>
        table(gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(nodes)),
              &gsl_integration_glfixed_table_free);
    if (!table) throw NumericalError("quadrature prior: failed to build Gauss-Legendre table");

    std::vector<PriorNode> out;
    out.reserve(static_cast<std::size_t>(nodes));
    double total = 0.0;
    for (int i = 0; i < nodes; ++i) {
        double x = 0.0, w = 0.0;
        gsl_integration_glfixed_point(a, b, static_cast<std::size_t>(i), &x, &w, table.get());
        const double d = density(x);
        if (!std::isfinite(d) || d < 0.0)
            throw ValidationError("quadrature prior: density must be finite and nonnegative");
        if (d * w > 0.0) {
            out.push_back({x, d * w});
            total += d * w;
        }
    }
    if (!(total > 0.0)) throw ValidationError("quadrature prior: density integrates to 0");
    std::sort(out.begin(), out.end(),
              [](const PriorNode& p, const PriorNode& q) { return p.lambda < q.lambda; });
    for (auto& node : out) node.weight /= total;
    // Renormalize once more so the sum is 1 to the last bit we can get.
    double check = 0.0;
    for (const auto& node : out) check += node.weight;
    for (auto& node : out) node.weight /= check;
    return Prior(std::move(out), b, PriorKind::quadrature);
}

double log_phi(const Prior& prior, int n, double z) {
    std::vector<double> lw;
    double hi = 0.0;
    if (!shifted_log_weights(prior, n, z, lw, &hi)) return kNegInf;
    double sum = 0.0;
    for (double v : lw) sum += std::exp(v);
    return hi + std::log(sum);
}

std::vector<PriorNode> posterior_weights(const Prior& prior, int n, double z) {
    std::vector<double> lw;
    if (!shifted_log_weights(prior, n, z, lw))
        throw NumericalError("degenerate posterior: Phi(n, z) = 0");
    const auto nodes = prior.nodes();
    std::vector<PriorNode> out(nodes.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        out[i] = {nodes[i].lambda, std::exp(lw[i])};
        sum += out[i].weight;
    }
    for (auto& node : out) node.weight /= sum;
    return out;
}

PosteriorMoments posterior_moments(const Prior& prior, int n, double z) {
    const auto weights = posterior_weights(prior, n, z);
    PosteriorMoments m;
    for (const auto& node : weights) m.mean += node.weight * node.lambda;
    for (const auto& node : weights) {
        const double d = node.lambda - m.mean;
        m.variance += node.weight * d * d;
        m.third_central += node.weight * d * d * d;
    }
    return m;
}

double xi(const Prior& prior, int n, double z) { return posterior_moments(prior, n, z).mean; }

double psi(const Prior& prior, int n, double z) {
    return posterior_moments(prior, n, z).variance;
}

double dz_psi(const Prior& prior, int n, double z) {
    const auto here = posterior_moments(prior, n, z);
    if (here.mean == 0.0) return 0.0;
    const double next_var = psi(prior, n + 1, z);
    const double ratio = here.variance / here.mean;
    return here.mean * (here.variance - next_var - ratio * ratio);
}

}  // namespace spikectl
