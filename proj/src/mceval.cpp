#include "spikectl/mceval.hpp"

#include "spikectl/errors.hpp"
#include "spikectl/likelihood.hpp"
#include "spikectl/rng.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spikectl {

namespace {

struct PathCost {
    double weight = 0.0;
    double control = 0.0;
    double variance = 0.0;
};

double log_sum_exp(std::span<const double> v) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : v) hi = std::max(hi, x);
    if (hi == -std::numeric_limits<double>::infinity()) return hi;
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - hi);
    return hi + std::log(sum);
}

}  // namespace

EvalReport evaluate(const Model& model, const Prior& prior, const Policy& policy,
                    const EvalPoint& start, const EvalOptions& options) {
    if (options.paths < 2) throw ValidationError("evaluate: need at least 2 paths");
    if (!(options.horizon > start.t)) throw ValidationError("evaluate: start time must be < horizon");
    if (start.z < 0.0 || start.n < 0) throw ValidationError("evaluate: need z >= 0 and n >= 0");
    if (!(options.dt_flow > 0.0)) throw ValidationError("evaluate: dt_flow must be positive");

    // Posterior at the start state; the path weight is averaged against it.
    const auto base = posterior_weights(prior, start.n, start.z);
    std::vector<double> log_base(base.size());
    for (std::size_t i = 0; i < base.size(); ++i)
        log_base[i] = base[i].weight > 0.0 ? std::log(base[i].weight)
                                           : -std::numeric_limits<double>::infinity();

    std::vector<PathCost> costs(static_cast<std::size_t>(options.paths));
    detail::parallel_for(options.paths, [&](int p) {
        CounterRng rng(options.seed, static_cast<std::uint64_t>(p));
        PathState s{start.t, start.y, start.z, start.n, 0.0};
        PathRecord record;
        record.t0 = start.t;
        record.t1 = options.horizon;

        double next_jump = s.t + rng.exponential(1.0);
        while (s.t < options.horizon) {
            const double t_stop = std::min(next_jump, options.horizon);
            advance(model, policy, s, t_stop, options.dt_flow);
            if (next_jump <= options.horizon) {
                record.jump_times.push_back(s.t);
                record.shape_at_jumps.push_back(model.shape(s.y));
                s.y = 0.0;
                ++s.n;
                next_jump = s.t + rng.exponential(1.0);
            }
        }
        record.integral_shape = s.z - start.z;

        std::vector<double> terms(base.size());
        for (std::size_t i = 0; i < base.size(); ++i)
            terms[i] = log_base[i] + log_weight(record, base[i].lambda);
        const double weight = std::exp(log_sum_exp(terms));

        PathCost& c = costs[p];
        c.weight = weight;
        if (weight > 0.0) {
            c.control = weight * s.control_cost;
            c.variance = weight * options.kappa * psi(prior, s.n, s.z);
        }
    });

    const double count = options.paths;
    EvalReport report;
    report.paths = options.paths;
    for (const auto& c : costs) {
        report.control_part += c.control;
        report.variance_part += c.variance;
        report.mean_weight += c.weight;
    }
    report.control_part /= count;
    report.variance_part /= count;
    report.mean_weight /= count;
    report.estimate = report.control_part + report.variance_part;

    double ss = 0.0, ss_w = 0.0;
    for (const auto& c : costs) {
        const double d = c.control + c.variance - report.estimate;
        const double dw = c.weight - report.mean_weight;
        ss += d * d;
        ss_w += dw * dw;
    }
    report.std_error = std::sqrt(ss / (count - 1.0) / count);
    report.weight_std_error = std::sqrt(ss_w / (count - 1.0) / count);
    return report;
}

bool ComparisonReport::all_pass() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const ComparisonRow& r) { return r.pass && r.dominance_pass; });
}

ComparisonReport compare_to_pde(const ValueGrid& grid, const Model& model, const Prior& prior,
                                std::span<const EvalPoint> points, int paths, std::uint64_t seed,
                                double scheme_tolerance, bool with_zero_policy,
                                std::optional<double> dt_flow) {
    const auto& spec = grid.grid();
    EvalOptions options;
    options.horizon = spec.horizon;
    options.kappa = spec.kappa;
    options.paths = paths;
    options.seed = seed;
    options.dt_flow = dt_flow.value_or(spec.dt() / 4.0);

    const Policy policy = pde_policy(grid);
    ComparisonReport report;
    report.scheme_tolerance = scheme_tolerance;
    for (const auto& point : points) {
        ComparisonRow row;
        row.point = point;
        row.pde_value = grid.eval_value(point.t, point.y, point.z, point.n);
        row.pde_policy = evaluate(model, prior, policy, point, options);
        row.gap = std::abs(row.pde_value - row.pde_policy.estimate);
        row.tolerance = 3.0 * row.pde_policy.std_error + scheme_tolerance;
        row.pass = row.gap <= row.tolerance;
        if (with_zero_policy) {
            row.zero_policy = evaluate(model, prior, zero_policy(), point, options);
            const double combined = std::hypot(row.pde_policy.std_error, row.zero_policy->std_error);
            row.dominance_pass =
                row.zero_policy->estimate >= row.pde_policy.estimate - 3.0 * combined;
        }
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace spikectl
