#include "doctest.h"
#include "oracles.hpp"

#include "spikectl/errors.hpp"
#include "spikectl/mceval.hpp"

#include <cmath>
#include <limits>

using namespace spikectl;
using namespace spikectl::testing;

namespace {

EvalOptions eval_options(double horizon, int paths, std::uint64_t seed, double dt_flow = 0.01) {
    EvalOptions o;
    o.horizon = horizon;
    o.paths = paths;
    o.seed = seed;
    o.dt_flow = dt_flow;
    return o;
}

// Two-point prior on {0, 1}: after any spike the posterior is a point mass, so
// only the spike-free branch carries terminal variance.
double two_point_zero_policy_cost(double z, double remaining) {
    const double w1 = std::exp(-z) / (1.0 + std::exp(-z));
    const double no_spike = (1.0 - w1) + w1 * std::exp(-remaining);
    const double p = std::exp(-(z + remaining)) / (1.0 + std::exp(-(z + remaining)));
    return no_spike * p * (1.0 - p);
}

}  // namespace

TEST_CASE("known intensity costs nothing under the zero policy") {
    const EvalReport r = evaluate(builtin_model("const_unit"), dirac_prior(1.0), zero_policy(),
                                  {0.0, 0.0, 0.0, 0}, eval_options(1.0, 500, 3));
    CHECK(r.estimate == 0.0);
    CHECK(r.std_error == 0.0);
    CHECK(r.paths == 500);
}

TEST_CASE("two-point prior against the analytic two-branch value") {
    const Model m = builtin_model("const_unit");
    const Prior two = two_point_prior();
    for (double z : {0.0, 0.5}) {
        const EvalReport r =
            evaluate(m, two, zero_policy(), {0.0, 0.3, z, 0}, eval_options(1.0, 100000, 8, 0.1));
        CHECK(std::abs(r.estimate - two_point_zero_policy_cost(z, 1.0)) <= 3.0 * r.std_error);
        CHECK(std::abs(r.mean_weight - 1.0) <= 4.0 * r.weight_std_error);
    }
    const EvalReport after =
        evaluate(m, two, zero_policy(), {0.2, 0.0, 0.2, 1}, eval_options(1.0, 1000, 8, 0.1));
    CHECK(after.estimate == 0.0);
}

TEST_CASE("zero-policy cost sits below the current posterior variance") {
    const Model m = builtin_model("ou_exp");
    for (const Prior& p : {five_atom_prior(), uniform_prior(0.0, 2.0, 32)}) {
        const EvalPoint start{0.0, 0.0, 0.1, 1};
        EvalOptions o = eval_options(1.0, 20000, 21);
        o.kappa = 2.0;
        const EvalReport r = evaluate(m, p, zero_policy(), start, o);
        CHECK(r.estimate <= o.kappa * psi(p, start.n, start.z) + 3.0 * r.std_error);
        CHECK(std::abs(r.mean_weight - 1.0) <= 4.0 * r.weight_std_error);
    }
}

TEST_CASE("cost split") {
    const Model m = builtin_model("const_unit");
    const Prior five = five_atom_prior();
    const EvalReport r =
        evaluate(m, five, constant_policy(1.0), {0.25, 0.0, 0.0, 0}, eval_options(1.0, 5000, 2));
    CHECK(r.control_part >= 0.0);
    CHECK(r.variance_part >= 0.0);
    CHECK(r.estimate == r.control_part + r.variance_part);
    CHECK(rel_err(r.control_part, 0.5 * 0.75 * r.mean_weight, 1e-300) < 1e-12);

    const EvalReport again =
        evaluate(m, five, constant_policy(1.0), {0.25, 0.0, 0.0, 0}, eval_options(1.0, 5000, 2));
    CHECK(again.estimate == r.estimate);
    CHECK(again.std_error == r.std_error);
}

TEST_CASE("evaluation errors") {
    const Model m = builtin_model("ou_exp");
    const Prior five = five_atom_prior();
    CHECK_THROWS_AS(evaluate(m, five, zero_policy(), {}, eval_options(1.0, 1, 0)), ValidationError);
    CHECK_THROWS_AS(evaluate(m, five, zero_policy(), {1.0, 0.0, 0.0, 0}, eval_options(1.0, 10, 0)),
                    ValidationError);
    const Policy bad = [](double, double, double, int) { return std::numeric_limits<double>::infinity(); };
    CHECK_THROWS_AS(evaluate(m, five, bad, {}, eval_options(1.0, 10, 0)), NumericalError);
}

TEST_CASE("comparison against the PDE") {
    const Model m = builtin_model("const_unit");
    GridSpec g;
    g.horizon = 0.5;
    g.y_min = -1.0;
    g.y_max = 1.0;
    g.ny = 21;
    g.nz = 41;
    g.n_max = 6;
    g.gamma_max = 2.0;
    g.n_controls = 21;
    const std::vector<EvalPoint> points{{0.0, 0.0, 0.0, 0}, {0.2, 0.5, 0.1, 0}};

    SUBCASE("known intensity") {
        const Prior p = dirac_prior(1.0);
        const ValueGrid vg = solve(m, p, complete_grid_spec(g, m, p));
        const auto report = compare_to_pde(vg, m, p, points, 200, 1, 0.0);
        CHECK(report.all_pass());
        for (const auto& row : report.rows) {
            CHECK(row.pde_value == 0.0);
            CHECK(row.pde_policy.estimate == 0.0);
        }
    }
    SUBCASE("two-point prior") {
        const Prior p = two_point_prior();
        const ValueGrid vg = solve(m, p, complete_grid_spec(g, m, p));
        const auto report = compare_to_pde(vg, m, p, points, 40000, 5, 0.02);
        CHECK(report.all_pass());
        for (const auto& row : report.rows) {
            REQUIRE(row.zero_policy);
            CHECK(row.dominance_pass);
            // const_unit does not couple y to the spikes, so the PDE policy is 0
            CHECK(row.pde_policy.estimate == row.zero_policy->estimate);
            CHECK(std::abs(row.pde_value - two_point_zero_policy_cost(row.point.z, g.horizon - row.point.t)) <
                  0.02);
        }
    }
}
