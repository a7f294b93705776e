#include "doctest.h"
#include "oracles.hpp"

#include "spikectl/errors.hpp"
#include "spikectl/model.hpp"
#include "spikectl/rng.hpp"

#include <cmath>
#include <limits>

using namespace spikectl;

namespace {

FlowState integrate(const Model& m, FlowState s, double gamma, double total, int steps) {
    for (int k = 0; k < steps; ++k) s = flow_step(m, s, gamma, total / steps);
    return s;
}

}  // namespace

TEST_CASE("builtin catalog") {
    const Model exp_model = builtin_model("ou_exp");
    CHECK(exp_model.shape(1.0) == 1.0);
    CHECK(exp_model.drift(0.7) == -0.7);
    CHECK(exp_model.shape_max == doctest::Approx(std::exp(2.0)));
    CHECK(exp_model.shape(5.0) == doctest::Approx(std::exp(2.0)));

    const Model sig = builtin_model("ou_sigmoid");
    CHECK(sig.shape(1.0) == 0.5);
    CHECK(sig.shape(0.5) < 1e-20);

    const Model unit = builtin_model("const_unit");
    for (double y : {-3.0, 0.0, 2.0, 10.0}) {
        CHECK(unit.shape(y) == 1.0);
        CHECK(unit.drift(y) == 0.0);
    }

    CHECK(builtin_model("ou_exp", 2.0).shape(3.0) == 2.0);
    CHECK_THROWS_AS(builtin_model("lif"), ValidationError);
    CHECK_THROWS_AS(builtin_model("ou_exp", -1.0), ValidationError);
}

TEST_CASE("model bounds hold on probes") {
    const Prior five = testing::five_atom_prior();
    const Prior uni = testing::uniform_prior();
    for (const char* name : {"ou_exp", "ou_sigmoid", "const_unit"}) {
        const Model m = builtin_model(name);
        for (double y = -5.0; y <= 5.0; y += 0.01) {
            const double g = m.shape(y);
            CHECK(g >= 0.0);
            CHECK(g <= m.shape_max);
            const double y2 = y + 0.37;
            CHECK(std::abs(m.drift(y) - m.drift(y2)) <= m.drift_lipschitz * 0.37 + 1e-15);
            for (const Prior* p : {&five, &uni})
                for (const auto& node : p->nodes())
                    CHECK(node.lambda * g <= p->lambda_max() * m.shape_max);
        }
    }
}

TEST_CASE("flow_step against the OU closed form") {
    const Model m = builtin_model("ou_exp");
    const FlowState end = integrate(m, {0.0, 0.0, 0.0}, 1.0, std::log(2.0), 200);
    CHECK(std::abs(end.y - 0.5) < 1e-8);
    CHECK(end.t == doctest::Approx(std::log(2.0)));

    const Model unit = builtin_model("const_unit");
    const FlowState still = flow_step(unit, {0.0, 0.0, 0.0}, 0.0, 1.0);
    CHECK(still.y == 0.0);
    CHECK(still.z == 1.0);
    CHECK(still.t == 1.0);

    // y = 1 with gamma = 1 is stationary for b(y) = -y, so z grows at g(1) = 1.
    for (double dt : {1e-2, 1e-3}) {
        const FlowState s = flow_step(m, {0.0, 1.0, 0.2}, 1.0, dt);
        CHECK(std::abs((s.z - 0.2) / dt - 1.0) < 10 * dt * dt);
    }
}

TEST_CASE("flow_step converges at fourth order") {
    const Model m = builtin_model("ou_exp");
    const double gamma = 1.3, y0 = -0.4, total = 1.0;
    auto exact = [&](double s) { return gamma + (y0 - gamma) * std::exp(-s); };
    double previous = 0.0;
    for (int steps : {5, 10, 20}) {
        const double err = std::abs(integrate(m, {0.0, y0, 0.0}, gamma, total, steps).y - exact(total));
        if (previous > 0.0) CHECK(previous / err >= 12.0);
        previous = err;
    }
}

TEST_CASE("z never decreases and reset keeps t, z") {
    const Model m = builtin_model("ou_sigmoid");
    CounterRng rng(5, 0);
    FlowState s{0.0, 0.3, 0.0};
    for (int k = 0; k < 2000; ++k) {
        const double gamma = 8.0 * rng.uniform() - 4.0;
        const FlowState next = flow_step(m, s, gamma, 0.01);
        CHECK(next.z >= s.z);
        s = next;
    }
    const FlowState r = reset({1.0, 2.3, 0.7});
    CHECK(r.t == 1.0);
    CHECK(r.y == 0.0);
    CHECK(r.z == 0.7);
    const FlowState rr = reset(r);
    CHECK(rr.t == r.t);
    CHECK(rr.y == r.y);
    CHECK(rr.z == r.z);
}

TEST_CASE("flow_step rejects nonfinite input") {
    const Model m = builtin_model("ou_exp");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(flow_step(m, {0.0, nan, 0.0}, 0.0, 0.1), NumericalError);
    CHECK_THROWS_AS(flow_step(m, {0.0, 0.0, 0.0}, INFINITY, 0.1), NumericalError);
}

TEST_CASE("piecewise-linear shape table") {
    const Model m = with_shape_table(builtin_model("ou_exp"), {{0.0, 0.0}, {1.0, 2.0}, {2.0, 1.0}});
    CHECK(m.shape(-1.0) == 0.0);
    CHECK(m.shape(0.5) == doctest::Approx(1.0));
    CHECK(m.shape(1.5) == doctest::Approx(1.5));
    CHECK(m.shape(7.0) == 1.0);
    CHECK(m.shape_max == 2.0);
    CHECK(m.drift(1.0) == -1.0);
    CHECK_THROWS_AS(with_shape_table(builtin_model("ou_exp"), {{1.0, 1.0}, {0.0, 1.0}}), ValidationError);
    CHECK_THROWS_AS(with_shape_table(builtin_model("ou_exp"), {{0.0, -1.0}, {1.0, 1.0}}), ValidationError);
}
