#include "spikectl/hjb.hpp"

#include "spikectl/errors.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace spikectl {

namespace {

double max_abs_drift(const GridSpec& grid, const Model& model) {
    double m = 0.0;
    const double dy = grid.dy();
    for (int i = 0; i < grid.ny; ++i) m = std::max(m, std::abs(model.drift(grid.y_min + i * dy)));
    return m;
}

void check_shape(const GridSpec& grid) {
    if (!(grid.horizon > 0.0) || !std::isfinite(grid.horizon))
        throw ValidationError("grid: horizon must be positive");
    if (grid.nt < 1) throw ValidationError("grid: nt must be at least 1");
    if (grid.ny < 3) throw ValidationError("grid: ny must be at least 3");
    if (grid.nz < 2) throw ValidationError("grid: nz must be at least 2");
    if (grid.n_max < 0) throw ValidationError("grid: n_max must be nonnegative");
    if (!(grid.y_min < 0.0 && 0.0 < grid.y_max))
        throw ValidationError("grid: need y_min < 0 < y_max");
    if (!(grid.gamma_max > 0.0)) throw ValidationError("grid: gamma_max must be positive");
    if (grid.n_controls < 1 || grid.n_controls % 2 == 0)
        throw ValidationError("grid: n_controls must be odd");
    if (!(grid.kappa > 0.0)) throw ValidationError("grid: kappa must be positive");
    if (grid.save_stride < 1) throw ValidationError("grid: save_stride must be at least 1");
}

}  // namespace

CflReport cfl_report(const GridSpec& grid, const Model& model, const Prior& prior) {
    CflReport r;
    const double dt = grid.dt();
    r.drift_part = dt * (max_abs_drift(grid, model) + grid.gamma_max) / grid.dy();
    r.shape_part = dt * model.shape_max / grid.dz();
    r.jump_part = dt * prior.lambda_max() * model.shape_max;
    return r;
}

int default_n_max(double horizon, const Model& model, const Prior& prior, double tail) {
    const double mean = horizon * prior.lambda_max() * model.shape_max;
    if (!(mean > 0.0)) return 0;
    int n = 0;
    while (gsl_cdf_poisson_Q(static_cast<unsigned>(n), mean) >= tail) ++n;
    return n;
}

GridSpec complete_grid_spec(GridSpec grid, const Model& model, const Prior& prior,
                            double cfl_target) {
    if (!(grid.z_max > 0.0)) grid.z_max = grid.horizon * model.shape_max;
    if (grid.n_max < 0) grid.n_max = default_n_max(grid.horizon, model, prior);
    if (grid.nt <= 0) {
        grid.nt = 1;
        check_shape(grid);
        const double rate = cfl_report(grid, model, prior).total() / grid.dt();
        grid.nt = std::max(1, static_cast<int>(std::ceil(grid.horizon * rate / cfl_target)));
    }
    return grid;
}

void validate(const GridSpec& grid, const Model& model, const Prior& prior) {
    check_shape(grid);
    const double ratio = -grid.y_min / grid.dy();
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
        throw ValidationError("grid: y = 0 must be a grid line");
    if (grid.z_max < grid.horizon * model.shape_max * (1.0 - 1e-12))
        throw ValidationError("grid: z_max must be at least horizon * g_max");
    const auto cfl = cfl_report(grid, model, prior);
    if (cfl.total() > 1.0 + 1e-12)
        throw NumericalError("CFL condition violated: " + std::to_string(cfl.total()) + " > 1");
}

HamiltonianResult hamiltonian(const Model& model, double y, double /*z*/, double p1, double p2,
                              double gamma_max) {
    const double c = std::clamp(p1, -gamma_max, gamma_max);
    return {c * p1 - 0.5 * c * c - model.drift(y) * p1 - model.shape(y) * p2, -c};
}

double theta(const Prior& prior, const Model& model, double y, double z, int n) {
    return xi(prior, n, z) * model.shape(y);
}

std::vector<double> control_set(const GridSpec& grid) {
    std::vector<double> controls(static_cast<std::size_t>(grid.n_controls), 0.0);
    if (grid.n_controls == 1) return controls;
    const int half = grid.n_controls / 2;
    const double step = grid.gamma_max / half;
    for (int m = 0; m < grid.n_controls; ++m) controls[m] = (m - half) * step;
    return controls;
}

ValueGrid::ValueGrid(GridSpec grid, std::vector<int> saved_steps, std::vector<double> values,
                     std::vector<double> policy, std::string model_name,
                     std::string prior_description)
    : grid_(grid),
      saved_steps_(std::move(saved_steps)),
      values_(std::move(values)),
      policy_(std::move(policy)),
      model_name_(std::move(model_name)),
      prior_description_(std::move(prior_description)),
      dy_(grid.dy()),
      dz_(grid.dz()),
      levels_(grid.n_max + 1),
      zero_index_(static_cast<int>(std::lround(-grid.y_min / grid.dy()))) {
    const std::size_t expected =
        saved_steps_.size() * grid_.ny * grid_.nz * static_cast<std::size_t>(levels_);
    if (saved_steps_.empty() || values_.size() != expected || policy_.size() != expected)
        throw ValidationError("value grid: array sizes do not match the grid");
    if (saved_steps_.front() != 0 || saved_steps_.back() != grid_.nt ||
        !std::is_sorted(saved_steps_.begin(), saved_steps_.end()))
        throw ValidationError("value grid: saved steps must run from 0 to nt");
}

double ValueGrid::interpolate(const std::vector<double>& data, double t, double y, double z,
                              int n) const {
    n = std::clamp(n, 0, grid_.n_max);

    // time: locate the bracketing saved slices
    const double dt = grid_.dt();
    const double step = std::clamp(t / dt, 0.0, static_cast<double>(grid_.nt));
    // Saved steps are multiples of save_stride, plus the terminal step.
    const int s0 = std::max(0, std::min(static_cast<int>(step / grid_.save_stride), slices() - 2));
    const int s1 = std::min(s0 + 1, slices() - 1);
    const double span_t = (saved_steps_[s1] - saved_steps_[s0]);
    const double wt = span_t > 0.0 ? (step - saved_steps_[s0]) / span_t : 0.0;

    const double fy = std::clamp((y - grid_.y_min) / dy_, 0.0, static_cast<double>(grid_.ny - 1));
    const double fz = std::clamp(z / dz_, 0.0, static_cast<double>(grid_.nz - 1));
    const int i0 = std::min(static_cast<int>(fy), grid_.ny - 2);
    const int j0 = std::min(static_cast<int>(fz), grid_.nz - 2);
    const double wy = fy - i0;
    const double wz = fz - j0;

    auto bilinear = [&](int s) {
        const double v00 = data[index(s, i0, j0, n)];
        const double v10 = data[index(s, i0 + 1, j0, n)];
        const double v01 = data[index(s, i0, j0 + 1, n)];
        const double v11 = data[index(s, i0 + 1, j0 + 1, n)];
        return (1.0 - wy) * ((1.0 - wz) * v00 + wz * v01) + wy * ((1.0 - wz) * v10 + wz * v11);
    };
    const double a = bilinear(s0);
    if (wt == 0.0) return a;
    return (1.0 - wt) * a + wt * bilinear(s1);
}

double ValueGrid::eval_value(double t, double y, double z, int n) const {
    return interpolate(values_, t, y, z, n);
}

double ValueGrid::eval_policy(double t, double y, double z, int n) const {
    return interpolate(policy_, t, y, z, n);
}

namespace {

struct ControlChoice {
    double value;
    int index;
};

// Minimizes gamma^2/2 + (b + gamma) D(gamma) over the uniform control set, where
// D is the forward difference when b + gamma > 0 and the backward one when
// b + gamma < 0. Each sign region is a convex quadratic in gamma, so the
// discrete minimum sits next to one of the region minimizers -Df, -Db or the
// breakpoint -b.
inline ControlChoice best_control(const std::vector<double>& controls, double gamma_max,
                                  double step, double b, double dyf, double dyb) {
    const int m_count = static_cast<int>(controls.size());
    auto objective = [&](int m) {
        const double g = controls[m];
        const double a = b + g;
        const double d = a > 0.0 ? dyf : (a < 0.0 ? dyb : 0.0);
        return 0.5 * g * g + a * d;
    };
    if (m_count == 1) return {objective(0), 0};

    ControlChoice best{std::numeric_limits<double>::infinity(), -1};
    const std::array<double, 3> anchors{-dyf, -dyb, -b};
    for (double x : anchors) {
        const double pos = std::clamp((x + gamma_max) / step, -1.0, static_cast<double>(m_count));
        const int f = static_cast<int>(std::floor(pos));
        for (int m = std::max(f - 1, 0); m <= std::min(f + 2, m_count - 1); ++m) {
            const double v = objective(m);
            if (v < best.value ||
                (v == best.value && std::abs(controls[m]) < std::abs(controls[best.index]))) {
                best = {v, m};
            }
        }
    }
    return best;
}

}  // namespace

ValueGrid solve(const Model& model, const Prior& prior, const GridSpec& grid) {
    validate(grid, model, prior);

    const int ny = grid.ny;
    const int nz = grid.nz;
    const int levels = grid.n_max + 1;
    const double dt = grid.dt();
    const double dy = grid.dy();
    const double dz = grid.dz();
    const int i_zero = static_cast<int>(std::lround(-grid.y_min / dy));
    const std::size_t slice = static_cast<std::size_t>(ny) * nz * levels;

    std::vector<double> drift(ny), shape(ny);
    for (int i = 0; i < ny; ++i) {
        const double y = grid.y_min + i * dy;
        drift[i] = model.drift(y);
        shape[i] = model.shape(y);
    }
    // Posterior mean and variance by (z_j, n); throws on a degenerate posterior.
    std::vector<double> mean(static_cast<std::size_t>(nz) * levels);
    std::vector<double> variance(mean.size());
    for (int j = 0; j < nz; ++j) {
        for (int n = 0; n < levels; ++n) {
            const auto m = posterior_moments(prior, n, j * dz);
            mean[static_cast<std::size_t>(j) * levels + n] = m.mean;
            variance[static_cast<std::size_t>(j) * levels + n] = m.variance;
        }
    }

    const auto controls = control_set(grid);
    const double control_step = grid.n_controls > 1 ? controls[1] - controls[0] : 1.0;

    std::vector<int> saved;
    for (int k = 0; k < grid.nt; k += grid.save_stride) saved.push_back(k);
    saved.push_back(grid.nt);
    const int n_saved = static_cast<int>(saved.size());

    std::vector<double> values(slice * n_saved);
    std::vector<double> policy(slice * n_saved, 0.0);

    std::vector<double> next(slice), cur(slice), cur_policy(slice);
    auto at = [=](int i, int j, int n) {
        return (static_cast<std::size_t>(i) * nz + j) * levels + n;
    };
    for (int i = 0; i < ny; ++i)
        for (int j = 0; j < nz; ++j)
            for (int n = 0; n < levels; ++n)
                next[at(i, j, n)] = grid.kappa * variance[static_cast<std::size_t>(j) * levels + n];
    std::copy(next.begin(), next.end(), values.begin() + slice * (n_saved - 1));

    int save_slot = n_saved - 2;
    for (int k = grid.nt - 1; k >= 0; --k) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < ny; ++i) {
            const double b = drift[i];
            const double g = shape[i];
            for (int j = 0; j < nz; ++j) {
                for (int n = 0; n < levels; ++n) {
                    const std::size_t here = at(i, j, n);
                    const double v = next[here];
                    const double dyf = i + 1 < ny ? (next[at(i + 1, j, n)] - v) / dy : 0.0;
                    const double dyb = i > 0 ? (v - next[at(i - 1, j, n)]) / dy : 0.0;
                    const double dzf = j + 1 < nz ? (next[at(i, j + 1, n)] - v) / dz : 0.0;
                    const double jump_target = next[at(i_zero, j, std::min(n + 1, grid.n_max))];
                    const double rate = mean[static_cast<std::size_t>(j) * levels + n] * g;

                    const auto choice =
                        best_control(controls, grid.gamma_max, control_step, b, dyf, dyb);
                    cur[here] = v + dt * (choice.value + g * dzf + rate * (jump_target - v));
                    cur_policy[here] = controls[choice.index];
                }
            }
        }
        std::swap(next, cur);
        if (save_slot >= 0 && saved[save_slot] == k) {
            std::copy(next.begin(), next.end(), values.begin() + slice * save_slot);
            std::copy(cur_policy.begin(), cur_policy.end(), policy.begin() + slice * save_slot);
            --save_slot;
        }
    }

    return ValueGrid(grid, std::move(saved), std::move(values), std::move(policy), model.name,
                     prior.describe());
}

}  // namespace spikectl
