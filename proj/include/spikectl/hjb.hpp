#pragma once

#include "spikectl/model.hpp"
#include "spikectl/prior.hpp"

#include <span>
#include <string>
#include <vector>

namespace spikectl {

/// Truncated (t, y, z, n) grid for the backward HJB sweep.
///
/// Fields left at their "unset" values (nt <= 0, z_max <= 0, n_max < 0) are
/// filled by complete_grid_spec().
struct GridSpec {
    double horizon = 1.0;
    int nt = 0;
    double y_min = -1.0;
    double y_max = 3.0;
    int ny = 81;
    double z_max = 0.0;
    int nz = 41;
    int n_max = -1;
    double gamma_max = 4.0;
    int n_controls = 81;
    double kappa = 1.0;
    // Keep every save_stride-th time slice (the terminal slice is always kept).
    int save_stride = 1;

    double dt() const { return horizon / nt; }
    double dy() const { return (y_max - y_min) / (ny - 1); }
    double dz() const { return z_max / (nz - 1); }
};

struct CflReport {
    double drift_part = 0.0;  // dt (max|b| + gamma_max) / dy
    double shape_part = 0.0;  // dt g_max / dz
    double jump_part = 0.0;   // dt lambda_max g_max
    double total() const { return drift_part + shape_part + jump_part; }
};

CflReport cfl_report(const GridSpec& grid, const Model& model, const Prior& prior);

/// Smallest n with P(Poisson(T lambda_max g_max) > n) < tail.
int default_n_max(double horizon, const Model& model, const Prior& prior, double tail = 1e-6);

/// Fills unset fields: z_max = T g_max, n_max from default_n_max, and the
/// smallest nt whose CFL number is at most `cfl_target`.
GridSpec complete_grid_spec(GridSpec grid, const Model& model, const Prior& prior,
                            double cfl_target = 0.9);

/// Throws ValidationError for malformed grids and NumericalError on CFL violation.
void validate(const GridSpec& grid, const Model& model, const Prior& prior);

struct HamiltonianResult {
    double value = 0.0;
    double gamma = 0.0;
};

/// H(x, p) = -min_{|gamma| <= gamma_max} { gamma^2/2 + (b(y) + gamma) p1 + g(y) p2 },
/// which is p1^2/2 - B(x).p when |p1| <= gamma_max. The minimizer is -clamp(p1).
HamiltonianResult hamiltonian(const Model& model, double y, double z, double p1, double p2,
                              double gamma_max);

/// Posterior-mean intensity Xi(n, z) g(y).
double theta(const Prior& prior, const Model& model, double y, double z, int n);

/// Uniform control set of n_controls (odd) points on [-gamma_max, gamma_max].
std::vector<double> control_set(const GridSpec& grid);

/// Value function and feedback policy on the saved time slices.
class ValueGrid {
public:
    ValueGrid(GridSpec grid, std::vector<int> saved_steps, std::vector<double> values,
              std::vector<double> policy, std::string model_name, std::string prior_description);

    const GridSpec& grid() const { return grid_; }
    const std::string& model_name() const { return model_name_; }
    const std::string& prior_description() const { return prior_description_; }

    int slices() const { return static_cast<int>(saved_steps_.size()); }
    std::span<const int> saved_steps() const { return saved_steps_; }
    double slice_time(int s) const { return saved_steps_[s] * grid_.dt(); }
    double y_at(int i) const { return grid_.y_min + i * dy_; }
    double z_at(int j) const { return j * dz_; }
    int zero_index() const { return zero_index_; }

    std::size_t index(int s, int i, int j, int n) const {
        return ((static_cast<std::size_t>(s) * grid_.ny + i) * grid_.nz + j) * levels_ + n;
    }
    double value(int s, int i, int j, int n) const { return values_[index(s, i, j, n)]; }
    double policy(int s, int i, int j, int n) const { return policy_[index(s, i, j, n)]; }

    std::span<const double> values() const { return values_; }
    std::span<const double> policies() const { return policy_; }

    /// Multilinear interpolation in (t, y, z); (y, z) clamped to the box and
    /// n clamped to [0, n_max]. Exact at stored nodes.
    double eval_value(double t, double y, double z, int n) const;
    double eval_policy(double t, double y, double z, int n) const;

private:
    double interpolate(const std::vector<double>& data, double t, double y, double z, int n) const;

    GridSpec grid_;
    std::vector<int> saved_steps_;
    std::vector<double> values_;
    std::vector<double> policy_;
    std::string model_name_;
    std::string prior_description_;
    double dy_ = 0.0;
    double dz_ = 0.0;
    int levels_ = 1;
    int zero_index_ = 0;
};

/// Explicit monotone scheme for
///   -v_t + H(x, grad v) + theta_n(x) [v - v(t, 0, z, n+1)] = 0,  v(T) = kappa Psi(n, z),
/// with per-control upwinding in y, upwinding in z, and the level n_max
/// jumping onto itself. Where the upwind neighbour falls outside the box the
/// directional difference is taken as zero.
ValueGrid solve(const Model& model, const Prior& prior, const GridSpec& grid);

}  // namespace spikectl
