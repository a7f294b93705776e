#pragma once

#include "spikectl/hjb.hpp"
#include "spikectl/sim.hpp"

#include <filesystem>
#include <span>

namespace spikectl {

/// CSV with header t,y,z,n,v,gamma, rows ordered by (slice, y, z, n) with n
/// fastest. Numbers are written with 17 significant digits. `slices` selects
/// saved slices by index; empty means all of them.
void write_value_csv(const ValueGrid& grid, const std::filesystem::path& path,
                     std::span<const int> slices = {});

/// Lossless binary dump of a solved grid, read back by read_value_grid().
void write_value_grid(const ValueGrid& grid, const std::filesystem::path& path);
ValueGrid read_value_grid(const std::filesystem::path& path);

/// Trajectory CSV (t,y,gamma,n,z,post_mean,post_var) and spike-time CSV (tau).
void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path);
void write_jump_csv(const Trajectory& trajectory, const std::filesystem::path& path);

}  // namespace spikectl
