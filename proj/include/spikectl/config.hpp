#pragma once

#include "spikectl/hjb.hpp"
#include "spikectl/mceval.hpp"
#include "spikectl/model.hpp"
#include "spikectl/prior.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spikectl {

/// Either explicit atoms or a named density discretized by quadrature.
struct PriorSpec {
    std::vector<PriorNode> atoms;
    std::string density;  // empty for atomic priors
    double support_lo = 0.0;
    double support_hi = 1.0;
    int quadrature_nodes = 64;

    bool atomic() const { return density.empty(); }
};

struct RunConfig {
    std::string model = "ou_exp";
    std::optional<double> intensity_cap;
    std::vector<std::pair<double, double>> g_table;

    PriorSpec prior;
    GridSpec grid;

    std::uint64_t seed = 1;
    std::string out = "out";
    int paths = 1;
    std::optional<double> lambda_true;  // nullopt: sample from the prior
    double dt_record = 0.01;
    std::optional<double> dt_flow;      // default: grid dt / 4
    std::string policy = "pde";
    PathState start{};

    std::vector<EvalPoint> eval_points;
    double scheme_tolerance = 0.02;
};

/// Flat "key = value" text, one entry per line, '#' starts a comment. Values
/// are JSON scalars or arrays, e.g.
///
///     model = "ou_exp"
///     atoms = [[0, 1], [0.25, 2], [0.5, 4]]
///
/// Keys starting with "meta_" are informational and skipped. Unknown keys,
/// duplicate keys and a missing or doubled prior spec are ValidationErrors.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config; `meta` lines are appended as meta_<key>.
std::string format_config(const RunConfig& config,
                          const std::vector<std::pair<std::string, std::string>>& meta = {});

Model build_model(const RunConfig& config);
Prior build_prior(const PriorSpec& spec);

/// Grid with unset fields completed; validated against model and prior.
GridSpec resolve_grid(const RunConfig& config, const Model& model, const Prior& prior);

}  // namespace spikectl
