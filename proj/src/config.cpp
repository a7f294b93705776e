#include "spikectl/config.hpp"

#include "spikectl/errors.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace spikectl {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Strips a trailing comment that is not inside a string literal.
std::string_view strip_comment(std::string_view line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

double as_double(const json& v, const std::string& key) {
    if (!v.is_number()) throw ValidationError("config: '" + key + "' must be a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ValidationError("config: '" + key + "' must be an integer");
    return v.get<int>();
}

std::string as_string(const json& v, const std::string& key) {
    if (!v.is_string()) throw ValidationError("config: '" + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<std::vector<double>> as_rows(const json& v, const std::string& key,
                                         std::size_t width) {
    if (!v.is_array()) throw ValidationError("config: '" + key + "' must be an array");
    std::vector<std::vector<double>> rows;
    for (const auto& row : v) {
        if (!row.is_array() || row.size() != width)
            throw ValidationError("config: '" + key + "' rows must have " +
                                  std::to_string(width) + " entries");
        std::vector<double> r;
        for (const auto& x : row) r.push_back(as_double(x, key));
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string num(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    std::map<std::string, json> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.rfind("meta_", 0) == 0) continue;
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::parse_error&) {
            throw ValidationError("config line " + std::to_string(line_no) + ": cannot parse value of '" + key + "'");
        }
        if (!entries.emplace(key, std::move(parsed)).second)
            throw ValidationError("config: duplicate key '" + key + "'");
    }

    RunConfig c;
    bool has_atoms = false, has_density = false;
    std::set<std::string> density_keys;
    for (const auto& [key, v] : entries) {
        if (key == "model") c.model = as_string(v, key);
        else if (key == "intensity_cap") c.intensity_cap = as_double(v, key);
        else if (key == "g_table") {
            for (const auto& r : as_rows(v, key, 2)) c.g_table.emplace_back(r[0], r[1]);
        } else if (key == "atoms") {
            has_atoms = true;
            for (const auto& r : as_rows(v, key, 2)) c.prior.atoms.push_back({r[0], r[1]});
        } else if (key == "density") {
            has_density = true;
            c.prior.density = as_string(v, key);
        } else if (key == "support") {
            density_keys.insert(key);
            if (!v.is_array() || v.size() != 2) throw ValidationError("config: 'support' must be [a, b]");
            c.prior.support_lo = as_double(v[0], key);
            c.prior.support_hi = as_double(v[1], key);
        } else if (key == "quadrature_nodes") {
            density_keys.insert(key);
            c.prior.quadrature_nodes = as_int(v, key);
        }
        else if (key == "horizon") c.grid.horizon = as_double(v, key);
        else if (key == "kappa") c.grid.kappa = as_double(v, key);
        else if (key == "nt") c.grid.nt = as_int(v, key);
        else if (key == "y_min") c.grid.y_min = as_double(v, key);
        else if (key == "y_max") c.grid.y_max = as_double(v, key);
        else if (key == "ny") c.grid.ny = as_int(v, key);
        else if (key == "z_max") c.grid.z_max = as_double(v, key);
        else if (key == "nz") c.grid.nz = as_int(v, key);
        else if (key == "n_max") c.grid.n_max = as_int(v, key);
        else if (key == "gamma_max") c.grid.gamma_max = as_double(v, key);
        else if (key == "n_controls") c.grid.n_controls = as_int(v, key);
        else if (key == "save_stride") c.grid.save_stride = as_int(v, key);
        else if (key == "seed") {
            if (!v.is_number_unsigned()) throw ValidationError("config: 'seed' must be a nonnegative integer");
            c.seed = v.get<std::uint64_t>();
        }
        else if (key == "out") c.out = as_string(v, key);
        else if (key == "paths") c.paths = as_int(v, key);
        else if (key == "lambda_true") {
            if (v.is_string()) {
                if (v.get<std::string>() != "prior")
                    throw ValidationError("config: 'lambda_true' must be a number or \"prior\"");
                c.lambda_true.reset();
            } else {
                c.lambda_true = as_double(v, key);
            }
        }
        else if (key == "dt_record") c.dt_record = as_double(v, key);
        else if (key == "dt_flow") c.dt_flow = as_double(v, key);
        else if (key == "policy") c.policy = as_string(v, key);
        else if (key == "y0") c.start.y = as_double(v, key);
        else if (key == "z0") c.start.z = as_double(v, key);
        else if (key == "n0") c.start.n = as_int(v, key);
        else if (key == "eval_points") {
            for (const auto& r : as_rows(v, key, 4)) {
                if (r[3] != static_cast<int>(r[3]))
                    throw ValidationError("config: eval_points n must be an integer");
                c.eval_points.push_back({r[0], r[1], r[2], static_cast<int>(r[3])});
            }
        }
        else if (key == "scheme_tolerance") c.scheme_tolerance = as_double(v, key);
        else throw ValidationError("config: unknown key '" + key + "'");
    }

    if (has_atoms == has_density)
        throw ValidationError("config: exactly one of 'atoms' or 'density' must be given");
    if (has_atoms && !density_keys.empty())
        throw ValidationError("config: 'support'/'quadrature_nodes' only apply to a density prior");
    if (has_density && c.prior.density != "uniform")
        throw ValidationError("config: unsupported density '" + c.prior.density + "'");
    if (c.policy != "pde" && c.policy != "zero")
        throw ValidationError("config: policy must be \"pde\" or \"zero\"");
    if (c.paths < 1) throw ValidationError("config: paths must be positive");
    if (!(c.dt_record > 0.0)) throw ValidationError("config: dt_record must be positive");
    if (c.start.z < 0.0 || c.start.n < 0) throw ValidationError("config: need z0 >= 0 and n0 >= 0");
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string format_config(const RunConfig& c,
                          const std::vector<std::pair<std::string, std::string>>& meta) {
    std::ostringstream os;
    os << "model = " << json(c.model).dump() << "\n";
    if (c.intensity_cap) os << "intensity_cap = " << num(*c.intensity_cap) << "\n";
    if (!c.g_table.empty()) {
        os << "g_table = [";
        for (std::size_t i = 0; i < c.g_table.size(); ++i)
            os << (i ? ", " : "") << "[" << num(c.g_table[i].first) << ", " << num(c.g_table[i].second) << "]";
        os << "]\n";
    }
    if (c.prior.atomic()) {
        os << "atoms = [";
        for (std::size_t i = 0; i < c.prior.atoms.size(); ++i)
            os << (i ? ", " : "") << "[" << num(c.prior.atoms[i].lambda) << ", "
               << num(c.prior.atoms[i].weight) << "]";
        os << "]\n";
    } else {
        os << "density = " << json(c.prior.density).dump() << "\n";
        os << "support = [" << num(c.prior.support_lo) << ", " << num(c.prior.support_hi) << "]\n";
        os << "quadrature_nodes = " << c.prior.quadrature_nodes << "\n";
    }
    const auto& g = c.grid;
    os << "horizon = " << num(g.horizon) << "\n"
       << "kappa = " << num(g.kappa) << "\n"
       << "nt = " << g.nt << "\n"
       << "y_min = " << num(g.y_min) << "\n"
       << "y_max = " << num(g.y_max) << "\n"
       << "ny = " << g.ny << "\n"
       << "z_max = " << num(g.z_max) << "\n"
       << "nz = " << g.nz << "\n"
       << "n_max = " << g.n_max << "\n"
       << "gamma_max = " << num(g.gamma_max) << "\n"
       << "n_controls = " << g.n_controls << "\n"
       << "save_stride = " << g.save_stride << "\n"
       << "seed = " << c.seed << "\n"
       << "out = " << json(c.out).dump() << "\n"
       << "paths = " << c.paths << "\n"
       << "lambda_true = " << (c.lambda_true ? num(*c.lambda_true) : std::string("\"prior\"")) << "\n"
       << "dt_record = " << num(c.dt_record) << "\n";
    if (c.dt_flow) os << "dt_flow = " << num(*c.dt_flow) << "\n";
    os << "policy = " << json(c.policy).dump() << "\n"
       << "y0 = " << num(c.start.y) << "\n"
       << "z0 = " << num(c.start.z) << "\n"
       << "n0 = " << c.start.n << "\n";
    if (!c.eval_points.empty()) {
        os << "eval_points = [";
        for (std::size_t i = 0; i < c.eval_points.size(); ++i) {
            const auto& p = c.eval_points[i];
            os << (i ? ", " : "") << "[" << num(p.t) << ", " << num(p.y) << ", " << num(p.z)
               << ", " << p.n << "]";
        }
        os << "]\n";
    }
    os << "scheme_tolerance = " << num(c.scheme_tolerance) << "\n";
    for (const auto& [k, v] : meta) os << "meta_" << k << " = " << v << "\n";
    return os.str();
}

Model build_model(const RunConfig& config) {
    Model m = builtin_model(config.model, config.intensity_cap);
    if (!config.g_table.empty()) m = with_shape_table(std::move(m), config.g_table);
    return m;
}

Prior build_prior(const PriorSpec& spec) {
    if (spec.atomic()) return make_atomic_prior(spec.atoms);
    if (spec.density == "uniform")
        return make_quadrature_prior([](double) { return 1.0; }, spec.support_lo, spec.support_hi,
                                     spec.quadrature_nodes);
    throw ValidationError("unsupported density '" + spec.density + "'");
}

GridSpec resolve_grid(const RunConfig& config, const Model& model, const Prior& prior) {
    GridSpec g = complete_grid_spec(config.grid, model, prior);
    validate(g, model, prior);
    return g;
}

}  // namespace spikectl
