#include "spikectl/io.hpp"

#include "spikectl/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>

namespace spikectl {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'K', 'V', 'G', 'R', 'D', '1'};

using File = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

File open_write(const std::filesystem::path& path) {
    File f(std::fopen(path.c_str(), "w"), &std::fclose);
    if (!f) throw ValidationError("cannot write " + path.string());
    return f;
}

template <class T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ValidationError("value grid file truncated");
    return v;
}

void put_string(std::ofstream& out, const std::string& s) {
    put<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& in) {
    const auto size = get<std::uint64_t>(in);
    if (size > (1u << 20)) throw ValidationError("value grid file corrupt");
    std::string s(size, '\0');
    in.read(s.data(), static_cast<std::streamsize>(size));
    if (!in) throw ValidationError("value grid file truncated");
    return s;
}

}  // namespace

void write_value_csv(const ValueGrid& grid, const std::filesystem::path& path,
                     std::span<const int> slices) {
    auto f = open_write(path);
    const auto& g = grid.grid();
    std::vector<int> chosen(slices.begin(), slices.end());
    if (chosen.empty())
        for (int s = 0; s < grid.slices(); ++s) chosen.push_back(s);
    std::fputs("t,y,z,n,v,gamma\n", f.get());
    for (int s : chosen)
        for (int i = 0; i < g.ny; ++i)
            for (int j = 0; j < g.nz; ++j)
                for (int n = 0; n <= g.n_max; ++n)
                    std::fprintf(f.get(), "%.17g,%.17g,%.17g,%d,%.17g,%.17g\n", grid.slice_time(s),
                                 grid.y_at(i), grid.z_at(j), n, grid.value(s, i, j, n),
                                 grid.policy(s, i, j, n));
}

void write_value_grid(const ValueGrid& grid, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    const auto& g = grid.grid();
    out.write(kMagic, sizeof kMagic);
    put(out, g.horizon);
    put<std::int64_t>(out, g.nt);
    put(out, g.y_min);
    put(out, g.y_max);
    put<std::int64_t>(out, g.ny);
    put(out, g.z_max);
    put<std::int64_t>(out, g.nz);
    put<std::int64_t>(out, g.n_max);
    put(out, g.gamma_max);
    put<std::int64_t>(out, g.n_controls);
    put(out, g.kappa);
    put<std::int64_t>(out, g.save_stride);
    put_string(out, grid.model_name());
    put_string(out, grid.prior_description());
    put<std::uint64_t>(out, grid.saved_steps().size());
    for (int k : grid.saved_steps()) put<std::int64_t>(out, k);
    const auto values = grid.values();
    const auto policy = grid.policies();
    put<std::uint64_t>(out, values.size());
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(policy.data()),
              static_cast<std::streamsize>(policy.size() * sizeof(double)));
    if (!out) throw ValidationError("failed writing " + path.string());
}

ValueGrid read_value_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("missing value grid " + path.string() + " (run 'solve' first)");
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || !std::equal(magic, magic + sizeof magic, kMagic))
        throw ValidationError(path.string() + " is not a value grid file");
    GridSpec g;
    g.horizon = get<double>(in);
    g.nt = static_cast<int>(get<std::int64_t>(in));
    g.y_min = get<double>(in);
    g.y_max = get<double>(in);
    g.ny = static_cast<int>(get<std::int64_t>(in));
    g.z_max = get<double>(in);
    g.nz = static_cast<int>(get<std::int64_t>(in));
    g.n_max = static_cast<int>(get<std::int64_t>(in));
    g.gamma_max = get<double>(in);
    g.n_controls = static_cast<int>(get<std::int64_t>(in));
    g.kappa = get<double>(in);
    g.save_stride = static_cast<int>(get<std::int64_t>(in));
    std::string model_name = get_string(in);
    std::string prior = get_string(in);
    const auto n_steps = get<std::uint64_t>(in);
    if (n_steps > (1u << 24)) throw ValidationError("value grid file corrupt");
    std::vector<int> steps(n_steps);
    for (auto& k : steps) k = static_cast<int>(get<std::int64_t>(in));
    const auto size = get<std::uint64_t>(in);
    if (size != n_steps * g.ny * g.nz * static_cast<std::uint64_t>(g.n_max + 1))
        throw ValidationError("value grid file corrupt");
    std::vector<double> values(size), policy(size);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(size * sizeof(double)));
    in.read(reinterpret_cast<char*>(policy.data()), static_cast<std::streamsize>(size * sizeof(double)));
    if (!in) throw ValidationError("value grid file truncated");
    return ValueGrid(g, std::move(steps), std::move(values), std::move(policy), std::move(model_name),
                     std::move(prior));
}

void write_trajectory_csv(const Trajectory& tr, const std::filesystem::path& path) {
    auto f = open_write(path);
    std::fputs("t,y,gamma,n,z,post_mean,post_var\n", f.get());
    for (std::size_t r = 0; r < tr.rows(); ++r)
        std::fprintf(f.get(), "%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g\n", tr.times[r], tr.y[r],
                     tr.gamma[r], tr.n[r], tr.z[r], tr.post_mean[r], tr.post_var[r]);
}

void write_jump_csv(const Trajectory& tr, const std::filesystem::path& path) {
    auto f = open_write(path);
    std::fputs("tau\n", f.get());
    for (double tau : tr.jump_times) std::fprintf(f.get(), "%.17g\n", tau);
}

}  // namespace spikectl
