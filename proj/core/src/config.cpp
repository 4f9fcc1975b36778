#include "invmeas/config.hpp"

#include "invmeas/csv.hpp"
#include "invmeas/error.hpp"
#include "invmeas/strings.hpp"

#include <functional>
#include <sstream>

namespace invmeas {

namespace {

struct Key {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

double positive(const std::string& v) {
    const double x = parse_double(v);
    if (!(x > 0.0) || !std::isfinite(x)) throw ParseError("'" + v + "' must be a positive finite number");
    return x;
}

double non_negative(const std::string& v) {
    const double x = parse_double(v);
    if (!(x >= 0.0) || !std::isfinite(x)) throw ParseError("'" + v + "' must be a non-negative finite number");
    return x;
}

int positive_int(const std::string& v) {
    const int x = parse_int(v);
    if (x <= 0) throw ParseError("'" + v + "' must be a positive integer");
    return x;
}

std::uint64_t unsigned64(const std::string& v) {
    const std::string s = trim(v);
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("'" + s + "' is not a non-negative 64-bit integer");
    return x;
}

bool boolean(const std::string& v) {
    const std::string s = trim(v);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ParseError("'" + s + "' is not a boolean (true/false)");
}

std::vector<double> positive_list(const std::string& v) {
    auto xs = parse_double_list(v);
    for (double x : xs)
        if (!(x > 0.0) || !std::isfinite(x)) throw ParseError("list '" + v + "' must hold positive numbers");
    return xs;
}

std::string join(const std::vector<double>& xs) {
    std::string s;
    for (double x : xs) s += (s.empty() ? "" : ",") + format_double(x);
    return s;
}

std::string join(const std::vector<int>& xs) {
    std::string s;
    for (int x : xs) s += (s.empty() ? "" : ",") + std::to_string(x);
    return s;
}

std::string non_empty(const std::string& v) {
    const std::string s = trim(v);
    if (s.empty()) throw ParseError("value must not be empty");
    return s;
}

#define NUM(field) [](const RunConfig& c) { return format_double(c.field); }
#define INT(field) [](const RunConfig& c) { return std::to_string(c.field); }
#define STR(field) [](const RunConfig& c) { return c.field; }

const std::vector<std::pair<std::string, Key>>& table() {
    static const std::vector<std::pair<std::string, Key>> keys = {
        {"example.name", {[](RunConfig& c, const std::string& v) { c.example = non_empty(v); }, STR(example)}},
        {"example.dim",
         {[](RunConfig& c, const std::string& v) {
              const int d = parse_int(v);
              if (d < 2 || d > kMaxDim) throw ParseError("dimension must lie in [2, " + std::to_string(kMaxDim) + "]");
              c.params.dim = d;
          },
          INT(params.dim)}},
        {"example.diffusion", {[](RunConfig& c, const std::string& v) { c.params.diffusion = positive(v); }, NUM(params.diffusion)}},
        {"example.theta",
         {[](RunConfig& c, const std::string& v) {
              const double x = parse_double(v);
              if (!std::isfinite(x)) throw ParseError("theta must be finite");
              c.params.theta = x;
          },
          NUM(params.theta)}},

        {"mesh.h", {[](RunConfig& c, const std::string& v) { c.h = positive(v); }, NUM(h)}},
        {"mesh.r_obs", {[](RunConfig& c, const std::string& v) { c.r_obs = positive(v); }, NUM(r_obs)}},
        {"mesh.schedule",
         {[](RunConfig& c, const std::string& v) {
              auto xs = parse_int_list(v);
              for (std::size_t i = 0; i < xs.size(); ++i)
                  if (xs[i] <= 0 || (i > 0 && xs[i] <= xs[i - 1]))
                      throw ParseError("schedule must be strictly increasing positive integers");
              c.schedule = xs;
          },
          [](const RunConfig& c) { return join(c.schedule); }}},
        {"mesh.eps", {[](RunConfig& c, const std::string& v) { c.eps = positive(v); }, NUM(eps)}},

        {"sde.dt", {[](RunConfig& c, const std::string& v) { c.dt = positive(v); }, NUM(dt)}},
        {"sde.T", {[](RunConfig& c, const std::string& v) { c.T = positive(v); }, NUM(T)}},
        {"sde.paths", {[](RunConfig& c, const std::string& v) { c.paths = positive_int(v); }, INT(paths)}},
        {"sde.seed",
         {[](RunConfig& c, const std::string& v) { c.seed = unsigned64(v); },
          [](const RunConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string("none"); }}},
        {"sde.stop_radius", {[](RunConfig& c, const std::string& v) { c.stop_radius = positive(v); }, NUM(stop_radius)}},
        {"sde.taming",
         {[](RunConfig& c, const std::string& v) {
              if (trim(v) == "auto")
                  c.taming.reset();
              else
                  c.taming = boolean(v);
          },
          [](const RunConfig& c) { return c.taming ? std::string(*c.taming ? "true" : "false") : std::string("auto"); }}},
        {"sde.drift",
         {[](RunConfig& c, const std::string& v) {
              const std::string s = trim(v);
              if (s == "G")
                  c.drift = DriftMode::G;
              else if (s == "Ghat")
                  c.drift = DriftMode::Ghat;
              else
                  throw ParseError("drift must be G or Ghat");
          },
          [](const RunConfig& c) { return std::string(c.drift == DriftMode::G ? "G" : "Ghat"); }}},
        {"sde.starts", {[](RunConfig& c, const std::string& v) { c.starts = non_empty(v); }, STR(starts)}},
        {"sde.ball_radii",
         {[](RunConfig& c, const std::string& v) { c.ball_radii = trim(v).empty() ? std::vector<double>{} : positive_list(v); },
          [](const RunConfig& c) { return join(c.ball_radii); }}},
        {"sde.record_every",
         {[](RunConfig& c, const std::string& v) {
              const int x = parse_int(v);
              if (x < 0) throw ParseError("record_every must be non-negative");
              c.record_every = x;
          },
          INT(record_every)}},
        {"sde.trajectories",
         {[](RunConfig& c, const std::string& v) { c.trajectories = boolean(v); },
          [](const RunConfig& c) { return std::string(c.trajectories ? "true" : "false"); }}},

        {"verify.bumps", {[](RunConfig& c, const std::string& v) { c.bumps = positive_int(v); }, INT(bumps)}},
        {"verify.bump_seed", {[](RunConfig& c, const std::string& v) { c.bump_seed = unsigned64(v); }, INT(bump_seed)}},
        {"verify.tolerance", {[](RunConfig& c, const std::string& v) { c.tolerance = positive(v); }, NUM(tolerance)}},
        {"verify.adjoint_tolerance",
         {[](RunConfig& c, const std::string& v) { c.adjoint_tolerance = positive(v); }, NUM(adjoint_tolerance)}},
        {"verify.density",
         {[](RunConfig& c, const std::string& v) {
              const std::string s = trim(v);
              if (s != "fem" && s != "reference") throw ParseError("density must be fem or reference");
              c.density = s;
          },
          STR(density)}},

        {"estimators.grid", {[](RunConfig& c, const std::string& v) { c.grid = non_empty(v); }, STR(grid)}},
        {"estimators.t", {[](RunConfig& c, const std::string& v) { c.times = positive_list(v); }, [](const RunConfig& c) { return join(c.times); }}},
        {"estimators.alpha", {[](RunConfig& c, const std::string& v) { c.alphas = positive_list(v); }, [](const RunConfig& c) { return join(c.alphas); }}},
        {"estimators.r_exponent",
         {[](RunConfig& c, const std::string& v) {
              const double r = parse_double(v);
              if (!(r >= 1.0)) throw ParseError("r_exponent must be at least 1 (inf allowed)");
              c.r_exponent = r;
          },
          NUM(r_exponent)}},
        {"estimators.g", {[](RunConfig& c, const std::string& v) { c.g = non_empty(v); }, STR(g)}},
        {"estimators.f", {[](RunConfig& c, const std::string& v) { c.f = non_empty(v); }, STR(f)}},
        {"estimators.set", {[](RunConfig& c, const std::string& v) { c.set = non_empty(v); }, STR(set)}},
        {"estimators.N0", {[](RunConfig& c, const std::string& v) { c.N0 = non_negative(v); }, NUM(N0)}},
        {"estimators.C", {[](RunConfig& c, const std::string& v) { c.C = positive(v); }, NUM(C)}},
        {"estimators.T_cut", {[](RunConfig& c, const std::string& v) { c.T_cut = positive(v); }, NUM(T_cut)}},
        {"estimators.truncation_tol",
         {[](RunConfig& c, const std::string& v) { c.truncation_tol = positive(v); }, NUM(truncation_tol)}},
        {"estimators.norm_mesh_h", {[](RunConfig& c, const std::string& v) { c.norm_mesh_h = positive(v); }, NUM(norm_mesh_h)}},

        {"run.workers",
         {[](RunConfig& c, const std::string& v) {
              const int w = parse_int(v);
              if (w < 0) throw ParseError("workers must be non-negative (0 = all cores)");
              c.workers = static_cast<unsigned>(w);
          },
          INT(workers)}},
        {"run.output", {[](RunConfig& c, const std::string& v) { c.output = non_empty(v); }, STR(output)}},
    };
    return keys;
}

#undef NUM
#undef INT
#undef STR

} // namespace

void apply_setting(RunConfig& config, const std::string& key, const std::string& value, int line) {
    for (const auto& [name, k] : table()) {
        if (name != key) continue;
        try {
            k.set(config, value);
        } catch (const ParseError& e) {
            throw ConfigError("line " + std::to_string(line) + ": " + key + ": " + e.what(), line);
        }
        return;
    }
    throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'", line);
}

RunConfig parse_config(const std::string& text, std::vector<std::string>* keys_set) {
    RunConfig config;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": expected 'section.key = value'", line);
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.find('.') == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": key '" + key + "' lacks a section", line);
        apply_setting(config, key, value, line);
        if (keys_set) keys_set->push_back(key);
    }
    if (!config.seed)
        throw ConfigError("line " + std::to_string(line) + ": missing required key sde.seed (end of input)", line);
    return config;
}

std::vector<std::pair<std::string, std::string>> describe_config(const RunConfig& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [name, k] : table()) out.emplace_back(name, k.get(config));
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& [name, k] : table()) out.push_back(name);
    return out;
}

} // namespace invmeas
