#include "mimfd/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "mimfd/errors.hpp"

namespace mimfd {

namespace {

using std::numbers::pi;

const std::vector<std::string> kFieldPresets{"zero", "sine", "example1", "ex2a", "ex2b", "ex2c"};
const std::vector<std::string> kInitialPresets{"zero", "sine"};
const std::vector<std::string> kRhoPresets{"example1", "one", "zero"};
const std::vector<std::string> kDiffusionPresets{"identity", "anisotropic"};
const std::vector<std::string> kReactionPresets{"zero", "one"};

const std::vector<std::string> kKeys{
    "alpha", "q", "final_time", "steps", "nx", "ny", "domain", "diffusion", "reaction", "rho", "g_true", "initial",
    "frame", "noise", "seed", "refine", "beta", "beta_sweep", "sweep_values", "g_max", "max_iters", "grad_tol",
    "armijo_c1", "armijo_backtrack", "armijo_initial_step", "armijo_max_backtracks", "step_rule", "direction",
    "smoothing", "adjoint", "out"};

bool contains(const std::vector<std::string>& names, const std::string& name) {
    for (const auto& n : names)
        if (n == name) return true;
    return false;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) parts.push_back(trim(item));
    return parts;
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || std::isnan(v))
        throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
    return v;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& text) {
    Int v{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + text + "'");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* name_of(StepRule r) { return r == StepRule::fixed ? "fixed" : "quadratic"; }
const char* name_of(DirectionMode d) {
    return d == DirectionMode::steepest_descent ? "steepest_descent" : "fletcher_reeves";
}
const char* name_of(AdjointScheme s) { return s == AdjointScheme::discrete ? "discrete" : "continuous"; }

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError("key '" + key + "': " + what);
}

void set_key(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "alpha") c.alpha = to_double(key, value);
    else if (key == "q") c.q = to_double(key, value);
    else if (key == "final_time") c.final_time = to_double(key, value);
    else if (key == "steps") c.steps = to_int<int>(key, value);
    else if (key == "nx") c.nx = to_int<int>(key, value);
    else if (key == "ny") c.ny = to_int<int>(key, value);
    else if (key == "domain") {
        const auto p = split_list(value);
        require(p.size() == 4, key, "expected x0,x1,y0,y1");
        c.domain = {to_double(key, p[0]), to_double(key, p[1]), to_double(key, p[2]), to_double(key, p[3])};
    } else if (key == "diffusion") c.diffusion = value;
    else if (key == "reaction") c.reaction = value;
    else if (key == "rho") c.rho = value;
    else if (key == "g_true") c.g_true = value;
    else if (key == "initial") c.initial = value;
    else if (key == "frame") {
        if (value == "none") {
            c.frame.reset();
        } else {
            const auto p = split_list(value);
            require(p.size() == 2, key, "expected lo,hi or none");
            c.frame = std::make_pair(to_double(key, p[0]), to_double(key, p[1]));
        }
    } else if (key == "noise") c.noise = to_double(key, value);
    else if (key == "seed") c.seed = to_int<std::uint64_t>(key, value);
    else if (key == "refine") c.refine = to_int<int>(key, value);
    else if (key == "beta") c.beta = to_double(key, value);
    else if (key == "beta_sweep") c.beta_sweep = to_bool(key, value);
    else if (key == "sweep_values") {
        c.sweep_values.clear();
        for (const auto& p : split_list(value)) c.sweep_values.push_back(to_double(key, p));
    } else if (key == "g_max") {
        if (value == "none") c.g_max.reset();
        else c.g_max = to_double(key, value);
    } else if (key == "max_iters") c.max_iters = to_int<int>(key, value);
    else if (key == "grad_tol") c.grad_tol = to_double(key, value);
    else if (key == "armijo_c1") c.armijo_c1 = to_double(key, value);
    else if (key == "armijo_backtrack") c.armijo_backtrack = to_double(key, value);
    else if (key == "armijo_initial_step") c.armijo_initial_step = to_double(key, value);
    else if (key == "armijo_max_backtracks") c.armijo_max_backtracks = to_int<int>(key, value);
    else if (key == "step_rule") {
        if (value == "fixed") c.step_rule = StepRule::fixed;
        else if (value == "quadratic") c.step_rule = StepRule::quadratic;
        else throw ConfigError("key 'step_rule': expected fixed or quadratic");
    } else if (key == "direction") {
        if (value == "steepest_descent") c.direction = DirectionMode::steepest_descent;
        else if (value == "fletcher_reeves") c.direction = DirectionMode::fletcher_reeves;
        else throw ConfigError("key 'direction': expected steepest_descent or fletcher_reeves");
    } else if (key == "smoothing") c.smoothing = to_double(key, value);
    else if (key == "adjoint") {
        if (value == "discrete") c.adjoint = AdjointScheme::discrete;
        else if (value == "continuous") c.adjoint = AdjointScheme::continuous;
        else throw ConfigError("key 'adjoint': expected discrete or continuous");
    } else if (key == "out") c.out = value;
    else throw ConfigError("unknown key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& required_keys() {
    static const std::vector<std::string> keys{"alpha", "q", "final_time", "steps", "nx", "ny", "rho", "g_true"};
    return keys;
}

const std::vector<std::string>& field_preset_names() { return kFieldPresets; }

void RunConfig::validate() const {
    require(alpha > 0.0 && alpha < 1.0, "alpha", "must lie in (0, 1)");
    require(q >= 0.0 && std::isfinite(q), "q", "must be >= 0");
    require(final_time > 0.0 && std::isfinite(final_time), "final_time", "must be > 0");
    require(steps >= 1, "steps", "must be >= 1");
    require(nx >= 2, "nx", "must be >= 2");
    require(ny >= 2, "ny", "must be >= 2");
    require(domain.x1 > domain.x0 && domain.y1 > domain.y0, "domain", "must be a nondegenerate rectangle");
    require(contains(kDiffusionPresets, diffusion), "diffusion", "unknown preset '" + diffusion + "'");
    require(contains(kReactionPresets, reaction), "reaction", "unknown preset '" + reaction + "'");
    require(contains(kRhoPresets, rho), "rho", "unknown preset '" + rho + "'");
    require(contains(kFieldPresets, g_true), "g_true", "unknown preset '" + g_true + "'");
    require(contains(kInitialPresets, initial), "initial",
            "unknown preset '" + initial + "' (initial values must vanish on the boundary)");
    if (frame) {
        const auto [lo, hi] = *frame;
        require(lo <= hi && lo > std::max(domain.x0, domain.y0) && hi < std::min(domain.x1, domain.y1), "frame",
                "inner square must satisfy lo <= hi strictly inside the domain");
    }
    require(noise >= 0.0 && std::isfinite(noise), "noise", "must be >= 0");
    require(refine >= 1, "refine", "must be >= 1");
    require(beta >= 0.0 && std::isfinite(beta), "beta", "must be >= 0");
    require(!sweep_values.empty(), "sweep_values", "must not be empty");
    for (double b : sweep_values) require(b >= 0.0 && std::isfinite(b), "sweep_values", "entries must be >= 0");
    if (g_max) require(*g_max > 0.0, "g_max", "must be > 0");
    require(max_iters >= 0, "max_iters", "must be >= 0");
    require(grad_tol >= 0.0, "grad_tol", "must be >= 0");
    require(armijo_c1 > 0.0 && armijo_c1 < 1.0, "armijo_c1", "must lie in (0, 1)");
    require(armijo_backtrack > 0.0 && armijo_backtrack < 1.0, "armijo_backtrack", "must lie in (0, 1)");
    require(armijo_initial_step > 0.0 && std::isfinite(armijo_initial_step), "armijo_initial_step", "must be > 0");
    require(armijo_max_backtracks >= 0, "armijo_max_backtracks", "must be >= 0");
    require(smoothing >= 0.0 && std::isfinite(smoothing), "smoothing", "must be >= 0");
    require(!out.empty(), "out", "must not be empty");
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string body = trim(raw);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line);
        if (!contains(kKeys, key)) throw ConfigError("unknown key '" + key + "' on line " + std::to_string(line));
        if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "' on line " + std::to_string(line));
        if (value.empty()) throw ConfigError("key '" + key + "' has no value");
        set_key(c, key, value);
    }
    for (const auto& key : required_keys())
        if (!seen.count(key)) throw ConfigError("missing required key '" + key + "'");
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_text(const RunConfig& c) {
    std::ostringstream o;
    o << "alpha = " << fmt(c.alpha) << '\n'
      << "q = " << fmt(c.q) << '\n'
      << "final_time = " << fmt(c.final_time) << '\n'
      << "steps = " << c.steps << '\n'
      << "nx = " << c.nx << '\n'
      << "ny = " << c.ny << '\n'
      << "domain = " << fmt(c.domain.x0) << ',' << fmt(c.domain.x1) << ',' << fmt(c.domain.y0) << ','
      << fmt(c.domain.y1) << '\n'
      << "diffusion = " << c.diffusion << '\n'
      << "reaction = " << c.reaction << '\n'
      << "rho = " << c.rho << '\n'
      << "g_true = " << c.g_true << '\n'
      << "initial = " << c.initial << '\n'
      << "frame = " << (c.frame ? fmt(c.frame->first) + "," + fmt(c.frame->second) : std::string("none")) << '\n'
      << "noise = " << fmt(c.noise) << '\n'
      << "seed = " << c.seed << '\n'
      << "refine = " << c.refine << '\n'
      << "beta = " << fmt(c.beta) << '\n'
      << "beta_sweep = " << (c.beta_sweep ? "true" : "false") << '\n'
      << "sweep_values = ";
    for (std::size_t i = 0; i < c.sweep_values.size(); ++i) o << (i ? "," : "") << fmt(c.sweep_values[i]);
    o << '\n'
      << "g_max = " << (c.g_max ? fmt(*c.g_max) : std::string("none")) << '\n'
      << "max_iters = " << c.max_iters << '\n'
      << "grad_tol = " << fmt(c.grad_tol) << '\n'
      << "armijo_c1 = " << fmt(c.armijo_c1) << '\n'
      << "armijo_backtrack = " << fmt(c.armijo_backtrack) << '\n'
      << "armijo_initial_step = " << fmt(c.armijo_initial_step) << '\n'
      << "armijo_max_backtracks = " << c.armijo_max_backtracks << '\n'
      << "step_rule = " << name_of(c.step_rule) << '\n'
      << "direction = " << name_of(c.direction) << '\n'
      << "smoothing = " << fmt(c.smoothing) << '\n'
      << "adjoint = " << name_of(c.adjoint) << '\n'
      << "out = " << c.out.string() << '\n';
    return o.str();
}

void save_config(const std::filesystem::path& path, const RunConfig& config) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << to_text(config);
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

std::function<double(double)> rho_preset(const std::string& name) {
    if (name == "example1") return [](double t) { return 2.0 + 4.0 * pi * pi * t * t; };
    if (name == "one") return [](double) { return 1.0; };
    if (name == "zero") return [](double) { return 0.0; };
    throw ConfigError("key 'rho': unknown preset '" + name + "'");
}

ScalarFunction field_preset(const std::string& name) {
    if (name == "zero") return [](double, double) { return 0.0; };
    if (name == "sine") return [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); };
    if (name == "example1") return [](double x, double y) { return 0.5 * std::cos(pi * x) * std::cos(pi * y) + 1.0; };
    if (name == "ex2a") return [](double x, double y) { return 3.0 - std::exp(1.0 - 0.5 * (x + y)); };
    if (name == "ex2b") return [](double x, double y) { return 0.5 * std::cos(pi * x) * std::cos(2.0 * pi * y) + 1.0; };
    if (name == "ex2c") return [](double x, double y) { return 0.5 * std::sin(pi * x) * std::cos(pi * y) + 1.0; };
    throw ConfigError("unknown field preset '" + name + "'");
}

Coefficients coefficient_preset(const std::string& diffusion, const std::string& reaction) {
    Coefficients c = Coefficients::laplacian();
    if (diffusion == "anisotropic") {
        c.diffusion = [](double x, double y) {
            Eigen::Matrix2d a;
            a << 1.0 + x, 0.25, 0.25, 1.0 + y;
            return a;
        };
    } else if (diffusion != "identity") {
        throw ConfigError("key 'diffusion': unknown preset '" + diffusion + "'");
    }
    if (reaction == "one") c.reaction = [](double, double) { return 1.0; };
    else if (reaction != "zero") throw ConfigError("key 'reaction': unknown preset '" + reaction + "'");
    return c;
}

RunConfig example1_config() {
    RunConfig c;
    c.noise = 1.0;
    c.beta_sweep = true;
    c.direction = DirectionMode::fletcher_reeves;
    c.step_rule = StepRule::quadratic;
    c.smoothing = 0.1;
    return c;
}

Scenario to_scenario(const RunConfig& c) {
    Scenario s;
    s.domain = c.domain;
    s.nx = c.nx;
    s.ny = c.ny;
    s.final_time = c.final_time;
    s.steps = c.steps;
    s.alpha = c.alpha;
    s.q = c.q;
    s.coefficients = coefficient_preset(c.diffusion, c.reaction);
    s.rho = rho_preset(c.rho);
    s.initial = field_preset(c.initial);
    s.frame = c.frame;
    return s;
}

InverseConfig to_inverse_config(const RunConfig& c) {
    InverseConfig ic;
    ic.beta = c.beta;
    ic.g_max = c.g_max;
    ic.max_iters = c.max_iters;
    ic.grad_tol = c.grad_tol;
    ic.armijo.c1 = c.armijo_c1;
    ic.armijo.backtrack = c.armijo_backtrack;
    ic.armijo.initial_step = c.armijo_initial_step;
    ic.armijo.max_backtracks = c.armijo_max_backtracks;
    ic.armijo.rule = c.step_rule;
    ic.direction = c.direction;
    ic.smoothing = c.smoothing;
    return ic;
}

}  // namespace mimfd
