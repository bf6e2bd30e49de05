#include "hjadm/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <set>

namespace hjadm::cli {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"problem", {"hamiltonian", "u0", "x_min", "x_max"}},
        {"adm", {"terms", "node_cap", "radius_points"}},
        {"characteristics", {"fan_size", "scan_points"}},
        {"fd", {"nodes", "cfl", "boundary", "t_end", "snapshot_times"}},
        {"outputs", {"directory", "format"}},
    };
    return keys;
}

std::string unquote(std::string s) {
    auto trim = [](std::string& v) {
        auto b = v.find_first_not_of(" \t\r");
        auto e = v.find_last_not_of(" \t\r");
        v = b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    trim(s);
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> raw(const std::string& key) const {
        auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
        if (!v) return std::nullopt;
        return unquote(*v);
    }

    std::string string(const std::string& key, const std::string& fallback) const {
        return raw(key).value_or(fallback);
    }

    std::string required_string(const std::string& key) const {
        auto v = raw(key);
        if (!v || v->empty()) throw ConfigError(key + ": required key is missing");
        return *v;
    }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) const {
        auto v = raw(key);
        if (!v) {
            if (fallback) return *fallback;
            throw ConfigError(key + ": required key is missing");
        }
        return parse_number(key, *v);
    }

    long long integer(const std::string& key, long long fallback) const {
        auto v = raw(key);
        if (!v) return fallback;
        double d = parse_number(key, *v);
        if (std::floor(d) != d || std::fabs(d) > 1e15) throw ConfigError(key + ": expected an integer, got " + *v);
        return static_cast<long long>(d);
    }

    std::vector<double> list(const std::string& key) const {
        std::vector<double> out;
        auto v = raw(key);
        if (!v) return out;
        std::string item;
        for (std::size_t i = 0; i <= v->size(); ++i) {
            if (i == v->size() || (*v)[i] == ',') {
                if (unquote(item).empty()) {
                    if (i != v->size() || !out.empty()) throw ConfigError(key + ": empty list entry");
                } else {
                    out.push_back(parse_number(key, item));
                }
                item.clear();
            } else {
                item += (*v)[i];
            }
        }
        return out;
    }

private:
    static double parse_number(const std::string& key, const std::string& text) {
        try {
            double d = sym::evaluate(sym::parse(text), sym::Binding{{"pi", std::numbers::pi}});
            if (!std::isfinite(d)) throw ConfigError(key + ": value is not finite");
            return d;
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(key + ": invalid number '" + unquote(text) + "' (" + e.what() + ")");
        }
    }

    const pt::ptree& tree_;
};

void check_unknown_keys(const pt::ptree& tree) {
    const auto& known = known_keys();
    for (const auto& [section, body] : tree) {
        auto it = known.find(section);
        if (it == known.end()) {
            if (body.empty()) throw ConfigError(section + ": key outside of any section");
            throw ConfigError("[" + section + "]: unknown section");
        }
        for (const auto& [key, value] : body) {
            if (!it->second.contains(key)) throw ConfigError(section + "." + key + ": unknown key");
        }
    }
}

sym::Expr parse_expression(const std::string& key, const std::string& text) {
    try {
        return sym::parse(text);
    } catch (const SyntaxError& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

std::size_t positive_size(const std::string& key, long long v, long long minimum) {
    if (v < minimum) throw ConfigError(key + ": must be at least " + std::to_string(minimum));
    return static_cast<std::size_t>(v);
}

}  // namespace

ProblemSpec RunConfig::problem_spec() const {
    ProblemSpec p;
    p.hamiltonian = parse_expression("problem.hamiltonian", problem.hamiltonian);
    p.initial = parse_expression("problem.u0", problem.u0);
    p.x_min = problem.x_min;
    p.x_max = problem.x_max;
    p.terms = adm.terms;
    p.node_cap = adm.node_cap;
    for (const auto& v : sym::free_variables(p.hamiltonian)) {
        if (v != kSlopeVar) throw ConfigError("problem.hamiltonian: unknown variable " + v + " (expected v)");
    }
    for (const auto& v : sym::free_variables(p.initial)) {
        if (v != kSpaceVar) throw ConfigError("problem.u0: unknown variable " + v + " (expected x)");
    }
    p.validate();
    return p;
}

RunConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config parse error at line " + std::to_string(e.line()) + ": " + e.message());
    }
    check_unknown_keys(tree);
    Reader r(tree);

    RunConfig cfg;
    cfg.problem.hamiltonian = r.required_string("problem.hamiltonian");
    cfg.problem.u0 = r.required_string("problem.u0");
    cfg.problem.x_min = r.number("problem.x_min");
    cfg.problem.x_max = r.number("problem.x_max");

    long long terms = r.integer("adm.terms", cfg.adm.terms);
    if (terms < 0 || terms > 20) throw ConfigError("adm.terms: must lie in [0, 20]");
    cfg.adm.terms = static_cast<int>(terms);
    cfg.adm.node_cap = positive_size("adm.node_cap", r.integer("adm.node_cap", static_cast<long long>(cfg.adm.node_cap)), 1);
    cfg.adm.radius_points = r.list("adm.radius_points");

    cfg.characteristics.fan_size =
        positive_size("characteristics.fan_size", r.integer("characteristics.fan_size", 10'001), 2);
    cfg.characteristics.scan_points =
        positive_size("characteristics.scan_points", r.integer("characteristics.scan_points", 10'000), 3);

    cfg.fd.nodes = positive_size("fd.nodes", r.integer("fd.nodes", 1001), 3);
    cfg.fd.cfl = r.number("fd.cfl", 0.5);
    cfg.fd.boundary = r.string("fd.boundary", "auto");
    if (cfg.fd.boundary != "auto" && cfg.fd.boundary != "periodic" && cfg.fd.boundary != "extrapolate") {
        throw ConfigError("fd.boundary: expected auto, periodic or extrapolate");
    }
    cfg.fd.t_end = r.number("fd.t_end", 1.0);
    if (!(cfg.fd.t_end >= 0.0)) throw ConfigError("fd.t_end: must be non-negative");
    cfg.fd.snapshot_times = r.list("fd.snapshot_times");
    if (cfg.fd.snapshot_times.empty()) cfg.fd.snapshot_times = {0.0, cfg.fd.t_end};
    for (double t : cfg.fd.snapshot_times) {
        if (t < 0.0 || t > cfg.fd.t_end) throw ConfigError("fd.snapshot_times: times must lie in [0, t_end]");
    }

    cfg.outputs.directory = r.string("outputs.directory", "out");
    cfg.outputs.format = r.string("outputs.format", "csv");
    if (cfg.outputs.format != "csv" && cfg.outputs.format != "json") {
        throw ConfigError("outputs.format: expected csv or json");
    }

    cfg.problem_spec();  // validates expressions and domain
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    return parse_config(in);
}

}  // namespace hjadm::cli
