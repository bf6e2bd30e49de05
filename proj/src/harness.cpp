#include "hjadm/harness.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>
#include <variant>

#include "hjadm/adomian.hpp"
#include "hjadm/characteristics.hpp"
#include "hjadm/fdsolve.hpp"

namespace hjadm::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const std::vector<std::pair<Subcommand, std::string_view>>& subcommand_table() {
    static const std::vector<std::pair<Subcommand, std::string_view>> t = {
        {Subcommand::Series, "series"},
        {Subcommand::CriticalTime, "critical-time"},
        {Subcommand::Characteristics, "characteristics"},
        {Subcommand::FdSolve, "fd-solve"},
        {Subcommand::Compare, "compare"},
        {Subcommand::Radius, "radius"},
    };
    return t;
}

// ---- tables ---------------------------------------------------------------

using Cell = std::variant<double, long long, bool, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string format_double(double d) {
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

std::string csv_cell(const Cell& c) {
    struct {
        std::string operator()(double d) const { return format_double(d); }
        std::string operator()(long long i) const { return std::to_string(i); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(const std::string& s) const {
            if (s.find_first_of(",\"\n") == std::string::npos) return s;
            std::string q = "\"";
            for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            return q + "\"";
        }
    } visitor;
    return std::visit(visitor, c);
}

json json_cell(const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) {
        return std::isfinite(*d) ? json(*d) : json(format_double(*d));
    }
    return std::visit([](const auto& v) { return json(v); }, c);
}

std::string render(const Table& t, const std::string& format) {
    std::ostringstream out;
    if (format == "json") {
        json doc;
        doc["columns"] = t.columns;
        json rows = json::array();
        for (const auto& r : t.rows) {
            json row = json::array();
            for (const auto& c : r) row.push_back(json_cell(c));
            rows.push_back(std::move(row));
        }
        doc["rows"] = std::move(rows);
        out << doc.dump(1) << '\n';
        return out.str();
    }
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_cell(r[i]);
        out << '\n';
    }
    return out.str();
}

void write_atomically(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f << content;
        f.flush();
        if (!f) throw std::runtime_error("write to " + tmp.string() + " failed");
    }
    fs::rename(tmp, path);
}

// ---- stages -----------------------------------------------------------------

class Stage {
public:
    Stage(const RunConfig& cfg, RunManifest& manifest) : cfg_(cfg), manifest_(manifest) {}

    template <class F>
    auto timed(const std::string& name, F&& f) {
        auto start = std::chrono::steady_clock::now();
        auto record = [&] {
            std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
            manifest_.timings.push_back({name, d.count()});
            spdlog::debug("stage {} took {:.3f} s", name, d.count());
        };
        if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
            f();
            record();
        } else {
            auto r = f();
            record();
            return r;
        }
    }

    void emit(Table t) {
        const std::string& format = cfg_.outputs.format;
        std::string file = t.name + "." + format;
        timed("write " + file, [&] { write_atomically(fs::path(cfg_.outputs.directory) / file, render(t, format)); });
        manifest_.outputs.push_back({file, t.columns, t.rows.size()});
        spdlog::info("wrote {} ({} rows)", file, t.rows.size());
    }

    const RunConfig& cfg() const { return cfg_; }
    RunManifest& manifest() { return manifest_; }

private:
    const RunConfig& cfg_;
    RunManifest& manifest_;
};

fd::Grid config_grid(const RunConfig& cfg, const ProblemSpec& p) {
    fd::Boundary b = cfg.fd.boundary == "periodic"      ? fd::Boundary::Periodic
                     : cfg.fd.boundary == "extrapolate" ? fd::Boundary::Extrapolate
                                                        : fd::default_boundary(p);
    return fd::make_grid(p.x_min, p.x_max, cfg.fd.nodes, b);
}

adomian::ADMSeries config_series(Stage& s, const ProblemSpec& p) {
    return s.timed("build_series", [&] { return adomian::build_series(p, s.cfg().adm.terms); });
}

json nullable(double d) { return std::isfinite(d) ? json(d) : json(nullptr); }

void run_series(Stage& s, const ProblemSpec& p) {
    const auto series = config_series(s, p);
    const int n_max = s.cfg().adm.terms;
    const fd::Grid grid = config_grid(s.cfg(), p);

    Table terms{"series", {"n", "x", "u_tilde_n"}, {}};
    Table text{"series_terms", {"n", "expression"}, {}};
    Table surface{"partial_sum", {"x", "t", "u_N"}, {}};
    s.timed("sample_series", [&] {
        for (int n = 0; n <= n_max; ++n) {
            text.rows.push_back({static_cast<long long>(n), sym::print(series.coefficient(n))});
            for (std::size_t j = 0; j < grid.nodes; ++j) {
                double x = grid.x(j);
                terms.rows.push_back({static_cast<long long>(n), x, series.coefficient_at(n, x)});
            }
        }
        for (std::size_t j = 0; j < grid.nodes; ++j) {
            double x = grid.x(j);
            for (double t : s.cfg().fd.snapshot_times) {
                surface.rows.push_back({x, t, adomian::partial_sum_eval(series, n_max, x, t)});
            }
        }
    });
    s.emit(std::move(terms));
    s.emit(std::move(text));
    s.emit(std::move(surface));
    s.manifest().summary_json = json{{"terms", n_max}, {"finite", series.finite()}}.dump();
}

characteristics::CriticalTimeResult config_critical_time(Stage& s, const ProblemSpec& p) {
    characteristics::CriticalTimeOptions opts;
    opts.scan_points = s.cfg().characteristics.scan_points;
    auto r = s.timed("critical_time", [&] { return characteristics::critical_time(p, opts); });
    for (const auto& w : r.warnings) spdlog::warn("critical time: {}", w);
    return r;
}

void run_critical_time(Stage& s, const ProblemSpec& p) {
    auto r = config_critical_time(s, p);
    Table t{"critical_time", {"kind", "t_star", "x_star", "m"}, {}};
    t.rows.push_back({std::string(r.finite() ? "finite" : "infinite"), r.t_star, r.x_star, r.minimum});
    s.emit(std::move(t));
    s.manifest().summary_json = json{{"kind", r.finite() ? "finite" : "infinite"},
                                     {"t_star", nullable(r.t_star)},
                                     {"x_star", r.x_star},
                                     {"m", r.minimum},
                                     {"skipped_points", r.skipped_points},
                                     {"warnings", r.warnings}}
                                    .dump();
}

void run_characteristics(Stage& s, const ProblemSpec& p) {
    auto fan = s.timed("make_fan", [&] { return characteristics::make_fan(p, s.cfg().characteristics.fan_size); });
    auto lines = fan.lines();
    Table t{"characteristics", {"x0", "speed", "crossing_t"}, {}};
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::optional<double> cross;
        if (i + 1 < lines.size()) cross = characteristics::pairwise_crossing(lines[i], lines[i + 1]);
        t.rows.push_back({lines[i].foot, lines[i].speed, cross.value_or(std::numeric_limits<double>::infinity())});
    }
    auto first = characteristics::first_crossing(fan);
    s.emit(std::move(t));
    s.manifest().summary_json =
        json{{"lines", lines.size()}, {"first_crossing", first ? json(*first) : json(nullptr)}}.dump();
}

fd::GridSolution config_solve(Stage& s, const ProblemSpec& p) {
    const auto& fdc = s.cfg().fd;
    const fd::Grid grid = config_grid(s.cfg(), p);
    spdlog::info("fd: {} nodes, {} boundary, cfl {}, t_end {}", grid.nodes,
                 grid.boundary == fd::Boundary::Periodic ? "periodic" : "extrapolate", fdc.cfl, fdc.t_end);
    auto sol = s.timed("fd_solve", [&] { return fd::solve(p, grid, fdc.t_end, fdc.cfl, fdc.snapshot_times); });
    spdlog::info("fd: {} steps, alpha {}", sol.steps, sol.alpha);
    return sol;
}

void run_fd_solve(Stage& s, const ProblemSpec& p) {
    auto sol = config_solve(s, p);
    Table t{"fd", {"t", "x", "u"}, {}};
    for (double time : s.cfg().fd.snapshot_times) {
        const auto& snap = sol.at(time);
        for (std::size_t j = 0; j < sol.grid.nodes; ++j) t.rows.push_back({snap.t, sol.grid.x(j), snap.u[j]});
    }
    s.emit(std::move(t));
    s.manifest().summary_json = json{{"steps", sol.steps}, {"alpha", sol.alpha}}.dump();
}

void run_compare(Stage& s, const ProblemSpec& p) {
    const auto series = config_series(s, p);
    auto ct = config_critical_time(s, p);
    auto sol = config_solve(s, p);
    const int n = s.cfg().adm.terms;
    auto report = s.timed("compare", [&] {
        return fd::compare(sol, series, n, s.cfg().fd.snapshot_times, ct.t_star);
    });
    Table t{"compare", {"t", "N", "sup_diff", "rms_diff", "past_critical"}, {}};
    for (const auto& r : report.rows) {
        t.rows.push_back({r.t, static_cast<long long>(r.order), r.sup_diff, r.rms_diff, r.past_critical});
    }
    s.emit(std::move(t));
    s.manifest().summary_json =
        json{{"t_star", nullable(report.t_star)}, {"N", n}, {"steps", sol.steps}, {"alpha", sol.alpha}}.dump();
}

void run_radius(Stage& s, const ProblemSpec& p) {
    const auto series = config_series(s, p);
    std::vector<double> points = s.cfg().adm.radius_points;
    if (points.empty()) {
        for (int k = 1; k <= 5; ++k) points.push_back(p.x_min + (p.x_max - p.x_min) * k / 6.0);
    }
    Table est{"radius", {"x", "radius", "valid", "low_order", "reason"}, {}};
    Table ratios{"radius_ratios", {"x", "n", "ratio"}, {}};
    json summary = json::array();
    s.timed("estimate_radius", [&] {
        for (double x : points) {
            auto r = adomian::estimate_radius(series, x);
            est.rows.push_back({x, r.radius, r.valid, r.low_order, r.reason});
            for (std::size_t i = 0; i < r.ratios.size(); ++i) {
                ratios.rows.push_back({x, static_cast<long long>(i), r.ratios[i]});
            }
            summary.push_back({{"x", x}, {"radius", r.valid ? json(r.radius) : json(nullptr)}});
        }
    });
    s.emit(std::move(est));
    s.emit(std::move(ratios));
    s.manifest().summary_json = summary.dump();
}

json config_echo(const RunConfig& c) {
    return json{
        {"problem",
         {{"hamiltonian", c.problem.hamiltonian},
          {"u0", c.problem.u0},
          {"x_min", c.problem.x_min},
          {"x_max", c.problem.x_max}}},
        {"adm", {{"terms", c.adm.terms}, {"node_cap", c.adm.node_cap}, {"radius_points", c.adm.radius_points}}},
        {"characteristics",
         {{"fan_size", c.characteristics.fan_size}, {"scan_points", c.characteristics.scan_points}}},
        {"fd",
         {{"nodes", c.fd.nodes},
          {"cfl", c.fd.cfl},
          {"boundary", c.fd.boundary},
          {"t_end", c.fd.t_end},
          {"snapshot_times", c.fd.snapshot_times}}},
        {"outputs", {{"directory", c.outputs.directory}, {"format", c.outputs.format}}},
    };
}

spdlog::level::level_enum log_level_from_env() {
    const char* v = std::getenv("HJADM_LOG");
    std::string s = v ? v : "info";
    if (s == "quiet") return spdlog::level::err;
    if (s == "debug") return spdlog::level::debug;
    return spdlog::level::info;
}

}  // namespace

Subcommand parse_subcommand(std::string_view name) {
    for (const auto& [sub, n] : subcommand_table()) {
        if (n == name) return sub;
    }
    throw ConfigError("unknown subcommand '" + std::string(name) + "'");
}

std::string_view subcommand_name(Subcommand sub) {
    for (const auto& [s, n] : subcommand_table()) {
        if (s == sub) return n;
    }
    return "?";
}

const std::vector<std::string_view>& subcommand_names() {
    static const std::vector<std::string_view> names = [] {
        std::vector<std::string_view> v;
        for (const auto& entry : subcommand_table()) v.push_back(entry.second);
        return v;
    }();
    return names;
}

ErrorRecord classify(const std::exception& e) {
    // Most specific first.
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SyntaxError*>(&e) ||
        dynamic_cast<const UnboundVariable*>(&e)) {
        return {"config", e.what(), kExitConfig};
    }
    if (dynamic_cast<const NodeCapExceeded*>(&e)) return {"node_cap", e.what(), kExitNumerical};
    if (dynamic_cast<const CflViolation*>(&e)) return {"cfl", e.what(), kExitNumerical};
    if (dynamic_cast<const DomainError*>(&e)) return {"domain", e.what(), kExitNumerical};
    if (dynamic_cast<const NumericalError*>(&e)) return {"numerical", e.what(), kExitNumerical};
    return {"internal", e.what(), kExitNumerical};
}

std::string manifest_json(const RunManifest& m) {
    json doc;
    doc["tool"] = "hjadm";
    doc["version"] = m.version;
    doc["subcommand"] = m.subcommand;
    doc["config"] = config_echo(m.config);
    json timings = json::array();
    for (const auto& t : m.timings) timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    doc["timings"] = std::move(timings);
    json outputs = json::array();
    for (const auto& o : m.outputs) outputs.push_back({{"path", o.path}, {"columns", o.columns}, {"rows", o.rows}});
    doc["outputs"] = std::move(outputs);
    doc["summary"] = json::parse(m.summary_json);
    doc["exit_code"] = m.exit_code();
    doc["error"] = m.error ? json{{"kind", m.error->kind}, {"message", m.error->message}} : json(nullptr);
    return doc.dump(2) + "\n";
}

RunManifest run(Subcommand sub, const RunConfig& cfg) {
    RunManifest manifest;
    manifest.subcommand = std::string(subcommand_name(sub));
    manifest.config = cfg;
    const fs::path dir(cfg.outputs.directory);
    fs::create_directories(dir);

    Stage stage(cfg, manifest);
    try {
        const ProblemSpec p = cfg.problem_spec();
        switch (sub) {
            case Subcommand::Series: run_series(stage, p); break;
            case Subcommand::CriticalTime: run_critical_time(stage, p); break;
            case Subcommand::Characteristics: run_characteristics(stage, p); break;
            case Subcommand::FdSolve: run_fd_solve(stage, p); break;
            case Subcommand::Compare: run_compare(stage, p); break;
            case Subcommand::Radius: run_radius(stage, p); break;
        }
    } catch (const std::exception& e) {
        manifest.error = classify(e);
        spdlog::error("{} failed ({}): {}", manifest.subcommand, manifest.error->kind, e.what());
    }
    write_atomically(dir / "manifest.json", manifest_json(manifest));
    return manifest;
}

void init_logging() {
    auto logger = spdlog::get("hjadm");
    if (!logger) logger = spdlog::stderr_color_mt("hjadm");
    spdlog::set_default_logger(logger);
    spdlog::set_level(log_level_from_env());
    spdlog::set_pattern("[%l] %v");
}

int main(int argc, char** argv) {
    init_logging();

    CLI::App app{"Adomian decomposition solver for u_t + H(u_x) = 0", "hjadm"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1, 1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::string> format;
    for (auto name : subcommand_names()) {
        auto* sc = app.add_subcommand(std::string(name));
        sc->add_option("--config", config_path, "INI run configuration")->required();
        sc->add_option("--out", out_dir, "output directory (overrides [outputs] directory)");
        sc->add_option("--format", format, "csv or json (overrides [outputs] format)")
            ->check(CLI::IsMember({"csv", "json"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return kExitConfig;
    }
    if (out_dir) cfg.outputs.directory = *out_dir;
    if (format) cfg.outputs.format = *format;

    Subcommand sub = parse_subcommand(app.get_subcommands().front()->get_name());
    try {
        return run(sub, cfg).exit_code();
    } catch (const std::exception& e) {
        spdlog::error("cannot write outputs: {}", e.what());
        return kExitNumerical;
    }
}

}  // namespace hjadm::cli
