// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "hjadm/adomian.hpp"
#include "hjadm/characteristics.hpp"
#include "hjadm/fdsolve.hpp"
#include "hjadm/harness.hpp"

using namespace hjadm;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

ProblemSpec spec(const char* h, const char* u0, double a, double b, int terms = 4) {
    return ProblemSpec::from_strings(h, u0, a, b, terms);
}

double loglog_slope(const std::vector<double>& t, const std::vector<double>& y) {
    double n = static_cast<double>(t.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double a = std::log(t[i]), b = std::log(y[i]);
        sx += a, sy += b, sxx += a * a, sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

// ---------------------------------------------------------------------------

Outcome critical_times() {
    Outcome o;
    auto b = characteristics::critical_time(spec("v^2/2", "-x^2", -5, 5));
    o.require(b.finite() && std::fabs(b.t_star - 0.5) <= 1e-6, "Burgers T* = " + fmt("%.12g", b.t_star));
    auto lin = characteristics::critical_time(spec("sqrt(1+v^2)", "3*x+1", -5, 5));
    o.require(!lin.finite(), std::string("linear T* ") + (lin.finite() ? "finite" : "= inf"));
    auto s = characteristics::critical_time(spec("sqrt(1+v^2)", "sin(x)", 0, 2 * kPi));
    o.require(s.finite() && std::fabs(s.t_star - 1.0) <= 1e-6, "sin T* = " + fmt("%.12g", s.t_star));
    o.require(std::fabs(s.x_star - kPi / 2) <= 1e-4, "x* - pi/2 = " + fmt("%.2e", s.x_star - kPi / 2));
    return o;
}

Outcome burgers_series() {
    Outcome o;
    auto s = adomian::build_series(spec("v^2/2", "-x^2", -5, 5, 8));
    double worst = 0, scale = 1;
    for (int n = 0; n <= 8; ++n) {
        if (n > 0) scale *= 2.0 * n;
        for (double x : {-2.0, -1.0, 0.5, 1.0, 3.0}) {
            double want = -x * x * scale;
            worst = std::max(worst, std::fabs(s.coefficient_at(n, x) - want) / std::fabs(want));
        }
    }
    o.require(worst <= 1e-9, "max rel err of u~_n, n<=8: " + fmt("%.1e", worst));

    double tail_worst = 0;
    for (int n : {2, 3, 4, 5})
        for (double t : {0.1, 0.25, 0.4})
            for (double x : {-2.0, -1.0, 0.5, 1.0, 3.0}) {
                double err = std::fabs(adomian::partial_sum_eval(s, n, x, t) + x * x / (1 - 2 * t));
                double tail = std::fabs(x * x * std::pow(2 * t, n + 1) / (1 - 2 * t));
                tail_worst = std::max(tail_worst, std::fabs(err - tail) / tail);
            }
    o.require(tail_worst <= 1e-10, "geometric tail rel err " + fmt("%.1e", tail_worst));

    // Substitution check of the closed form and of the sign-flipped variant.
    auto residual_of = [](const char* text) {
        sym::Expr u = sym::parse(text);
        sym::Expr r = sym::simplify(sym::differentiate(u, "t") +
                                    sym::pow(sym::differentiate(u, "x"), sym::num(2)) / sym::num(2));
        double worst = 0;
        for (double x : {-1.5, 0.3, 2.0})
            for (double t : {0.05, 0.2, 0.45}) worst = std::max(worst, std::fabs(sym::evaluate(r, {{"x", x}, {"t", t}})));
        return worst;
    };
    double good = residual_of("-x^2/(1-2*t)"), bad = residual_of("x^2/(1-2*t)");
    o.require(good <= 1e-12 && bad > 1e-3,
              "residual of -x^2/(1-2t): " + fmt("%.1e", good) + ", of +x^2/(1-2t): " + fmt("%.2g", bad));
    return o;
}

Outcome linear_eikonal() {
    Outcome o;
    double worst = 0;
    bool terminated = true;
    for (auto [a, b] : {std::pair{1.0, 0.0}, {3.0, 1.0}, {-2.0, 5.0}}) {
        std::ostringstream u0;
        u0 << a << "*x+" << b;
        auto s = adomian::build_series(spec("-sqrt(1+v^2)", u0.str().c_str(), -5, 5, 6));
        terminated = terminated && s.finite();
        for (int n = 2; n <= 6; ++n) terminated = terminated && s.coefficient(n).is_zero();
        for (int n = 1; n <= 6; ++n)
            for (double x : {-3.0, -0.5, 0.0, 2.0, 4.5})
                for (double t : {0.0, 0.25, 1.0, 3.0}) {
                    double want = a * x + b + t * std::sqrt(1 + a * a);
                    worst = std::max(worst, std::fabs(adomian::partial_sum_eval(s, n, x, t) - want));
                }
    }
    o.require(terminated, "u~_n = 0 for n >= 2");
    o.require(worst <= 1e-12, "max |u_N - (ax+b+t sqrt(1+a^2))| = " + fmt("%.1e", worst));
    return o;
}

// u~_{n+1} = -n! A_n(H^(k)(u0'), w_k = u~'_k / k!) with A_n from the lambda-derivative oracle.
std::vector<sym::Expr> oracle_coefficients(const ProblemSpec& p, int order) {
    std::vector<sym::Expr> u = {p.initial}, du = {sym::differentiate(p.initial, "x")};
    std::vector<sym::Expr> h_at = {};
    for (int k = 0; k <= order; ++k) {
        h_at.push_back(sym::simplify(sym::substitute(sym::differentiate_n(p.hamiltonian, "v", k), "v", du[0])));
    }
    for (int n = 0; n < order; ++n) {
        sym::Expr sum;
        const adomian::AbstractPoly a = adomian::oracle_polynomial(n);
        for (const auto& [m, c] : a.terms()) {
            sym::Expr term = sym::Expr::constant(sym::Number(c)) * h_at[m.derivative];
            for (int idx : m.indices) term = term * du[idx] / sym::Expr::constant(sym::Number(factorial(idx)));
            sum = sum + term;
        }
        sym::Expr next = sym::simplify(-(sym::Expr::constant(sym::Number(factorial(n))) * sum));
        u.push_back(next);
        du.push_back(sym::differentiate(next, "x"));
    }
    return u;
}

Outcome sin_series() {
    Outcome o;
    auto p = spec("-sqrt(1+v^2)", "sin(x)", 0, 2 * kPi, 4);
    auto s = adomian::build_series(p);
    auto oracle = oracle_coefficients(p, 4);
    double low = 0, high = 0;
    for (int i = 0; i < 20; ++i) {
        double x = 2 * kPi * (i + 0.37) / 20;
        double c = std::cos(x), sn = std::sin(x);
        low = std::max(low, std::fabs(s.coefficient_at(1, x) - std::sqrt(1 + c * c)));
        low = std::max(low, std::fabs(s.coefficient_at(2, x) + c * c * sn / (1 + c * c)));
        for (int n : {3, 4}) high = std::max(high, std::fabs(s.coefficient_at(n, x) - sym::evaluate(oracle[n], "x", x)));
    }
    o.require(low <= 1e-9, "u~_1, u~_2 vs printed formulas: " + fmt("%.1e", low));
    o.require(high <= 1e-8, "u~_3, u~_4 vs oracle: " + fmt("%.1e", high));
    return o;
}

Outcome generator_equivalence() {
    Outcome o;
    bool exact = true;
    for (int n = 0; n <= 6; ++n) {
        auto t = adomian::theorem1_polynomial(n);
        exact = exact && t == adomian::recursion_polynomial(n) && t == adomian::oracle_polynomial(n);
    }
    o.require(exact, "exact equality for n <= 6");

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-2, 2);
    double worst = 0;
    for (int point = 0; point < 50; ++point) {
        double c0 = u(rng), c1 = u(rng), c2 = u(rng), c3 = u(rng), w0 = u(rng);
        std::vector<double> hd = {c0 + c1 * w0 + c2 * w0 * w0 + c3 * w0 * w0 * w0, c1 + 2 * c2 * w0 + 3 * c3 * w0 * w0,
                                  2 * c2 + 6 * c3 * w0, 6 * c3, 0, 0, 0};
        std::vector<double> w = {w0};
        for (int i = 1; i <= 6; ++i) w.push_back(u(rng));
        for (int n = 0; n <= 6; ++n) {
            double a = adomian::theorem1_polynomial(n).evaluate(hd, w);
            worst = std::max({worst, std::fabs(a - adomian::recursion_polynomial(n).evaluate(hd, w)),
                              std::fabs(a - adomian::oracle_polynomial(n).evaluate(hd, w))});
        }
    }
    o.require(worst <= 1e-9, "random cubic H, 50 points: " + fmt("%.1e", worst));
    return o;
}

Outcome residual_order() {
    Outcome o;
    std::vector<double> ts;
    for (int i = 0; i <= 10; ++i) ts.push_back(1e-3 * std::pow(100.0, i / 10.0));
    for (const auto& p : {spec("v^2/2", "-x^2", -2, 2), spec("-sqrt(1+v^2)", "sin(x)", 0, 2 * kPi)}) {
        auto s = adomian::build_series(p, 4);
        double worst = INFINITY;
        for (int k = 0; k < 5; ++k) {
            double x = p.x_min + (p.x_max - p.x_min) * (0.11 + 0.19 * k);
            std::vector<double> r;
            for (double t : ts) r.push_back(std::fabs(adomian::residual(s, 4, x, t)));
            worst = std::min(worst, loglog_slope(ts, r));
        }
        o.require(worst >= 3.5, sym::print(p.hamiltonian) + " min slope " + fmt("%.3f", worst));
    }
    return o;
}

Outcome characteristic_fans() {
    Outcome o;
    auto b = characteristics::first_crossing(characteristics::make_fan(spec("v^2/2", "-x^2", -5, 5), 10'000));
    o.require(b && std::fabs(*b - 0.5) <= 1e-9, "Burgers " + fmt("%.12g", b.value_or(NAN)));
    auto s = characteristics::first_crossing(
        characteristics::make_fan(spec("-sqrt(1+v^2)", "sin(x)", 0, 2 * kPi), 10'001));
    o.require(s && std::fabs(*s - 1.0) <= 1e-2, "sin " + fmt("%.6g", s.value_or(NAN)));
    auto l = characteristics::first_crossing(characteristics::make_fan(spec("-sqrt(1+v^2)", "3*x+1", -5, 5), 10'000));
    o.require(!l, std::string("linear ") + (l ? "crosses" : "none"));
    return o;
}

Outcome fd_solver() {
    Outcome o;
    {
        auto p = spec("v^2/2", "x-1/3", -1, 1);
        auto g = fd::make_grid(-1, 1, 201, fd::Boundary::Extrapolate);
        auto sol = fd::solve(p, g, 10'000 * 0.25 * g.dx(), 0.5);
        const auto& last = sol.snapshots.back();
        double worst = 0;
        for (std::size_t j = 0; j < g.nodes; ++j) worst = std::max(worst, std::fabs(last.u[j] - (g.x(j) - 1.0 / 3 - last.t / 2)));
        o.require(worst <= 1e-10 && sol.steps >= 10'000,
                  "affine, " + std::to_string(sol.steps) + " steps: " + fmt("%.1e", worst));
    }
    {
        auto p = spec("v^2/2", "-x^2", -2, 2);
        auto g = fd::make_grid(-2, 2, 2001, fd::Boundary::Extrapolate);
        auto sol = fd::solve(p, g, 0.4, 0.5);
        const auto& last = sol.snapshots.back();
        double window = 0, dependence = 0;
        for (std::size_t j = 0; j < g.nodes; ++j) {
            double x = g.x(j), e = std::fabs(last.u[j] + x * x / (1 - 2 * last.t));
            if (std::fabs(x) <= 1) window = std::max(window, e);
            if (std::fabs(x) <= 0.4) dependence = std::max(dependence, e);
        }
        o.require(window <= 5e-3, "Burgers t=0.4 J=2001 sup on |x|<=1: " + fmt("%.3g", window) +
                                      " (|x|<=0.4, inside the exact domain of dependence: " + fmt("%.3g", dependence) +
                                      ")");
    }
    {
        auto p = spec("-sqrt(1+v^2)", "sin(x)", 0, 2 * kPi);
        std::vector<double> times = {0.5};
        auto ref = fd::solve(p, fd::make_grid(0, 2 * kPi, 8001, fd::Boundary::Periodic), 0.5, 0.5, times);
        auto err = [&](std::size_t nodes) {
            auto sol = fd::solve(p, fd::make_grid(0, 2 * kPi, nodes, fd::Boundary::Periodic), 0.5, 0.5, times);
            std::size_t stride = 8000 / (nodes - 1);
            double m = 0;
            for (std::size_t j = 0; j < nodes; ++j) m = std::max(m, std::fabs(sol.at(0.5).u[j] - ref.at(0.5).u[j * stride]));
            return m;
        };
        double factor = err(501) / err(1001);
        o.require(factor >= 1.7 && factor <= 2.3, "convergence factor J=501->1001: " + fmt("%.3f", factor));
    }
    return o;
}

Outcome figure_property() {
    Outcome o;
    auto cfg = cli::load_config(fs::path(CONFIG_DIR) / "eikonal_sin.ini");
    cfg.outputs.directory = (fs::temp_directory_path() / ("hjadm_accept_" + std::to_string(::getpid()))).string();
    auto m = cli::run(cli::Subcommand::Compare, cfg);
    if (m.exit_code() != 0) {
        o.require(false, "compare run failed: " + (m.error ? m.error->message : std::string("?")));
        return o;
    }
    std::ifstream in(fs::path(cfg.outputs.directory) / "compare.csv");
    std::string line;
    std::getline(in, line);
    double at05 = NAN, at20 = NAN;
    while (std::getline(in, line)) {
        double t, sup;
        int n;
        if (std::sscanf(line.c_str(), "%lf,%d,%lf", &t, &n, &sup) != 3) continue;
        if (t == 0.5) at05 = sup;
        if (t == 2.0) at20 = sup;
    }
    fs::remove_all(cfg.outputs.directory);
    o.require(at05 <= 5e-2, "sup diff t=0.5: " + fmt("%.3g", at05));
    o.require(at20 >= 5 * at05, "t=2.0: " + fmt("%.3g", at20) + " (" + fmt("%.0f", at20 / at05) + "x)");
    return o;
}

Outcome radius() {
    Outcome o;
    auto b = adomian::estimate_radius(adomian::build_series(spec("v^2/2", "-x^2", -5, 5, 8)), 1.0);
    double t_star = characteristics::critical_time(spec("v^2/2", "-x^2", -5, 5)).t_star;
    o.require(b.valid && std::fabs(b.radius - 0.5) <= 1e-6 && std::fabs(b.radius - t_star) <= 1e-6,
              "Burgers radius " + fmt("%.12g", b.radius) + ", T* " + fmt("%.12g", t_star));
    auto l = adomian::estimate_radius(adomian::build_series(spec("-sqrt(1+v^2)", "3*x+1", -5, 5, 6)), 0.5);
    o.require(!l.valid, std::string("linear estimate ") + (l.valid ? "valid" : "invalid"));
    return o;
}

Outcome determinism() {
    Outcome o;
    fs::path base = fs::temp_directory_path() / ("hjadm_det_" + std::to_string(::getpid()));
    std::string cfg = (fs::path(CONFIG_DIR) / "eikonal_sin.ini").string();
    std::vector<std::string> outputs;
    for (int run = 0; run < 3; ++run) {
        fs::path dir = base / std::to_string(run);
        std::string cmd = "HJADM_LOG=quiet " + std::string(HJADM_EXE) + " compare --config " + cfg + " --out " +
                          dir.string() + " > /dev/null 2>&1";
        int status = std::system(cmd.c_str());
        o.require(status == 0, "run " + std::to_string(run) + " exit status " + std::to_string(status));
        outputs.push_back(slurp(dir / "compare.csv"));
    }
    fs::remove_all(base);
    bool same = !outputs[0].empty() && outputs[0] == outputs[1] && outputs[1] == outputs[2];
    o.require(same, "3 runs, " + std::to_string(outputs[0].size()) + " bytes, identical: " + (same ? "yes" : "no"));
    return o;
}

}  // namespace

int main() {
    ::setenv("HJADM_LOG", "quiet", 0);
    cli::init_logging();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"critical times", critical_times},
        {"Burgers series and closed form", burgers_series},
        {"eikonal linear case terminates", linear_eikonal},
        {"eikonal sin coefficients", sin_series},
        {"polynomial generator equivalence", generator_equivalence},
        {"residual order", residual_order},
        {"characteristic fans", characteristic_fans},
        {"finite-difference solver", fd_solver},
        {"ADM vs grid before and after T*", figure_property},
        {"ratio-test radius", radius},
        {"determinism of compare", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
