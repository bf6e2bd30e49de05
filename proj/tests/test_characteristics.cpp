#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hjadm/characteristics.hpp"

using namespace hjadm;
using namespace hjadm::characteristics;

namespace {

constexpr double kPi = std::numbers::pi;

ProblemSpec make(const char* h, const char* u0, double a, double b) { return ProblemSpec::from_strings(h, u0, a, b); }

}  // namespace

TEST_CASE("char_speed") {
    CHECK(char_speed(make("v^2/2", "-x^2", -5, 5), 1.0) == doctest::Approx(-2.0));
    auto lin = make("-sqrt(1+v^2)", "3*x+1", -1, 1);
    for (double x0 : {-1.0, 0.0, 0.4}) CHECK(char_speed(lin, x0) == doctest::Approx(-3.0 / std::sqrt(10.0)));
    CHECK(char_speed(make("sqrt(1+v^2)", "sin(x)", 0, 2 * kPi), 0.0) == doctest::Approx(1 / std::sqrt(2.0)));
}

TEST_CASE("pairwise_crossing") {
    auto t = pairwise_crossing({-1, 2}, {1, -2});
    REQUIRE(t);
    CHECK(*t == 0.5);
    CHECK_FALSE(pairwise_crossing({0, 1}, {1, 1}));
    CHECK_FALSE(pairwise_crossing({0, -1}, {1, 2}));
}

TEST_CASE("first_crossing on fans") {
    auto b = make("v^2/2", "-x^2", -1, 1);
    auto tb = first_crossing(make_fan(b, 101));
    REQUIRE(tb);
    CHECK(std::fabs(*tb - 0.5) <= 1e-9);

    CHECK_FALSE(first_crossing(make_fan(make("-sqrt(1+v^2)", "3*x+1", -1, 1), 1001)));

    auto ts = first_crossing(make_fan(make("sqrt(1+v^2)", "sin(x)", 0, 2 * kPi), 10001));
    REQUIRE(ts);
    CHECK(std::fabs(*ts - 1.0) <= 1e-2);
}

TEST_CASE("critical_time: worked cases") {
    auto b = critical_time(make("v^2/2", "-x^2", -5, 5));
    CHECK(b.finite());
    CHECK(b.t_star == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(b.minimum == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK_FALSE(b.warnings.empty());  // plateau minimiser at the left edge

    auto lin = critical_time(make("-sqrt(1+v^2)", "3*x+1", -1, 1));
    CHECK_FALSE(lin.finite());
    CHECK(std::isinf(lin.t_star));

    auto s = critical_time(make("sqrt(1+v^2)", "sin(x)", 0, 2 * kPi));
    CHECK(s.finite());
    CHECK(std::fabs(s.t_star - 1.0) <= 1e-6);
    CHECK(std::fabs(s.x_star - kPi / 2) <= 1e-4);
    CHECK(s.warnings.empty());

    // Flipping the sign of H mirrors the speed field; the minimiser moves to 3pi/2.
    auto sn = critical_time(make("-sqrt(1+v^2)", "sin(x)", 0, 2 * kPi));
    CHECK(std::fabs(sn.t_star - 1.0) <= 1e-6);
    CHECK(std::fabs(sn.x_star - 3 * kPi / 2) <= 1e-4);
}

TEST_CASE("critical_time: too many undefined scan points is an error") {
    CHECK_THROWS_AS(critical_time(make("v^2/2", "sqrt(x)", -3, 1)), NumericalError);
}

TEST_CASE("fan crossing approaches T* as the fan densifies") {
    auto p = make("sqrt(1+v^2)", "sin(x)", 0, 2 * kPi);
    double t_star = critical_time(p).t_star;
    double previous = INFINITY;
    for (std::size_t n : {11, 101, 1001, 10001}) {
        double gap = std::fabs(*first_crossing(make_fan(p, n)) - t_star);
        CHECK(gap <= previous);
        previous = gap;
    }
    CHECK(previous <= 1e-2);
}

TEST_CASE("sign coherence: infinite T* iff the speed is non-decreasing") {
    const std::vector<ProblemSpec> cases = {
        make("v^2/2", "-x^2", -5, 5),        make("v^2/2", "x^2", -5, 5),
        make("-sqrt(1+v^2)", "3*x+1", -1, 1), make("sqrt(1+v^2)", "sin(x)", 0, 2 * kPi),
        make("-sqrt(1+v^2)", "sin(x)", 0, 2 * kPi), make("v^2/2", "x^3", 0, 1),
        make("v^2/2", "x^3", -1, 1),         make("v^3/3", "x", -2, 2),
        make("exp(v)", "-x", -1, 1),         make("v^2/2", "ln(1+x^2)", -3, 3),
    };
    for (const auto& p : cases) {
        SpeedField f(p);
        bool monotone = true;
        const int n = 1000;
        for (int i = 0; i + 1 < n; ++i) {
            double a = p.x_min + (p.x_max - p.x_min) * i / (n - 1);
            double b = p.x_min + (p.x_max - p.x_min) * (i + 1) / (n - 1);
            if (f(b) < f(a) - 1e-10) monotone = false;
        }
        INFO(sym::print(p.hamiltonian) << " / " << sym::print(p.initial));
        CHECK(monotone == !critical_time(p).finite());
    }
}

TEST_CASE("T* ignores constant shifts of u0") {
    auto a = critical_time(make("sqrt(1+v^2)", "sin(x)", 0, 2 * kPi));
    auto b = critical_time(make("sqrt(1+v^2)", "sin(x)+17", 0, 2 * kPi));
    CHECK(a.t_star == b.t_star);
    CHECK(a.x_star == b.x_star);
}

TEST_CASE("first_crossing depends only on the set of lines") {
    auto fan = make_fan(make("sqrt(1+v^2)", "sin(x)", 0, 2 * kPi), 501);
    std::vector<CharLine> lines(fan.lines().begin(), fan.lines().end());
    std::reverse(lines.begin(), lines.end());
    std::sort(lines.begin(), lines.end(), [](const CharLine& a, const CharLine& b) { return a.foot < b.foot; });
    CHECK(first_crossing(CharFan(lines)) == first_crossing(fan));
}

TEST_CASE("CharFan validation") {
    CHECK_THROWS_AS(CharFan({{1, 0}, {0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(CharFan({{0, NAN}, {1, 0}}), NumericalError);
    CHECK_THROWS_AS(first_crossing(CharFan({{0, 1}})), std::invalid_argument);
}
