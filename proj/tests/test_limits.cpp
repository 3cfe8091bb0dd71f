#include "glaeser/limits.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace glaeser;

TEST_CASE("estimate_limit examples")
{
    const LimitConfig cfg;
    auto r = estimate_limit_scalar([](int nu) { return 1.0 + std::ldexp(1.0, -nu); }, cfg);
    CHECK(r.converged());
    CHECK(std::fabs(r.scalar() - 1.0) <= cfg.limit_tol);
    CHECK(r.achieved_tol <= cfg.limit_tol);
    CHECK_FALSE(r.late);

    r = estimate_limit_scalar([](int nu) { return nu % 2 ? -1.0 : 1.0; }, cfg);
    CHECK(r.kind == LimitResult::Kind::Undetermined);
    CHECK(r.tail.size() == static_cast<std::size_t>(cfg.window));

    // nu^2 * phi(1/nu, 0, z) with phi = x*y*z^2, z = 0.7
    r = estimate_limit_scalar(
        [](int nu) {
            const double k = nu + 1.0, x = 1.0 / k, y = 0.0, z = 0.7;
            return k * k * x * y * z * z;
        },
        cfg);
    CHECK(r.converged());
    CHECK(r.scalar() == 0.0);
}

TEST_CASE("closed-form suite converges to the analytic limit")
{
    LimitConfig cfg;
    cfg.depth = 40;
    const double beta = cfg.beta;
    struct Case {
        const char* name;
        std::function<double(int)> a;
        double limit;
    } cases[] = {
        {"1 + beta^nu", [&](int nu) { return 1.0 + std::pow(beta, nu); }, 1.0},
        {"nu * beta^nu", [&](int nu) { return nu * std::pow(beta, nu); }, 0.0},
        {"constant", [](int) { return -3.25; }, -3.25},
        {"2 - beta^(2 nu)", [&](int nu) { return 2.0 - std::pow(beta, 2 * nu); }, 2.0},
    };
    for (const auto& c : cases) {
        const auto r = estimate_limit_scalar(c.a, cfg);
        CHECK_MESSAGE(r.converged(), c.name);
        CHECK_MESSAGE(std::fabs(r.scalar() - c.limit) <= cfg.limit_tol, c.name);
    }
}

TEST_CASE("divergence needs monotone growth past 1/limit_tol")
{
    const LimitConfig cfg;
    auto r = estimate_limit_scalar([&](int nu) { return 1.0 / cfg.scale(nu); }, cfg);
    CHECK(r.diverged());
    CHECK(r.trend == doctest::Approx(1.0).epsilon(1e-9));

    // grows, but stays below 1/limit_tol at the finest scale
    r = estimate_limit_scalar([&](int nu) { return 1.0 / std::sqrt(cfg.scale(nu)); }, cfg);
    CHECK(r.kind == LimitResult::Kind::Undetermined);

    // large but not monotone in magnitude
    r = estimate_limit_scalar([](int nu) { return nu % 2 ? 1e7 : 1e8; }, cfg);
    CHECK(r.kind == LimitResult::Kind::Undetermined);

    r = estimate_limit_scalar([](int nu) { return nu == 23 ? std::numeric_limits<double>::quiet_NaN() : 1.0; },
                              cfg);
    CHECK(r.diverged());
}

TEST_CASE("sampled sequences extrapolate growth to the finest nominal scale")
{
    LimitConfig cfg;
    cfg.depth = 20;
    std::vector<Vec> values;
    std::vector<double> scales;
    const double h = 0.125;
    for (int k = 8; k >= 1; --k) {
        values.push_back(Vec::Constant(1, 1.0 / (k * h)));
        scales.push_back(k * h);
    }
    auto r = estimate_limit_sampled(values, scales, cfg);
    CHECK(r.diverged());

    // the same samples cannot certify divergence with a shallow probe
    cfg.depth = 8;
    r = estimate_limit_sampled(values, scales, cfg);
    CHECK(r.kind == LimitResult::Kind::Undetermined);

    // bounded but not Cauchy
    values.clear();
    for (int k = 8; k >= 1; --k)
        values.push_back(Vec::Constant(1, 1.0 + k * h));
    r = estimate_limit_sampled(values, scales, cfg);
    CHECK(r.kind == LimitResult::Kind::Undetermined);

    // too short to judge
    r = estimate_limit_sampled(std::span<const Vec>(values).first(3), std::span<const double>(scales).first(3),
                               cfg);
    CHECK(r.kind == LimitResult::Kind::Undetermined);
}

TEST_CASE("late convergence is flagged")
{
    const LimitConfig cfg;
    auto r = estimate_limit_scalar([&](int nu) { return nu < cfg.depth - 3 ? double(nu) : 0.0; }, cfg);
    CHECK(r.converged());
    CHECK(r.late);
}

TEST_CASE("estimate_limit is deterministic")
{
    const LimitConfig cfg;
    auto seq = [](int nu) { return std::sin(1.0 + nu) * std::pow(0.5, nu); };
    const auto a = estimate_limit_scalar(seq, cfg);
    const auto b = estimate_limit_scalar(seq, cfg);
    CHECK(a.kind == b.kind);
    CHECK(a.value == b.value);
    CHECK(a.achieved_tol == b.achieved_tol);
}

TEST_CASE("config validation")
{
    LimitConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.beta = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = LimitConfig{};
    cfg.depth = 2;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK(default_limit_config(2.0).t0 == 0.5);
}
