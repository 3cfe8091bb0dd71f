#pragma once

#include "glaeser/bundle.hpp"
#include "glaeser/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>

namespace testsupport {

using namespace glaeser;

inline std::string fixture(const std::string& name) { return std::string(GLAESER_FIXTURE_DIR) + "/" + name; }

inline Vec vec(std::initializer_list<double> xs)
{
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs)
        v(i++) = x;
    return v;
}

// Known continuous solutions for the fixture problems.
struct Known {
    const char* file;
    std::function<Vec(const Vec&)> phi_coeffs;
};

inline const Known known_solutions[] = {
    {"linear_x.json", [](const Vec&) { return vec({1, 0}); }},
    {"hochster_xyz2.json", [](const Vec&) { return vec({0, 0, 1}); }},
    {"support_example.json",
     [](const Vec& p) {
         const double x = p(0), y = p(1);
         const double psi = y * y >= std::pow(x, 4) ? 1.0 : (x * x + std::pow(x, 4)) / (x * x + y * y);
         return vec({1, -psi});
     }},
    {"power_3.json", [](const Vec& p) { return vec({(2 - std::fabs(p(0))) / (1 + p(0) * p(0))}); }},
};

/// 1-D bundle on [-1, 1]: m < r affine constraints (m = 1 for r = 1) whose
/// rows are linear between knots, with selected rows dropped at a few
/// defect knots. The rows are built around a known continuous section.
struct PLFixture {
    std::shared_ptr<FunctionBundle> bundle;
    Grid grid;
    std::size_t r = 0;
    std::size_t m = 0;
    std::set<long> defects;
    std::function<Vec(double)> section;
};

inline PLFixture random_pl_fixture(std::uint64_t seed, int depth = 5)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    PLFixture fx;
    fx.grid = Grid(Box{vec({-1}), vec({1})}, depth);
    fx.r = 1 + static_cast<std::size_t>(rng() % 3);
    fx.m = fx.r == 1 ? 1 : 1 + static_cast<std::size_t>(rng() % (fx.r - 1));
    const long K = static_cast<long>(fx.grid.per_axis());
    const double h = fx.grid.step()(0);
    const auto R = static_cast<Eigen::Index>(fx.r), M = static_cast<Eigen::Index>(fx.m);

    auto A = std::make_shared<std::vector<Mat>>();
    auto S = std::make_shared<std::vector<Vec>>();
    for (long k = 0; k < K; ++k) {
        Mat a(M, R);
        for (Eigen::Index i = 0; i < M; ++i)
            for (Eigen::Index j = 0; j < R; ++j)
                a(i, j) = fx.r == 1 ? 0.5 + std::fabs(g(rng)) : g(rng);
        A->push_back(a);
        Vec s(R);
        for (Eigen::Index j = 0; j < R; ++j)
            s(j) = g(rng);
        S->push_back(s);
    }
    auto dropped = std::make_shared<std::map<long, std::vector<bool>>>();
    const int nd = 3 + static_cast<int>(rng() % 4);
    for (int i = 0; i < nd; ++i) {
        const long k = static_cast<long>(rng() % static_cast<std::uint64_t>(K));
        std::vector<bool> rows(fx.m, false);
        rows[rng() % fx.m] = true;
        for (std::size_t j = 0; j < fx.m; ++j)
            if (rng() % 2)
                rows[j] = true;
        (*dropped)[k] = rows;
        fx.defects.insert(k);
    }

    auto locate = [K, h](double x, long& k, double& w) {
        const double u = (x + 1.0) / h;
        k = std::clamp(static_cast<long>(std::floor(u)), 0L, K - 2);
        w = u - static_cast<double>(k);
    };
    auto knot_at = [K, h](double x) -> long {
        const double u = (x + 1.0) / h;
        const double k = std::round(u);
        if (std::fabs(u - k) > 1e-9 || k < 0 || k > static_cast<double>(K - 1))
            return -1;
        return static_cast<long>(k);
    };
    fx.section = [S, locate](double x) {
        long k;
        double w;
        locate(x, k, w);
        return Vec((1.0 - w) * (*S)[static_cast<std::size_t>(k)] + w * (*S)[static_cast<std::size_t>(k + 1)]);
    };
    auto section = fx.section;
    const std::size_t r = fx.r;
    auto fiber = [A, dropped, locate, knot_at, section, r](const Vec& xv) {
        const double x = xv(0);
        long k;
        double w;
        locate(x, k, w);
        const Mat a = (1.0 - w) * (*A)[static_cast<std::size_t>(k)] + w * (*A)[static_cast<std::size_t>(k + 1)];
        const Vec s = section(x);
        const long knot = knot_at(x);
        const auto it = dropped->find(knot);
        ConstraintSystem cs{r, {}};
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            if (it != dropped->end() && it->second[static_cast<std::size_t>(i)])
                continue;
            cs.rows.push_back({a.row(i).transpose(), a.row(i).dot(s)});
        }
        return solve_constraints(cs);
    };
    auto regular = [dropped, knot_at](const Vec& xv) { return dropped->count(knot_at(xv(0))) == 0; };
    auto ray = [](const Vec&, const Vec&) { return false; };
    fx.bundle = std::make_shared<FunctionBundle>(1, fx.r, fiber, regular, ray);
    return fx;
}

} // namespace testsupport
