#include "support.hpp"

#include "glaeser/cli.hpp"

#include <doctest.h>

#include <random>

using namespace glaeser;
using testsupport::vec;

namespace {

Problem plane(const std::string& f1, const std::string& f2, const std::string& phi, int depth = 4)
{
    return make_problem({"x", "y"}, {f1, f2}, phi, vec({-1, -1}), vec({1, 1}), depth);
}

// determinant by exact Gaussian elimination
Rational exact_det(std::vector<std::vector<Rational>> m)
{
    const std::size_t n = m.size();
    Rational det = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        while (piv < n && m[piv][c] == 0)
            ++piv;
        if (piv == n)
            return 0;
        if (piv != c) {
            std::swap(m[piv], m[c]);
            det = -det;
        }
        det *= m[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const Rational q = m[r][c] / m[c][c];
            for (std::size_t k = c; k < n; ++k)
                m[r][k] -= q * m[c][k];
        }
    }
    return det;
}

struct Samples {
    Mat f;
    Vec phi;
    std::vector<std::vector<Rational>> exact; // rows: f_1..f_r, phi
};

// fs and phi as polynomials in x on the dyadic points of [-1, 1]
Samples sample_1d(const std::vector<std::string>& fs, const std::string& phi, int count)
{
    const std::vector<std::string> X{"x"};
    std::vector<Poly> ps;
    for (const auto& s : fs)
        ps.push_back(parse_poly(s, X));
    ps.push_back(parse_poly(phi, X));
    Samples s;
    s.f.resize(count, static_cast<Eigen::Index>(fs.size()));
    s.phi.resize(count);
    for (int k = 0; k < count; ++k) {
        const Rational x = Rational(2 * k - (count - 1), count - 1);
        std::vector<Rational> row;
        for (const auto& p : ps) {
            Rational v = 0;
            for (const auto& [e, c] : p.terms()) {
                Rational t = c;
                for (unsigned j = 0; j < e[0]; ++j)
                    t *= x;
                v += t;
            }
            row.push_back(v);
        }
        for (std::size_t i = 0; i < fs.size(); ++i)
            s.f(k, static_cast<Eigen::Index>(i)) = row[i].get_d();
        s.phi(k) = row.back().get_d();
        s.exact.push_back(row);
    }
    return s;
}

Rational exact_tuple_det(const Samples& s, const std::vector<std::size_t>& tuple)
{
    std::vector<std::vector<Rational>> m;
    for (std::size_t k : tuple)
        m.push_back(s.exact[k]);
    return exact_det(m);
}

} // namespace

TEST_CASE("zero_limit_test examples")
{
    const LimitResult a = zero_limit_test(plane("x", "y", "x^2 + y^2"), vec({0, 0}));
    CHECK(a.converged());
    CHECK(std::fabs(a.scalar()) <= 1e-6);

    const LimitResult b = zero_limit_test(plane("x", "y", "x"), vec({0, 0}));
    CHECK_FALSE((b.converged() && std::fabs(b.scalar()) <= 1e-6));

    const LimitResult c = zero_limit_test(plane("x", "y", "0"), vec({0, 0}));
    CHECK(c.converged());
    CHECK(c.scalar() == 0.0);

    CHECK_THROWS_AS(zero_limit_test(plane("x", "y", "x"), vec({0.5, 0})), std::invalid_argument);
}

TEST_CASE("pointwise_test examples")
{
    const Problem h = load_problem(testsupport::fixture("hochster_xyz.json"));
    for (double c : {0.5, -0.25, 1.0}) {
        const auto res = pointwise_test(h, vec({0, 0, c}));
        CHECK(res.pass);
        CHECK(std::fabs(res.witness(0)) <= 1e-3);
        CHECK(std::fabs(res.witness(1)) <= 1e-3);
        CHECK(std::fabs(res.witness(2) - 1.0 / c) <= 1e-3);
    }
    const auto ab0 = pointwise_test(h, vec({0.5, -0.25, 0}));
    CHECK(ab0.pass);
    CHECK(ab0.witness.norm() <= 1e-3);

    const auto generic = pointwise_test(h, vec({0.3, 0.2, 0.5}));
    CHECK(generic.pass);

    const Problem xy = load_problem(testsupport::fixture("xy_squares.json"));
    CHECK_FALSE(pointwise_test(xy, vec({0, 0})).pass);
    CHECK(pointwise_test(xy, vec({0.5, 0.5})).pass);
}

TEST_CASE("wronskian_test agrees with exact rational determinants")
{
    const Samples ok = sample_1d({"1", "x^2"}, "3*x^2 + 2", 9);
    auto res = wronskian_test(ok.f, ok.phi, 200);
    CHECK(res.pass);
    CHECK(res.max_ratio <= 1e-12);
    CHECK(exact_tuple_det(ok, res.worst) == 0);

    const Samples bad = sample_1d({"1", "x^2"}, "x^3", 9);
    res = wronskian_test(bad.f, bad.phi, 200);
    CHECK_FALSE(res.pass);
    const Rational d = exact_tuple_det(bad, res.worst);
    CHECK(d != 0);
    double scale = 1;
    for (std::size_t k : res.worst)
        scale *= vec({bad.f(static_cast<Eigen::Index>(k), 0), bad.f(static_cast<Eigen::Index>(k), 1),
                      bad.phi(static_cast<Eigen::Index>(k))})
                     .norm();
    CHECK(res.max_ratio == doctest::Approx(std::fabs(d.get_d()) / scale).epsilon(1e-12));

    // the (-1, 0, 1) tuple alone already fails
    const Samples three = sample_1d({"1", "x^2"}, "x^3", 3);
    CHECK(exact_tuple_det(three, {0, 1, 2}) == Rational(-2));
    CHECK_FALSE(wronskian_test(three.f, three.phi, 5).pass);

    const Samples dup = sample_1d({"x - x^3", "x^2"}, "x - x^3", 9);
    CHECK(wronskian_test(dup.f, dup.phi, 200).pass);

    CHECK_THROWS_AS(wronskian_test(ok.f.topRows(2), ok.phi.head(2), 10), std::invalid_argument);
}

TEST_CASE("wronskian_test matches an exhaustive exact scan")
{
    std::mt19937_64 rng(8);
    const char* phis[] = {"x^4", "2 - x^2", "x", "5*x^2 - 1/3", "x^3 - x"};
    for (const char* phi : phis) {
        const Samples s = sample_1d({"1", "x^2"}, phi, 7);
        bool all_zero = true;
        for (std::size_t a = 0; a < 7; ++a)
            for (std::size_t b = a + 1; b < 7; ++b)
                for (std::size_t c = b + 1; c < 7; ++c)
                    all_zero = all_zero && exact_tuple_det(s, {a, b, c}) == 0;
        CHECK_MESSAGE(wronskian_test(s.f, s.phi, 400, 1e-9, rng()).pass == all_zero, phi);
    }
}

TEST_CASE("finite_set_test examples")
{
    const Problem lin = load_problem(testsupport::fixture("linear_x.json"));
    const EquationBundle B = lin.bundle();
    const Grid g(lin.box, lin.grid_depth);
    const auto it = iterate_refine(B, g, lin.probe, 5);
    CHECK(finite_set_test(it.result(), {vec({0, 0}), vec({0.5, -1}), vec({1, 1})}));
    CHECK(finite_set_test(it.result(), {}));
    CHECK_THROWS_AS(finite_set_test(it.result(), {vec({0.01, 0})}), std::invalid_argument);

    const Problem h = load_problem(testsupport::fixture("hochster_xyz.json"));
    const EquationBundle HB = h.bundle();
    const auto hit = iterate_refine(HB, Grid(h.box, h.grid_depth), h.probe, 7);
    REQUIRE(hit.levels.size() >= 3);
    CHECK_FALSE(finite_set_test(hit.levels[2], {vec({0, 0, 0})}));
    CHECK(finite_set_test(hit.levels[1], {vec({0, 0, 0})}));
}

TEST_CASE("solve: Hochster triple is unsolvable with a level-2 certificate at the origin")
{
    const Problem p = load_problem(testsupport::fixture("hochster_xyz.json"));
    const Verdict v = solve(p);
    REQUIRE(v.kind == Verdict::Kind::Unsolvable);
    REQUIRE(v.certificate);
    CHECK(v.certificate->point.norm() == 0.0);
    CHECK(v.certificate->level == 2);
    CHECK(v.certificate->reason == "empty_fiber");
    CHECK(!v.certificate->cause.empty());
    CHECK(recheck_certificate(p, *v.certificate));
}

TEST_CASE("solve: Hochster companion is solvable with Phi_3(0) = 1")
{
    const Problem p = load_problem(testsupport::fixture("hochster_xyz2.json"));
    const Verdict v = solve(p);
    REQUIRE(v.kind == Verdict::Kind::Solvable);
    const Grid g(p.box, p.grid_depth);
    const Vec phi0 = v.section->values[g.nearest(vec({0, 0, 0}))];
    CHECK(std::fabs(phi0(2) - 1.0) <= 1e-3);
    CHECK(v.residual.equation <= 1e-6);
}

TEST_CASE("solve: plane fields")
{
    const Problem lin = load_problem(testsupport::fixture("linear_x.json"));
    const Verdict v = solve(lin);
    REQUIRE(v.kind == Verdict::Kind::Solvable);
    const Grid g(lin.box, lin.grid_depth);
    CHECK((v.section->values[g.nearest(vec({0, 0}))] - vec({1, 0})).norm() <= 1e-3);
    CHECK(v.residual.fiber <= 1e-6);
    CHECK(v.residual.equation <= 1e-6);
    CHECK(v.stabilization_index.has_value());
    CHECK(v.norm_bound > 0);

    const Problem xy = load_problem(testsupport::fixture("xy_squares.json"));
    const Verdict u = solve(xy);
    REQUIRE(u.kind == Verdict::Kind::Unsolvable);
    CHECK(u.certificate->level == 1);
    CHECK(u.certificate->point.norm() == 0.0);
    CHECK(u.certificate->reason == "pointwise_test_failed");
    CHECK(recheck_certificate(xy, *u.certificate));

    // a certificate at a non-empty point does not recheck
    Certificate fake = *u.certificate;
    fake.point = vec({0.5, 0.5});
    CHECK_FALSE(recheck_certificate(xy, fake));
}

TEST_CASE("solve: fixtures with continuous solutions")
{
    for (const char* file : {"support_example.json", "power_1.json", "power_2.json", "power_3.json", "power_4.json"}) {
        const Problem p = load_problem(testsupport::fixture(file));
        const Verdict v = solve(p);
        CHECK_MESSAGE(v.kind == Verdict::Kind::Solvable, file << ": " << v.message);
    }
}

TEST_CASE("verdicts do not flip to Unsolvable with finer resolution")
{
    for (const char* file : {"linear_x.json", "support_example.json", "power_2.json"}) {
        Problem p = load_problem(testsupport::fixture(file));
        for (int gd : {3, 4, 5})
            for (int pd : {16, 20, 24}) {
                p.grid_depth = gd;
                p.probe.limit.depth = pd;
                const Verdict v = solve(p);
                CHECK_MESSAGE(v.kind != Verdict::Kind::Unsolvable, file << " grid " << gd << " probe " << pd);
            }
    }
    Problem xy = load_problem(testsupport::fixture("xy_squares.json"));
    for (int gd : {3, 4, 5}) {
        xy.grid_depth = gd;
        CHECK(solve(xy).kind == Verdict::Kind::Unsolvable);
    }
}

TEST_CASE("solve is deterministic and thread independent")
{
    Problem p = load_problem(testsupport::fixture("support_example.json"));
    const Verdict a = solve(p);
    p.threads = 3;
    const Verdict b = solve(p);
    REQUIRE(a.section);
    REQUIRE(b.section);
    CHECK(a.kind == b.kind);
    for (std::size_t i = 0; i < a.section->values.size(); ++i)
        CHECK(a.section->values[i] == b.section->values[i]);
}

TEST_CASE("problem validation")
{
    Problem p = plane("x", "y", "x");
    CHECK_NOTHROW(p.validate());
    p.f.clear();
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = plane("x", "y", "x");
    p.box.hi(0) = p.box.lo(0);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    CHECK_THROWS_AS(solve(make_problem({"x"}, {"x"}, "1/x", vec({-1}), vec({1}), 3)), DomainError);
}
