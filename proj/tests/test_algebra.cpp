#include "glaeser/algebra.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace glaeser;

namespace {

const std::vector<std::string> XY{"x", "y"};
const std::vector<std::string> XYZ{"x", "y", "z"};

double ev(const Poly& p, std::vector<double> x) { return eval_poly(p, x); }
double ev(const Expr& e, std::vector<double> x) { return e.eval(x); }

Poly random_poly(std::mt19937_64& rng, std::size_t nvars)
{
    std::uniform_int_distribution<int> nterms(0, 6), expo(0, 4), num(-20, 20), den(1, 9);
    Poly p(nvars);
    const int k = nterms(rng);
    for (int t = 0; t < k; ++t) {
        Exponents e(nvars);
        for (auto& a : e)
            a = static_cast<unsigned>(expo(rng));
        p.add_term(e, Rational(num(rng), den(rng)));
    }
    return p;
}

// exact value at a rational point, plus the sum of |term| for a relative bound
std::pair<Rational, double> exact_eval(const Poly& p, const std::vector<Rational>& x)
{
    Rational s = 0;
    double mag = 0;
    for (const auto& [e, c] : p.terms()) {
        Rational t = c;
        for (std::size_t i = 0; i < e.size(); ++i)
            for (unsigned k = 0; k < e[i]; ++k)
                t *= x[i];
        s += t;
        mag += std::fabs(t.get_d());
    }
    return {s, mag};
}

} // namespace

TEST_CASE("parse_poly builds canonical polynomials")
{
    const Poly p = parse_poly("x^2 + y^2", XY);
    CHECK(p.terms().size() == 2);
    CHECK(p.coeff({2, 0}) == 1);
    CHECK(p.coeff({0, 2}) == 1);
    CHECK(p.coeff({1, 1}) == 0);

    const Poly h = parse_poly("x*y*z^2", XYZ);
    CHECK(h.terms().size() == 1);
    CHECK(h.coeff({1, 1, 2}) == 1);
    CHECK(h.degree() == 4);

    const Poly merged = parse_poly("2*x - x + 3/4*x*y - 3/4*y*x", XY);
    CHECK(merged.terms().size() == 1);
    CHECK(merged.coeff({1, 0}) == 1);

    CHECK(parse_poly("x - x", XY).is_zero());
    CHECK(parse_poly("0.25*x", XY).coeff({1, 0}) == Rational(1, 4));
}

TEST_CASE("parse_poly rejects bad input with positions")
{
    try {
        parse_poly("x^-1", XY);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position() == 2);
    }
    try {
        parse_poly("x + w", XY);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position() == 4);
        CHECK(std::string(e.what()).find("unknown variable") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_poly("x +", XY), ParseError);
    CHECK_THROWS_AS(parse_poly("x y", XY), ParseError);
    CHECK_THROWS_AS(parse_poly("abs(x)", XY), ParseError);
    CHECK_THROWS_AS(parse_poly("x/y", XY), ParseError);
    CHECK_THROWS_AS(parse_poly("", XY), ParseError);
}

TEST_CASE("eval_poly examples")
{
    CHECK(ev(parse_poly("x^2 + y^2", XY), {3, 4}) == 25);
    CHECK(ev(parse_poly("x*y*z^2", XYZ), {1, 1, 2}) == 4);
    CHECK(ev(parse_poly("3*x^5*y - 7/2 + y", XY), {0, 0}) == -3.5);
}

TEST_CASE("eval_poly matches exact rational evaluation")
{
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> num(-64, 64);
    for (int trial = 0; trial < 300; ++trial) {
        const Poly p = random_poly(rng, 3);
        std::vector<Rational> xq(3);
        std::vector<double> xd(3);
        for (int i = 0; i < 3; ++i) {
            xq[i] = Rational(num(rng), 32);
            xd[i] = xq[i].get_d();
        }
        const auto [exact, mag] = exact_eval(p, xq);
        CHECK(std::fabs(eval_poly(p, xd) - exact.get_d()) <= 1e-14 * (1.0 + mag));
    }
}

TEST_CASE("printing round-trips through the parser")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const Poly p = random_poly(rng, 2);
        const std::string s = p.to_string(XY);
        CHECK_MESSAGE(parse_poly(s, XY) == p, s);
    }
    CHECK(parse_poly("3/2*x^2 - y", XY).to_string(XY) == "3/2*x^2 - y");
}

TEST_CASE("expression language")
{
    CHECK(ev(parse_expr("abs(x)*y", XY), {-2, 3}) == 6);
    CHECK(ev(parse_expr("x^4 - y^2", XY), {1, 2}) == -3);
    CHECK(ev(parse_expr("-x^2", XY), {3, 0}) == -9);
    CHECK(ev(parse_expr("2^-1*x", XY), {3, 0}) == 1.5);
    CHECK(ev(parse_expr("x^-2", XY), {2, 0}) == 0.25);
    CHECK(ev(parse_expr("((x^4 - y^2) - abs(x^4 - y^2))/2", XY), {0, 0.5}) == -0.25);
    CHECK(ev(parse_expr("((x^4 - y^2) - abs(x^4 - y^2))/2", XY), {1, 0.5}) == 0);
    CHECK_THROWS_AS(ev(parse_expr("1/x", XY), {0, 1}), DomainError);
    CHECK_THROWS_AS(ev(parse_expr("x^-1", XY), {0, 1}), DomainError);
    CHECK_THROWS_AS(parse_expr("abs x", XY), ParseError);
    CHECK_THROWS_AS(parse_expr("(x", XY), ParseError);
    CHECK_THROWS_AS(parse_expr("1/0", XY), ParseError);
    CHECK_THROWS_AS(ev(parse_expr("x/0", XY), {1, 1}), DomainError);
    try {
        parse_expr("x + $", XY);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position() == 4);
    }
}

TEST_CASE("expression printing re-parses to the same values")
{
    const char* cases[] = {"abs(x)*y", "-(x - y)^3/(1 + x^2)", "x^-2 + 3/4", "-x^2", "(-2)^3*y",
                           "((x^4 - y^2) - abs(x^4 - y^2))/2", "x - (y - 1)", "x/(y/2)"};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (const char* c : cases) {
        const Expr e = parse_expr(c, XY);
        const Expr back = parse_expr(e.to_string(XY), XY);
        for (int k = 0; k < 20; ++k) {
            const std::vector<double> x{u(rng), u(rng)};
            CHECK_MESSAGE(back.eval(x) == e.eval(x), c << " printed as " << e.to_string(XY));
        }
    }
}

TEST_CASE("expr_of reproduces eval_poly bit for bit")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int trial = 0; trial < 300; ++trial) {
        const Poly p = random_poly(rng, 3);
        const Expr e = expr_of(p);
        for (int k = 0; k < 5; ++k) {
            const std::vector<double> x{u(rng), u(rng), u(rng)};
            CHECK(eval_expr(e, x) == eval_poly(p, x));
        }
    }
}

TEST_CASE("to_double rounds correctly")
{
    CHECK(to_double(Rational(1, 3)) == 1.0 / 3.0);
    CHECK(to_double(Rational(-2, 7)) == -2.0 / 7.0);
    CHECK(to_double(Rational(1, 10)) == 0.1);
}
