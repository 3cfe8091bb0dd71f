/**
 * @file algebra.hpp
 * @brief Exact-coefficient polynomials and a small expression language.
 */
#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace glaeser {

using Rational = mpq_class;
using Exponents = std::vector<unsigned>;

/// Thrown by the parsers. position() is a 0-based offset into the input.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t pos);
    std::size_t position() const { return pos_; }

private:
    std::size_t pos_;
};

/// Evaluation outside the domain of an expression (division by zero).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Multivariate polynomial with rational coefficients, stored canonically:
/// no zero coefficients, one entry per exponent vector, terms ordered
/// lexicographically descending.
class Poly {
public:
    using TermMap = std::map<Exponents, Rational, std::greater<Exponents>>;

    Poly() = default;
    explicit Poly(std::size_t nvars) : nvars_(nvars) {}

    std::size_t nvars() const { return nvars_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    unsigned degree() const;

    /// Adds c * x^e, merging with an existing term and dropping zeros.
    void add_term(const Exponents& e, const Rational& c);
    Rational coeff(const Exponents& e) const;

    std::string to_string(const std::vector<std::string>& vars) const;

    friend bool operator==(const Poly& a, const Poly& b)
    {
        return a.nvars_ == b.nvars_ && a.terms_ == b.terms_;
    }

private:
    std::size_t nvars_ = 0;
    TermMap terms_;
};

Poly parse_poly(const std::string& text, const std::vector<std::string>& vars);
double eval_poly(const Poly& p, std::span<const double> x);

/// x^e by binary powering; shared by polynomial and expression evaluation
/// so both produce bit-identical results.
double ipow(double x, unsigned e);

class Expr {
public:
    enum class Kind { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Abs };

    struct Node {
        Kind kind;
        Rational value;      // Const
        double value_d = 0;  // Const, cached
        std::size_t var = 0; // Var
        int exponent = 0;    // Pow
        std::shared_ptr<const Node> a, b;
    };
    using NodePtr = std::shared_ptr<const Node>;

    Expr() = default;
    Expr(NodePtr root, std::size_t nvars) : root_(std::move(root)), nvars_(nvars) {}

    static Expr constant(const Rational& c, std::size_t nvars);
    static Expr variable(std::size_t i, std::size_t nvars);

    std::size_t nvars() const { return nvars_; }
    const NodePtr& root() const { return root_; }
    bool empty() const { return !root_; }

    /// Throws DomainError where a divisor vanishes.
    double eval(std::span<const double> x) const;
    std::string to_string(const std::vector<std::string>& vars) const;

private:
    NodePtr root_;
    std::size_t nvars_ = 0;
};

Expr parse_expr(const std::string& text, const std::vector<std::string>& vars);
double eval_expr(const Expr& e, std::span<const double> x);

/// Expression tree whose evaluation reproduces eval_poly bit for bit.
Expr expr_of(const Poly& p);

/// Nearest double to a rational when numerator and denominator are exact
/// doubles; otherwise GMP's conversion.
double to_double(const Rational& q);

} // namespace glaeser
