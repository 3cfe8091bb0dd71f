#include "glaeser/algebra.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace glaeser {

ParseError::ParseError(const std::string& what, std::size_t pos)
    : std::runtime_error(what + " at position " + std::to_string(pos)), pos_(pos)
{
}

double to_double(const Rational& q)
{
    const mpz_class& num = q.get_num();
    const mpz_class& den = q.get_den();
    if (mpz_sizeinbase(num.get_mpz_t(), 2) <= 53 && mpz_sizeinbase(den.get_mpz_t(), 2) <= 53)
        return num.get_d() / den.get_d();
    return q.get_d();
}

double ipow(double x, unsigned e)
{
    double result = 1.0;
    double base = x;
    while (e) {
        if (e & 1u)
            result *= base;
        e >>= 1u;
        if (e)
            base *= base;
    }
    return result;
}

// ---------------------------------------------------------------- Poly

unsigned Poly::degree() const
{
    unsigned d = 0;
    for (const auto& [e, c] : terms_) {
        unsigned s = 0;
        for (unsigned k : e)
            s += k;
        d = std::max(d, s);
    }
    return d;
}

void Poly::add_term(const Exponents& e, const Rational& c)
{
    if (e.size() != nvars_)
        throw std::invalid_argument("exponent vector has wrong length");
    Rational q = c;
    q.canonicalize();
    if (q == 0)
        return;
    auto it = terms_.find(e);
    if (it == terms_.end()) {
        terms_.emplace(e, std::move(q));
        return;
    }
    it->second += q;
    if (it->second == 0)
        terms_.erase(it);
}

Rational Poly::coeff(const Exponents& e) const
{
    auto it = terms_.find(e);
    return it == terms_.end() ? Rational(0) : it->second;
}

std::string Poly::to_string(const std::vector<std::string>& vars) const
{
    if (vars.size() != nvars_)
        throw std::invalid_argument("variable list does not match polynomial");
    if (terms_.empty())
        return "0";
    std::string out;
    bool first = true;
    for (const auto& [e, c] : terms_) {
        const bool neg = c < 0;
        if (first)
            out += neg ? "-" : "";
        else
            out += neg ? " - " : " + ";
        first = false;

        Rational mag = abs(c);
        std::string mono;
        for (std::size_t i = 0; i < nvars_; ++i) {
            if (e[i] == 0)
                continue;
            if (!mono.empty())
                mono += "*";
            mono += vars[i];
            if (e[i] > 1)
                mono += "^" + std::to_string(e[i]);
        }
        if (mono.empty())
            out += mag.get_str();
        else if (mag == 1)
            out += mono;
        else
            out += mag.get_str() + "*" + mono;
    }
    return out;
}

double eval_poly(const Poly& p, std::span<const double> x)
{
    if (x.size() != p.nvars())
        throw std::invalid_argument("eval_poly: point has dimension " + std::to_string(x.size()) +
                                    ", polynomial has " + std::to_string(p.nvars()) + " variables");
    double acc = 0.0;
    bool first = true;
    for (const auto& [e, c] : p.terms()) {
        double term = to_double(c);
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e[i] > 0)
                term = term * ipow(x[i], e[i]);
        acc = first ? term : acc + term;
        first = false;
    }
    return acc;
}

// ---------------------------------------------------------------- lexer

namespace {

enum class Tok { Number, Ident, Op, End };

struct Token {
    Tok kind;
    std::size_t pos;
    std::string text;
    Rational number;
    char op = 0;
};

std::vector<Token> lex(const std::string& s)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char ch = s[i];
        if (std::isspace(static_cast<unsigned char>(ch))) {
            ++i;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
            const std::size_t start = i;
            std::string digits;
            std::size_t frac = 0;
            bool dot = false;
            while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) {
                if (s[i] == '.') {
                    if (dot)
                        throw ParseError("malformed number", i);
                    dot = true;
                } else {
                    digits += s[i];
                    if (dot)
                        ++frac;
                }
                ++i;
            }
            if (digits.empty())
                throw ParseError("malformed number", start);
            Token t{Tok::Number, start, s.substr(start, i - start), Rational(0)};
            mpz_class num(digits, 10);
            mpz_class den = 1;
            for (std::size_t k = 0; k < frac; ++k)
                den *= 10;
            t.number = Rational(num, den);
            t.number.canonicalize();
            out.push_back(std::move(t));
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            const std::size_t start = i;
            while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_'))
                ++i;
            out.push_back(Token{Tok::Ident, start, s.substr(start, i - start), Rational(0)});
            continue;
        }
        if (std::string("+-*/^()").find(ch) != std::string::npos) {
            Token t{Tok::Op, i, std::string(1, ch), Rational(0)};
            t.op = ch;
            out.push_back(std::move(t));
            ++i;
            continue;
        }
        throw ParseError(std::string("unexpected character '") + ch + "'", i);
    }
    out.push_back(Token{Tok::End, s.size(), "", Rational(0)});
    return out;
}

std::size_t var_index(const std::vector<std::string>& vars, const Token& t)
{
    auto it = std::find(vars.begin(), vars.end(), t.text);
    if (it == vars.end())
        throw ParseError("unknown variable '" + t.text + "'", t.pos);
    return static_cast<std::size_t>(it - vars.begin());
}

unsigned parse_uint(const Token& t)
{
    if (t.kind != Tok::Number || t.text.find('.') != std::string::npos)
        throw ParseError("expected non-negative integer exponent", t.pos);
    if (t.number > 4096)
        throw ParseError("exponent too large", t.pos);
    return static_cast<unsigned>(t.number.get_num().get_ui());
}

// ------------------------------------------------------------ poly parser

class PolyParser {
public:
    PolyParser(const std::string& text, const std::vector<std::string>& vars)
        : toks_(lex(text)), vars_(vars), poly_(vars.size())
    {
    }

    Poly run()
    {
        bool first = true;
        while (true) {
            Rational sign = 1;
            const Token& t = peek();
            if (t.kind == Tok::Op && (t.op == '+' || t.op == '-')) {
                if (t.op == '-')
                    sign = -1;
                ++k_;
            } else if (!first) {
                break;
            }
            first = false;
            monomial(sign);
        }
        if (peek().kind != Tok::End)
            throw ParseError("unexpected '" + peek().text + "'", peek().pos);
        return poly_;
    }

private:
    const Token& peek() const { return toks_[k_]; }

    void monomial(Rational coef)
    {
        Exponents e(vars_.size(), 0);
        factor(coef, e);
        while (peek().kind == Tok::Op && peek().op == '*') {
            ++k_;
            factor(coef, e);
        }
        poly_.add_term(e, coef);
    }

    void factor(Rational& coef, Exponents& e)
    {
        const Token& t = peek();
        if (t.kind == Tok::Number) {
            ++k_;
            Rational c = t.number;
            if (peek().kind == Tok::Op && peek().op == '/') {
                ++k_;
                const Token& d = peek();
                if (d.kind != Tok::Number)
                    throw ParseError("expected number after '/'", d.pos);
                if (d.number == 0)
                    throw ParseError("zero denominator", d.pos);
                ++k_;
                c /= d.number;
            }
            coef *= c;
            return;
        }
        if (t.kind == Tok::Ident) {
            const std::size_t i = var_index(vars_, t);
            ++k_;
            unsigned p = 1;
            if (peek().kind == Tok::Op && peek().op == '^') {
                ++k_;
                p = parse_uint(peek());
                ++k_;
            }
            e[i] += p;
            return;
        }
        if (t.kind == Tok::End)
            throw ParseError("unexpected end of input", t.pos);
        throw ParseError("unexpected '" + t.text + "'", t.pos);
    }

    std::vector<Token> toks_;
    const std::vector<std::string>& vars_;
    Poly poly_;
    std::size_t k_ = 0;
};

// ------------------------------------------------------------ expr nodes

Expr::NodePtr const_node(const Rational& c)
{
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Kind::Const;
    n->value = c;
    n->value_d = to_double(c);
    return n;
}

Expr::NodePtr var_node(std::size_t i)
{
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Kind::Var;
    n->var = i;
    return n;
}

Expr::NodePtr op_node(Expr::Kind k, Expr::NodePtr a, Expr::NodePtr b = nullptr)
{
    auto n = std::make_shared<Expr::Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

Expr::NodePtr pow_node(Expr::NodePtr a, int e)
{
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Kind::Pow;
    n->a = std::move(a);
    n->exponent = e;
    return n;
}

bool is_const(const Expr::NodePtr& n) { return n->kind == Expr::Kind::Const; }

// ------------------------------------------------------------ expr parser

class ExprParser {
public:
    ExprParser(const std::string& text, const std::vector<std::string>& vars)
        : toks_(lex(text)), vars_(vars)
    {
    }

    Expr::NodePtr run()
    {
        if (peek().kind == Tok::End)
            throw ParseError("empty expression", peek().pos);
        auto e = expr();
        if (peek().kind != Tok::End)
            throw ParseError("unexpected '" + peek().text + "'", peek().pos);
        return e;
    }

private:
    const Token& peek() const { return toks_[k_]; }
    bool at_op(char c) const { return peek().kind == Tok::Op && peek().op == c; }

    Expr::NodePtr expr()
    {
        auto lhs = term();
        while (at_op('+') || at_op('-')) {
            const char op = peek().op;
            ++k_;
            auto rhs = term();
            lhs = op_node(op == '+' ? Expr::Kind::Add : Expr::Kind::Sub, lhs, rhs);
        }
        return lhs;
    }

    Expr::NodePtr term()
    {
        auto lhs = unary();
        while (at_op('*') || at_op('/')) {
            const char op = peek().op;
            const std::size_t pos = peek().pos;
            ++k_;
            auto rhs = unary();
            if (op == '/' && is_const(lhs) && is_const(rhs)) {
                if (rhs->value == 0)
                    throw ParseError("division by constant zero", pos);
                lhs = const_node(lhs->value / rhs->value);
                continue;
            }
            lhs = op_node(op == '*' ? Expr::Kind::Mul : Expr::Kind::Div, lhs, rhs);
        }
        return lhs;
    }

    Expr::NodePtr unary()
    {
        if (at_op('-')) {
            ++k_;
            auto a = unary();
            if (is_const(a))
                return const_node(-a->value);
            return op_node(Expr::Kind::Neg, a);
        }
        if (at_op('+')) {
            ++k_;
            return unary();
        }
        return power();
    }

    Expr::NodePtr power()
    {
        auto base = atom();
        if (!at_op('^'))
            return base;
        ++k_;
        int sign = 1;
        if (at_op('-') || at_op('+')) {
            sign = peek().op == '-' ? -1 : 1;
            ++k_;
        }
        const int e = sign * static_cast<int>(parse_uint(peek()));
        ++k_;
        return pow_node(base, e);
    }

    Expr::NodePtr atom()
    {
        const Token& t = peek();
        if (t.kind == Tok::Number) {
            ++k_;
            return const_node(t.number);
        }
        if (t.kind == Tok::Ident) {
            if (t.text == "abs") {
                ++k_;
                if (!at_op('('))
                    throw ParseError("expected '(' after abs", peek().pos);
                ++k_;
                auto inner = expr();
                if (!at_op(')'))
                    throw ParseError("expected ')'", peek().pos);
                ++k_;
                return op_node(Expr::Kind::Abs, inner);
            }
            const std::size_t i = var_index(vars_, t);
            ++k_;
            return var_node(i);
        }
        if (at_op('(')) {
            ++k_;
            auto inner = expr();
            if (!at_op(')'))
                throw ParseError("expected ')'", peek().pos);
            ++k_;
            return inner;
        }
        if (t.kind == Tok::End)
            throw ParseError("unexpected end of input", t.pos);
        throw ParseError("unexpected '" + t.text + "'", t.pos);
    }

    std::vector<Token> toks_;
    const std::vector<std::string>& vars_;
    std::size_t k_ = 0;
};

double eval_node(const Expr::Node& n, std::span<const double> x)
{
    using K = Expr::Kind;
    switch (n.kind) {
    case K::Const:
        return n.value_d;
    case K::Var:
        return x[n.var];
    case K::Neg:
        return -eval_node(*n.a, x);
    case K::Add:
        return eval_node(*n.a, x) + eval_node(*n.b, x);
    case K::Sub:
        return eval_node(*n.a, x) - eval_node(*n.b, x);
    case K::Mul:
        return eval_node(*n.a, x) * eval_node(*n.b, x);
    case K::Div: {
        const double num = eval_node(*n.a, x);
        const double den = eval_node(*n.b, x);
        if (den == 0.0)
            throw DomainError("division by zero");
        return num / den;
    }
    case K::Pow: {
        const double b = eval_node(*n.a, x);
        if (n.exponent >= 0)
            return ipow(b, static_cast<unsigned>(n.exponent));
        if (b == 0.0)
            throw DomainError("division by zero");
        return 1.0 / ipow(b, static_cast<unsigned>(-n.exponent));
    }
    case K::Abs:
        return std::fabs(eval_node(*n.a, x));
    }
    return 0.0;
}

int precedence(const Expr::Node& n)
{
    using K = Expr::Kind;
    switch (n.kind) {
    case K::Add:
    case K::Sub:
        return 1;
    case K::Mul:
    case K::Div:
        return 2;
    case K::Neg:
        return 3;
    case K::Pow:
        return 4;
    case K::Const:
        return (n.value < 0 || n.value.get_den() != 1) ? 0 : 5;
    default:
        return 5;
    }
}

std::string print_node(const Expr::Node& n, const std::vector<std::string>& vars, int ctx)
{
    using K = Expr::Kind;
    std::string s;
    switch (n.kind) {
    case K::Const:
        s = n.value.get_str();
        break;
    case K::Var:
        s = vars.at(n.var);
        break;
    case K::Neg:
        s = "-" + print_node(*n.a, vars, 4);
        break;
    case K::Add:
        s = print_node(*n.a, vars, 1) + " + " + print_node(*n.b, vars, 2);
        break;
    case K::Sub:
        s = print_node(*n.a, vars, 1) + " - " + print_node(*n.b, vars, 2);
        break;
    case K::Mul:
        s = print_node(*n.a, vars, 2) + "*" + print_node(*n.b, vars, 3);
        break;
    case K::Div:
        s = print_node(*n.a, vars, 2) + "/" + print_node(*n.b, vars, 3);
        break;
    case K::Pow:
        s = print_node(*n.a, vars, 5) + "^" + std::to_string(n.exponent);
        break;
    case K::Abs:
        s = "abs(" + print_node(*n.a, vars, 0) + ")";
        break;
    }
    const int p = precedence(n);
    if (ctx > 0 && p < ctx)
        return "(" + s + ")";
    if (n.kind == K::Neg && ctx > 1)
        return "(" + s + ")";
    return s;
}

} // namespace

Poly parse_poly(const std::string& text, const std::vector<std::string>& vars)
{
    return PolyParser(text, vars).run();
}

Expr Expr::constant(const Rational& c, std::size_t nvars) { return Expr(const_node(c), nvars); }

Expr Expr::variable(std::size_t i, std::size_t nvars)
{
    if (i >= nvars)
        throw std::invalid_argument("variable index out of range");
    return Expr(var_node(i), nvars);
}

double Expr::eval(std::span<const double> x) const
{
    if (!root_)
        throw std::logic_error("evaluating an empty expression");
    if (x.size() != nvars_)
        throw std::invalid_argument("eval_expr: point has dimension " + std::to_string(x.size()) +
                                    ", expression has " + std::to_string(nvars_) + " variables");
    return eval_node(*root_, x);
}

std::string Expr::to_string(const std::vector<std::string>& vars) const
{
    if (vars.size() != nvars_)
        throw std::invalid_argument("variable list does not match expression");
    return root_ ? print_node(*root_, vars, 0) : std::string();
}

Expr parse_expr(const std::string& text, const std::vector<std::string>& vars)
{
    for (const auto& v : vars)
        if (v == "abs")
            throw std::invalid_argument("'abs' is reserved and cannot name a variable");
    return Expr(ExprParser(text, vars).run(), vars.size());
}

double eval_expr(const Expr& e, std::span<const double> x) { return e.eval(x); }

Expr expr_of(const Poly& p)
{
    Expr::NodePtr acc;
    for (const auto& [e, c] : p.terms()) {
        Expr::NodePtr term = const_node(c);
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e[i] > 0)
                term = op_node(Expr::Kind::Mul, term, pow_node(var_node(i), static_cast<int>(e[i])));
        acc = acc ? op_node(Expr::Kind::Add, acc, term) : term;
    }
    if (!acc)
        acc = const_node(Rational(0));
    return Expr(acc, p.nvars());
}

} // namespace glaeser
