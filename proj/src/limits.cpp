#include "glaeser/limits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace glaeser {

double LimitConfig::scale(int nu) const { return t0 * std::pow(beta, nu); }

void LimitConfig::validate() const
{
    if (!(t0 > 0.0))
        throw std::invalid_argument("limit config: t0 must be positive");
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("limit config: beta must lie in (0,1)");
    if (window < 2)
        throw std::invalid_argument("limit config: window must be at least 2");
    if (depth < window)
        throw std::invalid_argument("limit config: depth must be at least window");
    if (!(limit_tol > 0.0))
        throw std::invalid_argument("limit config: limit_tol must be positive");
}

LimitConfig default_limit_config(double box_half_width)
{
    LimitConfig cfg;
    cfg.t0 = 0.25 * box_half_width;
    return cfg;
}

const char* to_string(LimitResult::Kind k)
{
    switch (k) {
    case LimitResult::Kind::Converged:
        return "converged";
    case LimitResult::Kind::Diverged:
        return "diverged";
    case LimitResult::Kind::Undetermined:
        return "undetermined";
    }
    return "?";
}

namespace {

bool finite(const Vec& v) { return v.allFinite(); }

} // namespace

LimitResult estimate_limit_sampled(std::span<const Vec> values, std::span<const double> scales,
                                   const LimitConfig& cfg)
{
    LimitResult out;
    const std::size_t w = static_cast<std::size_t>(std::max(cfg.window, 2));
    const std::size_t n = values.size();
    if (n == 0)
        return out;
    const std::size_t start = n >= w ? n - w : 0;
    for (std::size_t i = start; i < n; ++i)
        out.tail.push_back(values[i]);
    if (n < w)
        return out;

    for (std::size_t i = start; i < n; ++i) {
        if (!finite(values[i])) {
            out.kind = LimitResult::Kind::Diverged;
            out.trend = kInf;
            return out;
        }
    }

    auto spread = [&](std::size_t from) {
        double s = 0.0;
        for (std::size_t i = from; i < from + w; ++i)
            for (std::size_t j = i + 1; j < from + w; ++j)
                s = std::max(s, (values[i] - values[j]).norm());
        return s;
    };

    const double s = spread(start);
    if (s <= cfg.limit_tol) {
        out.kind = LimitResult::Kind::Converged;
        out.value = values[n - 1];
        out.achieved_tol = s;
        out.tail.clear();
        if (start > 0) {
            bool prev_ok = true;
            for (std::size_t i = start - 1; i < start - 1 + w; ++i)
                if (!finite(values[i]))
                    prev_ok = false;
            out.late = !prev_ok || spread(start - 1) > cfg.limit_tol;
        } else {
            out.late = true;
        }
        return out;
    }

    bool growing = true;
    for (std::size_t i = start + 1; i < n; ++i)
        if (!(values[i].norm() > values[i - 1].norm()))
            growing = false;
    if (!growing)
        return out;

    const double big = 1.0 / cfg.limit_tol;
    double last = values[n - 1].norm();
    double exponent = 0.0;
    if (scales.size() == n) {
        // least-squares slope of log|a| against -log t over the window
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        bool ok = true;
        for (std::size_t i = start; i < n; ++i) {
            const double a = values[i].norm();
            if (!(a > 0.0) || !(scales[i] > 0.0)) {
                ok = false;
                break;
            }
            const double x = -std::log(scales[i]);
            const double y = std::log(a);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double m = static_cast<double>(w);
        const double den = m * sxx - sx * sx;
        if (ok && den > 0.0)
            exponent = (m * sxy - sx * sy) / den;
        const double t_last = scales[n - 1];
        const double t_min = cfg.finest_scale();
        if (exponent > 0.0 && t_last > t_min)
            last *= std::pow(t_last / t_min, exponent);
    }
    if (last > big) {
        out.kind = LimitResult::Kind::Diverged;
        out.trend = exponent;
        out.tail.clear();
    }
    return out;
}

LimitResult estimate_limit(const std::function<Vec(int)>& seq, const LimitConfig& cfg)
{
    std::vector<Vec> values;
    std::vector<double> scales;
    for (int nu = 0; nu <= cfg.depth; ++nu) {
        values.push_back(seq(nu));
        scales.push_back(cfg.scale(nu));
    }
    return estimate_limit_sampled(values, scales, cfg);
}

LimitResult estimate_limit_scalar(const std::function<double(int)>& seq, const LimitConfig& cfg)
{
    return estimate_limit([&](int nu) { return Vec::Constant(1, seq(nu)); }, cfg);
}

} // namespace glaeser
