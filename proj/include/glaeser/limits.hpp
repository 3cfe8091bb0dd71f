/**
 * @file limits.hpp
 * @brief Limit detection for sequences sampled at shrinking scales.
 */
#pragma once

#include "glaeser/affine.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace glaeser {

struct LimitConfig {
    double t0 = 0.25;  // first probe scale
    double beta = 0.5; // scale ratio
    int depth = 24;    // last index nu
    double limit_tol = 1e-6;
    int window = 4;

    double scale(int nu) const;
    /// t0 * beta^depth, the nominal finest scale.
    double finest_scale() const { return scale(depth); }
    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;
};

/// Defaults with t0 set to a quarter of the box half-width.
LimitConfig default_limit_config(double box_half_width);

struct LimitResult {
    enum class Kind { Converged, Diverged, Undetermined };

    Kind kind = Kind::Undetermined;
    Vec value;                // Converged: last sample
    double achieved_tol = 0;  // Converged: max pairwise distance over the window
    bool late = false;        // Converged only on the final window
    double trend = 0;         // Diverged: growth exponent of |a| against 1/t
    std::vector<Vec> tail;    // Undetermined: the last window

    bool converged() const { return kind == Kind::Converged; }
    bool diverged() const { return kind == Kind::Diverged; }
    double scalar() const { return value.size() ? value(0) : 0.0; }
};

const char* to_string(LimitResult::Kind k);

/// Samples seq at nu = 0..cfg.depth (scales t0 * beta^nu) and classifies.
/// Converged iff the last `window` values are mutually within limit_tol.
/// Diverged iff a tail value is non-finite, or the magnitudes increase
/// strictly over the window and exceed 1/limit_tol, either directly or when
/// the window's power law is carried down to the nominal finest scale.
/// Anything else is Undetermined.
LimitResult estimate_limit(const std::function<Vec(int)>& seq, const LimitConfig& cfg);
LimitResult estimate_limit_scalar(const std::function<double(int)>& seq, const LimitConfig& cfg);

/// Same classification for values observed at arbitrary decreasing scales
/// (e.g. grid samples along a ray).
LimitResult estimate_limit_sampled(std::span<const Vec> values, std::span<const double> scales,
                                   const LimitConfig& cfg);

} // namespace glaeser
