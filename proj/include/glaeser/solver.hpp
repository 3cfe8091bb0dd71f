/**
 * @file solver.hpp
 * @brief End-to-end decision procedure for  phi = sum_i Phi_i f_i  with
 * continuous Phi_i, plus the standalone necessary-condition tests.
 */
#pragma once

#include "glaeser/bundle.hpp"
#include "glaeser/section.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace glaeser {

struct Tolerances {
    double rank_tol = kDefaultRankTol;
    double residual_tol = 1e-6;
    double zero_tol = 1e-10;
};

struct Problem {
    std::vector<std::string> vars;
    std::vector<Poly> f;
    Expr phi;
    Box box;
    int grid_depth = 4;
    ProbeConfig probe;
    Tolerances tol;
    int threads = 1;

    std::size_t n() const { return vars.size(); }
    std::size_t r() const { return f.size(); }
    /// Throws std::invalid_argument when the fields are inconsistent.
    void validate() const;
    EquationBundle bundle() const { return EquationBundle(f, phi, tol.zero_tol); }
};

/// Builds a Problem from strings with default probe settings for the box.
Problem make_problem(const std::vector<std::string>& vars, const std::vector<std::string>& f,
                     const std::string& phi, const Vec& lo, const Vec& hi, int grid_depth = 4);

struct Certificate {
    Vec point;
    std::size_t grid_index = 0;
    int level = 0;
    std::string reason;  // empty_fiber | diverged_limit | pointwise_test_failed
    std::string cause;   // refine_at diagnosis behind the Empty fiber
};

struct PointwiseResult {
    bool pass = false;
    Vec witness;           // the constants c_i
    LimitResult limit;     // ratio test on phi - sum c_i f_i
};

struct PointwiseRecord {
    std::size_t grid_index = 0;
    PointwiseResult result;
};

struct Verdict {
    enum class Kind { Solvable, Unsolvable, Indeterminate };
    Kind kind = Kind::Indeterminate;

    // Solvable
    std::optional<SampledSection> section;
    SectionResidual residual;
    double norm_bound = 0;  // max|Phi| / bundle_norm of the stable bundle

    // Unsolvable
    std::optional<Certificate> certificate;

    // Indeterminate and general diagnostics
    std::string message;
    std::size_t tainted_points = 0;
    std::size_t undetermined_limits = 0;
    std::optional<int> stabilization_index;
    int levels_computed = 0;
    std::vector<std::size_t> zero_set;             // grid indices with all |f_i| <= zero_tol
    std::vector<PointwiseRecord> pointwise;        // pointwise test at each zero-set point
    std::map<std::string, double> timings;         // seconds per stage
};

const char* to_string(Verdict::Kind k);

/// Ratio test  lim_{x -> z} phi / sum_i |f_i| = 0, taking the largest
/// |ratio| over the probe rays at each scale. Throws std::invalid_argument
/// unless z lies in the common zero set.
LimitResult zero_limit_test(const Problem& p, const Vec& z);

/// Fits constants c_i over the two finest probe shells around pt, then runs
/// the ratio test on phi - sum c_i f_i. Passes iff the ratio converges to 0
/// within limit_tol. Off the common zero set the witness is the least-norm
/// solution of c.f(pt) = phi(pt) and the limit is evaluated at pt directly.
PointwiseResult pointwise_test(const Problem& p, const Vec& pt);

struct WronskianResult {
    bool pass = true;
    double max_ratio = 0;              // max |det| / prod(row norms)
    std::vector<std::size_t> worst;    // sample indices of the worst tuple
};

/// samples: one row per point with values f_1..f_r; phi: values at the same
/// points. Draws `trials` random (r+1)-tuples of distinct points and checks
/// that the matrix [f | phi] is singular relative to its row norms.
/// Throws std::invalid_argument with fewer than r+1 samples.
WronskianResult wronskian_test(const Mat& samples, const Vec& phi, int trials, double tol = 1e-9,
                               std::uint64_t seed = 1);

/// Every listed point (a grid point) has a NonEmpty fiber. Throws
/// std::invalid_argument for points off the grid.
bool finite_set_test(const SampledBundle& S, const std::vector<Vec>& pts);

Verdict solve(const Problem& p);

/// Recomputes the refinement chain up to the certificate level and checks
/// that the fiber at the certificate point is Empty.
bool recheck_certificate(const Problem& p, const Certificate& c);

} // namespace glaeser
