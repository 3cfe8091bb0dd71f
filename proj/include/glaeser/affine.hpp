/**
 * @file affine.hpp
 * @brief Affine subspaces of R^r in orthogonal normal form.
 */
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <vector>

namespace glaeser {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kDefaultRankTol = 1e-9;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Column-orthonormal basis of a linear subspace of R^r.
struct LinearSubspace {
    Mat basis; // r x k

    std::size_t r() const { return static_cast<std::size_t>(basis.rows()); }
    std::size_t k() const { return static_cast<std::size_t>(basis.cols()); }
    Mat projector() const { return basis * basis.transpose(); }
};

/// Empty, or v + span(dir) with v orthogonal to dir. The orthonormal basis
/// of the normal space (the complement of dir) is kept alongside.
class AffineFiber {
public:
    AffineFiber() = default;

    static AffineFiber empty(std::size_t r);
    static AffineFiber full(std::size_t r);
    static AffineFiber point(const Vec& p);
    /// dir_cols need not be orthonormal; rank is decided with rank_tol
    /// relative to the largest singular value. v is projected onto the
    /// normal space.
    static AffineFiber make(const Vec& v, const Mat& dir_cols, double rank_tol = kDefaultRankTol);
    /// Trusted constructor: dir and normal must be orthonormal complements.
    static AffineFiber from_parts(const Vec& v, Mat dir, Mat normal);

    bool is_empty() const { return empty_; }
    std::size_t r() const { return r_; }
    /// Dimension of the direction space; meaningless for Empty.
    std::size_t dim() const { return empty_ ? 0 : static_cast<std::size_t>(dir_.cols()); }
    const Vec& v() const { return v_; }
    const Mat& dir() const { return dir_; }
    const Mat& normal() const { return normal_; }
    LinearSubspace direction() const { return {dir_}; }

private:
    bool empty_ = true;
    std::size_t r_ = 0;
    Vec v_;
    Mat dir_;
    Mat normal_;
};

struct Constraint {
    Vec normal;
    double rhs = 0;
};

/// {w : normal_i . w = rhs_i for all i}; rows may be redundant or inconsistent.
struct ConstraintSystem {
    std::size_t r = 0;
    std::vector<Constraint> rows;
};

/// Least-norm solution set. Rows are normalised to unit length first; rank
/// uses rank_tol relative to the largest singular value; a residual above
/// rank_tol * scale gives Empty.
AffineFiber solve_constraints(const ConstraintSystem& cs, double rank_tol = kDefaultRankTol);

/// Euclidean distance from lambda to H; +inf for Empty.
double dist_point_fiber(const Vec& lambda, const AffineFiber& H);

/// The point of H closest to the origin. Throws std::domain_error on Empty.
Vec least_norm_point(const AffineFiber& H);

AffineFiber intersect(const AffineFiber& a, const AffineFiber& b, double rank_tol = kDefaultRankTol);

/// H intersected with the rows of cs, solved inside H's parametrisation so
/// that rows already implied by H leave H bit-for-bit unchanged.
/// rank_tol_abs is an absolute threshold on singular values of the unit rows
/// restricted to dir(H); consistency_tol bounds the allowed residual, scaled
/// by 1 + max|rhs|.
AffineFiber constrain(const AffineFiber& H, const ConstraintSystem& cs, double rank_tol_abs,
                      double consistency_tol);

/// max(|v_a - v_b|, ||P_a - P_b||_2); 0 for two Empty fibers, +inf when the
/// kinds or dimensions differ.
double fiber_distance(const AffineFiber& a, const AffineFiber& b);

/// inner within tol of outer: base point and every direction vector.
bool fiber_contains(const AffineFiber& outer, const AffineFiber& inner, double tol);

/// Flips the sign so the first coordinate with |x| > 1e-12 is positive.
Vec sign_normalized(Vec u);

/// A converged chain of normals across scales. per_scale[nu] is the matched
/// unit vector at scale nu for nu >= first; earlier entries are unset.
struct NormalChain {
    Vec limit;
    std::size_t first = 0;
    std::vector<Vec> per_scale;
    double max_angle = 0;
};

struct ClusterResult {
    std::vector<NormalChain> chains;
    std::size_t dropped = 0;
};

/// tracks[nu] holds the unit normals observed at scale nu (coarse to fine).
/// Candidates are the sign-normalised vectors of the finest scale; each is
/// followed back through the spans of the earlier sets, and kept when the
/// consecutive angles over the last `window` scales are all <= limit_tol.
ClusterResult cluster_normal_chains(const std::vector<std::vector<Vec>>& tracks, double limit_tol,
                                    std::size_t window = 4);

std::vector<Vec> cluster_normals(const std::vector<std::vector<Vec>>& tracks, double limit_tol,
                                 std::size_t window = 4);

} // namespace glaeser
