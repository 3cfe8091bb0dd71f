/**
 * @file bundle.hpp
 * @brief Bundles over a sampled box and their Glaeser refinements.
 */
#pragma once

#include "glaeser/affine.hpp"
#include "glaeser/algebra.hpp"
#include "glaeser/grid.hpp"
#include "glaeser/limits.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace glaeser {

/// A bundle with closed-form fibers everywhere in the box.
///
/// regular_at(x) promises the bundle is continuous on a neighbourhood of x;
/// refinement is local, so every refined bundle agrees with this one there.
/// singular_ray(x, d) reports whether x + t*d may meet non-regular points for
/// arbitrarily small t > 0. Along such rays refined fibers are only known
/// at grid samples.
class BundleSource {
public:
    virtual ~BundleSource() = default;
    virtual std::size_t n() const = 0;
    virtual std::size_t r() const = 0;
    virtual AffineFiber fiber(const Vec& x) const = 0;
    virtual bool regular_at(const Vec& x) const = 0;
    virtual bool singular_ray(const Vec& x, const Vec& d) const = 0;
};

/// Fibers of  sum_i lambda_i f_i(x) = phi(x).
class EquationBundle : public BundleSource {
public:
    EquationBundle(std::vector<Poly> f, Expr phi, double zero_tol = 1e-10);

    std::size_t n() const override { return n_; }
    std::size_t r() const override { return f_.size(); }
    AffineFiber fiber(const Vec& x) const override;
    bool regular_at(const Vec& x) const override;
    bool singular_ray(const Vec& x, const Vec& d) const override;

    Vec f_at(const Vec& x) const;
    /// Throws DomainError where phi is undefined.
    double phi_at(const Vec& x) const;
    /// All |f_i(x)| <= zero_tol.
    bool in_zero_set(const Vec& x) const;

    const std::vector<Poly>& f() const { return f_; }
    const Expr& phi() const { return phi_; }
    double zero_tol() const { return zero_tol_; }

private:
    std::vector<Poly> f_;
    Expr phi_;
    double zero_tol_;
    std::size_t n_;
    unsigned max_degree_ = 0;
};

AffineFiber equation_fiber(const EquationBundle& b, const Vec& x);

/// Bundle given by callbacks; used for fixtures that are not equations.
class FunctionBundle : public BundleSource {
public:
    using FiberFn = std::function<AffineFiber(const Vec&)>;
    using RegularFn = std::function<bool(const Vec&)>;
    using RayFn = std::function<bool(const Vec&, const Vec&)>;

    FunctionBundle(std::size_t n, std::size_t r, FiberFn fiber, RegularFn regular, RayFn singular_ray);

    std::size_t n() const override { return n_; }
    std::size_t r() const override { return r_; }
    AffineFiber fiber(const Vec& x) const override { return fiber_(x); }
    bool regular_at(const Vec& x) const override { return regular_(x); }
    bool singular_ray(const Vec& x, const Vec& d) const override { return ray_(x, d); }

private:
    std::size_t n_, r_;
    FiberFn fiber_;
    RegularFn regular_;
    RayFn ray_;
};

struct ProbeConfig {
    std::vector<Vec> directions;
    LimitConfig limit;
    double rank_tol = kDefaultRankTol;
    /// Rank and consistency threshold for the assembled limit constraints is
    /// max(rank_tol, assembly_factor * limit_tol).
    double assembly_factor = 10.0;

    double assembly_tol() const;
    void validate(std::size_t n) const;
};

/// 2n axis directions plus the 2^n sign diagonals for n <= 4; axes plus 50
/// Halton directions otherwise. Duplicates are removed.
std::vector<Vec> default_directions(std::size_t n);
ProbeConfig default_probe(const Box& box);

/// A direction is usable at x when x + t*d stays in the box for small t > 0.
bool inward(const Box& box, const Vec& x, const Vec& d);

struct FiberDiag {
    bool regular = false;     // skipped: bundle continuous near the point
    int rays = 0;             // probe rays used
    int normals = 0;          // converged limit normals imposed
    int dropped = 0;          // normal chains that did not converge
    int undetermined = 0;     // scalar limits left undetermined
    int late = 0;             // limits that converged only on the final window
    double achieved_tol = 0;  // worst spread among converged scalar limits
    double finest_scale = 0;  // smallest probe distance used
    std::string cause;        // why the fiber became Empty, if it did

    bool tainted() const { return undetermined > 0; }
};

struct RaySample {
    double t = 0;
    AffineFiber fiber;
};

/// Fibers of one refinement level as seen by refine_at.
class FiberOracle {
public:
    virtual ~FiberOracle() = default;
    virtual std::size_t r() const = 0;
    virtual const Box& box() const = 0;
    virtual AffineFiber at(const Vec& x) const = 0;
    /// Samples along x + t*d ordered from far to near.
    virtual std::vector<RaySample> ray(const Vec& x, const Vec& d, const LimitConfig& cfg) const = 0;
};

/// Level 0: closed-form fibers at the geometric scales t0 * beta^nu.
class ClosedFormOracle : public FiberOracle {
public:
    ClosedFormOracle(const BundleSource& source, Box box) : source_(source), box_(std::move(box)) {}
    std::size_t r() const override { return source_.r(); }
    const Box& box() const override { return box_; }
    AffineFiber at(const Vec& x) const override { return source_.fiber(x); }
    std::vector<RaySample> ray(const Vec& x, const Vec& d, const LimitConfig& cfg) const override;

private:
    const BundleSource& source_;
    Box box_;
};

struct SampledBundle {
    Grid grid;
    std::vector<AffineFiber> fibers;
    int level = 0;
    std::vector<FiberDiag> diag;

    std::size_t r() const { return fibers.empty() ? 0 : fibers.front().r(); }
    std::size_t tainted_count() const;
    std::optional<std::size_t> first_empty() const;
};

/// Level >= 1. Along singular rays the fibers are the stored grid samples
/// met by the ray; along other rays the source's closed form is exact.
class SampledOracle : public FiberOracle {
public:
    SampledOracle(const BundleSource& source, const SampledBundle& bundle)
        : source_(source), bundle_(bundle), closed_(source, bundle.grid.box())
    {
    }
    std::size_t r() const override { return source_.r(); }
    const Box& box() const override { return bundle_.grid.box(); }
    AffineFiber at(const Vec& x) const override;
    std::vector<RaySample> ray(const Vec& x, const Vec& d, const LimitConfig& cfg) const override;

private:
    const BundleSource& source_;
    const SampledBundle& bundle_;
    ClosedFormOracle closed_;
};

struct RefinedFiber {
    AffineFiber fiber;
    FiberDiag diag;
};

/// One Glaeser refinement step at x: limit normals along each probe ray,
/// the limits of lambda^nu . v(y^nu) along each converged chain, and the
/// fiber at x cut by the resulting constraints. Empty when a limit diverges,
/// the finest sample on a ray is Empty, or the constraints are inconsistent.
RefinedFiber refine_at(const FiberOracle& B, const Vec& x, const ProbeConfig& probe);

/// Level-0 samples; throws DomainError if phi is undefined at a grid point.
SampledBundle sample_bundle(const BundleSource& source, const Grid& grid);

/// Applies refine_at at every non-regular grid point; regular points keep
/// their fiber. threads follows resolve_threads().
SampledBundle refine(const BundleSource& source, const SampledBundle& s, const ProbeConfig& probe,
                     int threads = 1);

/// Every point within tol under fiber_distance.
bool bundles_agree(const SampledBundle& a, const SampledBundle& b, double tol);

struct IterateOptions {
    int threads = 1;
    bool stop_on_empty = true;
    double agree_tol = kDefaultRankTol;
};

struct IterateResult {
    std::vector<SampledBundle> levels;          // levels[l] is H^l
    std::optional<int> stabilization_index;     // first l with H^l == H^(l+1)
    std::optional<int> empty_level;             // first level with an Empty fiber

    /// H^l at the stabilization index, otherwise the last level computed.
    const SampledBundle& result() const;
};

/// Refines until two consecutive levels agree, an Empty fiber appears
/// (if requested), or H^(max_level+1) has been computed.
IterateResult iterate_refine(const BundleSource& source, const Grid& grid, const ProbeConfig& probe,
                             int max_level, const IterateOptions& opts = {});

/// max over grid points of |least_norm_point|; throws on Empty fibers.
double bundle_norm(const SampledBundle& s);

} // namespace glaeser
