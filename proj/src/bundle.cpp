#include "glaeser/bundle.hpp"

#include "glaeser/parallel.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace glaeser {

namespace {

std::string format_point(const Vec& x)
{
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (Eigen::Index i = 0; i < x.size(); ++i)
        os << (i ? ", " : "") << x(i);
    os << ")";
    return os.str();
}

Mat complement_of_unit(const Vec& n)
{
    const auto r = n.size();
    if (r == 1)
        return Mat(1, 0);
    const Mat nm = n;
    Eigen::HouseholderQR<Mat> qr(nm);
    Mat Q = qr.householderQ();
    return Q.rightCols(r - 1);
}

} // namespace

// ------------------------------------------------------------ EquationBundle

EquationBundle::EquationBundle(std::vector<Poly> f, Expr phi, double zero_tol)
    : f_(std::move(f)), phi_(std::move(phi)), zero_tol_(zero_tol)
{
    if (f_.empty())
        throw std::invalid_argument("equation bundle needs at least one polynomial");
    n_ = f_.front().nvars();
    if (n_ == 0)
        throw std::invalid_argument("equation bundle needs at least one variable");
    for (const auto& p : f_) {
        if (p.nvars() != n_)
            throw std::invalid_argument("all polynomials must share the variable list");
        max_degree_ = std::max(max_degree_, p.degree());
    }
    if (phi_.empty() || phi_.nvars() != n_)
        throw std::invalid_argument("phi must be an expression in the same variables");
}

Vec EquationBundle::f_at(const Vec& x) const
{
    Vec out(static_cast<Eigen::Index>(f_.size()));
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    for (std::size_t i = 0; i < f_.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = eval_poly(f_[i], xs);
    return out;
}

double EquationBundle::phi_at(const Vec& x) const
{
    return phi_.eval(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

bool EquationBundle::in_zero_set(const Vec& x) const
{
    return f_at(x).cwiseAbs().maxCoeff() <= zero_tol_;
}

AffineFiber EquationBundle::fiber(const Vec& x) const
{
    const Vec fv = f_at(x);
    const double phi = phi_at(x);
    const double nrm = fv.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
        if (std::fabs(phi) <= zero_tol_)
            return AffineFiber::full(r());
        return AffineFiber::empty(r());
    }
    const Vec n = fv / nrm;
    Mat normal(n.size(), 1);
    normal.col(0) = n;
    return AffineFiber::from_parts((phi / nrm) * n, complement_of_unit(n), std::move(normal));
}

bool EquationBundle::regular_at(const Vec& x) const { return !in_zero_set(x); }

bool EquationBundle::singular_ray(const Vec& x, const Vec& d) const
{
    const unsigned m = max_degree_ + 1;
    for (unsigned k = 1; k <= m; ++k) {
        const double t = static_cast<double>(k) / m;
        if (!in_zero_set(x + t * d))
            return false;
    }
    return true;
}

AffineFiber equation_fiber(const EquationBundle& b, const Vec& x) { return b.fiber(x); }

FunctionBundle::FunctionBundle(std::size_t n, std::size_t r, FiberFn fiber, RegularFn regular,
                               RayFn singular_ray)
    : n_(n), r_(r), fiber_(std::move(fiber)), regular_(std::move(regular)), ray_(std::move(singular_ray))
{
}

// ------------------------------------------------------------ probing

double ProbeConfig::assembly_tol() const
{
    return std::max(rank_tol, assembly_factor * limit.limit_tol);
}

void ProbeConfig::validate(std::size_t n) const
{
    limit.validate();
    if (directions.empty())
        throw std::invalid_argument("probe: no directions");
    for (const auto& d : directions) {
        if (static_cast<std::size_t>(d.size()) != n)
            throw std::invalid_argument("probe: direction has wrong dimension");
        if (std::fabs(d.norm() - 1.0) > 1e-12)
            throw std::invalid_argument("probe: directions must be unit vectors");
    }
}

std::vector<Vec> default_directions(std::size_t n)
{
    const auto N = static_cast<Eigen::Index>(n);
    std::vector<Vec> dirs;
    auto add = [&](Vec d) {
        d.normalize();
        for (const auto& e : dirs)
            if ((e - d).norm() < 1e-12)
                return;
        dirs.push_back(std::move(d));
    };
    for (Eigen::Index i = 0; i < N; ++i) {
        add(Vec::Unit(N, i));
        add(-Vec::Unit(N, i));
    }
    if (n <= 4) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
            Vec d(N);
            for (Eigen::Index i = 0; i < N; ++i)
                d(i) = (mask >> i) & 1u ? -1.0 : 1.0;
            add(d);
        }
    } else {
        static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
        if (n > std::size(primes))
            throw std::invalid_argument("default directions support at most 16 variables");
        for (int k = 1; k <= 50; ++k) {
            Vec d(N);
            for (Eigen::Index i = 0; i < N; ++i) {
                double f = 1.0, h = 0.0;
                int j = k;
                const int b = primes[i];
                while (j > 0) {
                    f /= b;
                    h += f * (j % b);
                    j /= b;
                }
                d(i) = 2.0 * h - 1.0;
            }
            if (d.norm() > 1e-6)
                add(d);
        }
    }
    return dirs;
}

ProbeConfig default_probe(const Box& box)
{
    ProbeConfig p;
    p.directions = default_directions(box.n());
    p.limit = default_limit_config(box.min_half_width());
    return p;
}

bool inward(const Box& box, const Vec& x, const Vec& d)
{
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double eps = 1e-12 * std::max(1.0, box.hi(i) - box.lo(i));
        if (d(i) > 1e-15 && x(i) >= box.hi(i) - eps)
            return false;
        if (d(i) < -1e-15 && x(i) <= box.lo(i) + eps)
            return false;
    }
    return true;
}

std::vector<RaySample> ClosedFormOracle::ray(const Vec& x, const Vec& d, const LimitConfig& cfg) const
{
    std::vector<RaySample> out;
    for (int nu = 0; nu <= cfg.depth; ++nu) {
        const double t = cfg.scale(nu);
        const Vec y = x + t * d;
        if (!box_.contains(y, 1e-12))
            continue;
        try {
            out.push_back({t, source_.fiber(y)});
        } catch (const DomainError&) {
            // phi undefined at this probe: the point is excluded
        }
    }
    return out;
}

AffineFiber SampledOracle::at(const Vec& x) const { return bundle_.fibers[bundle_.grid.nearest(x)]; }

std::vector<RaySample> SampledOracle::ray(const Vec& x, const Vec& d, const LimitConfig& cfg) const
{
    if (!source_.singular_ray(x, d))
        return closed_.ray(x, d, cfg);

    const Grid& g = bundle_.grid;
    const Vec& h = g.step();
    double c = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i)
        c = std::max(c, std::fabs(d(i)) / h(i));
    if (!(c > 0.0))
        return {};
    const Vec s = d / c;
    const std::size_t self = g.nearest(x);
    std::vector<RaySample> near_to_far;
    std::size_t last = self;
    for (long k = 1;; ++k) {
        const Vec y = x + static_cast<double>(k) * s;
        if (!g.box().contains(y, 1e-9 * h.minCoeff()))
            break;
        const std::size_t idx = g.nearest(y);
        if (idx == self || idx == last)
            continue;
        last = idx;
        near_to_far.push_back({(g.point(idx) - x).norm(), bundle_.fibers[idx]});
    }
    return {near_to_far.rbegin(), near_to_far.rend()};
}

RefinedFiber refine_at(const FiberOracle& B, const Vec& x, const ProbeConfig& probe)
{
    RefinedFiber out;
    out.fiber = B.at(x);
    FiberDiag& diag = out.diag;
    if (out.fiber.is_empty()) {
        diag.cause = "empty_fiber";
        return out;
    }
    const std::size_t r = B.r();
    const std::size_t window = static_cast<std::size_t>(probe.limit.window);
    ConstraintSystem rows{r, {}};
    diag.finest_scale = kInf;

    for (const Vec& d : probe.directions) {
        if (!inward(B.box(), x, d))
            continue;
        const std::vector<RaySample> samples = B.ray(x, d, probe.limit);
        if (samples.size() < window)
            continue;
        ++diag.rays;
        diag.finest_scale = std::min(diag.finest_scale, samples.back().t);
        if (samples.back().fiber.is_empty()) {
            out.fiber = AffineFiber::empty(r);
            diag.cause = "empty_neighbour";
            return out;
        }

        std::vector<std::vector<Vec>> tracks(samples.size());
        for (std::size_t nu = 0; nu < samples.size(); ++nu) {
            const AffineFiber& f = samples[nu].fiber;
            if (f.is_empty())
                continue;
            for (Eigen::Index j = 0; j < f.normal().cols(); ++j)
                tracks[nu].push_back(sign_normalized(f.normal().col(j)));
        }
        const ClusterResult cr = cluster_normal_chains(tracks, probe.limit.limit_tol, window);
        diag.dropped += static_cast<int>(cr.dropped);

        for (const NormalChain& chain : cr.chains) {
            std::vector<Vec> values;
            std::vector<double> scales;
            for (std::size_t nu = chain.first; nu < samples.size(); ++nu) {
                const AffineFiber& f = samples[nu].fiber;
                const double xi = f.is_empty() ? kInf : chain.per_scale[nu].dot(f.v());
                values.push_back(Vec::Constant(1, xi));
                scales.push_back(samples[nu].t);
            }
            const LimitResult lr = estimate_limit_sampled(values, scales, probe.limit);
            if (lr.converged()) {
                rows.rows.push_back({chain.limit, lr.scalar()});
                ++diag.normals;
                diag.achieved_tol = std::max(diag.achieved_tol, lr.achieved_tol);
                if (lr.late)
                    ++diag.late;
            } else if (lr.diverged()) {
                out.fiber = AffineFiber::empty(r);
                diag.cause = "diverged_limit";
                return out;
            } else {
                ++diag.undetermined;
            }
        }
    }
    if (!std::isfinite(diag.finest_scale))
        diag.finest_scale = 0.0;

    const double tol = probe.assembly_tol();
    out.fiber = constrain(out.fiber, rows, tol, tol);
    if (out.fiber.is_empty())
        diag.cause = "inconsistent_limits";
    return out;
}

// ------------------------------------------------------------ sampled bundles

std::size_t SampledBundle::tainted_count() const
{
    return static_cast<std::size_t>(
        std::count_if(diag.begin(), diag.end(), [](const FiberDiag& d) { return d.tainted(); }));
}

std::optional<std::size_t> SampledBundle::first_empty() const
{
    for (std::size_t i = 0; i < fibers.size(); ++i)
        if (fibers[i].is_empty())
            return i;
    return std::nullopt;
}

SampledBundle sample_bundle(const BundleSource& source, const Grid& grid)
{
    if (source.n() != grid.n())
        throw std::invalid_argument("bundle and grid dimensions differ");
    SampledBundle s;
    s.grid = grid;
    s.level = 0;
    s.fibers.resize(grid.size());
    s.diag.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec x = grid.point(i);
        try {
            s.fibers[i] = source.fiber(x);
        } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) + " at grid point " + format_point(x));
        }
        if (s.fibers[i].is_empty())
            s.diag[i].cause = "empty_fiber";
    }
    return s;
}

SampledBundle refine(const BundleSource& source, const SampledBundle& s, const ProbeConfig& probe,
                     int threads)
{
    SampledBundle out;
    out.grid = s.grid;
    out.level = s.level + 1;
    out.fibers.resize(s.fibers.size());
    out.diag.resize(s.fibers.size());

    ClosedFormOracle closed(source, s.grid.box());
    SampledOracle sampled(source, s);
    const FiberOracle& oracle = s.level == 0 ? static_cast<const FiberOracle&>(closed)
                                             : static_cast<const FiberOracle&>(sampled);

    parallel_for(s.fibers.size(), resolve_threads(threads), [&](std::size_t i) {
        const Vec x = s.grid.point(i);
        if (source.regular_at(x)) {
            out.fibers[i] = s.fibers[i];
            out.diag[i].regular = true;
            return;
        }
        RefinedFiber rf = refine_at(oracle, x, probe);
        out.fibers[i] = std::move(rf.fiber);
        out.diag[i] = std::move(rf.diag);
    });
    return out;
}

bool bundles_agree(const SampledBundle& a, const SampledBundle& b, double tol)
{
    if (a.fibers.size() != b.fibers.size())
        return false;
    for (std::size_t i = 0; i < a.fibers.size(); ++i)
        if (fiber_distance(a.fibers[i], b.fibers[i]) > tol)
            return false;
    return true;
}

const SampledBundle& IterateResult::result() const
{
    if (stabilization_index)
        return levels.at(static_cast<std::size_t>(*stabilization_index));
    return levels.back();
}

IterateResult iterate_refine(const BundleSource& source, const Grid& grid, const ProbeConfig& probe,
                             int max_level, const IterateOptions& opts)
{
    if (max_level < 1)
        throw std::invalid_argument("iterate_refine: max_level must be at least 1");
    probe.validate(source.n());
    IterateResult res;
    res.levels.push_back(sample_bundle(source, grid));
    if (res.levels.back().first_empty()) {
        res.empty_level = 0;
        if (opts.stop_on_empty)
            return res;
    }
    for (int l = 0; l <= max_level; ++l) {
        SampledBundle next = refine(source, res.levels.back(), probe, opts.threads);
        const bool agree = bundles_agree(res.levels.back(), next, opts.agree_tol);
        const bool has_empty = next.first_empty().has_value();
        res.levels.push_back(std::move(next));
        if (agree) {
            res.stabilization_index = l;
            return res;
        }
        if (has_empty && !res.empty_level) {
            res.empty_level = l + 1;
            if (opts.stop_on_empty)
                return res;
        }
    }
    return res;
}

double bundle_norm(const SampledBundle& s)
{
    double m = 0.0;
    for (const auto& f : s.fibers)
        m = std::max(m, least_norm_point(f).norm());
    return m;
}

} // namespace glaeser
