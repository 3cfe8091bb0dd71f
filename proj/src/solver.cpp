#include "glaeser/solver.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

namespace glaeser {

const char* to_string(Verdict::Kind k)
{
    switch (k) {
    case Verdict::Kind::Solvable:
        return "Solvable";
    case Verdict::Kind::Unsolvable:
        return "Unsolvable";
    case Verdict::Kind::Indeterminate:
        return "Indeterminate";
    }
    return "?";
}

void Problem::validate() const
{
    if (vars.empty())
        throw std::invalid_argument("problem: no variables");
    if (f.empty())
        throw std::invalid_argument("problem: no polynomials");
    for (const auto& p : f)
        if (p.nvars() != n())
            throw std::invalid_argument("problem: polynomial over the wrong variables");
    if (phi.empty() || phi.nvars() != n())
        throw std::invalid_argument("problem: phi missing or over the wrong variables");
    if (box.n() != n())
        throw std::invalid_argument("problem: box dimension differs from the variable count");
    box.validate();
    if (grid_depth < 0 || grid_depth > 20)
        throw std::invalid_argument("problem: grid_depth must lie in [0, 20]");
    probe.validate(n());
    if (!(tol.rank_tol > 0) || !(tol.residual_tol > 0) || !(tol.zero_tol >= 0))
        throw std::invalid_argument("problem: tolerances must be positive");
}

Problem make_problem(const std::vector<std::string>& vars, const std::vector<std::string>& f,
                     const std::string& phi, const Vec& lo, const Vec& hi, int grid_depth)
{
    Problem p;
    p.vars = vars;
    for (const auto& s : f)
        p.f.push_back(parse_poly(s, vars));
    p.phi = parse_expr(phi, vars);
    p.box = Box{lo, hi};
    p.grid_depth = grid_depth;
    p.box.validate();
    p.probe = default_probe(p.box);
    p.validate();
    return p;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// max over inward rays of |g(y)| / sum_i |f_i(y)| at each probe scale
LimitResult ratio_limit(const Problem& p, const EquationBundle& B, const Vec& z,
                        const std::function<double(const Vec&)>& g)
{
    const LimitConfig& cfg = p.probe.limit;
    std::vector<Vec> dirs;
    for (const auto& d : p.probe.directions)
        if (inward(p.box, z, d))
            dirs.push_back(d);
    auto seq = [&](int nu) {
        const double t = cfg.scale(nu);
        double worst = 0.0;
        for (const auto& d : dirs) {
            const Vec y = z + t * d;
            if (!p.box.contains(y, 1e-12))
                continue;
            double gy;
            try {
                gy = g(y);
            } catch (const DomainError&) {
                continue;
            }
            const double S = B.f_at(y).cwiseAbs().sum();
            double q;
            if (S > 0.0)
                q = std::fabs(gy) / S;
            else
                q = std::fabs(gy) <= p.tol.zero_tol ? 0.0 : kInf;
            worst = std::max(worst, q);
        }
        return worst;
    };
    return estimate_limit_scalar(seq, cfg);
}

bool ratio_passes(const LimitResult& lr, double limit_tol)
{
    return lr.converged() && std::fabs(lr.scalar()) <= limit_tol;
}

} // namespace

LimitResult zero_limit_test(const Problem& p, const Vec& z)
{
    const EquationBundle B = p.bundle();
    if (!B.in_zero_set(z))
        throw std::invalid_argument("zero_limit_test: point is not in the common zero set");
    return ratio_limit(p, B, z, [&](const Vec& y) { return B.phi_at(y); });
}

PointwiseResult pointwise_test(const Problem& p, const Vec& pt)
{
    const EquationBundle B = p.bundle();
    const LimitConfig& cfg = p.probe.limit;
    const auto r = static_cast<Eigen::Index>(p.r());

    if (!B.in_zero_set(pt)) {
        // sum |f_i| is bounded below near pt, so the ratio tends to
        // |phi(pt) - c.f(pt)| / sum |f_i(pt)|, which the exact fit zeroes
        const Vec fp = B.f_at(pt);
        const double phi = B.phi_at(pt);
        PointwiseResult res;
        res.witness = (phi / fp.squaredNorm()) * fp;
        res.limit.kind = LimitResult::Kind::Converged;
        res.limit.value = Vec::Constant(1, std::fabs(phi - res.witness.dot(fp)) / fp.cwiseAbs().sum());
        res.pass = res.limit.scalar() <= cfg.limit_tol;
        return res;
    }

    std::vector<Vec> rows;
    std::vector<double> rhs;
    bool impossible = false;
    for (int nu : {cfg.depth - 1, cfg.depth}) {
        const double t = cfg.scale(nu);
        for (const auto& d : p.probe.directions) {
            if (!inward(p.box, pt, d))
                continue;
            const Vec y = pt + t * d;
            if (!p.box.contains(y, 1e-12))
                continue;
            double phi;
            try {
                phi = B.phi_at(y);
            } catch (const DomainError&) {
                continue;
            }
            const Vec fy = B.f_at(y);
            const double S = fy.cwiseAbs().sum();
            if (S > 0.0) {
                rows.push_back(fy / S);
                rhs.push_back(phi / S);
            } else if (std::fabs(phi) > p.tol.zero_tol) {
                impossible = true;
            }
        }
    }

    PointwiseResult res;
    res.witness = Vec::Zero(r);
    if (!rows.empty()) {
        Mat A(static_cast<Eigen::Index>(rows.size()), r);
        Vec b(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            A.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
            b(static_cast<Eigen::Index>(i)) = rhs[i];
        }
        Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        // rows from neighbouring probe points differ by O(t); only directions
        // resolved above limit_tol count
        svd.setThreshold(std::max(p.tol.rank_tol, cfg.limit_tol));
        res.witness = svd.solve(b);
    }
    const Vec c = res.witness;
    res.limit = ratio_limit(p, B, pt, [&](const Vec& y) { return B.phi_at(y) - c.dot(B.f_at(y)); });
    res.pass = !impossible && ratio_passes(res.limit, cfg.limit_tol);
    return res;
}

namespace {

double det_ratio(const Mat& M)
{
    double scale = 1.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        scale *= M.row(i).norm();
    if (scale == 0.0)
        return 0.0;
    return std::fabs(M.fullPivLu().determinant()) / scale;
}

} // namespace

WronskianResult wronskian_test(const Mat& samples, const Vec& phi, int trials, double tol,
                               std::uint64_t seed)
{
    const Eigen::Index m = samples.rows();
    const Eigen::Index r = samples.cols();
    if (phi.size() != m)
        throw std::invalid_argument("wronskian_test: phi and samples differ in length");
    if (m < r + 1)
        throw std::invalid_argument("wronskian_test: need at least r + 1 sample points");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, m - 1);
    WronskianResult res;
    Mat M(r + 1, r + 1);
    std::vector<std::size_t> tuple;
    for (int trial = 0; trial < trials; ++trial) {
        tuple.clear();
        while (static_cast<Eigen::Index>(tuple.size()) < r + 1) {
            const auto k = static_cast<std::size_t>(pick(rng));
            if (std::find(tuple.begin(), tuple.end(), k) == tuple.end())
                tuple.push_back(k);
        }
        for (Eigen::Index i = 0; i <= r; ++i) {
            const auto k = static_cast<Eigen::Index>(tuple[static_cast<std::size_t>(i)]);
            M.row(i).head(r) = samples.row(k);
            M(i, r) = phi(k);
        }
        const double q = det_ratio(M);
        if (q > res.max_ratio || res.worst.empty()) {
            res.max_ratio = std::max(res.max_ratio, q);
            res.worst = tuple;
        }
    }
    res.pass = res.max_ratio <= tol;
    return res;
}

bool finite_set_test(const SampledBundle& S, const std::vector<Vec>& pts)
{
    const double eps = 1e-9 * S.grid.step().minCoeff();
    for (const auto& x : pts) {
        const std::size_t idx = S.grid.nearest(x);
        if ((S.grid.point(idx) - x).lpNorm<Eigen::Infinity>() > eps)
            throw std::invalid_argument("finite_set_test: point is not a grid point");
        if (S.fibers[idx].is_empty())
            return false;
    }
    return true;
}

Verdict solve(const Problem& p)
{
    p.validate();
    Verdict out;
    const auto t_all = Clock::now();
    const EquationBundle B = p.bundle();
    const Grid grid(p.box, p.grid_depth);

    auto t0 = Clock::now();
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (B.in_zero_set(grid.point(i)))
            out.zero_set.push_back(i);
    out.timings["zero_set"] = seconds_since(t0);

    t0 = Clock::now();
    for (std::size_t i : out.zero_set)
        out.pointwise.push_back({i, pointwise_test(p, grid.point(i))});
    out.timings["pointwise"] = seconds_since(t0);

    t0 = Clock::now();
    IterateOptions opts;
    opts.threads = p.threads;
    opts.stop_on_empty = true;
    opts.agree_tol = p.tol.rank_tol;
    const int max_level = 2 * static_cast<int>(p.r()) + 1;
    const IterateResult it = iterate_refine(B, grid, p.probe, max_level, opts);
    out.timings["refine"] = seconds_since(t0);
    out.levels_computed = static_cast<int>(it.levels.size()) - 1;
    out.stabilization_index = it.stabilization_index;

    if (it.empty_level) {
        const int level = *it.empty_level;
        const SampledBundle& S = it.levels[static_cast<std::size_t>(level)];
        const std::size_t idx = *S.first_empty();
        Certificate c;
        c.point = grid.point(idx);
        c.grid_index = idx;
        c.level = level;
        c.cause = S.diag[idx].cause;
        c.reason = "empty_fiber";
        if (level == 1)
            for (const auto& rec : out.pointwise)
                if (rec.grid_index == idx && !rec.result.pass)
                    c.reason = "pointwise_test_failed";
        out.kind = Verdict::Kind::Unsolvable;
        out.certificate = std::move(c);
        out.message = "empty fiber at level " + std::to_string(level);
        out.timings["total"] = seconds_since(t_all);
        return out;
    }

    for (const auto& S : it.levels) {
        out.tainted_points = std::max(out.tainted_points, S.tainted_count());
        std::size_t und = 0;
        for (const auto& d : S.diag)
            und += static_cast<std::size_t>(d.undetermined);
        out.undetermined_limits = std::max(out.undetermined_limits, und);
    }
    if (out.tainted_points > 0) {
        out.kind = Verdict::Kind::Indeterminate;
        out.message = "undetermined limits at " + std::to_string(out.tainted_points) + " grid points";
        out.timings["total"] = seconds_since(t_all);
        return out;
    }
    if (!it.stabilization_index) {
        out.kind = Verdict::Kind::Indeterminate;
        out.message = "refinement did not stabilize by level " + std::to_string(max_level + 1);
        out.timings["total"] = seconds_since(t_all);
        return out;
    }

    const SampledBundle& stable = it.result();
    t0 = Clock::now();
    try {
        out.section = build_section(stable);
    } catch (const std::runtime_error& e) {
        out.kind = Verdict::Kind::Indeterminate;
        out.message = std::string("section construction failed: ") + e.what();
        out.timings["total"] = seconds_since(t_all);
        return out;
    }
    out.timings["section"] = seconds_since(t0);

    t0 = Clock::now();
    out.residual = section_residual(*out.section, B);
    out.timings["residual"] = seconds_since(t0);
    const double bn = bundle_norm(stable);
    out.norm_bound = bn > 0.0 ? out.section->sup_F / bn : 0.0;

    const double eq_limit = p.tol.residual_tol * (1.0 + out.residual.sup_phi);
    if (out.residual.fiber > p.tol.residual_tol || out.residual.equation > eq_limit) {
        out.kind = Verdict::Kind::Indeterminate;
        out.message = "section residual above tolerance";
    } else {
        out.kind = Verdict::Kind::Solvable;
    }
    out.timings["total"] = seconds_since(t_all);
    return out;
}

bool recheck_certificate(const Problem& p, const Certificate& c)
{
    p.validate();
    const EquationBundle B = p.bundle();
    const Grid grid(p.box, p.grid_depth);
    if (c.level == 0)
        return B.fiber(c.point).is_empty();
    SampledBundle S = sample_bundle(B, grid);
    for (int l = 1; l < c.level; ++l)
        S = refine(B, S, p.probe, p.threads);
    const ClosedFormOracle closed(B, p.box);
    const SampledOracle sampled(B, S);
    const FiberOracle& oracle = S.level == 0 ? static_cast<const FiberOracle&>(closed)
                                             : static_cast<const FiberOracle&>(sampled);
    return refine_at(oracle, c.point, p.probe).fiber.is_empty();
}

} // namespace glaeser
