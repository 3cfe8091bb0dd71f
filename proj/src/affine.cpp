#include "glaeser/affine.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace glaeser {

namespace {

struct NormalisedRows {
    Mat a;
    Vec b;
    bool inconsistent = false;
};

NormalisedRows normalise_rows(const ConstraintSystem& cs, std::size_t r, double zero_rhs_tol)
{
    std::vector<std::size_t> keep;
    std::vector<double> norms;
    NormalisedRows out;
    for (std::size_t i = 0; i < cs.rows.size(); ++i) {
        const auto& row = cs.rows[i];
        if (static_cast<std::size_t>(row.normal.size()) != r)
            throw std::invalid_argument("constraint row has wrong ambient dimension");
        const double nrm = row.normal.norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm)) {
            if (std::fabs(row.rhs) > zero_rhs_tol || !std::isfinite(row.rhs))
                out.inconsistent = true;
            continue;
        }
        keep.push_back(i);
        norms.push_back(nrm);
    }
    out.a.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(r));
    out.b.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        const auto& row = cs.rows[keep[j]];
        out.a.row(static_cast<Eigen::Index>(j)) = row.normal.transpose() / norms[j];
        out.b(static_cast<Eigen::Index>(j)) = row.rhs / norms[j];
    }
    return out;
}

Mat orthonormal_span(const std::vector<Vec>& vs, std::size_t r)
{
    if (vs.empty())
        return Mat(static_cast<Eigen::Index>(r), 0);
    Mat m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(vs.size()));
    for (std::size_t j = 0; j < vs.size(); ++j)
        m.col(static_cast<Eigen::Index>(j)) = vs[j];
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > 1e-9 * std::max(1.0, s(0)))
        ++rank;
    return svd.matrixU().leftCols(rank);
}

} // namespace

AffineFiber AffineFiber::empty(std::size_t r)
{
    AffineFiber h;
    h.empty_ = true;
    h.r_ = r;
    return h;
}

AffineFiber AffineFiber::full(std::size_t r)
{
    const auto n = static_cast<Eigen::Index>(r);
    return from_parts(Vec::Zero(n), Mat::Identity(n, n), Mat(n, 0));
}

AffineFiber AffineFiber::point(const Vec& p)
{
    const auto n = p.size();
    return from_parts(p, Mat(n, 0), Mat::Identity(n, n));
}

AffineFiber AffineFiber::make(const Vec& v, const Mat& dir_cols, double rank_tol)
{
    const auto r = v.size();
    if (dir_cols.cols() == 0)
        return point(v);
    if (dir_cols.rows() != r)
        throw std::invalid_argument("direction basis has wrong ambient dimension");
    Eigen::JacobiSVD<Mat> svd(dir_cols, Eigen::ComputeFullU);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > rank_tol * s(0))
        ++rank;
    Mat dir = svd.matrixU().leftCols(rank);
    Mat normal = svd.matrixU().rightCols(r - rank);
    Vec vv = normal * (normal.transpose() * v);
    return from_parts(vv, std::move(dir), std::move(normal));
}

AffineFiber AffineFiber::from_parts(const Vec& v, Mat dir, Mat normal)
{
    AffineFiber h;
    h.empty_ = false;
    h.r_ = static_cast<std::size_t>(v.size());
    h.v_ = v;
    h.dir_ = std::move(dir);
    h.normal_ = std::move(normal);
    return h;
}

AffineFiber solve_constraints(const ConstraintSystem& cs, double rank_tol)
{
    const std::size_t r = cs.r;
    const auto R = static_cast<Eigen::Index>(r);
    NormalisedRows rows = normalise_rows(cs, r, rank_tol);
    if (rows.inconsistent)
        return AffineFiber::empty(r);
    if (rows.a.rows() == 0)
        return AffineFiber::full(r);

    Eigen::JacobiSVD<Mat> svd(rows.a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double smax = s(0);
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > rank_tol * smax)
        ++rank;

    const Mat& U = svd.matrixU();
    const Mat& V = svd.matrixV();
    Vec x = Vec::Zero(R);
    for (Eigen::Index i = 0; i < rank; ++i)
        x += V.col(i) * (U.col(i).dot(rows.b) / s(i));

    const double residual = (rows.a * x - rows.b).lpNorm<Eigen::Infinity>();
    const double scale = std::max({1.0, rows.b.lpNorm<Eigen::Infinity>(), smax * x.norm()});
    if (residual > rank_tol * scale)
        return AffineFiber::empty(r);
    return AffineFiber::from_parts(x, V.rightCols(R - rank), V.leftCols(rank));
}

double dist_point_fiber(const Vec& lambda, const AffineFiber& H)
{
    if (H.is_empty())
        return kInf;
    if (static_cast<std::size_t>(lambda.size()) != H.r())
        throw std::invalid_argument("dist_point_fiber: dimension mismatch");
    if (H.normal().cols() == 0)
        return 0.0;
    return (H.normal().transpose() * (lambda - H.v())).norm();
}

Vec least_norm_point(const AffineFiber& H)
{
    if (H.is_empty())
        throw std::domain_error("least_norm_point: empty fiber");
    return H.v();
}

AffineFiber constrain(const AffineFiber& H, const ConstraintSystem& cs, double rank_tol_abs,
                      double consistency_tol)
{
    if (H.is_empty())
        return H;
    const std::size_t r = H.r();
    NormalisedRows rows = normalise_rows(cs, r, consistency_tol);
    if (rows.inconsistent)
        return AffineFiber::empty(r);
    if (rows.a.rows() == 0)
        return H;

    const double scale = 1.0 + rows.b.lpNorm<Eigen::Infinity>();
    const double tol = consistency_tol * scale;
    const Mat& D = H.dir();
    const Vec b = rows.b - rows.a * H.v();
    if (D.cols() == 0)
        return b.lpNorm<Eigen::Infinity>() <= tol ? H : AffineFiber::empty(r);

    const Mat A = rows.a * D;
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > rank_tol_abs)
        ++rank;
    if (rank == 0)
        return b.lpNorm<Eigen::Infinity>() <= tol ? H : AffineFiber::empty(r);

    const Mat& U = svd.matrixU();
    const Mat& V = svd.matrixV();
    Vec c = Vec::Zero(D.cols());
    for (Eigen::Index i = 0; i < rank; ++i)
        c += V.col(i) * (U.col(i).dot(b) / s(i));
    if ((A * c - b).lpNorm<Eigen::Infinity>() > tol)
        return AffineFiber::empty(r);

    const Eigen::Index k = D.cols();
    Mat dir = D * V.rightCols(k - rank);
    Mat normal(static_cast<Eigen::Index>(r), H.normal().cols() + rank);
    normal << H.normal(), D * V.leftCols(rank);
    Vec v = H.v() + D * c;
    v = normal * (normal.transpose() * v);
    return AffineFiber::from_parts(v, std::move(dir), std::move(normal));
}

AffineFiber intersect(const AffineFiber& a, const AffineFiber& b, double rank_tol)
{
    if (a.is_empty())
        return a;
    if (b.is_empty())
        return b;
    if (a.r() != b.r())
        throw std::invalid_argument("intersect: dimension mismatch");
    ConstraintSystem cs{b.r(), {}};
    for (Eigen::Index j = 0; j < b.normal().cols(); ++j) {
        const Vec n = b.normal().col(j);
        cs.rows.push_back({n, n.dot(b.v())});
    }
    const double scale = 1.0 + a.v().norm() + b.v().norm();
    return constrain(a, cs, rank_tol, rank_tol * scale);
}

double fiber_distance(const AffineFiber& a, const AffineFiber& b)
{
    if (a.is_empty() && b.is_empty())
        return 0.0;
    if (a.is_empty() || b.is_empty() || a.r() != b.r() || a.dim() != b.dim())
        return kInf;
    const double dv = (a.v() - b.v()).norm();
    if (a.dim() == 0 || a.dim() == a.r())
        return dv;
    const Mat diff = a.dir() * a.dir().transpose() - b.dir() * b.dir().transpose();
    Eigen::SelfAdjointEigenSolver<Mat> eig(diff, Eigen::EigenvaluesOnly);
    const double dp = eig.eigenvalues().cwiseAbs().maxCoeff();
    return std::max(dv, dp);
}

bool fiber_contains(const AffineFiber& outer, const AffineFiber& inner, double tol)
{
    if (inner.is_empty())
        return true;
    if (outer.is_empty())
        return false;
    if (dist_point_fiber(inner.v(), outer) > tol * (1.0 + inner.v().norm()))
        return false;
    if (outer.normal().cols() == 0)
        return true;
    const Mat leak = outer.normal().transpose() * inner.dir();
    return leak.size() == 0 || leak.cwiseAbs().maxCoeff() <= tol;
}

Vec sign_normalized(Vec u)
{
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (std::fabs(u(i)) > 1e-12) {
            if (u(i) < 0)
                u = -u;
            break;
        }
    }
    return u;
}

ClusterResult cluster_normal_chains(const std::vector<std::vector<Vec>>& tracks, double limit_tol,
                                    std::size_t window)
{
    ClusterResult out;
    if (tracks.empty())
        return out;
    window = std::max<std::size_t>(window, 2);
    const std::size_t L = tracks.size() - 1;
    const auto& finest = tracks[L];
    if (finest.empty())
        return out;
    const std::size_t r = static_cast<std::size_t>(finest.front().size());

    std::vector<Mat> spans(L + 1);
    for (std::size_t nu = 0; nu <= L; ++nu)
        spans[nu] = orthonormal_span(tracks[nu], r);

    const double dup_tol = 0.5 * limit_tol * limit_tol;
    std::vector<Vec> candidates;
    for (const Vec& raw : finest) {
        const double nrm = raw.norm();
        if (!(nrm > 0.0))
            continue;
        Vec u = sign_normalized(raw / nrm);
        bool dup = false;
        for (const Vec& w : candidates)
            if (1.0 - std::fabs(u.dot(w)) <= dup_tol)
                dup = true;
        if (!dup)
            candidates.push_back(u);
    }

    for (const Vec& u : candidates) {
        NormalChain chain;
        chain.limit = u;
        chain.per_scale.assign(L + 1, Vec());
        chain.per_scale[L] = u;
        chain.first = L;
        std::vector<double> angle(L + 1, 0.0);
        for (std::size_t nu = L; nu-- > 0;) {
            const Mat& B = spans[nu];
            if (B.cols() == 0)
                break;
            const Vec p = B * (B.transpose() * chain.per_scale[nu + 1]);
            const double np = p.norm();
            if (np < 1e-12)
                break;
            chain.per_scale[nu] = p / np;
            angle[nu] = (chain.per_scale[nu + 1] - p).norm();
            chain.first = nu;
        }
        const bool long_enough = L + 1 >= window && chain.first + window <= L + 1;
        bool ok = long_enough;
        if (ok) {
            for (std::size_t nu = L + 1 - window; nu < L; ++nu) {
                chain.max_angle = std::max(chain.max_angle, angle[nu]);
                if (angle[nu] > limit_tol)
                    ok = false;
            }
        }
        if (ok)
            out.chains.push_back(std::move(chain));
        else
            ++out.dropped;
    }
    return out;
}

std::vector<Vec> cluster_normals(const std::vector<std::vector<Vec>>& tracks, double limit_tol,
                                 std::size_t window)
{
    std::vector<Vec> out;
    for (auto& c : cluster_normal_chains(tracks, limit_tol, window).chains)
        out.push_back(c.limit);
    return out;
}

} // namespace glaeser
