#include "glaeser/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace glaeser {

bool DyadicCube::in_dilate(const Vec& x) const
{
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x(i) < lo(i) - side || x(i) > lo(i) + 2.0 * side)
            return false;
    return true;
}

double box_distance(const Vec& alo, const Vec& ahi, const Vec& blo, const Vec& bhi)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < alo.size(); ++i) {
        const double gap = std::max({0.0, blo(i) - ahi(i), alo(i) - bhi(i)});
        s += gap * gap;
    }
    return std::sqrt(s);
}

PointSetE1::PointSetE1(std::vector<Vec> pts) : pts_(std::move(pts))
{
    if (pts_.empty())
        throw std::invalid_argument("E1 sample is empty");
    n_ = static_cast<std::size_t>(pts_.front().size());
    for (const auto& p : pts_)
        if (static_cast<std::size_t>(p.size()) != n_)
            throw std::invalid_argument("E1 sample points differ in dimension");
}

double PointSetE1::dist(const Vec& x) const
{
    double best = kInf;
    for (const auto& p : pts_)
        best = std::min(best, (p - x).norm());
    return best;
}

double PointSetE1::dist_box(const Vec& lo, const Vec& hi) const
{
    double best = kInf;
    for (const auto& p : pts_) {
        best = std::min(best, box_distance(p, p, lo, hi));
        if (best == 0.0)
            break;
    }
    return best;
}

bool PointSetE1::covers(const Vec& lo, const Vec& hi) const
{
    if ((hi - lo).maxCoeff() > 0.0)
        return false;
    return dist(lo) == 0.0;
}

BoxE1::BoxE1(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi))
{
    if (lo_.size() == 0 || lo_.size() != hi_.size())
        throw std::invalid_argument("E1 box: mismatched corners");
    for (Eigen::Index i = 0; i < lo_.size(); ++i)
        if (lo_(i) > hi_(i))
            throw std::invalid_argument("E1 box: lo exceeds hi");
}

double BoxE1::dist(const Vec& x) const { return box_distance(lo_, hi_, x, x); }

double BoxE1::dist_box(const Vec& lo, const Vec& hi) const { return box_distance(lo_, hi_, lo, hi); }

bool BoxE1::covers(const Vec& lo, const Vec& hi) const
{
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if (lo(i) < lo_(i) || hi(i) > hi_(i))
            return false;
    return true;
}

WhitneyCover::WhitneyCover(Box box, Vec root_lo, double root_side, double min_side,
                           std::shared_ptr<const E1Set> e1, std::vector<DyadicCube> cubes)
    : box_(std::move(box)), root_lo_(std::move(root_lo)), root_side_(root_side), min_side_(min_side),
      e1_(std::move(e1)), cubes_(std::move(cubes))
{
    for (std::size_t i = 0; i < cubes_.size(); ++i) {
        by_key_.emplace(std::make_pair(cubes_[i].level, cubes_[i].index), i);
        max_level_ = std::max(max_level_, cubes_[i].level);
    }
}

std::vector<std::size_t> WhitneyCover::dilates_containing(const Vec& x) const
{
    std::vector<std::size_t> out;
    const auto n = x.size();
    std::vector<long> base(static_cast<std::size_t>(n)), key(static_cast<std::size_t>(n));
    for (int level = 0; level <= max_level_; ++level) {
        const double side = std::ldexp(root_side_, -level);
        for (Eigen::Index i = 0; i < n; ++i)
            base[static_cast<std::size_t>(i)] = static_cast<long>(std::floor((x(i) - root_lo_(i)) / side));
        // neighbours within two cells cover boundary rounding of the floor
        const long span = 5;
        long combos = 1;
        for (Eigen::Index i = 0; i < n; ++i)
            combos *= span;
        for (long c = 0; c < combos; ++c) {
            long rest = c;
            for (Eigen::Index i = 0; i < n; ++i) {
                key[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>(i)] + (rest % span) - 2;
                rest /= span;
            }
            auto it = by_key_.find({level, key});
            if (it != by_key_.end() && cubes_[it->second].in_dilate(x))
                out.push_back(it->second);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

struct Descent {
    const Box& box;
    const E1Set& e1;
    double min_side;
    std::vector<DyadicCube> out;

    bool meets_open_box(const DyadicCube& q) const
    {
        for (Eigen::Index i = 0; i < q.lo.size(); ++i)
            if (q.lo(i) >= box.hi(i) || q.lo(i) + q.side <= box.lo(i))
                return false;
        return true;
    }

    void visit(DyadicCube q)
    {
        if (!meets_open_box(q))
            return;
        if (e1.dist_box(q.dilate_lo(), q.dilate_hi()) >= q.side) {
            out.push_back(std::move(q));
            return;
        }
        if (0.5 * q.side < min_side) {
            const Vec lo = q.lo.cwiseMax(box.lo);
            const Vec hi = q.hi().cwiseMin(box.hi);
            if (e1.covers(lo, hi))
                return;
            q.truncated = true;
            out.push_back(std::move(q));
            return;
        }
        const auto n = q.lo.size();
        const double half = 0.5 * q.side;
        for (long mask = 0; mask < (1L << n); ++mask) {
            DyadicCube c;
            c.level = q.level + 1;
            c.side = half;
            c.lo = q.lo;
            c.index.resize(static_cast<std::size_t>(n));
            for (Eigen::Index i = 0; i < n; ++i) {
                const long bit = (mask >> i) & 1L;
                c.index[static_cast<std::size_t>(i)] = 2 * q.index[static_cast<std::size_t>(i)] + bit;
                if (bit)
                    c.lo(i) += half;
            }
            visit(std::move(c));
        }
    }
};

} // namespace

WhitneyCover whitney_decompose(const Box& box, std::shared_ptr<const E1Set> e1, double min_side)
{
    box.validate();
    if (!e1)
        throw std::invalid_argument("whitney: E1 is missing");
    if (e1->n() != box.n())
        throw std::invalid_argument("whitney: E1 and box dimensions differ");
    if (!(min_side > 0.0))
        throw std::invalid_argument("whitney: min_side must be positive");
    const double root_side = (box.hi - box.lo).maxCoeff();
    DyadicCube root;
    root.level = 0;
    root.index.assign(box.n(), 0);
    root.lo = box.lo;
    root.side = root_side;
    Descent d{box, *e1, min_side, {}};
    d.visit(std::move(root));
    return WhitneyCover(box, box.lo, root_side, min_side, std::move(e1), std::move(d.out));
}

namespace {

double hat(double u)
{
    if (u <= 0.5)
        return 1.0;
    if (u >= 1.5)
        return 0.0;
    return 1.5 - u;
}

} // namespace

std::vector<PouWeight> pou_eval(const WhitneyCover& cover, const Vec& x)
{
    std::vector<PouWeight> out;
    if (cover.e1().dist(x) == 0.0)
        return out;
    double total = 0.0;
    for (std::size_t k : cover.dilates_containing(x)) {
        const DyadicCube& q = cover.cubes()[k];
        const Vec c = q.center();
        double w = 1.0;
        for (Eigen::Index i = 0; i < x.size() && w > 0.0; ++i)
            w *= hat(std::fabs(x(i) - c(i)) / q.side);
        if (w > 0.0) {
            out.push_back({k, w});
            total += w;
        }
    }
    for (auto& pw : out)
        pw.theta /= total;
    return out;
}

WhitneyStats whitney_stats(const WhitneyCover& cover)
{
    WhitneyStats s;
    s.cubes = cover.size();
    for (const auto& q : cover.cubes()) {
        s.max_level = std::max(s.max_level, q.level);
        if (q.truncated) {
            ++s.truncated;
            continue;
        }
        const double ratio = cover.e1().dist_box(q.dilate_lo(), q.dilate_hi()) / q.side;
        s.min_ratio = std::min(s.min_ratio, ratio);
        s.max_ratio = std::max(s.max_ratio, ratio);
    }
    return s;
}

std::size_t max_overlap(const WhitneyCover& cover, const std::vector<Vec>& pts)
{
    std::size_t m = 0;
    for (const auto& p : pts)
        m = std::max(m, cover.dilates_containing(p).size());
    return m;
}

} // namespace glaeser
