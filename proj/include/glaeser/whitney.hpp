/**
 * @file whitney.hpp
 * @brief Dyadic Whitney cubes for the complement of a closed set and the
 * piecewise-linear partition of unity subordinate to their dilates.
 */
#pragma once

#include "glaeser/grid.hpp"

#include <map>
#include <memory>
#include <utility>
#include <vector>

namespace glaeser {

struct DyadicCube {
    int level = 0;
    std::vector<long> index; // position of lo in units of side, from the root corner
    Vec lo;
    double side = 0;
    bool truncated = false;

    Vec center() const { return lo + Vec::Constant(lo.size(), 0.5 * side); }
    Vec hi() const { return lo + Vec::Constant(lo.size(), side); }
    /// Q*: same center, three times the side.
    Vec dilate_lo() const { return lo - Vec::Constant(lo.size(), side); }
    Vec dilate_hi() const { return lo + Vec::Constant(lo.size(), 2.0 * side); }
    bool in_dilate(const Vec& x) const;
};

/// Distance oracle for the closed set E1.
class E1Set {
public:
    virtual ~E1Set() = default;
    virtual std::size_t n() const = 0;
    virtual double dist(const Vec& x) const = 0;
    /// Distance from E1 to the closed box [lo, hi]; 0 when they meet.
    virtual double dist_box(const Vec& lo, const Vec& hi) const = 0;
    /// Whether [lo, hi] is contained in E1.
    virtual bool covers(const Vec& lo, const Vec& hi) const = 0;
};

/// Finite sample of points.
class PointSetE1 : public E1Set {
public:
    explicit PointSetE1(std::vector<Vec> pts);
    std::size_t n() const override { return n_; }
    double dist(const Vec& x) const override;
    double dist_box(const Vec& lo, const Vec& hi) const override;
    bool covers(const Vec& lo, const Vec& hi) const override;
    const std::vector<Vec>& points() const { return pts_; }

private:
    std::vector<Vec> pts_;
    std::size_t n_;
};

/// Closed axis-aligned box, possibly degenerate (a point or a segment).
class BoxE1 : public E1Set {
public:
    BoxE1(Vec lo, Vec hi);
    std::size_t n() const override { return static_cast<std::size_t>(lo_.size()); }
    double dist(const Vec& x) const override;
    double dist_box(const Vec& lo, const Vec& hi) const override;
    bool covers(const Vec& lo, const Vec& hi) const override;

private:
    Vec lo_, hi_;
};

/// Euclidean distance between two closed boxes.
double box_distance(const Vec& alo, const Vec& ahi, const Vec& blo, const Vec& bhi);

class WhitneyCover {
public:
    WhitneyCover() = default;
    WhitneyCover(Box box, Vec root_lo, double root_side, double min_side, std::shared_ptr<const E1Set> e1,
                 std::vector<DyadicCube> cubes);

    const Box& box() const { return box_; }
    double min_side() const { return min_side_; }
    double root_side() const { return root_side_; }
    const std::vector<DyadicCube>& cubes() const { return cubes_; }
    const E1Set& e1() const { return *e1_; }
    std::size_t size() const { return cubes_.size(); }

    /// Indices of cubes whose closed dilate contains x.
    std::vector<std::size_t> dilates_containing(const Vec& x) const;

private:
    Box box_;
    Vec root_lo_;
    double root_side_ = 0;
    double min_side_ = 0;
    std::shared_ptr<const E1Set> e1_;
    std::vector<DyadicCube> cubes_;
    std::map<std::pair<int, std::vector<long>>, std::size_t> by_key_;
    int max_level_ = 0;
};

/// Tree descent from the root cube (side = longest box edge, anchored at
/// box.lo). A cube is accepted when dist(Q*, E1) >= side; cubes whose
/// children would fall below min_side are kept and flagged truncated,
/// unless E1 covers their part of the box. Cubes missing the open box are
/// discarded. Throws std::invalid_argument for a non-positive min_side or
/// mismatched dimensions.
WhitneyCover whitney_decompose(const Box& box, std::shared_ptr<const E1Set> e1, double min_side);

struct PouWeight {
    std::size_t cube;
    double theta;
};

/// Tensor hat per cube (1 on Q, linear to 0 on the boundary of Q*),
/// normalised to sum to 1. Empty for x in E1.
std::vector<PouWeight> pou_eval(const WhitneyCover& cover, const Vec& x);

struct WhitneyStats {
    std::size_t cubes = 0;
    std::size_t truncated = 0;
    double min_ratio = kInf; // min over untruncated cubes of dist(Q*, E1) / side
    double max_ratio = 0;    // the measured Whitney constant C
    int max_level = 0;
};

WhitneyStats whitney_stats(const WhitneyCover& cover);

/// Largest number of dilates containing any of the given points.
std::size_t max_overlap(const WhitneyCover& cover, const std::vector<Vec>& pts);

} // namespace glaeser
