#pragma once

#include "glaeser/affine.hpp"

#include <cstddef>
#include <vector>

namespace glaeser {

struct Box {
    Vec lo;
    Vec hi;

    std::size_t n() const { return static_cast<std::size_t>(lo.size()); }
    Vec center() const { return 0.5 * (lo + hi); }
    double min_half_width() const { return 0.5 * (hi - lo).minCoeff(); }
    bool contains(const Vec& x, double tol = 0.0) const;
    /// Throws std::invalid_argument unless lo < hi in every coordinate.
    void validate() const;
};

/// Dyadic lattice of (2^depth + 1)^n cell corners. Index order is
/// lexicographic in the multi-index, first coordinate slowest.
class Grid {
public:
    Grid() = default;
    Grid(Box box, int depth);

    const Box& box() const { return box_; }
    int depth() const { return depth_; }
    std::size_t n() const { return box_.n(); }
    std::size_t per_axis() const { return per_axis_; }
    std::size_t size() const { return size_; }
    const Vec& step() const { return step_; }

    Vec point(std::size_t idx) const;
    std::vector<long> multi_index(std::size_t idx) const;
    std::size_t index(const std::vector<long>& m) const;
    /// Nearest lattice point, clamped to the box.
    std::size_t nearest(const Vec& x) const;

private:
    Box box_;
    int depth_ = 0;
    std::size_t per_axis_ = 1;
    std::size_t size_ = 0;
    Vec step_;
};

} // namespace glaeser
