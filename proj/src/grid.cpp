#include "glaeser/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace glaeser {

bool Box::contains(const Vec& x, double tol) const
{
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if (x(i) < lo(i) - tol || x(i) > hi(i) + tol)
            return false;
    return true;
}

void Box::validate() const
{
    if (lo.size() == 0 || lo.size() != hi.size())
        throw std::invalid_argument("box: lo and hi must have the same nonzero length");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if (!(lo(i) < hi(i)))
            throw std::invalid_argument("box: degenerate interval in coordinate " + std::to_string(i));
}

Grid::Grid(Box box, int depth) : box_(std::move(box)), depth_(depth)
{
    box_.validate();
    if (depth < 0 || depth > 20)
        throw std::invalid_argument("grid depth must lie in [0, 20]");
    per_axis_ = (std::size_t{1} << depth) + 1;
    size_ = 1;
    for (std::size_t i = 0; i < n(); ++i) {
        if (size_ > (std::size_t{1} << 40) / per_axis_)
            throw std::invalid_argument("grid too large");
        size_ *= per_axis_;
    }
    step_ = (box_.hi - box_.lo) / static_cast<double>(per_axis_ - 1);
}

std::vector<long> Grid::multi_index(std::size_t idx) const
{
    std::vector<long> m(n());
    for (std::size_t i = n(); i-- > 0;) {
        m[i] = static_cast<long>(idx % per_axis_);
        idx /= per_axis_;
    }
    return m;
}

std::size_t Grid::index(const std::vector<long>& m) const
{
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n(); ++i) {
        if (m[i] < 0 || static_cast<std::size_t>(m[i]) >= per_axis_)
            throw std::out_of_range("grid multi-index out of range");
        idx = idx * per_axis_ + static_cast<std::size_t>(m[i]);
    }
    return idx;
}

Vec Grid::point(std::size_t idx) const
{
    const auto m = multi_index(idx);
    Vec x(static_cast<Eigen::Index>(n()));
    for (std::size_t i = 0; i < n(); ++i) {
        const auto I = static_cast<Eigen::Index>(i);
        x(I) = static_cast<std::size_t>(m[i]) + 1 == per_axis_ ? box_.hi(I)
                                                                : box_.lo(I) + static_cast<double>(m[i]) * step_(I);
    }
    return x;
}

std::size_t Grid::nearest(const Vec& x) const
{
    std::vector<long> m(n());
    const long top = static_cast<long>(per_axis_) - 1;
    for (std::size_t i = 0; i < n(); ++i) {
        const auto I = static_cast<Eigen::Index>(i);
        const double u = (x(I) - box_.lo(I)) / step_(I);
        long k = std::lround(u);
        m[i] = std::clamp(k, 0L, top);
    }
    return index(m);
}

} // namespace glaeser
