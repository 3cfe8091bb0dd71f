#include "glaeser/section.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <locale>
#include <ostream>
#include <stdexcept>

namespace glaeser {

std::size_t Strata::count() const
{
    return static_cast<std::size_t>(
        std::count_if(sets.begin(), sets.end(), [](const auto& s) { return !s.empty(); }));
}

Strata stratify(const SampledBundle& S)
{
    Strata st;
    const std::size_t r = S.r();
    st.k.resize(S.fibers.size());
    st.sets.assign(r + 1, {});
    for (std::size_t i = 0; i < S.fibers.size(); ++i) {
        const AffineFiber& f = S.fibers[i];
        if (f.is_empty())
            throw std::invalid_argument("stratify: Empty fiber at grid index " + std::to_string(i));
        st.k[i] = static_cast<int>(f.dim());
        st.sets[f.dim()].push_back(i);
    }
    st.k_min = static_cast<int>(r);
    for (std::size_t k = 0; k <= r; ++k)
        if (!st.sets[k].empty()) {
            st.k_min = static_cast<int>(k);
            break;
        }
    return st;
}

namespace {

Vec normal_part(const AffineFiber& f, const Vec& p)
{
    const Mat& N = f.normal();
    if (N.cols() == 0)
        return Vec::Zero(p.size());
    return N * (N.transpose() * p);
}

struct Recursion {
    const SampledBundle& S;
    int max_depth;
    int deepest = 0;
    std::size_t top_cubes = 0;
    double top_constant = 0;

    // region: sorted grid indices; w: current least-norm points on region
    std::vector<Vec> solve(const Box& region_box, const std::vector<std::size_t>& region,
                           const std::vector<Vec>& w, int depth)
    {
        deepest = std::max(deepest, depth);
        const std::size_t n = S.grid.n();
        if (region.size() < (std::size_t{1} << n))
            return w;
        std::size_t k_min = S.r() + 1, k_max = 0;
        for (std::size_t idx : region) {
            k_min = std::min(k_min, S.fibers[idx].dim());
            k_max = std::max(k_max, S.fibers[idx].dim());
        }
        if (k_min == k_max)
            return w;
        if (depth > max_depth)
            throw std::runtime_error("section recursion exceeded r + 1 strata; bundle is not stable");

        std::vector<Vec> pts(region.size());
        std::vector<std::size_t> e1_pos;
        std::vector<Vec> e1_pts;
        for (std::size_t j = 0; j < region.size(); ++j) {
            pts[j] = S.grid.point(region[j]);
            if (S.fibers[region[j]].dim() == k_min) {
                e1_pos.push_back(j);
                e1_pts.push_back(pts[j]);
            }
        }
        auto e1 = std::make_shared<PointSetE1>(e1_pts);
        const WhitneyCover cover = whitney_decompose(region_box, e1, S.grid.step().minCoeff());
        if (depth == 0) {
            top_cubes = cover.size();
            top_constant = whitney_stats(cover).max_ratio;
        }

        struct Patch {
            std::vector<std::size_t> pos; // positions into region, sorted
            std::vector<Vec> value;       // F_nu + v(x_nu)
        };
        std::vector<Patch> patches(cover.size());
        std::vector<char> is_e1(region.size(), 0);
        for (std::size_t j : e1_pos)
            is_e1[j] = 1;

        for (std::size_t c = 0; c < cover.size(); ++c) {
            const DyadicCube& q = cover.cubes()[c];
            const Vec ctr = q.center();
            std::size_t base = e1_pos.front();
            double best = kInf;
            for (std::size_t j : e1_pos) {
                const double d = (pts[j] - ctr).norm();
                if (d < best) {
                    best = d;
                    base = j;
                }
            }
            const Vec& p = w[base];

            Patch& patch = patches[c];
            std::vector<std::size_t> sub;
            std::vector<Vec> w_sub;
            for (std::size_t j = 0; j < region.size(); ++j) {
                if (is_e1[j] || !q.in_dilate(pts[j]))
                    continue;
                patch.pos.push_back(j);
                sub.push_back(region[j]);
                w_sub.push_back(w[j] - normal_part(S.fibers[region[j]], p));
            }
            if (sub.empty())
                continue;
            Box sub_box{q.dilate_lo().cwiseMax(region_box.lo), q.dilate_hi().cwiseMin(region_box.hi)};
            std::vector<Vec> F_sub = solve(sub_box, sub, w_sub, depth + 1);
            for (auto& val : F_sub)
                val += p;
            patch.value = std::move(F_sub);
        }

        std::vector<Vec> F(region.size());
        for (std::size_t j = 0; j < region.size(); ++j) {
            if (is_e1[j]) {
                F[j] = w[j];
                continue;
            }
            const auto weights = pou_eval(cover, pts[j]);
            Vec acc = Vec::Zero(w[j].size());
            double total = 0.0;
            for (const PouWeight& pw : weights) {
                const Patch& patch = patches[pw.cube];
                auto it = std::lower_bound(patch.pos.begin(), patch.pos.end(), j);
                if (it == patch.pos.end() || *it != j)
                    continue;
                acc += pw.theta * patch.value[static_cast<std::size_t>(it - patch.pos.begin())];
                total += pw.theta;
            }
            F[j] = total > 0.0 ? Vec(acc / total) : w[j];
        }
        return F;
    }
};

void finish(SampledSection& sec, const SampledBundle& S)
{
    sec.sup_v = 0.0;
    sec.sup_F = 0.0;
    for (std::size_t i = 0; i < S.fibers.size(); ++i) {
        sec.sup_v = std::max(sec.sup_v, S.fibers[i].v().norm());
        sec.sup_F = std::max(sec.sup_F, sec.values[i].norm());
    }
    sec.norm_constant = sec.sup_v > 0.0 ? sec.sup_F / sec.sup_v : (sec.sup_F > 0.0 ? kInf : 0.0);
}

} // namespace

SampledSection build_section(const SampledBundle& S)
{
    const Strata st = stratify(S);
    SampledSection sec;
    sec.grid = S.grid;
    sec.e1 = st.e1();

    std::vector<std::size_t> all(S.fibers.size());
    std::vector<Vec> v(S.fibers.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = i;
        v[i] = S.fibers[i].v();
    }
    Recursion rec{S, static_cast<int>(S.r()) + 1};
    sec.values = rec.solve(S.grid.box(), all, v, 0);
    sec.recursion_depth = rec.deepest;
    sec.whitney_cubes = rec.top_cubes;
    sec.whitney_constant = rec.top_constant;
    finish(sec, S);
    return sec;
}

namespace {

// Calls f(j, chebyshev distance, offsets) for grid neighbours of idx within rho.
template <class F>
void for_neighbours(const Grid& g, std::size_t idx, int rho, F&& f)
{
    const auto base = g.multi_index(idx);
    const std::size_t n = base.size();
    const long side = 2L * rho + 1;
    long combos = 1;
    for (std::size_t i = 0; i < n; ++i)
        combos *= side;
    std::vector<long> m(n), off(n);
    const long top = static_cast<long>(g.per_axis()) - 1;
    for (long c = 0; c < combos; ++c) {
        long rest = c;
        bool inside = true;
        int cheb = 0;
        for (std::size_t i = 0; i < n; ++i) {
            off[i] = rest % side - rho;
            rest /= side;
            m[i] = base[i] + off[i];
            if (m[i] < 0 || m[i] > top)
                inside = false;
            cheb = std::max(cheb, static_cast<int>(std::labs(off[i])));
        }
        if (inside)
            f(g.index(m), cheb, off);
    }
}

} // namespace

MichaelResult michael_section(const SampledBundle& S, const MichaelOptions& opts)
{
    const Strata st = stratify(S);
    const std::size_t N = S.fibers.size();
    const auto r = static_cast<Eigen::Index>(S.r());
    const Grid& g = S.grid;

    MichaelResult res;
    std::vector<Vec> f(N, Vec::Zero(r)), w(N);
    auto shifted = [&](std::size_t y, const Vec& p) {
        // dist(p, H_y - f(y))
        const Mat& Ny = S.fibers[y].normal();
        if (Ny.cols() == 0)
            return 0.0;
        return (Ny.transpose() * (p - S.fibers[y].v() + f[y])).norm();
    };

    int failures = 0;
    for (int it = 0;; ++it) {
        double norm = 0.0;
        for (std::size_t y = 0; y < N; ++y) {
            w[y] = S.fibers[y].v() - normal_part(S.fibers[y], f[y]);
            norm = std::max(norm, w[y].norm());
        }
        if (!res.norms.empty()) {
            const double ratio = res.norms.back() > 0.0 ? norm / res.norms.back() : 0.0;
            res.ratios.push_back(ratio);
            failures = ratio > opts.fail_ratio ? failures + 1 : 0;
            if (failures >= opts.max_failures)
                throw std::runtime_error("michael iteration: halving failed " + std::to_string(failures) +
                                         " times in a row");
        }
        res.norms.push_back(norm);
        if (norm <= opts.target_eps)
            break;
        if (it >= opts.max_iterations)
            throw std::runtime_error("michael iteration: no convergence within " +
                                     std::to_string(opts.max_iterations) + " iterations");
        const double eps = 0.5 * norm;

        std::vector<int> rho(N, 0);
        for (std::size_t x = 0; x < N; ++x) {
            for (int rad = 1; rad <= opts.max_radius; ++rad) {
                bool ok = true;
                for_neighbours(g, x, rad, [&](std::size_t y, int cheb, const std::vector<long>&) {
                    if (ok && cheb == rad && shifted(y, w[x]) > eps)
                        ok = false;
                });
                if (!ok)
                    break;
                rho[x] = rad;
            }
        }

        std::vector<Vec> num(N, Vec::Zero(r));
        std::vector<double> den(N, 0.0);
        for (std::size_t x = 0; x < N; ++x) {
            const double width = rho[x] + 1.0;
            for_neighbours(g, x, rho[x], [&](std::size_t y, int, const std::vector<long>& off) {
                double psi = 1.0;
                for (long o : off)
                    psi *= 1.0 - static_cast<double>(std::labs(o)) / width;
                num[y] += psi * w[x];
                den[y] += psi;
            });
        }
        for (std::size_t y = 0; y < N; ++y)
            f[y] += num[y] / den[y];
        res.iterations = it + 1;
    }

    res.section.grid = g;
    res.section.values = std::move(f);
    res.section.e1 = st.e1();
    finish(res.section, S);
    return res;
}

SectionResidual section_residual(const SampledSection& F, const BundleSource& B)
{
    SectionResidual res;
    const auto* eq = dynamic_cast<const EquationBundle*>(&B);
    double worst = -1.0;
    for (std::size_t i = 0; i < F.values.size(); ++i) {
        const Vec x = F.grid.point(i);
        const double d = dist_point_fiber(F.values[i], B.fiber(x));
        res.fiber = std::max(res.fiber, d);
        double score = d;
        if (eq) {
            const double phi = eq->phi_at(x);
            const double e = std::fabs(F.values[i].dot(eq->f_at(x)) - phi);
            res.equation = std::max(res.equation, e);
            res.sup_phi = std::max(res.sup_phi, std::fabs(phi));
            score = std::max(score, e);
        }
        if (score > worst) {
            worst = score;
            res.worst_point = i;
        }
    }
    return res;
}

ContinuityReport continuity_report(const SampledSection& F, const SampledBundle& S)
{
    ContinuityReport rep;
    const Grid& g = F.grid;
    std::vector<char> in_e1(g.size(), 0);
    for (std::size_t i : F.e1)
        in_e1[i] = 1;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (in_e1[i])
            continue;
        auto m = g.multi_index(i);
        for (std::size_t a = 0; a < m.size(); ++a) {
            if (static_cast<std::size_t>(m[a]) + 1 >= g.per_axis())
                continue;
            ++m[a];
            const std::size_t j = g.index(m);
            --m[a];
            if (in_e1[j])
                continue;
            rep.max_jump_F = std::max(rep.max_jump_F, (F.values[i] - F.values[j]).norm());
            rep.max_jump_v = std::max(rep.max_jump_v, (S.fibers[i].v() - S.fibers[j].v()).norm());
        }
    }
    return rep;
}

void write_section_csv(std::ostream& os, const SampledSection& F, const EquationBundle& B,
                       const std::vector<std::string>& vars)
{
    const std::locale saved = os.imbue(std::locale::classic());
    const auto saved_prec = os.precision(17);
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\r\n") == std::string::npos)
            return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"')
                q += '"';
            q += c;
        }
        return q + "\"";
    };
    for (const auto& v : vars)
        os << quote(v) << ',';
    os << "phi";
    for (std::size_t i = 1; i <= B.r(); ++i)
        os << ",Phi_" << i;
    os << ",eq_residual,fiber_residual\r\n";
    for (std::size_t i = 0; i < F.values.size(); ++i) {
        const Vec x = F.grid.point(i);
        for (Eigen::Index k = 0; k < x.size(); ++k)
            os << x(k) << ',';
        const double phi = B.phi_at(x);
        os << phi;
        for (Eigen::Index k = 0; k < F.values[i].size(); ++k)
            os << ',' << F.values[i](k);
        os << ',' << std::fabs(F.values[i].dot(B.f_at(x)) - phi) << ','
           << dist_point_fiber(F.values[i], B.fiber(x)) << "\r\n";
    }
    os.precision(saved_prec);
    os.imbue(saved);
}

} // namespace glaeser
