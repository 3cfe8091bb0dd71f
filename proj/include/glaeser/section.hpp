/**
 * @file section.hpp
 * @brief Continuous sections of Glaeser-stable sampled bundles.
 */
#pragma once

#include "glaeser/bundle.hpp"
#include "glaeser/whitney.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace glaeser {

struct Strata {
    std::vector<int> k;                           // fiber dimension per grid point
    std::vector<std::vector<std::size_t>> sets;   // sets[k]: grid indices with that dimension
    int k_min = 0;

    const std::vector<std::size_t>& e1() const { return sets.at(static_cast<std::size_t>(k_min)); }
    std::size_t count() const;                    // number of nonempty strata
};

/// Throws std::invalid_argument on an Empty fiber.
Strata stratify(const SampledBundle& S);

struct SampledSection {
    Grid grid;
    std::vector<Vec> values;            // F at each grid point
    std::vector<std::size_t> e1;        // lowest stratum, where F equals v
    double sup_v = 0;                   // max |v(x)|
    double sup_F = 0;                   // max |F(x)|
    double norm_constant = 0;           // sup_F / sup_v (0 when both vanish)
    int recursion_depth = 0;
    std::size_t whitney_cubes = 0;      // cubes used at the top level
    double whitney_constant = 0;        // measured C of the top-level cover
};

/// Stratified Whitney recursion: F = v on the lowest stratum, and off it
/// a partition-of-unity patch of recursively solved shifted bundles.
/// Throws std::invalid_argument on Empty fibers and std::runtime_error
/// when the recursion exceeds r + 1 levels.
SampledSection build_section(const SampledBundle& S);

struct MichaelOptions {
    double target_eps = 1e-6;
    int max_iterations = 60;
    int max_radius = 3;          // bump radius in grid steps
    double fail_ratio = 0.55;
    int max_failures = 3;
};

struct MichaelResult {
    SampledSection section;
    std::vector<double> norms;   // ||H - f_i|| for i = 0, 1, ...
    std::vector<double> ratios;  // norms[i+1] / norms[i]
    int iterations = 0;
};

/// f_{i+1} = f_i + g with g a bump-weighted average of least-norm points of
/// H - f_i, each bump shrunk until its centre value lies within half the
/// current norm of every fiber it touches. Throws std::runtime_error after
/// max_failures consecutive ratios above fail_ratio or when max_iterations
/// is exhausted.
MichaelResult michael_section(const SampledBundle& S, const MichaelOptions& opts = {});

struct SectionResidual {
    double fiber = 0;     // max dist(F(x), H_x) against the source fibers
    double equation = 0;  // max |sum F_i f_i - phi|; 0 for non-equation sources
    double sup_phi = 0;
    std::size_t worst_point = 0;
};

SectionResidual section_residual(const SampledSection& F, const BundleSource& B);

/// Largest jump of F and of v across grid edges with no endpoint in E1.
struct ContinuityReport {
    double max_jump_F = 0;
    double max_jump_v = 0;
};

ContinuityReport continuity_report(const SampledSection& F, const SampledBundle& S);

/// Columns: variables, phi, Phi_1..Phi_r, eq_residual, fiber_residual.
void write_section_csv(std::ostream& os, const SampledSection& F, const EquationBundle& B,
                       const std::vector<std::string>& vars);

} // namespace glaeser
