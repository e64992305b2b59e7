#pragma once

#include <cstddef>

#include "lstsr/grid.hpp"
#include "lstsr/guide.hpp"

namespace lstsr {

enum class InitScheme { BICUBIC, REPLICATE };

/// Knobs of the diffuse-adjust solver. lambda <= 0.25 keeps the explicit
/// 4-neighbor update a convex combination (stable for conductances <= 1).
struct SolverParams {
    int factor = 5;
    double lambda = 0.25;
    int n_iterations = 2000;
    int adjust_every = 1;
    double tolerance = 1e-6; // max per-cell change in scaled units
    InitScheme init = InitScheme::BICUBIC;

    void validate() const;
};

struct SolveReport {
    int iterations_run = 0;
    double final_max_delta = 0.0;      // scaled units
    double consistency_residual = 0.0; // physical units, max over source-valid blocks
    double wall_time_s = 0.0;
    std::size_t empty_blocks = 0; // source valid but no valid HR cell
};

/// One explicit diffusion step:
///   u'(p) = u(p) + lambda * sum_q c(p,q) * (u(q) - u(p))
/// over the 4-neighborhood. Invalid neighbors and zero-conductance edges
/// drop out; invalid cells stay invalid.
Grid2D diffuse_step(const Grid2D& u, const CoefficientField& coeffs, double lambda);

/// Shift every source-valid block uniformly so its mean over valid HR cells
/// equals the source value. Blocks with an invalid source cell are left
/// untouched; source-valid blocks without any valid HR cell are counted
/// into *empty_blocks and stay invalid.
Grid2D adjust_step(const Grid2D& u, const Grid2D& source, int factor,
                   std::size_t* empty_blocks = nullptr);

struct SolveResult {
    Grid2D grid;
    SolveReport report;
};

/// Guide-driven super-resolution of `source` by p.factor: initialize from
/// the source, alternate diffusion with the per-block adjustment, always
/// finish on an adjustment. Internally runs on min-max scaled values and
/// converts back at the end. Output cells are valid iff their source block
/// is valid.
SolveResult solve(const Grid2D& source, const CoefficientField& coeffs, const SolverParams& p);

} // namespace lstsr
