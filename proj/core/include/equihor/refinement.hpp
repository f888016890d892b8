#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "equihor/pde.hpp"

namespace equihor {

/// Nodes with x in the central `fraction` of [x_min, x_max].
bool in_interior(const SpaceGrid& space, std::size_t i, double fraction = 0.6) noexcept;

/// sup over interior coarse nodes of |coarse - fine|, the fine slice sampled at coarse nodes.
/// (n_fine - 1) must be a multiple of (n_coarse - 1) on the same interval.
double slice_gap(std::span<const double> coarse, const SpaceGrid& cs, std::span<const double> fine,
                 const SpaceGrid& fs, double fraction = 0.6);

/// slice_gap over every coarse time row; the fine time grid must nest the coarse one.
double field_gap(const ValueField& coarse, const ValueField& fine, double fraction = 0.6);

/// 2 sup|V_h - V_{h/2}|, the empirical error estimate of the coarser solve.
inline double grid_error(double gap) noexcept { return 2.0 * gap; }

/// log2(e_coarse / e_fine).
double observed_order(double e_coarse, double e_fine) noexcept;

/// Differences between successive levels and the orders they imply.
struct RefinementTable {
    std::vector<double> steps;
    std::vector<double> differences;
    std::vector<double> orders;
};

/// `levels` holds scalar summaries at successively halved steps; differences[i] = |v[i] - v[i+1]|.
RefinementTable refinement_table(std::span<const double> steps, std::span<const double> levels);

}  // namespace equihor
