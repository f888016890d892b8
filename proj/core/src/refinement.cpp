#include "equihor/refinement.hpp"

#include <algorithm>
#include <cmath>

#include "equihor/errors.hpp"

namespace equihor {

bool in_interior(const SpaceGrid& space, std::size_t i, double fraction) noexcept {
    const double margin = 0.5 * (1.0 - fraction) * (space.x_max - space.x_min);
    const double x = space.x(i);
    return x >= space.x_min + margin - 1e-12 && x <= space.x_max - margin + 1e-12;
}

double slice_gap(std::span<const double> coarse, const SpaceGrid& cs, std::span<const double> fine,
                 const SpaceGrid& fs, double fraction) {
    if (cs.x_min != fs.x_min || cs.x_max != fs.x_max) {
        throw CompositionError("refinement levels cover different intervals");
    }
    if (coarse.size() != cs.n_x || fine.size() != fs.n_x) throw CompositionError("slice does not match its grid");
    const std::size_t ratio = (fs.n_x - 1) / (cs.n_x - 1);
    if (ratio == 0 || ratio * (cs.n_x - 1) != fs.n_x - 1) {
        throw CompositionError("fine grid does not nest the coarse grid");
    }
    double gap = 0.0;
    for (std::size_t i = 0; i < cs.n_x; ++i) {
        if (!in_interior(cs, i, fraction)) continue;
        gap = std::max(gap, std::abs(coarse[i] - fine[i * ratio]));
    }
    return gap;
}

double field_gap(const ValueField& coarse, const ValueField& fine, double fraction) {
    const Grid1D& c = coarse.grid();
    const Grid1D& f = fine.grid();
    const std::size_t ratio = f.n_t() / c.n_t();
    if (ratio == 0 || ratio * c.n_t() != f.n_t() || std::abs(c.t_start() - f.t_start()) > 1e-9 ||
        std::abs(c.t_end() - f.t_end()) > 1e-9) {
        throw CompositionError("fine time grid does not nest the coarse one");
    }
    double gap = 0.0;
    for (std::size_t k = 0; k <= c.n_t(); ++k) {
        gap = std::max(gap, slice_gap(coarse.row(k), c.space(), fine.row(k * ratio), f.space(), fraction));
    }
    return gap;
}

double observed_order(double e_coarse, double e_fine) noexcept { return std::log2(e_coarse / e_fine); }

RefinementTable refinement_table(std::span<const double> steps, std::span<const double> levels) {
    if (steps.size() != levels.size() || levels.size() < 2) {
        throw DomainError("need matching steps and at least two levels");
    }
    RefinementTable t;
    t.steps.assign(steps.begin(), steps.end());
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) t.differences.push_back(std::abs(levels[i] - levels[i + 1]));
    for (std::size_t i = 0; i + 1 < t.differences.size(); ++i) {
        t.orders.push_back(observed_order(t.differences[i], t.differences[i + 1]));
    }
    return t;
}

}  // namespace equihor
