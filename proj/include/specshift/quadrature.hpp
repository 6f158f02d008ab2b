#pragma once

#include <cstddef>

namespace specshift {

inline constexpr std::size_t default_quadrature_panels = 100000;

// Composite midpoint rule on (0,1].  The rule never evaluates at x = 0, so
// integrands with an integrable singularity at the origin (powers of
// -log x, density ratios of the log-tail shift) are handled without special
// casing.  Summation is left-to-right and therefore deterministic.
template <typename F>
double integrate_unit(F&& f, std::size_t panels = default_quadrature_panels) {
    const double h = 1.0 / static_cast<double>(panels);
    double acc = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        acc += f((static_cast<double>(i) + 0.5) * h);
    }
    return acc * h;
}

}  // namespace specshift
