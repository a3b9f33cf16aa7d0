// Gauge transformation of the medium coefficients and the DN-invariance
// experiment built on it.
//
// A gauge is a positive multiplier rho with rho = 1 on the boundary.  The
// transformed medium
//     b   -> b + 2 rho^{-1} d rho
//     h   -> h + <b, rho^{-1} d rho> + rho^{-1} box_g rho
//     beta_{m+1} -> rho^m beta_{m+1}
// produces the same DN traces for the same boundary data; the discrepancy on
// a finite grid is pure discretization error and must vanish at second order
// under refinement.  Gauges carry analytic closures (value, log-derivative,
// and its derivative) so the transform evaluates the formulas exactly;
// from_samples provides a discrete fallback for gauges known only on a grid.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "solver.hpp"

namespace ws::gauge {

using solver::Medium1D;
using solver::Wavefield1D;

struct GaugeFunction {
    std::function<double(double x)> value;  // rho(x) > 0, equal to 1 at the boundary
    std::function<double(double x)> dlog;   // (log rho)'(x)
    std::function<double(double x)> dlog2;  // (log rho)''(x)
    bool time_dependent = false;  // permissive marker for the time-dependence experiments

    static GaugeFunction identity();

    // rho(x) = 1 + amplitude * sin(pi x) on (0, 1); |amplitude| < 1.
    static GaugeFunction one_plus_sine(double amplitude);

    // Gauge known only through samples on the given node grid; derivatives
    // use the solver's central stencils (one-sided second order at the ends).
    // The closures may only be evaluated at the sample nodes.
    static GaugeFunction from_samples(std::vector<double> x, std::vector<double> rho);

    GaugeFunction inverse() const;
    GaugeFunction product(const GaugeFunction& other) const;

    // Nonvanishing and boundary certificates on the medium's grid.
    void validate(const Medium1D& med) const;
};

// Applies the transform to every coefficient field.  Strict mode refuses
// time-dependent gauges (the invariance lemma assumes a static multiplier).
Medium1D apply_gauge(const Medium1D& med, const GaugeFunction& g, bool strict = true);

struct GaugeTransformResult {
    Wavefield1D field;                // rho^{-1} p
    double residual_original = 0.0;   // discrete residual of p on the input medium
    double residual_gauged = 0.0;     // discrete residual of rho^{-1} p on the gauged medium
};

// Transforms a solution field into the gauged medium's frame.  When
// check_residual is set, asserts that the transformed field satisfies the
// gauged discrete equation about as well as the input satisfies the original
// one (meaningful for smooth sampled fields, whose residuals are both at grid
// truncation scale; a converged solver output satisfies its own equation to
// iteration tolerance, which no pointwise transform can match).
GaugeTransformResult gauge_solution_transform(const Medium1D& med, const GaugeFunction& g,
                                              const Wavefield1D& p, bool check_residual = true,
                                              double tolerance_factor = 10.0);

struct DnDiscrepancyReport {
    std::vector<std::size_t> grids;  // cell counts of the ladder
    std::vector<double> relative;    // DN-trace L2 discrepancy / reference trace norm
    double order = 0.0;              // least-squares convergence order vs cell width
    double control_relative = 0.0;   // finest grid with h perturbed by +0.1 (non-gauge)
    double control_ratio = 0.0;      // control_relative / finest gauge discrepancy
};

using MediumFactory = std::function<Medium1D(std::size_t n_cells)>;

// Solves original and gauged problems over a grid ladder and reports the
// relative DN-trace discrepancies, their convergence order, and (optionally)
// the non-gauge negative control on the finest grid.
DnDiscrepancyReport dn_discrepancy(const MediumFactory& make_medium, const GaugeFunction& g,
                                   const solver::BoundaryData& left,
                                   const solver::BoundaryData& right, double t_final,
                                   const std::vector<std::size_t>& grid_ladder,
                                   const solver::SolveOptions& opt = {},
                                   int trace_stencil_points = 7,
                                   bool with_negative_control = true);

}  // namespace ws::gauge
