// Small-data forward solver for the damped nonlinear acoustic equation on a
// 1+1-D grid, plus boundary-flux (DN) trace extraction.
//
// Continuum model on (0,T) x (0,1):
//   d_tt p - c^2 d_xx p - c c_x d_x p + b0 d_t p - c^2 b1 d_x p + h p
//     = sum_{m>=1} beta_{m+1} d_tt(p^{m+1}) + forcing,
// with p = f on the boundary and p = d_t p = 0 at t = 0. The first-order terms
// are the Lorentzian pairing <b, grad p> of a one-form b = b0 dt + b1 dx.
//
// Discretization: leapfrog in time, 2nd-order central differences in space;
// the b0 term is handled semi-implicitly by averaging levels n-1 and n+1. The
// nonlinearity is solved by global-in-time Picard iteration: the quasilinear
// coefficient (1 - F1(p) p) of d_tt p stays implicit while the remaining
// power-differenced terms are lagged, so the fixed point satisfies the exact
// discrete power-form equation above. d_tt(p^{m+1}) is the second difference
// of the power, not a product-rule expansion.

#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace ws::solver {

// Grid-sampled medium coefficients on [0,1] with N cells (N+1 nodes).
struct Medium1D {
    std::size_t n_cells = 0;
    std::vector<double> x;      // node coordinates
    std::vector<double> c;      // sound speed (> 0)
    std::vector<double> b0;     // time component of the one-form
    std::vector<double> b1;     // space component of the one-form
    std::vector<double> h;      // potential
    std::vector<double> beta2, beta3, beta4;  // nonlinearity coefficients

    static Medium1D uniform(std::size_t n_cells, double c = 1.0, double b0 = 0.0,
                            double b1 = 0.0, double h = 0.0, double beta2 = 0.0,
                            double beta3 = 0.0, double beta4 = 0.0);

    double dx() const { return x[1] - x[0]; }
    double max_speed() const;
};

// Time-dependent scalar boundary data.
using BoundaryData = std::function<double(double t)>;

// Space-time interior forcing sampled lazily as forcing(t, i) at node i.
using Forcing = std::function<double(double t, std::size_t i)>;

// C^6 window pulse amplitude * sin^8(pi (t - t0) / tau) on [t0, t0 + tau].
// The first seven derivatives vanish at both ends of the window.
double c6_pulse(double t, double t0, double tau, double amplitude);

struct SolveOptions {
    double cfl = 0.8;            // dt = cfl * dx / max(c)
    double picard_rtol = 1e-14;  // relative sup-norm change between iterates
    int max_picard = 64;
    double quasilinear_cap = 0.5;  // refuse when |F1(p) p| exceeds this
};

// Space-time field history: p(n, i) for time level n = 0..n_steps.
struct Wavefield1D {
    std::size_t n_nodes = 0;
    std::size_t n_levels = 0;
    double dt = 0.0;
    std::vector<double> t;     // time levels
    std::vector<double> p;     // row-major (level, node)

    double& at(std::size_t level, std::size_t node) { return p[level * n_nodes + node]; }
    double at(std::size_t level, std::size_t node) const { return p[level * n_nodes + node]; }

    int picard_iterations = 0;
    std::vector<double> contraction_ratios;  // per-iteration update ratios
    std::vector<double> picard_updates;      // per-iteration sup-norm changes
    double final_update = 0.0;               // last sup-norm iterate change
};

// Raised when the amplitude leaves the small-data regime: Picard stopped
// contracting or the quasilinear coefficient left the configured range.
class DivergedError : public std::runtime_error {
  public:
    DivergedError(const std::string& what, double last_ratio)
        : std::runtime_error(what), last_contraction_ratio(last_ratio) {}
    double last_contraction_ratio = 0.0;
};

// Raised when dt violates the CFL bound; carries the largest admissible dt.
class CflError : public std::invalid_argument {
  public:
    CflError(const std::string& what, double dt_suggested)
        : std::invalid_argument(what), suggested_dt(dt_suggested) {}
    double suggested_dt = 0.0;
};

// Linear solve (betas ignored even if set): one leapfrog sweep.
Wavefield1D solve_linear(const Medium1D& med, const BoundaryData& left,
                         const BoundaryData& right, double t_final,
                         const SolveOptions& opt = {}, const Forcing* forcing = nullptr);

// Linear solve on an explicitly pinned grid (n_steps, dt).  Nested solves in
// the linearization cascade use this to share one grid bit-for-bit instead of
// re-deriving step counts from a possibly roundoff-perturbed final time.
Wavefield1D solve_linear_pinned(const Medium1D& med, const BoundaryData& left,
                                const BoundaryData& right, std::size_t n_steps, double dt,
                                const Forcing* forcing = nullptr);

// Nonlinear solve by global Picard iteration. Throws DivergedError when the
// iteration fails to contract within opt.max_picard sweeps.
Wavefield1D solve_nonlinear(const Medium1D& med, const BoundaryData& left,
                            const BoundaryData& right, double t_final,
                            const SolveOptions& opt = {}, const Forcing* forcing = nullptr);

// DN trace on both boundary points: Lambda = d_nu p + (1/2) <b, nu> p with nu
// the outward unit normal of the spatial metric (so d_nu = -+ c d_x at the
// left/right end and <b, nu> = -+ c b1). The normal derivative uses a
// one-sided interior stencil of the given width (3 points = 2nd order ...
// 7 points = 6th order); accuracy is never below 2nd order.
struct DNTrace {
    std::vector<double> t;
    std::vector<double> left;    // values at x = 0
    std::vector<double> right;   // values at x = 1
};

DNTrace dn_trace(const Medium1D& med, const Wavefield1D& field, int stencil_points = 7);

// Discrete L^2((0,T) x {0,1}) distance between two traces on the same time
// grid (trapezoidal in t, summed over the two boundary points).
double trace_l2_distance(const DNTrace& a, const DNTrace& b);
double trace_l2_norm(const DNTrace& a);

// Least-squares observed convergence order from (h, error) pairs.
double observed_order(const std::vector<double>& h, const std::vector<double>& err);

// Discrete wave operator box_g u = D_tt u - c^2 D_xx u - c c_x D_x u at an
// interior grid point (central differences; throws on boundary indices).
double apply_box_g(const Medium1D& med, const Wavefield1D& field,
                   std::size_t level, std::size_t node);

// Max-norm residual of the full discrete nonlinear equation over all interior
// points; the Picard fixed point drives this to the iteration tolerance.
double pde_residual_max(const Medium1D& med, const Wavefield1D& field,
                        const Forcing* forcing = nullptr);

}  // namespace ws::solver
