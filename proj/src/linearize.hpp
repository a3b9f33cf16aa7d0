// Higher-order linearization of the nonlinear solver: finite-difference mixed
// epsilon-derivatives of solutions and DN traces, and the analytic cascade of
// nested zero-Dirichlet solves that they must reproduce.
//
// The cascade works with the second-order interaction fields
//     a2(i,j)   = Q( beta2 * Dtt(v_i v_j) )
//     a3(i|j,k) = Q( 2 beta2 * Dtt(v_i a2(j,k)) + beta3 * Dtt(v_i v_j v_k) )
//     a4(i,j,k,l) = Q( 2 beta2 * Dtt(v_i a3(j|k,l)) + beta2 * Dtt(a2(i,j) a2(k,l))
//                      + 3 beta3 * Dtt(v_i v_j a2(k,l)) + beta4 * Dtt(v_i v_j v_k v_l) )
// where v_i are linear waves, Q is the zero-Dirichlet solve with interior
// forcing, and Dtt is the solver's centered second time difference.  Summing
// a3 over all ordered triples gives the third-order wave U3; summing a4 over
// all ordered quadruples gives U4.  Because Q and Dtt are exactly the discrete
// operators of the forward solver, FD mixed derivatives of the discrete
// nonlinear solution differ from the cascade only by the O(eps^2) truncation
// of the corner stencil, which the Richardson check measures.
//
// The modified cascade (b-form) adds first-order-in-time corrections with
// time-dependent multiplier fields rho:
//     c_k = 2 rho^{-1} beta_k Dt(rho^k),  d_k = rho^{-1} beta_k Dtt(rho^k)
//     b2(i,j)   = a2(i,j) + Q( c2 Dt(v_i v_j) + d2 v_i v_j )
//     b3(i|j,k) = a3(i|j,k) + Q( 2 beta2 * Dtt(v_i Q(c2 Dt(v_j v_k) + d2 v_j v_k))
//                                + c3 Dt(v_i b2(j,k)) + c3 Dt(v_i v_j v_k)
//                                + d3 v_i b2(j,k)     + d3 v_i v_j v_k )
// For time-independent rho all corrections vanish identically and the b-form
// reproduces the plain cascade bit-for-bit.

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <vector>

#include "solver.hpp"

namespace ws::lin {

using solver::DNTrace;
using solver::Medium1D;
using solver::SolveOptions;
using solver::Wavefield1D;

// One boundary-source slot: the pair of Dirichlet data shapes this source
// contributes (either side may be identically zero).
struct SourceSlot {
    solver::BoundaryData left;
    solver::BoundaryData right;
};

// A family of J parametrized boundary sources f = sum_j eps_j f_j.
struct MultiSource {
    std::vector<SourceSlot> slots;
    std::vector<double> epsilons;  // per-slot differencing step (shared value by default)

    std::size_t order() const { return slots.size(); }

    // Staggered C^6 window pulses on alternating boundary sides, scaled by
    // `amplitude`.  These keep the 2^J corner solves well inside the
    // small-data regime while leaving the mixed derivative well above the
    // Picard noise floor.
    static MultiSource standard_probes(std::size_t j, double amplitude = 10.0,
                                       double epsilon = 1e-3);
};

// Nested-solve interaction fields, keyed by source indices.  `pair` keys are
// stored sorted (the stored field is symmetric); `triple` keys are (i, j, k)
// with j <= k, symmetric in the last two slots only.
struct CascadeTerms {
    std::size_t order = 0;  // number of source slots J
    bool modified = false;  // true when built by cascade_modified (b-form)
    std::vector<Wavefield1D> v;
    std::map<std::array<std::size_t, 2>, Wavefield1D> second;
    std::map<std::array<std::size_t, 3>, Wavefield1D> third;
    std::map<std::array<std::size_t, 4>, Wavefield1D> fourth;

    const Wavefield1D& pair(std::size_t i, std::size_t j) const;
    const Wavefield1D& triple(std::size_t i, std::size_t j, std::size_t k) const;
    const Wavefield1D& quad(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const;
};

// The zero-Dirichlet solve with interior forcing given on the grid of
// `like` (the discrete Q_bvp).  The forcing field must share that grid; the
// solve is pinned to exactly that grid so nested cascade levels never drift.
Wavefield1D q_bvp(const Medium1D& med, const Wavefield1D& like,
                  const std::vector<double>& forcing_levels);

// Builds all cascade interaction fields for the given linear waves
// (a2 for every index pair including diagonals; a3 and a4 over distinct
// indices as consumed by the permutation sums).  Throws std::invalid_argument
// when the waves do not share one grid.
CascadeTerms cascade_terms(const Medium1D& med, const std::vector<Wavefield1D>& v);

// B-form cascade with a (possibly time-dependent) multiplier field rho given
// on the same grid as the waves.  rho must be positive everywhere and equal
// to 1 at boundary nodes.  For J = 2 only the pair terms are built; for J = 3
// the modified third-order terms are included.  When rho is constant in time
// every correction forcing vanishes identically and the result equals
// cascade_terms on the same inputs bit-for-bit.
CascadeTerms cascade_modified(const Medium1D& med, const Wavefield1D& rho,
                              const std::vector<Wavefield1D>& v);

// Permutation-assembled interaction waves and their DN traces.
struct MultiWave {
    CascadeTerms terms;
    Wavefield1D u3;      // sum of a3 over all ordered triples (J >= 3)
    DNTrace u3_trace;
    Wavefield1D u4;      // sum of a4 over all ordered quadruples (J == 4)
    DNTrace u4_trace;
    bool has_u4 = false;
};

MultiWave assemble_multi_wave(const Medium1D& med, const MultiSource& sources,
                              double t_final, const SolveOptions& opt = {},
                              int trace_stencil_points = 7);

// Options for the finite-difference mixed derivative.
struct FdOptions {
    bool richardson = false;     // combine step eps and eps/2 to cancel the eps^2 term
    int trace_stencil_points = 7;
};

// Mixed derivative d^J p / d eps_1 ... d eps_J at eps = 0 via the 2^J-corner
// alternating-sign central product stencil.  A diverging corner solve is
// reported as solver::DivergedError naming the sign pattern of the corner.
Wavefield1D fd_mixed_field(const Medium1D& med, const MultiSource& sources,
                           double t_final, const SolveOptions& opt = {},
                           const FdOptions& fd = {});

// Same stencil applied to the DN trace of each corner solve.
DNTrace fd_mixed_trace(const Medium1D& med, const MultiSource& sources,
                       double t_final, const SolveOptions& opt = {},
                       const FdOptions& fd = {});

// L2 distance/norm over the full space-time grid (root mean square), used by
// the FD-vs-cascade comparisons.
double field_l2(const Wavefield1D& f);
double field_l2_distance(const Wavefield1D& a, const Wavefield1D& b);

}  // namespace ws::lin
