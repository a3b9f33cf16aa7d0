#include "linearize.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ws::lin {

namespace {

void require_same_grid(const Wavefield1D& a, const Wavefield1D& b, const char* where) {
    if (a.n_nodes != b.n_nodes || a.n_levels != b.n_levels || a.dt != b.dt)
        throw std::invalid_argument(std::string(where) + ": fields do not share one grid");
}

void require_medium_grid(const Medium1D& med, const Wavefield1D& f, const char* where) {
    if (med.x.size() != f.n_nodes)
        throw std::invalid_argument(std::string(where) + ": medium and field grids disagree");
}

// Elementwise product of level-major arrays.
std::vector<double> hadamard(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
    return out;
}

void hadamard_in(std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t k = 0; k < a.size(); ++k) a[k] *= b[k];
}

void add_in(std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
}

// Centered second time difference of a level-major array; levels 0 and last
// are left at zero (the leapfrog sweep never reads forcing there).
std::vector<double> dtt_levels(const std::vector<double>& f, std::size_t n_levels,
                               std::size_t nn, double dt) {
    std::vector<double> out(f.size(), 0.0);
    const double inv_dt2 = 1.0 / (dt * dt);
    for (std::size_t n = 1; n + 1 < n_levels; ++n)
        for (std::size_t i = 0; i < nn; ++i) {
            const std::size_t k = n * nn + i;
            out[k] = (f[k + nn] - 2.0 * f[k] + f[k - nn]) * inv_dt2;
        }
    return out;
}

// Centered first time difference, same conventions as dtt_levels.
std::vector<double> dt_levels(const std::vector<double>& f, std::size_t n_levels,
                              std::size_t nn, double dt) {
    std::vector<double> out(f.size(), 0.0);
    const double inv_2dt = 1.0 / (2.0 * dt);
    for (std::size_t n = 1; n + 1 < n_levels; ++n)
        for (std::size_t i = 0; i < nn; ++i) {
            const std::size_t k = n * nn + i;
            out[k] = (f[k + nn] - f[k - nn]) * inv_2dt;
        }
    return out;
}

// Multiplies entry (n, i) by a per-node coefficient.
void scale_by_node(std::vector<double>& f, std::size_t n_levels, std::size_t nn,
                   const std::vector<double>& coeff) {
    for (std::size_t n = 0; n < n_levels; ++n)
        for (std::size_t i = 0; i < nn; ++i) f[n * nn + i] *= coeff[i];
}

std::array<std::size_t, 2> pair_key(std::size_t i, std::size_t j) {
    return {std::min(i, j), std::max(i, j)};
}

std::array<std::size_t, 3> triple_key(std::size_t i, std::size_t j, std::size_t k) {
    return {i, std::min(j, k), std::max(j, k)};
}

std::string corner_pattern(unsigned mask, std::size_t j) {
    std::string s = "(";
    for (std::size_t k = 0; k < j; ++k) {
        s += (mask >> k) & 1u ? '-' : '+';
        if (k + 1 < j) s += ',';
    }
    return s + ")";
}

solver::BoundaryData combine_side(const MultiSource& sources, const std::vector<double>& weight,
                                  bool left_side) {
    // capture copies so the lambda outlives the caller's locals
    std::vector<solver::BoundaryData> parts;
    parts.reserve(sources.slots.size());
    for (const auto& slot : sources.slots) parts.push_back(left_side ? slot.left : slot.right);
    return [parts, weight](double t) {
        double s = 0.0;
        for (std::size_t k = 0; k < parts.size(); ++k)
            if (parts[k]) s += weight[k] * parts[k](t);
        return s;
    };
}

std::vector<double> fd_epsilons(const MultiSource& sources) {
    std::vector<double> eps = sources.epsilons;
    if (eps.empty()) eps.assign(sources.order(), 1e-3);
    if (eps.size() != sources.order())
        throw std::invalid_argument("fd_mixed_derivative: epsilon count does not match slots");
    for (double e : eps)
        if (e <= 0.0) throw std::invalid_argument("fd_mixed_derivative: epsilons must be positive");
    return eps;
}

// Runs the 2^J corner solves, handing each solution to `absorb(sign, field)`.
template <typename Absorb>
void run_corners(const Medium1D& med, const MultiSource& sources, double t_final,
                 const SolveOptions& opt, const std::vector<double>& eps, Absorb&& absorb) {
    const std::size_t j = sources.order();
    for (unsigned mask = 0; mask < (1u << j); ++mask) {
        std::vector<double> weight(j);
        for (std::size_t k = 0; k < j; ++k)
            weight[k] = ((mask >> k) & 1u ? -1.0 : 1.0) * eps[k];
        const double sign = (std::popcount(mask) % 2 == 0) ? 1.0 : -1.0;
        try {
            Wavefield1D f = solver::solve_nonlinear(med, combine_side(sources, weight, true),
                                                    combine_side(sources, weight, false),
                                                    t_final, opt);
            absorb(sign, f);
        } catch (const solver::DivergedError& e) {
            throw solver::DivergedError("fd_mixed_derivative: corner " +
                                            corner_pattern(mask, j) + " diverged: " + e.what(),
                                        e.last_contraction_ratio);
        }
    }
}

Wavefield1D fd_field_pass(const Medium1D& med, const MultiSource& sources, double t_final,
                          const SolveOptions& opt, const std::vector<double>& eps) {
    Wavefield1D acc;
    bool first = true;
    run_corners(med, sources, t_final, opt, eps, [&](double sign, const Wavefield1D& f) {
        if (first) {
            acc = f;
            for (double& x : acc.p) x *= sign;
            first = false;
        } else {
            require_same_grid(acc, f, "fd_mixed_derivative");
            for (std::size_t k = 0; k < acc.p.size(); ++k) acc.p[k] += sign * f.p[k];
        }
    });
    double denom = 1.0;
    for (double e : eps) denom *= 2.0 * e;
    for (double& x : acc.p) x /= denom;
    acc.picard_iterations = 0;
    acc.contraction_ratios.clear();
    acc.final_update = 0.0;
    return acc;
}

DNTrace fd_trace_pass(const Medium1D& med, const MultiSource& sources, double t_final,
                      const SolveOptions& opt, const std::vector<double>& eps,
                      int stencil_points) {
    DNTrace acc;
    bool first = true;
    run_corners(med, sources, t_final, opt, eps, [&](double sign, const Wavefield1D& f) {
        DNTrace tr = solver::dn_trace(med, f, stencil_points);
        if (first) {
            acc = tr;
            for (double& x : acc.left) x *= sign;
            for (double& x : acc.right) x *= sign;
            first = false;
        } else {
            for (std::size_t k = 0; k < acc.left.size(); ++k) {
                acc.left[k] += sign * tr.left[k];
                acc.right[k] += sign * tr.right[k];
            }
        }
    });
    double denom = 1.0;
    for (double e : eps) denom *= 2.0 * e;
    for (double& x : acc.left) x /= denom;
    for (double& x : acc.right) x /= denom;
    return acc;
}

}  // namespace

MultiSource MultiSource::standard_probes(std::size_t j, double amplitude, double epsilon) {
    if (j < 2 || j > 4)
        throw std::invalid_argument("standard_probes: source count must be 2, 3, or 4");
    struct Window {
        double t0, tau;
        bool left;
    };
    static constexpr Window kWindows[4] = {
        {0.00, 0.25, true}, {0.05, 0.30, false}, {0.15, 0.25, true}, {0.10, 0.30, false}};
    MultiSource src;
    auto zero = [](double) { return 0.0; };
    for (std::size_t k = 0; k < j; ++k) {
        const Window w = kWindows[k];
        auto pulse = [w, amplitude](double t) { return solver::c6_pulse(t, w.t0, w.tau, amplitude); };
        SourceSlot slot;
        slot.left = w.left ? solver::BoundaryData(pulse) : solver::BoundaryData(zero);
        slot.right = w.left ? solver::BoundaryData(zero) : solver::BoundaryData(pulse);
        src.slots.push_back(std::move(slot));
    }
    src.epsilons.assign(j, epsilon);
    return src;
}

const Wavefield1D& CascadeTerms::pair(std::size_t i, std::size_t j) const {
    auto it = second.find(pair_key(i, j));
    if (it == second.end())
        throw std::invalid_argument("CascadeTerms: no pair term (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
    return it->second;
}

const Wavefield1D& CascadeTerms::triple(std::size_t i, std::size_t j, std::size_t k) const {
    auto it = third.find(triple_key(i, j, k));
    if (it == third.end())
        throw std::invalid_argument("CascadeTerms: no triple term (" + std::to_string(i) + "|" +
                                    std::to_string(j) + "," + std::to_string(k) + ")");
    return it->second;
}

const Wavefield1D& CascadeTerms::quad(std::size_t i, std::size_t j, std::size_t k,
                                      std::size_t l) const {
    auto it = fourth.find(std::array<std::size_t, 4>{i, j, k, l});
    if (it == fourth.end())
        throw std::invalid_argument("CascadeTerms: no quadruple term");
    return it->second;
}

Wavefield1D q_bvp(const Medium1D& med, const Wavefield1D& like,
                  const std::vector<double>& forcing_levels) {
    require_medium_grid(med, like, "q_bvp");
    if (forcing_levels.size() != like.p.size())
        throw std::invalid_argument("q_bvp: forcing does not match the field grid");
    const double dt = like.dt;
    const std::size_t nn = like.n_nodes;
    solver::Forcing forcing = [&forcing_levels, dt, nn](double t, std::size_t i) {
        const auto n = static_cast<std::size_t>(std::llround(t / dt));
        return forcing_levels[n * nn + i];
    };
    auto zero = [](double) { return 0.0; };
    return solver::solve_linear_pinned(med, zero, zero, like.n_levels - 1, dt, &forcing);
}

CascadeTerms cascade_terms(const Medium1D& med, const std::vector<Wavefield1D>& v) {
    const std::size_t j = v.size();
    if (j < 2 || j > 4)
        throw std::invalid_argument("cascade_terms: need 2 to 4 linear waves");
    for (const auto& w : v) {
        require_medium_grid(med, w, "cascade_terms");
        require_same_grid(v[0], w, "cascade_terms");
    }
    const std::size_t nl = v[0].n_levels, nn = v[0].n_nodes;
    const double dt = v[0].dt;

    CascadeTerms out;
    out.order = j;
    out.v = v;

    // a2(i,j) = Q( beta2 * Dtt(v_i v_j) ), all pairs including diagonals.
    for (std::size_t a = 0; a < j; ++a)
        for (std::size_t b = a; b < j; ++b) {
            std::vector<double> forcing = dtt_levels(hadamard(v[a].p, v[b].p), nl, nn, dt);
            scale_by_node(forcing, nl, nn, med.beta2);
            out.second.emplace(pair_key(a, b), q_bvp(med, v[0], forcing));
        }

    // a3(i|j,k) = Q( 2 beta2 * Dtt(v_i a2(j,k)) + beta3 * Dtt(v_i v_j v_k) ),
    // distinct indices only (as consumed by the ordered-permutation sums).
    if (j >= 3) {
        for (std::size_t i = 0; i < j; ++i) {
            std::vector<std::size_t> rest;
            for (std::size_t r = 0; r < j; ++r)
                if (r != i) rest.push_back(r);
            for (std::size_t a = 0; a < rest.size(); ++a)
                for (std::size_t b = a + 1; b < rest.size(); ++b) {
                    const std::size_t jj = rest[a], kk = rest[b];
                    std::vector<double> f1 =
                        dtt_levels(hadamard(v[i].p, out.pair(jj, kk).p), nl, nn, dt);
                    for (double& x : f1) x *= 2.0;
                    scale_by_node(f1, nl, nn, med.beta2);
                    std::vector<double> f2 =
                        dtt_levels(hadamard(hadamard(v[i].p, v[jj].p), v[kk].p), nl, nn, dt);
                    scale_by_node(f2, nl, nn, med.beta3);
                    add_in(f1, f2);
                    out.third.emplace(triple_key(i, jj, kk), q_bvp(med, v[0], f1));
                }
        }
    }

    // a4(i,j,k,l) over ordered quadruples: the four-summand forcing
    //   2 beta2 Dtt(v_i a3(j|k,l)) + beta2 Dtt(a2(i,j) a2(k,l))
    //   + 3 beta3 Dtt(v_i v_j a2(k,l)) + beta4 Dtt(v_i v_j v_k v_l).
    if (j == 4) {
        std::array<std::size_t, 4> idx{0, 1, 2, 3};
        do {
            const std::size_t i = idx[0], jj = idx[1], kk = idx[2], ll = idx[3];
            std::vector<double> t1 = dtt_levels(hadamard(v[i].p, out.triple(jj, kk, ll).p),
                                                nl, nn, dt);
            for (double& x : t1) x *= 2.0;
            scale_by_node(t1, nl, nn, med.beta2);

            std::vector<double> t2 =
                dtt_levels(hadamard(out.pair(i, jj).p, out.pair(kk, ll).p), nl, nn, dt);
            scale_by_node(t2, nl, nn, med.beta2);

            std::vector<double> t3 = dtt_levels(
                hadamard(hadamard(v[i].p, v[jj].p), out.pair(kk, ll).p), nl, nn, dt);
            for (double& x : t3) x *= 3.0;
            scale_by_node(t3, nl, nn, med.beta3);

            std::vector<double> t4 = dtt_levels(
                hadamard(hadamard(v[i].p, v[jj].p), hadamard(v[kk].p, v[ll].p)), nl, nn, dt);
            scale_by_node(t4, nl, nn, med.beta4);

            add_in(t1, t2);
            add_in(t1, t3);
            add_in(t1, t4);
            out.fourth.emplace(idx, q_bvp(med, v[0], t1));
        } while (std::next_permutation(idx.begin(), idx.end()));
    }
    return out;
}

CascadeTerms cascade_modified(const Medium1D& med, const Wavefield1D& rho,
                              const std::vector<Wavefield1D>& v) {
    const std::size_t j = v.size();
    if (j < 2 || j > 3)
        throw std::invalid_argument("cascade_modified: need 2 or 3 linear waves");
    for (const auto& w : v) {
        require_medium_grid(med, w, "cascade_modified");
        require_same_grid(v[0], w, "cascade_modified");
    }
    require_same_grid(v[0], rho, "cascade_modified");
    const std::size_t nl = rho.n_levels, nn = rho.n_nodes;
    const double dt = rho.dt;

    for (double r : rho.p)
        if (!(r > 0.0))
            throw std::invalid_argument("cascade_modified: rho must be positive everywhere");
    for (std::size_t n = 0; n < nl; ++n)
        if (std::abs(rho.at(n, 0) - 1.0) > 1e-12 || std::abs(rho.at(n, nn - 1) - 1.0) > 1e-12)
            throw std::invalid_argument("cascade_modified: rho must equal 1 at boundary nodes");

    CascadeTerms out = cascade_terms(med, v);
    out.modified = true;

    // c_k = 2 rho^{-1} beta_k Dt(rho^k),  d_k = rho^{-1} beta_k Dtt(rho^k).
    // For time-independent rho the time differences are exact zeros, every
    // correction forcing vanishes, and the a-terms pass through untouched.
    auto multiplier_fields = [&](int k, const std::vector<double>& beta) {
        std::vector<double> rho_k(rho.p.size());
        for (std::size_t m = 0; m < rho_k.size(); ++m) {
            double r = rho.p[m];
            rho_k[m] = (k == 2) ? r * r : r * r * r;
        }
        std::vector<double> c = dt_levels(rho_k, nl, nn, dt);
        std::vector<double> d = dtt_levels(rho_k, nl, nn, dt);
        for (std::size_t m = 0; m < rho_k.size(); ++m) {
            c[m] *= 2.0 / rho.p[m];
            d[m] /= rho.p[m];
        }
        scale_by_node(c, nl, nn, beta);
        scale_by_node(d, nl, nn, beta);
        return std::make_pair(std::move(c), std::move(d));
    };
    auto [c2, d2] = multiplier_fields(2, med.beta2);
    const bool time_independent =
        std::all_of(c2.begin(), c2.end(), [](double x) { return x == 0.0; }) &&
        std::all_of(d2.begin(), d2.end(), [](double x) { return x == 0.0; });
    if (time_independent) return out;

    // b2(i,j) = a2(i,j) + Q( c2 Dt(v_i v_j) + d2 v_i v_j ); keep the pair
    // corrections for the b3 assembly below.
    std::map<std::array<std::size_t, 2>, Wavefield1D> corr2;
    for (auto& [key, field] : out.second) {
        const std::vector<double> prod = hadamard(v[key[0]].p, v[key[1]].p);
        std::vector<double> forcing = dt_levels(prod, nl, nn, dt);
        hadamard_in(forcing, c2);
        std::vector<double> zd = prod;
        hadamard_in(zd, d2);  // d2 vanishes at the end levels, which Q never reads
        add_in(forcing, zd);
        Wavefield1D corr = q_bvp(med, v[0], forcing);
        for (std::size_t m = 0; m < field.p.size(); ++m) field.p[m] += corr.p[m];
        corr2.emplace(key, std::move(corr));
    }

    // b3(i|j,k) = a3(i|j,k) + Q( 2 beta2 Dtt(v_i corr2(j,k))
    //                            + c3 Dt(v_i b2(j,k)) + c3 Dt(v_i v_j v_k)
    //                            + d3 v_i b2(j,k)     + d3 v_i v_j v_k ).
    if (j == 3) {
        auto [c3, d3] = multiplier_fields(3, med.beta3);
        for (auto& [key, field] : out.third) {
            const std::size_t i = key[0], jj = key[1], kk = key[2];
            const Wavefield1D& b2_jk = out.pair(jj, kk);  // already upgraded to b-form
            const Wavefield1D& c2_jk = corr2.at(pair_key(jj, kk));

            std::vector<double> f = dtt_levels(hadamard(v[i].p, c2_jk.p), nl, nn, dt);
            for (double& x : f) x *= 2.0;
            scale_by_node(f, nl, nn, med.beta2);

            std::vector<double> g1 = dt_levels(hadamard(v[i].p, b2_jk.p), nl, nn, dt);
            hadamard_in(g1, c3);
            add_in(f, g1);

            const std::vector<double> vvv = hadamard(hadamard(v[i].p, v[jj].p), v[kk].p);
            std::vector<double> g2 = dt_levels(vvv, nl, nn, dt);
            hadamard_in(g2, c3);
            add_in(f, g2);

            std::vector<double> g3 = hadamard(v[i].p, b2_jk.p);
            hadamard_in(g3, d3);
            add_in(f, g3);

            std::vector<double> g4 = vvv;
            hadamard_in(g4, d3);
            add_in(f, g4);

            Wavefield1D corr = q_bvp(med, v[0], f);
            for (std::size_t m = 0; m < field.p.size(); ++m) field.p[m] += corr.p[m];
        }
    }
    return out;
}

MultiWave assemble_multi_wave(const Medium1D& med, const MultiSource& sources, double t_final,
                              const SolveOptions& opt, int trace_stencil_points) {
    const std::size_t j = sources.order();
    if (j < 3 || j > 4)
        throw std::invalid_argument("assemble_multi_wave: need 3 or 4 sources");

    std::vector<Wavefield1D> v;
    v.reserve(j);
    auto zero = [](double) { return 0.0; };
    for (const auto& slot : sources.slots)
        v.push_back(solver::solve_linear(med, slot.left ? slot.left : zero,
                                         slot.right ? slot.right : zero, t_final, opt));

    MultiWave mw;
    mw.terms = cascade_terms(med, v);

    auto zero_like = [&](Wavefield1D f) {
        std::fill(f.p.begin(), f.p.end(), 0.0);
        return f;
    };

    // U3: sum of a3 over the 6 ordered triples of the first three sources.
    mw.u3 = zero_like(v[0]);
    std::array<std::size_t, 3> t3{0, 1, 2};
    do {
        const Wavefield1D& term = mw.terms.triple(t3[0], t3[1], t3[2]);
        for (std::size_t m = 0; m < mw.u3.p.size(); ++m) mw.u3.p[m] += term.p[m];
    } while (std::next_permutation(t3.begin(), t3.end()));
    mw.u3_trace = solver::dn_trace(med, mw.u3, trace_stencil_points);

    // U4: sum of a4 over all 24 ordered quadruples.
    if (j == 4) {
        mw.has_u4 = true;
        mw.u4 = zero_like(v[0]);
        for (const auto& [key, term] : mw.terms.fourth)
            for (std::size_t m = 0; m < mw.u4.p.size(); ++m) mw.u4.p[m] += term.p[m];
        mw.u4_trace = solver::dn_trace(med, mw.u4, trace_stencil_points);
    }
    return mw;
}

Wavefield1D fd_mixed_field(const Medium1D& med, const MultiSource& sources, double t_final,
                           const SolveOptions& opt, const FdOptions& fd) {
    const std::size_t j = sources.order();
    if (j < 2 || j > 4)
        throw std::invalid_argument("fd_mixed_derivative: need 2 to 4 sources");
    const std::vector<double> eps = fd_epsilons(sources);
    Wavefield1D base = fd_field_pass(med, sources, t_final, opt, eps);
    if (!fd.richardson) return base;
    std::vector<double> half = eps;
    for (double& e : half) e *= 0.5;
    Wavefield1D fine = fd_field_pass(med, sources, t_final, opt, half);
    for (std::size_t k = 0; k < fine.p.size(); ++k)
        fine.p[k] = (4.0 * fine.p[k] - base.p[k]) / 3.0;
    return fine;
}

DNTrace fd_mixed_trace(const Medium1D& med, const MultiSource& sources, double t_final,
                       const SolveOptions& opt, const FdOptions& fd) {
    const std::size_t j = sources.order();
    if (j < 2 || j > 4)
        throw std::invalid_argument("fd_mixed_derivative: need 2 to 4 sources");
    const std::vector<double> eps = fd_epsilons(sources);
    DNTrace base = fd_trace_pass(med, sources, t_final, opt, eps, fd.trace_stencil_points);
    if (!fd.richardson) return base;
    std::vector<double> half = eps;
    for (double& e : half) e *= 0.5;
    DNTrace fine = fd_trace_pass(med, sources, t_final, opt, half, fd.trace_stencil_points);
    for (std::size_t k = 0; k < fine.left.size(); ++k) {
        fine.left[k] = (4.0 * fine.left[k] - base.left[k]) / 3.0;
        fine.right[k] = (4.0 * fine.right[k] - base.right[k]) / 3.0;
    }
    return fine;
}

double field_l2(const Wavefield1D& f) {
    double s = 0.0;
    for (double x : f.p) s += x * x;
    return std::sqrt(s / static_cast<double>(f.p.size()));
}

double field_l2_distance(const Wavefield1D& a, const Wavefield1D& b) {
    require_same_grid(a, b, "field_l2_distance");
    double s = 0.0;
    for (std::size_t k = 0; k < a.p.size(); ++k) {
        const double d = a.p[k] - b.p[k];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.p.size()));
}

}  // namespace ws::lin
