#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ws::solver {

namespace {

// One-sided first-derivative stencils at the boundary node, orders 2..6.
// Index by number of points; weights multiply nodes 0..k-1 inward, over dx.
const std::vector<double>& onesided_weights(int points) {
    static const std::vector<double> w3{-3.0 / 2, 2.0, -1.0 / 2};
    static const std::vector<double> w4{-11.0 / 6, 3.0, -3.0 / 2, 1.0 / 3};
    static const std::vector<double> w5{-25.0 / 12, 4.0, -3.0, 4.0 / 3, -1.0 / 4};
    static const std::vector<double> w6{-137.0 / 60, 5.0, -5.0, 10.0 / 3, -5.0 / 4, 1.0 / 5};
    static const std::vector<double> w7{-49.0 / 20, 6.0, -15.0 / 2, 20.0 / 3, -15.0 / 4,
                                        6.0 / 5, -1.0 / 6};
    switch (points) {
        case 3: return w3;
        case 4: return w4;
        case 5: return w5;
        case 6: return w6;
        case 7: return w7;
        default: throw std::invalid_argument("dn_trace: stencil width must be 3..7 points");
    }
}

}  // namespace

Medium1D Medium1D::uniform(std::size_t n_cells, double c, double b0, double b1, double h,
                           double beta2, double beta3, double beta4) {
    if (n_cells < 8) throw std::invalid_argument("Medium1D: need at least 8 cells");
    if (c <= 0.0) throw std::invalid_argument("Medium1D: speed must be positive");
    Medium1D m;
    m.n_cells = n_cells;
    const std::size_t n = n_cells + 1;
    m.x.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        m.x[i] = static_cast<double>(i) / static_cast<double>(n_cells);
    m.c.assign(n, c);
    m.b0.assign(n, b0);
    m.b1.assign(n, b1);
    m.h.assign(n, h);
    m.beta2.assign(n, beta2);
    m.beta3.assign(n, beta3);
    m.beta4.assign(n, beta4);
    return m;
}

double Medium1D::max_speed() const {
    double m = 0.0;
    for (double v : c) m = std::max(m, v);
    return m;
}

double c6_pulse(double t, double t0, double tau, double amplitude) {
    if (t <= t0 || t >= t0 + tau) return 0.0;
    const double s = std::sin(M_PI * (t - t0) / tau);
    const double s2 = s * s;
    return amplitude * s2 * s2 * s2 * s2;
}

namespace {

struct GridSetup {
    std::size_t n_nodes;
    std::size_t n_steps;
    double dx;
    double dt;
};

GridSetup make_grid(const Medium1D& med, double t_final, const SolveOptions& opt) {
    if (t_final <= 0.0) throw std::invalid_argument("solve: t_final must be positive");
    if (opt.cfl <= 0.0 || opt.cfl > 1.0)
        throw CflError("solve: cfl must lie in (0, 1], got " + std::to_string(opt.cfl),
                       med.dx() / med.max_speed());
    GridSetup g;
    g.n_nodes = med.x.size();
    g.dx = med.dx();
    const double dt_max = g.dx / med.max_speed();
    double dt = opt.cfl * dt_max;
    g.n_steps = static_cast<std::size_t>(std::ceil(t_final / dt));
    g.dt = t_final / static_cast<double>(g.n_steps);
    if (g.dt > dt_max)
        throw CflError("solve: dt " + std::to_string(g.dt) + " violates CFL bound " +
                           std::to_string(dt_max),
                       dt_max);
    return g;
}

// Central first/second differences of a node array, one-sided second-order at
// the ends. Used for the geometric c c_x coefficient and discrete transforms.
std::vector<double> dx_central(const std::vector<double>& u, double dx) {
    const std::size_t n = u.size();
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dx);
    return d;
}

// F1(p) = 2 beta2 + 3 beta3 p + 4 beta4 p^2 (derivative of the power series
// coefficient in the quasilinear rearrangement).
inline double f1_coeff(const Medium1D& med, std::size_t i, double p) {
    return 2.0 * med.beta2[i] + 3.0 * med.beta3[i] * p + 4.0 * med.beta4[i] * p * p;
}

// Shared leapfrog sweep. `nl` supplies the lagged nonlinear forcing and the
// quasilinear d_tt coefficient per (level, node); null for linear solves.
struct NonlinearTerms {
    const Wavefield1D* lagged = nullptr;  // previous Picard iterate
    const Medium1D* med = nullptr;

    // sum_m beta_{m+1} D_tt(p^{m+1}) - F1(p) p D_tt(p) at (level, node).
    double forcing(std::size_t n, std::size_t i, double dt) const {
        const Wavefield1D& pk = *lagged;
        const double pm = pk.at(n - 1, i), p0 = pk.at(n, i), pp = pk.at(n + 1, i);
        auto dtt_pow = [&](int m) {
            return (std::pow(pp, m) - 2.0 * std::pow(p0, m) + std::pow(pm, m)) / (dt * dt);
        };
        const double dtt = (pp - 2.0 * p0 + pm) / (dt * dt);
        return med->beta2[i] * dtt_pow(2) + med->beta3[i] * dtt_pow(3) +
               med->beta4[i] * dtt_pow(4) - f1_coeff(*med, i, p0) * p0 * dtt;
    }

    double dtt_coeff(std::size_t n, std::size_t i) const {
        const double p0 = lagged->at(n, i);
        return 1.0 - f1_coeff(*med, i, p0) * p0;
    }
};

Wavefield1D leapfrog_sweep(const Medium1D& med, const BoundaryData& left,
                           const BoundaryData& right, const GridSetup& g,
                           const Forcing* forcing, const NonlinearTerms* nl,
                           double quasilinear_cap) {
    const std::size_t nn = g.n_nodes;
    Wavefield1D f;
    f.n_nodes = nn;
    f.n_levels = g.n_steps + 1;
    f.dt = g.dt;
    f.t.resize(f.n_levels);
    for (std::size_t n = 0; n < f.n_levels; ++n) f.t[n] = static_cast<double>(n) * g.dt;
    f.p.assign(f.n_levels * nn, 0.0);
    for (std::size_t n = 0; n < f.n_levels; ++n) {
        f.at(n, 0) = left(f.t[n]);
        f.at(n, nn - 1) = right(f.t[n]);
    }

    const std::vector<double> cx = dx_central(med.c, g.dx);
    const double dt2 = g.dt * g.dt;
    const double inv_dx2 = 1.0 / (g.dx * g.dx);
    const double inv_2dx = 1.0 / (2.0 * g.dx);

    // Zero initial data: levels 0 and 1 both vanish in the interior (p and
    // d_t p are zero at t = 0, and the first leapfrog step preserves that
    // to the scheme's order because the forcing vanishes for t <= 0).
    for (std::size_t n = 1; n + 1 < f.n_levels; ++n) {
        for (std::size_t i = 1; i + 1 < nn; ++i) {
            const double pl = f.at(n, i - 1), p0 = f.at(n, i), pr = f.at(n, i + 1);
            const double c = med.c[i];
            double rhs = c * c * (pr - 2.0 * p0 + pl) * inv_dx2 +
                         (c * cx[i] + c * c * med.b1[i]) * (pr - pl) * inv_2dx -
                         med.h[i] * p0;
            if (forcing) rhs += (*forcing)(f.t[n], i);
            double a = 1.0;
            if (nl) {
                rhs += nl->forcing(n, i, g.dt);
                a = nl->dtt_coeff(n, i);
                if (std::abs(1.0 - a) > quasilinear_cap)
                    throw DivergedError(
                        "solve_nonlinear: quasilinear coefficient |F1(p) p| = " +
                            std::to_string(std::abs(1.0 - a)) + " exceeds cap " +
                            std::to_string(quasilinear_cap),
                        0.0);
            }
            const double b0h = 0.5 * med.b0[i] * g.dt;
            const double num = a * (2.0 * p0 - f.at(n - 1, i)) + dt2 * rhs + b0h * f.at(n - 1, i);
            f.at(n + 1, i) = num / (a + b0h);
        }
    }
    return f;
}

}  // namespace

Wavefield1D solve_linear(const Medium1D& med, const BoundaryData& left,
                         const BoundaryData& right, double t_final, const SolveOptions& opt,
                         const Forcing* forcing) {
    const GridSetup g = make_grid(med, t_final, opt);
    Wavefield1D f = leapfrog_sweep(med, left, right, g, forcing, nullptr, opt.quasilinear_cap);
    f.picard_iterations = 1;
    return f;
}

Wavefield1D solve_linear_pinned(const Medium1D& med, const BoundaryData& left,
                                const BoundaryData& right, std::size_t n_steps, double dt,
                                const Forcing* forcing) {
    if (n_steps < 2) throw std::invalid_argument("solve_linear_pinned: need at least 2 steps");
    if (dt <= 0.0) throw std::invalid_argument("solve_linear_pinned: dt must be positive");
    const double dt_max = med.dx() / med.max_speed();
    if (dt > dt_max)
        throw CflError("solve_linear_pinned: dt " + std::to_string(dt) +
                           " violates CFL bound " + std::to_string(dt_max),
                       dt_max);
    GridSetup g;
    g.n_nodes = med.x.size();
    g.n_steps = n_steps;
    g.dx = med.dx();
    g.dt = dt;
    Wavefield1D f = leapfrog_sweep(med, left, right, g, forcing, nullptr, 0.5);
    f.picard_iterations = 1;
    return f;
}

Wavefield1D solve_nonlinear(const Medium1D& med, const BoundaryData& left,
                            const BoundaryData& right, double t_final, const SolveOptions& opt,
                            const Forcing* forcing) {
    const GridSetup g = make_grid(med, t_final, opt);

    Wavefield1D p = leapfrog_sweep(med, left, right, g, forcing, nullptr, opt.quasilinear_cap);
    std::vector<double> ratios;
    std::vector<double> updates;
    double prev_update = -1.0;
    for (int it = 0; it < opt.max_picard; ++it) {
        NonlinearTerms nl{&p, &med};
        Wavefield1D q = leapfrog_sweep(med, left, right, g, forcing, &nl, opt.quasilinear_cap);
        double update = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < q.p.size(); ++k) {
            update = std::max(update, std::abs(q.p[k] - p.p[k]));
            scale = std::max(scale, std::abs(q.p[k]));
        }
        if (prev_update > 0.0) ratios.push_back(update / prev_update);
        prev_update = update;
        updates.push_back(update);
        p = std::move(q);
        p.picard_iterations = it + 2;  // counting the linear bootstrap sweep
        p.contraction_ratios = ratios;
        p.picard_updates = updates;
        p.final_update = update;
        // The achievable iterate agreement is bounded below by the rounding
        // accumulated over one sweep; demanding less than that would spin on
        // noise forever, so the requested tolerance is clamped to the floor.
        const double norm_floor = std::max(scale, 1e-300);
        const double noise_floor = std::numeric_limits<double>::epsilon() *
                                   static_cast<double>(g.n_steps + 1) * norm_floor;
        if (update <= std::max(opt.picard_rtol * norm_floor, noise_floor)) return p;
        if (ratios.size() >= 3 && update > 10.0 * noise_floor) {
            const std::size_t m = ratios.size();
            if (ratios[m - 1] > 1.0 && ratios[m - 2] > 1.0 && ratios[m - 3] > 1.0)
                throw DivergedError("solve_nonlinear: Picard iteration stopped contracting",
                                    ratios[m - 1]);
        }
    }
    throw DivergedError("solve_nonlinear: no convergence within max_picard sweeps",
                        ratios.empty() ? 0.0 : ratios.back());
}

DNTrace dn_trace(const Medium1D& med, const Wavefield1D& field, int stencil_points) {
    const auto& w = onesided_weights(stencil_points);
    if (field.n_nodes < w.size())
        throw std::invalid_argument("dn_trace: grid too small for stencil");
    const double dx = med.dx();
    const std::size_t nn = field.n_nodes;

    DNTrace tr;
    tr.t = field.t;
    tr.left.resize(field.n_levels);
    tr.right.resize(field.n_levels);
    const double cl = med.c.front(), cr = med.c.back();
    const double bl = med.b1.front(), br = med.b1.back();
    for (std::size_t n = 0; n < field.n_levels; ++n) {
        double dl = 0.0, dr = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            dl += w[j] * field.at(n, j);
            dr -= w[j] * field.at(n, nn - 1 - j);
        }
        dl /= dx;
        dr /= dx;
        // nu = -c d_x at x=0 and +c d_x at x=1; <b, nu> = -+ c b1.
        tr.left[n] = -cl * dl - 0.5 * cl * bl * field.at(n, 0);
        tr.right[n] = cr * dr + 0.5 * cr * br * field.at(n, nn - 1);
    }
    return tr;
}

namespace {

double trapezoid_l2(const std::vector<double>& t, const std::vector<double>& a,
                    const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t n = 0; n + 1 < t.size(); ++n) {
        const double fa = a[n] * a[n] + b[n] * b[n];
        const double fb = a[n + 1] * a[n + 1] + b[n + 1] * b[n + 1];
        acc += 0.5 * (fa + fb) * (t[n + 1] - t[n]);
    }
    return std::sqrt(acc);
}

}  // namespace

double trace_l2_distance(const DNTrace& a, const DNTrace& b) {
    if (a.t.size() != b.t.size())
        throw std::invalid_argument("trace_l2_distance: traces on different time grids");
    std::vector<double> dl(a.t.size()), dr(a.t.size());
    for (std::size_t n = 0; n < a.t.size(); ++n) {
        dl[n] = a.left[n] - b.left[n];
        dr[n] = a.right[n] - b.right[n];
    }
    return trapezoid_l2(a.t, dl, dr);
}

double trace_l2_norm(const DNTrace& a) { return trapezoid_l2(a.t, a.left, a.right); }

double observed_order(const std::vector<double>& h, const std::vector<double>& err) {
    if (h.size() != err.size() || h.size() < 2)
        throw std::invalid_argument("observed_order: need matching lists of >= 2 grids");
    // Least-squares slope of log(err) against log(h).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double lx = std::log(h[k]), ly = std::log(err[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double apply_box_g(const Medium1D& med, const Wavefield1D& field, std::size_t level,
                   std::size_t node) {
    if (level == 0 || level + 1 >= field.n_levels || node == 0 || node + 1 >= field.n_nodes)
        throw std::invalid_argument("apply_box_g: interior grid points only");
    const double dx = med.dx(), dt = field.dt;
    const double dtt =
        (field.at(level + 1, node) - 2.0 * field.at(level, node) + field.at(level - 1, node)) /
        (dt * dt);
    const double dxx =
        (field.at(level, node + 1) - 2.0 * field.at(level, node) + field.at(level, node - 1)) /
        (dx * dx);
    const double dxc =
        (field.at(level, node + 1) - field.at(level, node - 1)) / (2.0 * dx);
    const double c = med.c[node];
    const double cx = (med.c[node + 1] - med.c[node - 1]) / (2.0 * dx);
    return dtt - c * c * dxx - c * cx * dxc;
}

double pde_residual_max(const Medium1D& med, const Wavefield1D& field, const Forcing* forcing) {
    const double dx = med.dx(), dt = field.dt;
    double worst = 0.0;
    for (std::size_t n = 1; n + 1 < field.n_levels; ++n) {
        for (std::size_t i = 1; i + 1 < field.n_nodes; ++i) {
            const double pm = field.at(n - 1, i), p0 = field.at(n, i), pp = field.at(n + 1, i);
            const double dtt = (pp - 2.0 * p0 + pm) / (dt * dt);
            const double dxx =
                (field.at(n, i + 1) - 2.0 * p0 + field.at(n, i - 1)) / (dx * dx);
            const double dxc = (field.at(n, i + 1) - field.at(n, i - 1)) / (2.0 * dx);
            const double c = med.c[i];
            const double cx = i + 1 < med.c.size() && i >= 1
                                  ? (med.c[i + 1] - med.c[i - 1]) / (2.0 * dx)
                                  : 0.0;
            const double dtp = (pp - pm) / (2.0 * dt);
            auto dtt_pow = [&](int m) {
                return (std::pow(pp, m) - 2.0 * std::pow(p0, m) + std::pow(pm, m)) / (dt * dt);
            };
            double r = dtt - c * c * dxx - c * cx * dxc + med.b0[i] * dtp -
                       c * c * med.b1[i] * dxc + med.h[i] * p0 - med.beta2[i] * dtt_pow(2) -
                       med.beta3[i] * dtt_pow(3) - med.beta4[i] * dtt_pow(4);
            if (forcing) r -= (*forcing)(field.t[n], i);
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

}  // namespace ws::solver
