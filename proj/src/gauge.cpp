#include "gauge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ws::gauge {

namespace {

// Central first derivative with one-sided second-order ends.
std::vector<double> dx_grid(const std::vector<double>& u, double hx) {
    const std::size_t n = u.size();
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (u[i + 1] - u[i - 1]) / (2.0 * hx);
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * hx);
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * hx);
    return d;
}

// Central second derivative with one-sided second-order ends.
std::vector<double> dxx_grid(const std::vector<double>& u, double hx) {
    const std::size_t n = u.size();
    std::vector<double> d(n);
    const double inv = 1.0 / (hx * hx);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv;
    d[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) * inv;
    d[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) * inv;
    return d;
}

// Sample lookup for grid-backed gauges: the closure may only be evaluated at
// the nodes it was built from.
std::size_t sample_index(const std::vector<double>& x, double q) {
    const double span = x.back() - x.front();
    auto it = std::lower_bound(x.begin(), x.end(), q - 1e-12 * span);
    if (it == x.end() || std::abs(*it - q) > 1e-12 * span)
        throw std::invalid_argument(
            "GaugeFunction::from_samples: evaluated off its sample grid at x = " +
            std::to_string(q));
    return static_cast<std::size_t>(it - x.begin());
}

}  // namespace

GaugeFunction GaugeFunction::identity() {
    GaugeFunction g;
    g.value = [](double) { return 1.0; };
    g.dlog = [](double) { return 0.0; };
    g.dlog2 = [](double) { return 0.0; };
    return g;
}

GaugeFunction GaugeFunction::one_plus_sine(double amplitude) {
    if (std::abs(amplitude) >= 1.0)
        throw std::invalid_argument("one_plus_sine: |amplitude| must be < 1 to stay positive");
    const double pi = std::numbers::pi;
    GaugeFunction g;
    g.value = [amplitude, pi](double x) { return 1.0 + amplitude * std::sin(pi * x); };
    g.dlog = [amplitude, pi](double x) {
        return amplitude * pi * std::cos(pi * x) / (1.0 + amplitude * std::sin(pi * x));
    };
    g.dlog2 = [amplitude, pi](double x) {
        const double r = 1.0 + amplitude * std::sin(pi * x);
        const double rp = amplitude * pi * std::cos(pi * x);
        const double rpp = -amplitude * pi * pi * std::sin(pi * x);
        return rpp / r - (rp / r) * (rp / r);
    };
    return g;
}

GaugeFunction GaugeFunction::from_samples(std::vector<double> x, std::vector<double> rho) {
    if (x.size() != rho.size() || x.size() < 4)
        throw std::invalid_argument("from_samples: need matching sample arrays (>= 4 nodes)");
    const double hx = x[1] - x[0];
    std::vector<double> dl = dx_grid(rho, hx);
    std::vector<double> dl2 = dxx_grid(rho, hx);
    for (std::size_t i = 0; i < x.size(); ++i) {
        dl[i] /= rho[i];                       // (log rho)' = rho'/rho
        dl2[i] = dl2[i] / rho[i] - dl[i] * dl[i];  // (log rho)'' = rho''/rho - (rho'/rho)^2
    }
    GaugeFunction g;
    g.value = [x, rho](double q) { return rho[sample_index(x, q)]; };
    g.dlog = [x, dl](double q) { return dl[sample_index(x, q)]; };
    g.dlog2 = [x, dl2](double q) { return dl2[sample_index(x, q)]; };
    return g;
}

GaugeFunction GaugeFunction::inverse() const {
    GaugeFunction g;
    // negating the shared log-derivative closures makes round trips cancel
    // exactly instead of through recomputed quotients
    auto v = value;
    g.value = [v](double x) { return 1.0 / v(x); };
    auto l = dlog;
    g.dlog = [l](double x) { return -l(x); };
    auto l2 = dlog2;
    g.dlog2 = [l2](double x) { return -l2(x); };
    g.time_dependent = time_dependent;
    return g;
}

GaugeFunction GaugeFunction::product(const GaugeFunction& other) const {
    GaugeFunction g;
    auto v1 = value, v2 = other.value;
    g.value = [v1, v2](double x) { return v1(x) * v2(x); };
    auto l1 = dlog, m1 = other.dlog;
    g.dlog = [l1, m1](double x) { return l1(x) + m1(x); };
    auto l2 = dlog2, m2 = other.dlog2;
    g.dlog2 = [l2, m2](double x) { return l2(x) + m2(x); };
    g.time_dependent = time_dependent || other.time_dependent;
    return g;
}

void GaugeFunction::validate(const Medium1D& med) const {
    if (!value || !dlog || !dlog2)
        throw std::invalid_argument("GaugeFunction: missing closures");
    for (double xi : med.x)
        if (!(value(xi) > 0.0))
            throw std::invalid_argument("GaugeFunction: rho must be positive everywhere, got " +
                                        std::to_string(value(xi)) + " at x = " +
                                        std::to_string(xi));
    const double r0 = value(med.x.front()), r1 = value(med.x.back());
    if (std::abs(r0 - 1.0) > 1e-12 || std::abs(r1 - 1.0) > 1e-12)
        throw std::invalid_argument("GaugeFunction: rho must equal 1 at the boundary (got " +
                                    std::to_string(r0) + ", " + std::to_string(r1) + ")");
}

Medium1D apply_gauge(const Medium1D& med, const GaugeFunction& g, bool strict) {
    g.validate(med);
    if (strict && g.time_dependent)
        throw std::invalid_argument(
            "apply_gauge: time-dependent gauge refused in strict mode (the invariance lemma "
            "assumes a static multiplier)");
    Medium1D out = med;
    const std::vector<double> cx = dx_grid(med.c, med.dx());
    for (std::size_t i = 0; i < med.x.size(); ++i) {
        const double xi = med.x[i];
        const double r = g.value(xi);
        const double l = g.dlog(xi);
        const double l2 = g.dlog2(xi);
        const double c = med.c[i];
        // spatial pairing <b, rho^{-1} d rho> = -c^2 b1 (log rho)'  (static gauge)
        const double pairing = -c * c * med.b1[i] * l;
        // rho^{-1} box_g rho = -c^2 (l' + l^2) - c c' l
        const double box_term = -c * c * (l2 + l * l) - c * cx[i] * l;
        out.b1[i] = med.b1[i] + 2.0 * l;
        out.h[i] = med.h[i] + pairing + box_term;
        out.beta2[i] = med.beta2[i] * r;
        out.beta3[i] = med.beta3[i] * (r * r);
        out.beta4[i] = med.beta4[i] * (r * r * r);
    }
    return out;
}

GaugeTransformResult gauge_solution_transform(const Medium1D& med, const GaugeFunction& g,
                                              const Wavefield1D& p, bool check_residual,
                                              double tolerance_factor) {
    g.validate(med);
    if (g.time_dependent)
        throw std::invalid_argument("gauge_solution_transform: time-dependent gauge unsupported");
    if (p.n_nodes != med.x.size())
        throw std::invalid_argument("gauge_solution_transform: field does not match medium grid");

    GaugeTransformResult res;
    res.field = p;
    for (std::size_t i = 0; i < p.n_nodes; ++i) {
        const double r = g.value(med.x[i]);
        for (std::size_t n = 0; n < p.n_levels; ++n)
            res.field.at(n, i) = p.at(n, i) / r;
    }
    const Medium1D gauged = apply_gauge(med, g);
    res.residual_original = solver::pde_residual_max(med, p);
    res.residual_gauged = solver::pde_residual_max(gauged, res.field);
    if (check_residual && res.residual_gauged > tolerance_factor * res.residual_original)
        throw std::runtime_error(
            "gauge_solution_transform: transformed field misses the gauged equation (residual " +
            std::to_string(res.residual_gauged) + " vs original " +
            std::to_string(res.residual_original) + ")");
    return res;
}

DnDiscrepancyReport dn_discrepancy(const MediumFactory& make_medium, const GaugeFunction& g,
                                   const solver::BoundaryData& left,
                                   const solver::BoundaryData& right, double t_final,
                                   const std::vector<std::size_t>& grid_ladder,
                                   const solver::SolveOptions& opt, int trace_stencil_points,
                                   bool with_negative_control) {
    if (grid_ladder.empty())
        throw std::invalid_argument("dn_discrepancy: empty grid ladder");

    DnDiscrepancyReport report;
    std::vector<double> widths;
    for (std::size_t n_cells : grid_ladder) {
        const Medium1D med = make_medium(n_cells);
        const Medium1D gauged = apply_gauge(med, g);
        const Wavefield1D f1 = solver::solve_nonlinear(med, left, right, t_final, opt);
        const Wavefield1D f2 = solver::solve_nonlinear(gauged, left, right, t_final, opt);
        const solver::DNTrace t1 = solver::dn_trace(med, f1, trace_stencil_points);
        const solver::DNTrace t2 = solver::dn_trace(gauged, f2, trace_stencil_points);
        const double rel = solver::trace_l2_distance(t1, t2) / solver::trace_l2_norm(t1);
        report.grids.push_back(n_cells);
        report.relative.push_back(rel);
        widths.push_back(med.dx());
    }

    const bool degenerate =
        std::any_of(report.relative.begin(), report.relative.end(),
                    [](double r) { return !(r > 0.0); });
    report.order = (report.relative.size() >= 2 && !degenerate)
                       ? solver::observed_order(widths, report.relative)
                       : 0.0;

    if (with_negative_control) {
        const std::size_t n_cells = grid_ladder.back();
        const Medium1D med = make_medium(n_cells);
        Medium1D spoiled = apply_gauge(med, g);
        for (double& hv : spoiled.h) hv += 0.1;  // not a gauge transform of anything
        const Wavefield1D f1 = solver::solve_nonlinear(med, left, right, t_final, opt);
        const Wavefield1D f2 = solver::solve_nonlinear(spoiled, left, right, t_final, opt);
        const solver::DNTrace t1 = solver::dn_trace(med, f1, trace_stencil_points);
        const solver::DNTrace t2 = solver::dn_trace(spoiled, f2, trace_stencil_points);
        report.control_relative =
            solver::trace_l2_distance(t1, t2) / solver::trace_l2_norm(t1);
        report.control_ratio = report.relative.back() > 0.0
                                   ? report.control_relative / report.relative.back()
                                   : 0.0;
    }
    return report;
}

}  // namespace ws::gauge
