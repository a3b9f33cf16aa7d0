#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "gauge.hpp"
#include "solver.hpp"

using namespace ws::solver;
using namespace ws::gauge;

namespace {

BoundaryData zero_data() {
    return [](double) { return 0.0; };
}

double max_field_diff(const Medium1D& a, const Medium1D& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.x.size(); ++i) {
        m = std::max(m, std::abs(a.b1[i] - b.b1[i]));
        m = std::max(m, std::abs(a.h[i] - b.h[i]));
        m = std::max(m, std::abs(a.beta2[i] - b.beta2[i]));
        m = std::max(m, std::abs(a.beta3[i] - b.beta3[i]));
        m = std::max(m, std::abs(a.beta4[i] - b.beta4[i]));
    }
    return m;
}

}  // namespace

TEST_CASE("the identity gauge is a no-op on every coefficient") {
    const Medium1D med = Medium1D::uniform(80, 1.0, 0.1, 0.2, 0.3, 0.5, 0.4, 0.3);
    const Medium1D same = apply_gauge(med, GaugeFunction::identity());
    CHECK(max_field_diff(med, same) == 0.0);
}

TEST_CASE("gauging by rho then 1/rho restores the medium") {
    const Medium1D med = Medium1D::uniform(80, 1.0, 0.0, 0.1, 0.2, 0.5, 0.4);
    const GaugeFunction g = GaugeFunction::one_plus_sine(0.1);
    const Medium1D back = apply_gauge(apply_gauge(med, g), g.inverse());
    CHECK(max_field_diff(med, back) < 1e-12);
}

TEST_CASE("composed gauges match sequential application") {
    const Medium1D med = Medium1D::uniform(80, 1.0, 0.0, 0.0, 0.1, 0.5);
    const GaugeFunction g1 = GaugeFunction::one_plus_sine(0.1);
    const GaugeFunction g2 = GaugeFunction::one_plus_sine(-0.07);
    const Medium1D seq = apply_gauge(apply_gauge(med, g1), g2);
    const Medium1D prod = apply_gauge(med, g1.product(g2));
    CHECK(max_field_diff(seq, prod) < 1e-12);
}

TEST_CASE("the beta coefficients scale by rho^m") {
    const Medium1D med = Medium1D::uniform(64, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0);
    const GaugeFunction g = GaugeFunction::one_plus_sine(0.1);
    const Medium1D gauged = apply_gauge(med, g);
    for (std::size_t i = 0; i < med.x.size(); ++i) {
        const double rho = g.value(med.x[i]);
        CHECK(gauged.beta2[i] == doctest::Approx(rho).epsilon(1e-13));
        CHECK(gauged.beta3[i] == doctest::Approx(rho * rho).epsilon(1e-13));
        CHECK(gauged.beta4[i] == doctest::Approx(rho * rho * rho).epsilon(1e-13));
    }
}

TEST_CASE("sampled gauges reproduce analytic ones on their grid") {
    const Medium1D med = Medium1D::uniform(100);
    const GaugeFunction exact = GaugeFunction::one_plus_sine(0.1);
    std::vector<double> rho;
    for (double x : med.x) rho.push_back(exact.value(x));
    const GaugeFunction sampled = GaugeFunction::from_samples(med.x, rho);
    sampled.validate(med);

    double worst = 0.0;
    for (double x : med.x)
        worst = std::max(worst, std::abs(sampled.dlog(x) - exact.dlog(x)));
    CHECK(worst < 1e-3);  // second-order stencils on h = 1/100
}

TEST_CASE("transformed smooth fields satisfy the gauged equation") {
    const Medium1D med = Medium1D::uniform(120, 1.0, 0.0, 0.0, 0.0);
    const GaugeFunction g = GaugeFunction::one_plus_sine(0.1);

    // Sample an exact traveling-wave solution of the original equation, so
    // both the original and the gauged residuals sit at truncation scale.
    // (A solver output would satisfy its own stencil to machine precision,
    // which no transformed field can match.)
    Wavefield1D f;
    f.n_nodes = med.x.size();
    f.n_levels = 40;
    f.dt = 0.8 * med.dx();
    for (std::size_t n = 0; n < f.n_levels; ++n) f.t.push_back(n * f.dt);
    f.p.resize(f.n_levels * f.n_nodes);
    for (std::size_t n = 0; n < f.n_levels; ++n)
        for (std::size_t i = 0; i < f.n_nodes; ++i)
            f.at(n, i) = std::sin(2.0 * (f.t[n] - med.x[i]) + 0.3);

    const GaugeTransformResult res = gauge_solution_transform(med, g, f);
    CHECK(res.residual_original < 1e-2);
    CHECK(res.residual_gauged <= 10.0 * std::max(res.residual_original, 1e-12));
    // rho^{-1} scaling is pointwise.
    const std::size_t mid = f.n_nodes / 2;
    const double rho = g.value(med.x[mid]);
    CHECK(res.field.at(3, mid) == doctest::Approx(f.at(3, mid) / rho).epsilon(1e-13));
}

TEST_CASE("gauges must be positive and pinned at the boundary") {
    const Medium1D med = Medium1D::uniform(64);
    GaugeFunction bad;
    bad.value = [](double) { return 1.5; };  // not 1 at the boundary
    bad.dlog = [](double) { return 0.0; };
    bad.dlog2 = [](double) { return 0.0; };
    CHECK_THROWS_AS(bad.validate(med), std::invalid_argument);

    GaugeFunction negative;
    negative.value = [](double x) { return 1.0 - 2.0 * std::sin(3.14159265358979 * x); };
    negative.dlog = [](double) { return 0.0; };
    negative.dlog2 = [](double) { return 0.0; };
    CHECK_THROWS_AS(negative.validate(med), std::invalid_argument);

    CHECK_THROWS_AS(GaugeFunction::one_plus_sine(1.0), std::invalid_argument);
}

TEST_CASE("DN discrepancy of a gauged pair falls at second order") {
    auto make_medium = [](std::size_t n) {
        return Medium1D::uniform(n, 1.0, 0.0, 0.0, 0.0, 0.5);
    };
    const GaugeFunction g = GaugeFunction::one_plus_sine(0.1);
    auto left = [](double t) { return c6_pulse(t, 0.0, 0.8, 1e-3); };

    const DnDiscrepancyReport rep =
        dn_discrepancy(make_medium, g, left, zero_data(), 0.8, {50, 100, 200});

    REQUIRE(rep.relative.size() == 3);
    CHECK(rep.relative[1] < rep.relative[0]);
    CHECK(rep.relative[2] < rep.relative[1]);
    // This coarse ladder is still pre-asymptotic and decays faster than the
    // limiting second order; the {100,200,400} ladder settles near 2.1.
    CHECK(rep.order > 1.6);
    CHECK(rep.relative[2] < 1e-6);
    // The non-gauge control must sit far above the gauge discrepancy.
    CHECK(rep.control_ratio > 5.0);
}
