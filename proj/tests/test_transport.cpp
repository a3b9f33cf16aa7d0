#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "geometry.hpp"
#include "transport.hpp"

using namespace ws;
using namespace ws::transport;

namespace {

Bicharacteristic straight_ray(double zeta0, const Vec3& dir, double s_max, double ds = 1e-3) {
    const ProductMetric metric(SpeedProfile::constant(1.0));
    const SpacetimePoint x0{0.0, {0.5, 0.5, 0.5}};
    const Covector z0 = metric.null_covector(x0.x, zeta0, dir);
    StepControl ctl;
    ctl.ds = ds;
    return trace_bicharacteristic(metric, x0, z0, s_max, ctl);
}

}  // namespace

TEST_CASE("a constant time-like one-form transports by exp(beta dt/ds s / 2)") {
    // b = beta dt with zeta0 = -1/2, so dt/ds = -2 zeta0 = 1 and the ratio
    // over a parameter span L is exactly exp(beta L / 2).
    const double beta = 0.7;
    const OneFormField b = OneFormField::constant(beta, {0.0, 0.0, 0.0});
    const Bicharacteristic ray = straight_ray(-0.5, {1.0, 0.0, 0.0}, 0.9);

    const double got = transport_ratio(b, ray);
    const double expected = std::exp(0.5 * beta * 0.9);
    CHECK(std::abs(got - expected) / expected < 1e-13);

    // The ODE oracle agrees to its own integration accuracy.
    const double ode = transport_ode_ratio(b, ray, 0.0, 0.9);
    CHECK(std::abs(ode - expected) / expected < 1e-12);
}

TEST_CASE("quadrature and ODE transport agree on randomized one-forms") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> coef(-0.8, 0.8);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    for (int trial = 0; trial < 40; ++trial) {
        Vec3 dir{unit(rng), unit(rng), unit(rng)};
        const double n = norm(dir);
        if (n < 0.3) continue;
        dir = (1.0 / n) * dir;
        const Bicharacteristic ray = straight_ray(-1.0, dir, 0.7);

        const double a0 = coef(rng), a1 = coef(rng), a2 = coef(rng), a3 = coef(rng);
        OneFormField b;
        b.time_part = [a0](const SpacetimePoint& p) { return a0 * std::cos(p.x[0] + p.t); };
        b.space_part = [a1, a2, a3](const SpacetimePoint& p) {
            return Vec3{a1 * std::sin(2.0 * p.x[1]), a2 * p.x[2], a3 * std::cos(p.x[0])};
        };

        const double quad = transport_ratio(b, ray);
        const double ode = transport_ode_ratio(b, ray, ray.front().s, ray.back().s);
        CHECK(std::abs(quad - ode) / std::abs(ode) < 1e-10);
    }
}

TEST_CASE("transport concatenates multiplicatively across a midpoint") {
    OneFormField b;
    b.time_part = [](const SpacetimePoint& p) { return 0.4 * std::sin(3.0 * p.t); };
    b.space_part = [](const SpacetimePoint& p) {
        return Vec3{0.2 * p.x[1], -0.3 * std::cos(p.x[0]), 0.1};
    };
    const Bicharacteristic ray = straight_ray(-1.0, {0.6, 0.8, 0.0}, 0.8);

    const std::size_t mid = ray.size() / 2;
    const std::size_t last = ray.size() - 1;
    const double whole = transport_ratio(b, ray, 0, last);
    const double split = transport_ratio(b, ray, 0, mid) * transport_ratio(b, ray, mid, last);
    CHECK(std::abs(whole - split) / std::abs(whole) < 1e-13);
}

TEST_CASE("exact one-forms integrate to potential differences") {
    auto phi = [](const SpacetimePoint& p) {
        return std::sin(p.t) * p.x[0] + 0.3 * p.x[1] * p.x[1] - 0.2 * p.x[2];
    };
    const OneFormField b = OneFormField::from_potential(
        phi, [](const SpacetimePoint& p) { return std::cos(p.t) * p.x[0]; },
        [](const SpacetimePoint& p) {
            return Vec3{std::sin(p.t), 0.6 * p.x[1], -0.2};
        });
    CHECK(b.is_exact);

    const Bicharacteristic ray = straight_ray(-1.0, {0.0, 0.6, 0.8}, 0.5);
    const std::vector<double> cum = pairing_cumulative(b, ray);
    const double diff = phi(ray.back().point) - phi(ray.front().point);
    CHECK(std::abs(cum.back() - diff) < 1e-10);

    // And the transport ratio is the exponential of half that difference.
    CHECK(std::abs(transport_ratio(b, ray) - std::exp(0.5 * diff)) < 1e-10);
}

TEST_CASE("corrected cumulative splits consistently and is fourth order") {
    // Splitting at an interior node only changes the endpoint-correction
    // stencils at the junction, so recomputed halves agree with the whole to
    // quadrature order (du^4), not exactly.
    std::vector<double> g;
    const double du = 0.01;
    for (int k = 0; k <= 200; ++k) g.push_back(std::sin(0.7 + 0.05 * k));
    const std::vector<double> whole = corrected_cumulative(g, du);

    const std::vector<double> head(g.begin(), g.begin() + 101);
    const std::vector<double> tail(g.begin() + 100, g.end());
    const std::vector<double> c_head = corrected_cumulative(head, du);
    const std::vector<double> c_tail = corrected_cumulative(tail, du);
    CHECK(std::abs(whole[100] - c_head.back()) < 1e-8);
    CHECK(std::abs(whole.back() - (c_head.back() + c_tail.back())) < 1e-8);

    // Fourth order: halving du shrinks the quadrature error by ~16.
    auto integral_error = [](int n) {
        const double a = 0.0, b = 1.0;
        const double du = (b - a) / n;
        std::vector<double> g;
        for (int k = 0; k <= n; ++k) g.push_back(std::exp(std::sin(3.0 * (a + k * du))));
        const double exact = 2.018889845184384;  // quadrature reference, converged
        return std::abs(corrected_cumulative(g, du).back() - exact);
    };
    const double e1 = integral_error(50);
    const double e2 = integral_error(100);
    CHECK(e1 / e2 > 10.0);
}

TEST_CASE("pairing profiles interpolate the cumulative smoothly") {
    OneFormField b;
    b.time_part = [](const SpacetimePoint& p) { return 0.3 * std::cos(2.0 * p.t); };
    b.space_part = [](const SpacetimePoint& p) { return Vec3{0.5 * p.x[1], 0.1, 0.0}; };

    const Bicharacteristic coarse = straight_ray(-1.0, {1.0, 0.0, 0.0}, 0.6, 2e-3);
    const Bicharacteristic fine = straight_ray(-1.0, {1.0, 0.0, 0.0}, 0.6, 2.5e-4);
    const PairingProfile profile(b, coarse);
    const PairingProfile reference(b, fine);

    CHECK(profile.front_parameter() == doctest::Approx(0.0));
    CHECK(profile.back_parameter() == doctest::Approx(0.6).epsilon(1e-9));

    // Mid-interval values agree with a much finer quadrature.
    for (double s : {0.1234, 0.3141, 0.4999, 0.5501}) {
        CHECK(std::abs(profile.integral_to(s) - reference.integral_to(s)) < 1e-9);
    }

    // Sample-node values reproduce the cumulative.
    const std::vector<double> cum = pairing_cumulative(b, coarse);
    const std::size_t k = coarse.size() / 3;
    CHECK(std::abs(profile.integral_to(coarse.samples[k].s) - cum[k]) < 1e-13);
}
