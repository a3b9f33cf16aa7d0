#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <optional>

#include "geometry.hpp"

using namespace ws;

namespace {

double sep(const Vec3& a, const Vec3& b) { return norm(a - b); }

}  // namespace

TEST_CASE("null covectors satisfy the dispersion relation") {
    const ProductMetric metric(SpeedProfile::constant(2.0));
    const Vec3 x{0.3, 0.4, 0.5};
    const Covector z = metric.null_covector(x, -1.0, {0.6, 0.8, 0.0});
    CHECK(std::abs(metric.hamiltonian(x, z)) < 1e-14);
    CHECK(z.zeta0 == -1.0);
    // |zeta| = |zeta0| / c for a lightlike covector.
    CHECK(norm(z.zeta) == doctest::Approx(0.5).epsilon(1e-12));

    const ProductMetric lens(
        SpeedProfile::gaussian_lens(1.0, -0.3, 0.25, {0.5, 0.5, 0.5}));
    const Covector zl = lens.null_covector({0.2, 0.5, 0.5}, -0.7, {0.0, 1.0, 0.0});
    CHECK(std::abs(lens.hamiltonian({0.2, 0.5, 0.5}, zl)) < 1e-14);
}

TEST_CASE("homogeneous rays are straight with speed 2c") {
    const double c = 2.0;
    const ProductMetric metric(SpeedProfile::constant(c));
    const Vec3 dir{0.6, 0.8, 0.0};
    const SpacetimePoint x0{0.0, {0.1, 0.2, 0.3}};
    const Covector z0 = metric.null_covector(x0.x, -1.0, dir);

    const Bicharacteristic ray = trace_bicharacteristic(metric, x0, z0, 0.5);
    CHECK(ray.max_null_drift < 1e-12);

    // dx/ds = 2 c^2 zeta with |zeta| = 1/c, so x moves at rate 2c along dir
    // while dt/ds = -2 zeta0 = 2.
    const RaySample& end = ray.back();
    CHECK(end.s == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(end.point.t == doctest::Approx(1.0).epsilon(1e-12));
    const Vec3 expected = x0.x + (2.0 * c * 0.5) * dir;
    CHECK(sep(end.point.x, expected) < 1e-10);

    // The covector is conserved in a homogeneous medium.
    CHECK(std::abs(end.z.zeta0 - z0.zeta0) < 1e-14);
    CHECK(sep(end.z.zeta, z0.zeta) < 1e-12);

    CHECK_FALSE(first_conjugate_parameter(metric, ray).has_value());
}

TEST_CASE("tracing rejects covectors off the null cone") {
    const ProductMetric metric(SpeedProfile::constant(1.0));
    Covector bad{-1.0, {0.2, 0.0, 0.0}};  // |zeta| != 1
    CHECK_THROWS_AS(trace_bicharacteristic(metric, {0.0, {0.0, 0.0, 0.0}}, bad, 0.1),
                    std::invalid_argument);
}

TEST_CASE("lens rays conserve the Hamiltonian and bend toward slow regions") {
    const ProductMetric metric(
        SpeedProfile::gaussian_lens(1.0, -0.4, 0.25, {0.5, 0.5, 0.5}));
    const SpacetimePoint x0{0.0, {0.05, 0.45, 0.5}};
    const Covector z0 = metric.null_covector(x0.x, -1.0, {1.0, 0.0, 0.0});

    StepControl ctl;
    ctl.ds = 5e-4;
    const Bicharacteristic ray = trace_bicharacteristic(metric, x0, z0, 0.6, ctl);
    CHECK(ray.max_null_drift < 1e-10);

    // Stored velocities agree with the Hamiltonian flow at every sample.
    const RaySample& mid = ray.samples[ray.size() / 2];
    const SpacetimePoint v = metric.flow_velocity(mid.point.x, mid.z);
    CHECK(std::abs(mid.velocity.t - v.t) < 1e-13);
    CHECK(sep(mid.velocity.x, v.x) < 1e-13);

    // The ray starts below the lens center and is pulled toward it.
    CHECK(ray.back().z.zeta[1] > 1e-4);
    CHECK(ray.back().point.x[1] > 0.45);
}

TEST_CASE("the conjugate detector agrees with an explicit ray crossing") {
    const ProductMetric metric(
        SpeedProfile::gaussian_lens(1.0, -0.5, 0.2, {0.5, 0.5, 0.5}));
    // Start slightly off the lens axis: a centered ray focuses both transverse
    // directions at the same parameter, where the Jacobi determinant has a
    // double root and no sign change.
    const SpacetimePoint x0{0.0, {0.0, 0.45, 0.5}};
    StepControl ctl;
    ctl.ds = 5e-4;

    const double s_max = 1.5;
    const Covector za = metric.null_covector(x0.x, -1.0, {1.0, 0.0, 0.0});
    const Bicharacteristic base = trace_bicharacteristic(metric, x0, za, s_max, ctl);

    const double delta = 5e-3;
    const double dn = std::sqrt(1.0 + delta * delta);
    const Covector zb = metric.null_covector(x0.x, -1.0, {1.0 / dn, delta / dn, 0.0});
    const Bicharacteristic tilted = trace_bicharacteristic(metric, x0, zb, s_max, ctl);

    // Oracle: the parameter where the tilted ray re-crosses the base ray.
    double s_cross = -1.0;
    for (std::size_t k = 200; k + 1 < std::min(base.size(), tilted.size()); ++k) {
        const double d0 = tilted.samples[k].point.x[1] - base.samples[k].point.x[1];
        const double d1 = tilted.samples[k + 1].point.x[1] - base.samples[k + 1].point.x[1];
        if (d0 > 0.0 && d1 <= 0.0) {
            s_cross = base.samples[k].s;
            break;
        }
    }
    REQUIRE(s_cross > 0.0);

    const std::optional<double> s_conj = first_conjugate_parameter(metric, base);
    REQUIRE(s_conj.has_value());
    CHECK(std::abs(*s_conj - s_cross) < 0.15);
}

TEST_CASE("box exit parameter brackets the boundary crossing") {
    const ProductMetric metric(SpeedProfile::constant(1.0));
    const BoxDomain box;
    CHECK(box.contains({0.5, 0.5, 0.5}));
    CHECK_FALSE(box.contains({1.5, 0.5, 0.5}));

    const SpacetimePoint x0{0.0, {0.2, 0.5, 0.5}};
    const Covector z0 = metric.null_covector(x0.x, -1.0, {1.0, 0.0, 0.0});
    const Bicharacteristic ray = trace_bicharacteristic(metric, x0, z0, 1.0);

    // x(s) = 0.2 + 2s reaches the face x = 1 at s = 0.4.
    const double s_exit = BoxDomain::exit_parameter(box, ray);
    CHECK(s_exit == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("nearest_index clamps to the sampled span") {
    const ProductMetric metric(SpeedProfile::constant(1.0));
    const SpacetimePoint x0{0.0, {0.5, 0.5, 0.5}};
    const Covector z0 = metric.null_covector(x0.x, -1.0, {0.0, 1.0, 0.0});
    const Bicharacteristic ray = trace_bicharacteristic(metric, x0, z0, 0.1);

    CHECK(ray.nearest_index(-5.0) == 0);
    CHECK(ray.nearest_index(1e9) == ray.size() - 1);
    const std::size_t mid = ray.size() / 2;
    CHECK(ray.nearest_index(ray.samples[mid].s) == mid);
}
