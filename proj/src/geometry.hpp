// Lorentzian product-metric geometry: sound-speed profiles, lightlike
// covectors, Hamiltonian ray tracing (null bicharacteristics), and conjugate
// point detection via the tangent (variational) flow.
//
// The spacetime is R_t x R^d_x with inverse metric acting on covectors as
//   <zeta, eta>_* = -zeta_0 eta_0 + c(x)^2 zeta.eta ,
// so the wave Hamiltonian is H(x, zeta) = -zeta_0^2 + c(x)^2 |zeta|^2 and a
// covector is lightlike when H = 0. The speed c depends on space only.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ws {

constexpr int kSpaceDim = 3;

using Vec3 = std::array<double, 3>;

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& a);
double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);

// A point (t, x) of the spacetime cylinder R x R^3.
struct SpacetimePoint {
    double t = 0.0;
    Vec3 x{0.0, 0.0, 0.0};
};

// A covector (zeta_0, zeta) at some spacetime point.
struct Covector {
    double zeta0 = 0.0;
    Vec3 zeta{0.0, 0.0, 0.0};
};

// Smooth sound-speed profiles c(x) > 0 with analytic gradients. The named
// presets keep experiment configs self-describing and hashable.
class SpeedProfile {
  public:
    enum class Kind { Constant, GaussianLens };

    static SpeedProfile constant(double c0);
    // c(x) = c0 * (1 + amp * exp(-|x - x0|^2 / (2 width^2))).
    static SpeedProfile gaussian_lens(double c0, double amp, double width, const Vec3& center);

    double value(const Vec3& x) const;
    Vec3 gradient(const Vec3& x) const;
    // Hessian of c, row-major, needed by the variational (Jacobi) flow.
    std::array<double, 9> hessian(const Vec3& x) const;

    Kind kind() const { return kind_; }
    bool is_constant() const { return kind_ == Kind::Constant; }
    std::string describe() const;

  private:
    Kind kind_ = Kind::Constant;
    double c0_ = 1.0;
    double amp_ = 0.0;
    double width_ = 1.0;
    Vec3 center_{0.0, 0.0, 0.0};
};

// Product metric -dt^2 + c(x)^{-2}-optical spatial part, exposed through the
// operations the ray and symbol machinery needs.
class ProductMetric {
  public:
    explicit ProductMetric(SpeedProfile speed) : speed_(std::move(speed)) {}

    const SpeedProfile& speed() const { return speed_; }

    // H(x, zeta) = -zeta_0^2 + c^2 |zeta|^2 (principal symbol of the wave op).
    double hamiltonian(const Vec3& x, const Covector& z) const;

    // Inverse-metric pairing of two covectors at x.
    double dual_pairing(const Vec3& x, const Covector& a, const Covector& b) const;

    // Hamiltonian velocity dx/ds = (-2 zeta_0, 2 c^2 zeta).
    SpacetimePoint flow_velocity(const Vec3& x, const Covector& z) const;

    // Rescale the spatial part of z so H(x, z) = 0, keeping zeta_0 fixed.
    Covector project_to_null_cone(const Vec3& x, const Covector& z) const;

    // Lightlike covector with given time component and unit spatial direction.
    Covector null_covector(const Vec3& x, double zeta0, const Vec3& unit_dir) const;

  private:
    SpeedProfile speed_;
};

// Natural (index-free) pairing of a covector with a vector, <b, v> = b_i v^i.
double natural_pairing(const Covector& b, const SpacetimePoint& v);

// One sample of a traced bicharacteristic. velocity is the Hamiltonian flow
// velocity at the sample, stored so downstream quadratures need no re-deriving.
struct RaySample {
    double s = 0.0;            // flow parameter
    SpacetimePoint point;      // (t, x)
    Covector z;                // (zeta_0, zeta)
    SpacetimePoint velocity;   // (dt/ds, dx/ds)
};

struct Bicharacteristic {
    std::vector<RaySample> samples;
    double max_null_drift = 0.0;   // max |H| observed along the trace

    const RaySample& front() const { return samples.front(); }
    const RaySample& back() const { return samples.back(); }
    std::size_t size() const { return samples.size(); }

    // Sample index whose parameter is nearest to s (samples are uniform in s).
    std::size_t nearest_index(double s) const;
};

struct StepControl {
    double ds = 1e-3;        // base integrator step
    int reproject_every = 100;  // null-cone re-projection cadence
};

// Traces the null bicharacteristic with initial data (x0, z0) for parameter
// length s_max. Each step is an RK4 step refined by step-halving Richardson
// extrapolation; zeta_0 is conserved exactly by the flow and the spatial
// covector is re-projected onto the null cone periodically to stop drift.
/// Throws std::invalid_argument when z0 is not lightlike at x0.
Bicharacteristic trace_bicharacteristic(const ProductMetric& metric,
                                        const SpacetimePoint& x0, const Covector& z0,
                                        double s_max, const StepControl& ctl = {});

/// First conjugate parameter along the ray, if any: integrates two transverse
// null-cone-preserving variations with the tangent flow and reports the first
// sign change of the determinant of their projections onto the plane
// orthogonal to the spatial velocity.
std::optional<double> first_conjugate_parameter(const ProductMetric& metric,
                                                const Bicharacteristic& ray);

// Axis-aligned spatial box domain; the symbol-level experiments run on
// Omega = [0,1]^3 and need entry/exit bookkeeping for rays.
struct BoxDomain {
    Vec3 lo{0.0, 0.0, 0.0};
    Vec3 hi{1.0, 1.0, 1.0};

    bool contains(const Vec3& x) const;
    // Distance (in flow parameter) until the straight/curved ray leaves the
    // box, found by stepping and bisection on the traced ray.
    static double exit_parameter(const BoxDomain& box, const Bicharacteristic& ray);
};

}  // namespace ws
