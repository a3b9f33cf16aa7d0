// Principal-symbol transport along null bicharacteristics.  The leading
// amplitude along a ray satisfies the scalar transport equation
//     d a / d s = 1/2 <b(x(s)), xdot(s)> a(s),
// so the ratio between two parameters is the exponential of half the pairing
// integral,
//     a(s1) / a(s0) = exp( 1/2 * integral_{s0}^{s1} <b, xdot> ds ).
// Kernel legs that propagate a symbol from a source point to a field point are
// evaluated on the reversed parametrization (field point back to source), so
// forward-propagating amplitudes with damping-type one-forms decay.
//
// The module represents one-forms by closures, accumulates pairing integrals
// with a fourth-order corrected trapezoid that telescopes exactly over
// concatenated segments, and offers an independent Runge-Kutta integration of
// the transport equation as a cross-check oracle.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "geometry.hpp"

namespace ws::transport {

// A one-form on spacetime given by closures.  Exact forms (b = d phi) also
// carry their potential, which closed-form tests difference directly.
struct OneFormField {
    std::function<double(const SpacetimePoint&)> time_part;
    std::function<Vec3(const SpacetimePoint&)> space_part;
    std::function<double(const SpacetimePoint&)> potential;  // set iff is_exact
    bool is_exact = false;

    static OneFormField zero();
    static OneFormField constant(double b0, const Vec3& bs);
    static OneFormField from_potential(std::function<double(const SpacetimePoint&)> phi,
                                       std::function<double(const SpacetimePoint&)> dphi_dt,
                                       std::function<Vec3(const SpacetimePoint&)> grad_phi);

    // Pointwise sum; the result is exact iff both summands are.
    OneFormField plus(const OneFormField& other) const;

    // <b(x), xdot> at a ray sample.
    double pair_with(const RaySample& sample) const;
};

// Cumulative integral C_k = integral_{u_0}^{u_k} g du of uniformly spaced
// samples g. Trapezoid sums with Euler-Maclaurin endpoint corrections
// (derivatives estimated from the samples) give fourth-order accuracy while
// staying exactly telescoping, so concatenated segments are consistent to
// roundoff.
std::vector<double> corrected_cumulative(const std::vector<double>& g, double du);

// Cumulative pairing integrals L_k = integral_{s_0}^{s_k} <b, xdot> ds over
// the ray samples (uniform in s).
std::vector<double> pairing_cumulative(const OneFormField& b, const Bicharacteristic& ray);

// Transport ratio a(to)/a(from) between two sample indices:
// exp(+1/2 (L_to - L_from)).
double transport_ratio(const OneFormField& b, const Bicharacteristic& ray,
                       std::size_t from_sample, std::size_t to_sample);

// Whole-ray transport ratio (first sample to last).
double transport_ratio(const OneFormField& b, const Bicharacteristic& ray);

// Independent oracle: integrates d a / d s = 1/2 <b, xdot> a with classical
// Runge-Kutta steps over the sample intervals covering [s0, s1]; off-sample
// points are reconstructed by cubic Hermite interpolation of the stored
// (position, velocity) pairs.  s0 and s1 must lie on ray samples (the callers
// always cut traces at the parameters they need).
/// Throws std::invalid_argument when [s0, s1] is not covered by the ray or
/// the endpoints are off the sample grid.
double transport_ode_ratio(const OneFormField& b, const Bicharacteristic& ray,
                           double s0, double s1);

// Pairing integral profile with C^1 evaluation between samples: cubic Hermite
// interpolation of the cumulative, whose nodal derivatives are the sampled
// integrand itself.  This is the sliding-endpoint data the recovery
// differentiates, so it must be smooth in s rather than snapped to samples.
class PairingProfile {
  public:
    PairingProfile(const OneFormField& b, const Bicharacteristic& ray);

    // L(s) - L(s_front); s clamped-checked against the sampled span.
    double integral_to(double s) const;
    double full_integral() const { return cum_.back(); }
    double front_parameter() const { return s_front_; }
    double back_parameter() const { return s_front_ + ds_ * static_cast<double>(cum_.size() - 1); }

  private:
    std::vector<double> cum_;  // corrected cumulative at the samples
    std::vector<double> g_;    // integrand at the samples (Hermite slopes)
    double s_front_ = 0.0;
    double ds_ = 0.0;
};

}  // namespace ws::transport
