// Symbol-level measurement synthesis and the inversion pipeline.
//
// A scene holds one acoustic medium at the level the geometric measurements
// see it: a metric shared with the reference, the spatial box domain, the
// one-form b, and the nonlinearity profiles beta2..beta4.  From a scene the
// module synthesizes the third- and fourth-order interaction functionals
//     M3(q) = (2 beta2^2 + beta3)(q) * sigma_out * prod_{j=1..3} sigma_in_j
//     M4(q) = (C beta2^3 + D beta2 beta3 + beta4)(q) * sigma_out * prod_{j=1..4} sigma_in_j
// where every sigma is a principal-symbol transport factor along a leg
// between q and the box boundary: incoming legs are traced backward from q,
// and the outgoing leg carries a sliding measurement parameter so the
// observation point can move along the ray.
//
// The recovery consumes a hidden medium only through these synthesized
// oracles plus a known reference scene.  It reconstructs
//   * the one-form difference Delta b pointwise, from log-derivatives of the
//     hidden/reference measurement ratio along independent outgoing rays,
//   * the gauge factor rho, by integrating the probed pairing from the
//     boundary along two distinct ray paths with an exactness cross-check,
//   * beta2/beta3, from the measured M3 ratio plus the leading Laurent
//     coefficient of an M4 angle sweep, via a cubic in beta2.
// A separate check evaluates the frame observables that must vanish for
// time-independent gauge factors and flags time-dependent candidates.

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "frames.hpp"
#include "geometry.hpp"
#include "transport.hpp"

namespace ws::recover {

// ---------------------------------------------------------------------------
// Errors

// A leg hits a conjugate point before reaching the boundary, so the symbol
// construction hypotheses fail along it.
class ConjugatePointError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// The hidden/reference measurement ratio is non-positive or non-finite; the
// oracles are inconsistent with a common background.
class NonPositiveRatioError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Probe directions do not span spacetime covectors at the point.
class DegenerateDirectionsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// The recovered one-form difference fails the two-path exactness gate, so it
// is not the differential of a gauge factor.
class OneFormNotExactError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// The measured coefficient combinations admit no consistent beta2/beta3, or
// both combinations are degenerate.
class BetaRecoveryError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// The two verification frames have (nearly) equal interaction coefficients,
// so the 2x2 separation of the vanishing conditions is ill conditioned.
class IllConditionedFramesError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scenes

struct TraceOptions {
    double ds = 1e-3;           // bicharacteristic integrator step
    int reproject_every = 100;  // null-cone re-projection cadence
    bool check_conjugate = true;
    double max_extent = 16.0;   // safety cap on the initial trace length
};

// One medium as seen by the symbol calculus.
struct SymbolScene {
    ProductMetric metric;
    BoxDomain box;
    transport::OneFormField b;
    std::function<double(const SpacetimePoint&)> beta2;
    std::function<double(const SpacetimePoint&)> beta3;
    std::function<double(const SpacetimePoint&)> beta4;
};

// Flat unit-box scene: c = 1, b = 0, constant betas.
SymbolScene minkowski_scene(double beta2, double beta3, double beta4 = 0.0);

// Static gauge factor rho(x) = 1 + amp * prod_i sin(pi x_i) on the unit box;
// equals 1 on the whole box boundary.
struct SineBump {
    double amp = 0.1;

    double value(const Vec3& x) const;
    Vec3 gradient(const Vec3& x) const;
    // The exact one-form d(2 log rho) the gauge adds to b.
    transport::OneFormField one_form() const;
};

// The gauge-equivalent medium: b + d(2 log rho), rho^(m) scaling of beta_{m+1}.
SymbolScene gauged_scene(const SymbolScene& reference, const SineBump& rho);

// Reference plus its gauged partner, the standard synthetic experiment.
struct SyntheticPair {
    SymbolScene reference;
    SymbolScene hidden;
    SineBump rho;
};
SyntheticPair make_gauged_pair(double beta2_ref, double beta3_ref, double bump_amp,
                               double beta4_ref = 0.0);

// Traces from `from` along `direction` and cuts the trace exactly at the box
// exit parameter.
/// Throws std::invalid_argument when the ray starts outside or never leaves
/// the box within TraceOptions::max_extent.
Bicharacteristic trace_to_boundary(const ProductMetric& metric, const BoxDomain& box,
                                   const SpacetimePoint& from, const Covector& direction,
                                   const TraceOptions& opt = {});

// ---------------------------------------------------------------------------
// Synthesized measurements

// Geometry of one third-order measurement: three incoming covectors at the
// vertex and the outgoing observation covector (all future directed).
struct M3Request {
    SpacetimePoint q;
    std::array<Covector, 3> incoming{};
    Covector outgoing{};
};

// Third-order functional with a sliding measurement parameter along the
// outgoing ray.  value_at(exit_parameter()) is the boundary measurement.
class M3Slider {
  public:
    M3Slider(double prefactor, double incoming_product, Bicharacteristic out_ray,
             transport::PairingProfile out_profile, bool degenerate);

    double value_at(double s) const;
    double exit_parameter() const { return out_ray_.back().s; }
    bool degenerate() const { return degenerate_; }
    const Bicharacteristic& outgoing_ray() const { return out_ray_; }

    // Interpolated flow velocity of the outgoing ray at parameter s.
    SpacetimePoint velocity_at(double s) const;

  private:
    double prefactor_ = 0.0;
    double incoming_product_ = 1.0;
    Bicharacteristic out_ray_;
    transport::PairingProfile out_profile_;
    bool degenerate_ = false;
};

struct M3Value {
    double value = 0.0;
    bool degenerate = false;  // nonlinearity combination vanishes at q
};

// Builds the sliding measurement for a scene (traces all four legs).
/// Throws ConjugatePointError when a leg develops a conjugate point inside
/// the box and TraceOptions::check_conjugate is set.
M3Slider make_m3_slider(const SymbolScene& scene, const M3Request& request,
                        const TraceOptions& opt = {});

// Boundary-measured third-order functional.
M3Value synthesize_m3(const SymbolScene& scene, const M3Request& request,
                      const TraceOptions& opt = {});

// Boundary-measured fourth-order functional on the equal-angle four-frame
// with orientation phi and opening theta (expansion parameter s=sin(theta/2)).
double synthesize_m4(const SymbolScene& scene, const SpacetimePoint& q, double phi, double theta,
                     const TraceOptions& opt = {});

// What a hidden medium exposes to the recovery: measurement synthesis only.
struct MeasurementOracles {
    std::function<M3Slider(const M3Request&)> m3;
    std::function<double(const SpacetimePoint&, double, double)> m4;  // (q, phi, theta)
};
MeasurementOracles make_oracles(const SymbolScene& scene, const TraceOptions& opt = {});

// Uniform grid in the expansion parameter s = sin(theta/2).
std::vector<double> sweep_s_grid(std::size_t count, double s_min, double s_max);

// Laurent fit (orders -3..0) of an M4 oracle's sweep over the s grid at
// fixed orientation phi.
frames::LaurentFit m4_sweep_fit(const std::function<double(const SpacetimePoint&, double, double)>& m4,
                                const SpacetimePoint& q, double phi,
                                const std::vector<double>& s_values);

// Constructive observability check: the canonical probe legs from q reach the
// boundary without conjugate points.
bool certify_observable(const SymbolScene& scene, const SpacetimePoint& q,
                        const TraceOptions& opt = {});

// Random interior points passing certify_observable (deterministic by seed).
std::vector<SpacetimePoint> observable_samples(const SymbolScene& scene, std::size_t count,
                                               double margin, unsigned seed,
                                               const TraceOptions& opt = {});

// ---------------------------------------------------------------------------
// Pointwise probes

struct ProbeOptions {
    double s0 = 0.05;       // vertex sits s0 behind the target along the outgoing ray
    double fd_step = 0.02;  // slide differencing step (halved once for Richardson)
    double frame_phi = 1.5707963267948966;   // incoming-triple shape for probe frames
    double frame_theta = 1.0471975511965976;
};

// Measurement geometry for probing the point target = outgoing_ray(s0) along
// spatial direction dir: the vertex is backtracked from the target so the
// slide parameter s0 lands exactly on it.
M3Request probe_request(const ProductMetric& metric, const SpacetimePoint& target,
                        const Vec3& out_dir, const ProbeOptions& opt,
                        const TraceOptions& topt = {});

// Differentiates the log of the hidden/reference measurement ratio E(s) along
// one outgoing ray; -2 d/ds log E equals <Delta b, xdot(s)> at the slide
// point.  Central differences with one Richardson halving inside the span,
// one-sided backward stencils near the boundary exit.
class LogRatioProbe {
  public:
    LogRatioProbe(M3Slider hidden, M3Slider reference, double fd_step);

    double ratio_at(double s) const;    // E(s); throws NonPositiveRatioError
    double pairing_at(double s) const;  // <Delta b, xdot> at the slide point
    double exit_parameter() const { return hidden_.exit_parameter(); }
    SpacetimePoint velocity_at(double s) const { return hidden_.velocity_at(s); }

  private:
    double log_ratio(double s) const;

    M3Slider hidden_;
    M3Slider reference_;
    double fd_step_ = 0.02;
};

LogRatioProbe make_probe(const MeasurementOracles& hidden, const MeasurementOracles& reference,
                         const ProductMetric& metric, const SpacetimePoint& target,
                         const Vec3& out_dir, const ProbeOptions& opt,
                         const TraceOptions& topt = {});

// Solves <Delta b, v_k> = m_k for the d+1 covector components (least squares
// when over-determined).  Zero rows return a zero covector.
/// Throws DegenerateDirectionsError when the rows do not span.
struct OneFormSolve {
    std::array<double, 4> delta_b{};  // (time, x, y, z) components
    double residual = 0.0;            // max-norm fit residual
};
OneFormSolve solve_oneform_point(const std::vector<SpacetimePoint>& velocities,
                                 const std::vector<double>& pairings);

// One path with the one-form already paired against the path tangent at
// uniformly spaced parameter nodes; node 0 anchors on the boundary where the
// gauge factor equals 1.
struct PairedPathSamples {
    double du = 0.0;
    std::vector<double> pairing;
};

struct RhoRecovery {
    double rho = 1.0;          // exp(1/2 integral) along the first path
    double second = 1.0;       // same along the second path
    double discrepancy = 0.0;  // relative two-path mismatch
};

// Integrates both paths to the shared target and gates on their agreement.
/// Throws OneFormNotExactError when the two-path discrepancy exceeds tol.
RhoRecovery integrate_rho(const PairedPathSamples& path_a, const PairedPathSamples& path_b,
                          double tol);

// beta2/beta3 from the measured combinations a = 2 b2^2 + b3 and
// cprime = 4 b2^3 - 3 b2 b3 (fallback combination cfall = 40 b2^3 - 9 b2 b3
// when |cprime| degenerates; pass NaN when unavailable).  The real cubic root
// nearest rho_hint * beta2_ref is selected and the beta3 consistency residual
// against rho_hint^2 * beta3_ref is gated.
struct BetaRecovery {
    double beta2 = 0.0;
    double beta3 = 0.0;
    double beta3_residual = 0.0;  // relative consistency mismatch
    bool used_fallback = false;
};
BetaRecovery recover_betas_point(double a, double cprime, double cfall, double rho_hint,
                                 double beta2_ref, double beta3_ref,
                                 double consistency_tol = 1e-2, double cprime_floor = 1e-9);

// ---------------------------------------------------------------------------
// End-to-end pipeline

struct RecoveryOptions {
    ProbeOptions probe;
    TraceOptions trace;
    double integration_step = 0.01;  // node spacing target for the rho quadrature
    double two_path_tol = 1e-3;
    std::size_t sweep_points = 16;
    double sweep_s_min = 0.05;
    double sweep_s_max = 0.2;
    double sweep_phi = 0.0;
    double degenerate_tol = 1e-10;
};

struct PointRecovery {
    SpacetimePoint q;
    std::array<double, 4> delta_b{};
    double delta_b_residual = 0.0;
    double rho = 1.0;
    double rho_direct = 1.0;  // 1/E at the probe offset (diagnostic)
    double two_path_discrepancy = 0.0;
    double beta2 = 0.0;
    double beta3 = 0.0;
    double beta3_residual = 0.0;
    double a_measured = 0.0;
    double cprime_measured = 0.0;
    bool skipped = false;
    std::string skip_reason;
};

struct RecoveryResult {
    std::vector<PointRecovery> points;
};

// Recovers Delta b, rho, beta2, beta3 at every sample point, consuming the
// hidden medium through its oracles only.
RecoveryResult recover_medium(const MeasurementOracles& hidden, const SymbolScene& reference,
                              const std::vector<SpacetimePoint>& samples,
                              const RecoveryOptions& opt = {});

// ---------------------------------------------------------------------------
// Verification

// Ground truth for the synthetic gauged pair.
struct GaugeTruth {
    std::function<std::array<double, 4>(const SpacetimePoint&)> delta_b;
    std::function<double(const SpacetimePoint&)> rho;
    std::function<double(const SpacetimePoint&)> beta2;  // hidden-side values
    std::function<double(const SpacetimePoint&)> beta3;
};
GaugeTruth truth_for(const SyntheticPair& pair);

struct RelationReport {
    double max_delta_b_error = 0.0;  // componentwise absolute
    double rms_delta_b_error = 0.0;
    double max_rho_error = 0.0;  // relative
    double rms_rho_error = 0.0;
    double max_beta2_error = 0.0;  // relative
    double max_beta3_error = 0.0;  // relative
    std::size_t checked = 0;
    std::size_t skipped = 0;
};
RelationReport verify_gauge_relations(const RecoveryResult& result, const GaugeTruth& truth);

// Candidate gauge factor with its time derivative.
struct CandidateGauge {
    std::function<double(const SpacetimePoint&)> value;
    std::function<double(const SpacetimePoint&)> dt;
};

struct FramePair {
    double phi1 = 0.0, theta1 = 0.0;
    double phi2 = 0.0, theta2 = 0.0;
};

struct TimeIndependenceVerdict {
    bool time_independent = false;
    double c3_magnitude = 0.0;  // |c3 (1 - beta2)| separated from the two frames
    double c2_magnitude = 0.0;  // |2 c2 beta2| coefficient of the frame term
    double c4_magnitude = 0.0;  // |c4 beta4| (fourth-order branch)
    std::string branch;
};

// Evaluates the frame observables c3 (1 - beta2) + 2 c2 beta2 I3(frame) for
// both frames, separates the two vanishing conditions through the 2x2 system,
// and falls through to the fourth-order condition c4 beta4 when beta2 and
// beta3 both vanish.  All magnitudes are exactly zero for a static candidate.
/// Throws IllConditionedFramesError when |I3_1 - I3_2| < 0.1.
TimeIndependenceVerdict verify_time_independence(const SpacetimePoint& q,
                                                 const CandidateGauge& rho, double beta2,
                                                 double beta3, double beta4,
                                                 const FramePair& frames, double tol = 1e-12);

}  // namespace ws::recover
