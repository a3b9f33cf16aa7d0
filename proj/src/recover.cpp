#include "recover.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <utility>

namespace ws::recover {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 unit(const Vec3& v) {
    const double n = norm(v);
    if (n < 1e-14) throw std::invalid_argument("recover: zero direction vector");
    return (1.0 / n) * v;
}

Eigen::Matrix3d rotation_between(const Vec3& a, const Vec3& b) {
    const Eigen::Vector3d av(a[0], a[1], a[2]);
    const Eigen::Vector3d bv(b[0], b[1], b[2]);
    const double c = av.dot(bv);
    if (c > 1.0 - 1e-12) return Eigen::Matrix3d::Identity();
    if (c < -1.0 + 1e-12)
        return Eigen::AngleAxisd(kPi, av.unitOrthogonal()).toRotationMatrix();
    const Eigen::Vector3d v = av.cross(bv);
    Eigen::Matrix3d k;
    k << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return Eigen::Matrix3d::Identity() + k + k * k * (1.0 / (1.0 + c));
}

Vec3 rotated(const Eigen::Matrix3d& r, const Vec3& v) {
    const Eigen::Vector3d w = r * Eigen::Vector3d(v[0], v[1], v[2]);
    return {w.x(), w.y(), w.z()};
}

// The spatial directions behind the frame algebra's covectors: three unit
// incoming directions and the unit outgoing direction, before orientation.
struct ThreeDirections {
    std::array<Vec3, 3> incoming;
    Vec3 outgoing;
};

ThreeDirections three_frame_directions(double phi, double theta) {
    const double sp = std::sin(phi), cp = std::cos(phi);
    const double st = std::sin(theta), ct = std::cos(theta);
    return {{Vec3{1.0, 0.0, 0.0}, Vec3{ct, st, 0.0}, Vec3{ct, -st, 0.0}}, Vec3{-cp, sp, 0.0}};
}

struct FourDirections {
    std::array<Vec3, 4> incoming;
    Vec3 outgoing;
};

FourDirections four_frame_directions(double phi, double theta) {
    const double sp = std::sin(phi), cp = std::cos(phi);
    const double st = std::sin(theta), ct = std::cos(theta);
    return {{Vec3{1.0, 0.0, 0.0}, Vec3{ct, st * sp, -st * cp}, Vec3{ct, -st * sp, st * cp},
             Vec3{ct, st * cp, st * sp}},
            Vec3{0.0, cp, sp}};
}

const std::array<Vec3, 4>& tetrahedral_directions() {
    static const double k = 1.0 / std::sqrt(3.0);
    static const std::array<Vec3, 4> dirs{Vec3{k, k, k}, Vec3{k, -k, -k}, Vec3{-k, k, -k},
                                          Vec3{-k, -k, k}};
    return dirs;
}

Covector reversed(const Covector& z) { return {-z.zeta0, -1.0 * z.zeta}; }

void check_conjugate_free(const ProductMetric& metric, const Bicharacteristic& ray,
                          const char* leg) {
    if (const auto sc = first_conjugate_parameter(metric, ray)) {
        std::ostringstream msg;
        msg << leg << " develops a conjugate point at parameter " << *sc
            << " before reaching the boundary";
        throw ConjugatePointError(msg.str());
    }
}

// Backward leg from q for the j-th incoming covector; returns its transport
// ratio exp(+1/2 integral of <b, xdot>) along the backward parametrization.
double incoming_leg_ratio(const SymbolScene& scene, const SpacetimePoint& q, const Covector& zin,
                          const TraceOptions& opt, const char* leg) {
    const auto ray = trace_to_boundary(scene.metric, scene.box, q, reversed(zin), opt);
    if (opt.check_conjugate) check_conjugate_free(scene.metric, ray, leg);
    return transport::transport_ratio(scene.b, ray);
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenes

SymbolScene minkowski_scene(double beta2, double beta3, double beta4) {
    return SymbolScene{ProductMetric(SpeedProfile::constant(1.0)),
                       BoxDomain{},
                       transport::OneFormField::zero(),
                       [beta2](const SpacetimePoint&) { return beta2; },
                       [beta3](const SpacetimePoint&) { return beta3; },
                       [beta4](const SpacetimePoint&) { return beta4; }};
}

double SineBump::value(const Vec3& x) const {
    return 1.0 + amp * std::sin(kPi * x[0]) * std::sin(kPi * x[1]) * std::sin(kPi * x[2]);
}

Vec3 SineBump::gradient(const Vec3& x) const {
    const double s0 = std::sin(kPi * x[0]), c0 = std::cos(kPi * x[0]);
    const double s1 = std::sin(kPi * x[1]), c1 = std::cos(kPi * x[1]);
    const double s2 = std::sin(kPi * x[2]), c2 = std::cos(kPi * x[2]);
    return {amp * kPi * c0 * s1 * s2, amp * kPi * s0 * c1 * s2, amp * kPi * s0 * s1 * c2};
}

transport::OneFormField SineBump::one_form() const {
    const SineBump bump = *this;
    return transport::OneFormField::from_potential(
        [bump](const SpacetimePoint& p) { return 2.0 * std::log(bump.value(p.x)); },
        [](const SpacetimePoint&) { return 0.0; },
        [bump](const SpacetimePoint& p) { return (2.0 / bump.value(p.x)) * bump.gradient(p.x); });
}

SymbolScene gauged_scene(const SymbolScene& reference, const SineBump& rho) {
    return SymbolScene{
        reference.metric, reference.box, reference.b.plus(rho.one_form()),
        [rho, f = reference.beta2](const SpacetimePoint& q) { return rho.value(q.x) * f(q); },
        [rho, f = reference.beta3](const SpacetimePoint& q) {
            const double v = rho.value(q.x);
            return v * v * f(q);
        },
        [rho, f = reference.beta4](const SpacetimePoint& q) {
            const double v = rho.value(q.x);
            return v * v * v * f(q);
        }};
}

SyntheticPair make_gauged_pair(double beta2_ref, double beta3_ref, double bump_amp,
                               double beta4_ref) {
    SyntheticPair pair{minkowski_scene(beta2_ref, beta3_ref, beta4_ref),
                       minkowski_scene(0.0, 0.0, 0.0), SineBump{bump_amp}};
    pair.hidden = gauged_scene(pair.reference, pair.rho);
    return pair;
}

Bicharacteristic trace_to_boundary(const ProductMetric& metric, const BoxDomain& box,
                                   const SpacetimePoint& from, const Covector& direction,
                                   const TraceOptions& opt) {
    if (!box.contains(from.x))
        throw std::invalid_argument("trace_to_boundary: start point lies outside the box");
    const StepControl ctl{opt.ds, opt.reproject_every};
    const double diag = norm(box.hi - box.lo);
    double s_max = diag;
    while (true) {
        const auto ray = trace_bicharacteristic(metric, from, direction, s_max, ctl);
        const double exit = BoxDomain::exit_parameter(box, ray);
        if (exit < ray.back().s - 1e-12) {
            if (exit <= opt.ds)
                throw std::invalid_argument(
                    "trace_to_boundary: ray exits within one step; start too close to the "
                    "boundary");
            return trace_bicharacteristic(metric, from, direction, exit, ctl);
        }
        s_max *= 2.0;
        if (s_max > opt.max_extent * diag) {
            std::ostringstream msg;
            msg << "trace_to_boundary: ray does not leave the box within parameter "
                << opt.max_extent * diag;
            throw std::invalid_argument(msg.str());
        }
    }
}

// ---------------------------------------------------------------------------
// Synthesized measurements

M3Slider::M3Slider(double prefactor, double incoming_product, Bicharacteristic out_ray,
                   transport::PairingProfile out_profile, bool degenerate)
    : prefactor_(prefactor),
      incoming_product_(incoming_product),
      out_ray_(std::move(out_ray)),
      out_profile_(std::move(out_profile)),
      degenerate_(degenerate) {}

double M3Slider::value_at(double s) const {
    return prefactor_ * incoming_product_ * std::exp(-0.5 * out_profile_.integral_to(s));
}

SpacetimePoint M3Slider::velocity_at(double s) const {
    const auto& smp = out_ray_.samples;
    if (smp.size() < 2) return smp.front().velocity;
    const double ds = smp[1].s - smp[0].s;
    double u = (s - smp[0].s) / ds;
    u = std::clamp(u, 0.0, static_cast<double>(smp.size() - 1));
    std::size_t k = static_cast<std::size_t>(u);
    if (k >= smp.size() - 1) k = smp.size() - 2;
    const double w = u - static_cast<double>(k);
    const SpacetimePoint& a = smp[k].velocity;
    const SpacetimePoint& b = smp[k + 1].velocity;
    return {a.t + w * (b.t - a.t), a.x + w * (b.x - a.x)};
}

M3Slider make_m3_slider(const SymbolScene& scene, const M3Request& request,
                        const TraceOptions& opt) {
    auto out_ray = trace_to_boundary(scene.metric, scene.box, request.q, request.outgoing, opt);
    if (opt.check_conjugate)
        check_conjugate_free(scene.metric, out_ray, "outgoing measurement leg");

    double in_product = 1.0;
    for (std::size_t j = 0; j < 3; ++j)
        in_product *= incoming_leg_ratio(scene, request.q, request.incoming[j], opt,
                                         "incoming source leg");

    const double b2 = scene.beta2(request.q);
    const double b3 = scene.beta3(request.q);
    const double prefactor = 2.0 * b2 * b2 + b3;
    transport::PairingProfile profile(scene.b, out_ray);
    return M3Slider(prefactor, in_product, std::move(out_ray), std::move(profile),
                    std::abs(prefactor) < 1e-14);
}

M3Value synthesize_m3(const SymbolScene& scene, const M3Request& request,
                      const TraceOptions& opt) {
    const M3Slider slider = make_m3_slider(scene, request, opt);
    return {slider.value_at(slider.exit_parameter()), slider.degenerate()};
}

double synthesize_m4(const SymbolScene& scene, const SpacetimePoint& q, double phi, double theta,
                     const TraceOptions& opt) {
    const auto frame = frames::build_four_frame(phi, theta);
    const auto dirs = four_frame_directions(phi, theta);

    double in_product = 1.0;
    for (std::size_t j = 0; j < 4; ++j) {
        const Covector zin = scene.metric.null_covector(q.x, -1.0, dirs.incoming[j]);
        in_product *= incoming_leg_ratio(scene, q, zin, opt, "incoming source leg");
    }

    const Covector zout = scene.metric.null_covector(q.x, -1.0, dirs.outgoing);
    const auto out_ray = trace_to_boundary(scene.metric, scene.box, q, zout, opt);
    if (opt.check_conjugate)
        check_conjugate_free(scene.metric, out_ray, "outgoing measurement leg");
    const double out_factor = 1.0 / transport::transport_ratio(scene.b, out_ray);

    const double cc =
        frames::curly_c(frame, scene.beta2(q), scene.beta3(q), scene.beta4(q));
    return cc * in_product * out_factor;
}

MeasurementOracles make_oracles(const SymbolScene& scene, const TraceOptions& opt) {
    const auto shared = std::make_shared<SymbolScene>(scene);
    MeasurementOracles oracles;
    oracles.m3 = [shared, opt](const M3Request& request) {
        return make_m3_slider(*shared, request, opt);
    };
    oracles.m4 = [shared, opt](const SpacetimePoint& q, double phi, double theta) {
        return synthesize_m4(*shared, q, phi, theta, opt);
    };
    return oracles;
}

std::vector<double> sweep_s_grid(std::size_t count, double s_min, double s_max) {
    if (count < 4)
        throw std::invalid_argument("sweep_s_grid: the Laurent fit needs at least 4 points");
    if (!(s_min > 0.0) || !(s_max < 1.0) || !(s_min < s_max))
        throw std::invalid_argument("sweep_s_grid: need 0 < s_min < s_max < 1");
    std::vector<double> s(count);
    for (std::size_t i = 0; i < count; ++i)
        s[i] = s_min + (s_max - s_min) * static_cast<double>(i) /
                           static_cast<double>(count - 1);
    return s;
}

frames::LaurentFit m4_sweep_fit(
    const std::function<double(const SpacetimePoint&, double, double)>& m4,
    const SpacetimePoint& q, double phi, const std::vector<double>& s_values) {
    std::vector<double> values(s_values.size());
    for (std::size_t i = 0; i < s_values.size(); ++i)
        values[i] = m4(q, phi, 2.0 * std::asin(s_values[i]));
    return frames::fit_laurent(s_values, values, -3, 0);
}

bool certify_observable(const SymbolScene& scene, const SpacetimePoint& q,
                        const TraceOptions& opt) {
    try {
        const ProbeOptions popt;
        for (const Vec3& dir : tetrahedral_directions()) {
            const M3Request request = probe_request(scene.metric, q, dir, popt, opt);
            (void)make_m3_slider(scene, request, opt);
        }
        (void)synthesize_m4(scene, q, 0.0, 2.0 * std::asin(0.2), opt);
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

std::vector<SpacetimePoint> observable_samples(const SymbolScene& scene, std::size_t count,
                                               double margin, unsigned seed,
                                               const TraceOptions& opt) {
    std::mt19937 rng(seed);
    std::array<std::uniform_real_distribution<double>, 3> axis{
        std::uniform_real_distribution<double>(
            scene.box.lo[0] + margin * (scene.box.hi[0] - scene.box.lo[0]),
            scene.box.hi[0] - margin * (scene.box.hi[0] - scene.box.lo[0])),
        std::uniform_real_distribution<double>(
            scene.box.lo[1] + margin * (scene.box.hi[1] - scene.box.lo[1]),
            scene.box.hi[1] - margin * (scene.box.hi[1] - scene.box.lo[1])),
        std::uniform_real_distribution<double>(
            scene.box.lo[2] + margin * (scene.box.hi[2] - scene.box.lo[2]),
            scene.box.hi[2] - margin * (scene.box.hi[2] - scene.box.lo[2]))};

    std::vector<SpacetimePoint> points;
    const std::size_t max_tries = 200 * count + 50;
    for (std::size_t tries = 0; points.size() < count && tries < max_tries; ++tries) {
        const SpacetimePoint q{0.0, Vec3{axis[0](rng), axis[1](rng), axis[2](rng)}};
        if (certify_observable(scene, q, opt)) points.push_back(q);
    }
    if (points.size() < count) {
        std::ostringstream msg;
        msg << "observable_samples: certified only " << points.size() << " of " << count
            << " requested points";
        throw std::runtime_error(msg.str());
    }
    return points;
}

// ---------------------------------------------------------------------------
// Pointwise probes

namespace {

// Measurement request whose interaction vertex is exactly q: the canonical
// incoming triple rotated so its outgoing axis lands on out_dir.
M3Request frame_request(const ProductMetric& metric, const SpacetimePoint& q,
                        const Vec3& out_dir, const ProbeOptions& popt) {
    const Vec3 dir = unit(out_dir);
    const auto dirs = three_frame_directions(popt.frame_phi, popt.frame_theta);
    const auto rot = rotation_between(dirs.outgoing, dir);

    M3Request request;
    request.q = q;
    request.outgoing = metric.null_covector(q.x, -1.0, dir);
    for (std::size_t j = 0; j < 3; ++j)
        request.incoming[j] =
            metric.null_covector(q.x, -1.0, unit(rotated(rot, dirs.incoming[j])));
    return request;
}

}  // namespace

M3Request probe_request(const ProductMetric& metric, const SpacetimePoint& target,
                        const Vec3& out_dir, const ProbeOptions& opt,
                        const TraceOptions& topt) {
    if (!(opt.s0 > 0.0))
        throw std::invalid_argument("probe_request: the vertex offset s0 must be positive");
    const Vec3 dir = unit(out_dir);
    const Covector zeta = metric.null_covector(target.x, -1.0, dir);
    const StepControl ctl{topt.ds, topt.reproject_every};
    const auto back = trace_bicharacteristic(metric, target, reversed(zeta), opt.s0, ctl);

    const SpacetimePoint q = back.back().point;
    const Covector zq = reversed(back.back().z);
    return frame_request(metric, q, zq.zeta, opt);
}

LogRatioProbe::LogRatioProbe(M3Slider hidden, M3Slider reference, double fd_step)
    : hidden_(std::move(hidden)), reference_(std::move(reference)), fd_step_(fd_step) {
    if (!(fd_step_ > 0.0))
        throw std::invalid_argument("LogRatioProbe: fd_step must be positive");
    if (std::abs(hidden_.exit_parameter() - reference_.exit_parameter()) > 1e-9)
        throw std::invalid_argument(
            "LogRatioProbe: the two oracles disagree on the boundary exit parameter");
}

double LogRatioProbe::ratio_at(double s) const {
    const double vh = hidden_.value_at(s);
    const double vr = reference_.value_at(s);
    const double e = vh / vr;
    if (!std::isfinite(e) || e <= 0.0) {
        std::ostringstream msg;
        msg << "measurement ratio is not positive at slide parameter " << s << " (" << vh
            << " over " << vr << ")";
        throw NonPositiveRatioError(msg.str());
    }
    return e;
}

double LogRatioProbe::log_ratio(double s) const { return std::log(ratio_at(s)); }

double LogRatioProbe::pairing_at(double s) const {
    const double exit = exit_parameter();
    const double h = fd_step_;
    double d = 0.0;
    if (s + h <= exit + 1e-12 && s - h >= -1e-12) {
        const double coarse = (log_ratio(s + h) - log_ratio(s - h)) / (2.0 * h);
        const double fine = (log_ratio(s + 0.5 * h) - log_ratio(s - 0.5 * h)) / h;
        d = (4.0 * fine - coarse) / 3.0;
    } else if (s - 2.0 * h >= -1e-12) {
        const double coarse =
            (3.0 * log_ratio(s) - 4.0 * log_ratio(s - h) + log_ratio(s - 2.0 * h)) / (2.0 * h);
        const double fine =
            (3.0 * log_ratio(s) - 4.0 * log_ratio(s - 0.5 * h) + log_ratio(s - h)) / h;
        d = (4.0 * fine - coarse) / 3.0;
    } else {
        throw std::invalid_argument(
            "pairing_at: no difference stencil fits inside the ray span");
    }
    return -2.0 * d;
}

LogRatioProbe make_probe(const MeasurementOracles& hidden, const MeasurementOracles& reference,
                         const ProductMetric& metric, const SpacetimePoint& target,
                         const Vec3& out_dir, const ProbeOptions& opt,
                         const TraceOptions& topt) {
    const M3Request request = probe_request(metric, target, out_dir, opt, topt);
    return LogRatioProbe(hidden.m3(request), reference.m3(request), opt.fd_step);
}

OneFormSolve solve_oneform_point(const std::vector<SpacetimePoint>& velocities,
                                 const std::vector<double>& pairings) {
    if (velocities.size() != pairings.size())
        throw std::invalid_argument("solve_oneform_point: row/value count mismatch");
    if (velocities.empty()) return {};

    const auto n = static_cast<Eigen::Index>(velocities.size());
    Eigen::MatrixXd a(n, 4);
    Eigen::VectorXd m(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& v = velocities[static_cast<std::size_t>(k)];
        a(k, 0) = v.t;
        a(k, 1) = v.x[0];
        a(k, 2) = v.x[1];
        a(k, 3) = v.x[2];
        m(k) = pairings[static_cast<std::size_t>(k)];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 4) {
        std::ostringstream msg;
        msg << "solve_oneform_point: probe directions span rank " << qr.rank()
            << " of 4; add independent directions";
        throw DegenerateDirectionsError(msg.str());
    }
    const Eigen::Vector4d x = qr.solve(m);
    OneFormSolve sol;
    sol.delta_b = {x(0), x(1), x(2), x(3)};
    sol.residual = (a * x - m).lpNorm<Eigen::Infinity>();
    return sol;
}

RhoRecovery integrate_rho(const PairedPathSamples& path_a, const PairedPathSamples& path_b,
                          double tol) {
    for (const auto* path : {&path_a, &path_b}) {
        if (!(path->du > 0.0) || path->pairing.size() < 2)
            throw std::invalid_argument("integrate_rho: each path needs du > 0 and >= 2 nodes");
    }
    const double ia = transport::corrected_cumulative(path_a.pairing, path_a.du).back();
    const double ib = transport::corrected_cumulative(path_b.pairing, path_b.du).back();
    RhoRecovery r;
    r.rho = std::exp(0.5 * ia);
    r.second = std::exp(0.5 * ib);
    r.discrepancy = std::abs(r.rho - r.second) / std::max(std::abs(r.rho), 1e-300);
    if (r.discrepancy > tol) {
        std::ostringstream msg;
        msg << "integrate_rho: two-path values " << r.rho << " and " << r.second
            << " disagree (relative " << r.discrepancy << " > " << tol
            << "); the probed one-form is not exact";
        throw OneFormNotExactError(msg.str());
    }
    return r;
}

namespace {

// Real roots of x^3 + p x + q = 0, Newton-polished.
std::vector<double> depressed_cubic_roots(double p, double q) {
    std::vector<double> roots;
    if (std::abs(p) < 1e-300 && std::abs(q) < 1e-300) {
        roots.push_back(0.0);
        return roots;
    }
    const double disc = -4.0 * p * p * p - 27.0 * q * q;
    if (disc > 0.0) {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double c3a = std::clamp(1.5 * (q / p) * std::sqrt(-3.0 / p), -1.0, 1.0);
        const double a0 = std::acos(c3a) / 3.0;
        for (int k = 0; k < 3; ++k)
            roots.push_back(m * std::cos(a0 - 2.0 * kPi * static_cast<double>(k) / 3.0));
    } else {
        const double r = std::sqrt(std::max(0.0, q * q / 4.0 + p * p * p / 27.0));
        const double u = (q >= 0.0) ? (-q / 2.0 - r) : (-q / 2.0 + r);
        const double w = std::cbrt(u);
        roots.push_back(std::abs(w) > 1e-300 ? w - p / (3.0 * w) : 0.0);
    }
    for (double& x : roots) {
        for (int it = 0; it < 2; ++it) {
            const double f = x * x * x + p * x + q;
            const double fp = 3.0 * x * x + p;
            if (std::abs(fp) > 1e-300) x -= f / fp;
        }
    }
    return roots;
}

}  // namespace

BetaRecovery recover_betas_point(double a, double cprime, double cfall, double rho_hint,
                                 double beta2_ref, double beta3_ref, double consistency_tol,
                                 double cprime_floor) {
    const double hint = rho_hint * beta2_ref;
    const double target3 = rho_hint * rho_hint * beta3_ref;
    const bool primary_ok = std::isfinite(cprime) && std::abs(cprime) > cprime_floor;
    const bool fallback_ok = std::isfinite(cfall) && std::abs(cfall) > cprime_floor;

    struct Attempt {
        double p, q;
        bool fallback;
    };
    std::vector<Attempt> attempts;
    if (primary_ok)
        attempts.push_back({-0.3 * a, -cprime / 10.0, false});
    else if (fallback_ok)
        attempts.push_back({-9.0 * a / 58.0, -cfall / 58.0, true});
    else if (std::isfinite(cprime))
        attempts.push_back({-0.3 * a, -cprime / 10.0, false});
    else
        throw BetaRecoveryError("recover_betas_point: no finite coefficient combination");

    double best_residual = std::numeric_limits<double>::infinity();
    for (const Attempt& attempt : attempts) {
        std::vector<double> roots = depressed_cubic_roots(attempt.p, attempt.q);
        std::sort(roots.begin(), roots.end(), [hint](double l, double r) {
            return std::abs(l - hint) < std::abs(r - hint);
        });
        for (const double x : roots) {
            const double b3 = a - 2.0 * x * x;
            const double residual =
                std::abs(b3 - target3) / std::max(1.0, std::abs(target3));
            best_residual = std::min(best_residual, residual);
            if (residual <= consistency_tol) return {x, b3, residual, attempt.fallback};
        }
    }

    std::ostringstream msg;
    if (!primary_ok && !fallback_ok) {
        msg << "recover_betas_point: both coefficient combinations are degenerate (|c'| = "
            << std::abs(cprime) << ", |c''| = " << std::abs(cfall)
            << ") and no root passes the consistency gate; the betas are undetermined";
    } else {
        msg << "recover_betas_point: no cubic root is consistent with the gauge hint (best "
               "beta3 residual "
            << best_residual << " > " << consistency_tol << ")";
    }
    throw BetaRecoveryError(msg.str());
}

// ---------------------------------------------------------------------------
// End-to-end pipeline

namespace {

// Pairing samples along the outgoing ray reparametrized from the boundary
// exit (node 0, where the gauge factor is 1) back to the slide offset s0.
PairedPathSamples reversed_ray_path(const LogRatioProbe& probe, double s0, double step) {
    const double exit = probe.exit_parameter();
    const double span = exit - s0;
    if (span <= step)
        throw std::invalid_argument("reversed_ray_path: integration span is shorter than one step");
    const auto n = static_cast<std::size_t>(
        std::max<long long>(4, std::llround(std::ceil(span / step))));
    const double du = span / static_cast<double>(n);
    PairedPathSamples path;
    path.du = du;
    path.pairing.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
        path.pairing[i] = -probe.pairing_at(exit - static_cast<double>(i) * du);
    return path;
}

}  // namespace

RecoveryResult recover_medium(const MeasurementOracles& hidden, const SymbolScene& reference,
                              const std::vector<SpacetimePoint>& samples,
                              const RecoveryOptions& opt) {
    const MeasurementOracles ref_oracles = make_oracles(reference, opt.trace);
    const auto& dirs = tetrahedral_directions();

    RecoveryResult result;
    result.points.reserve(samples.size());
    for (const SpacetimePoint& q : samples) {
        PointRecovery pr;
        pr.q = q;
        try {
            // One-form difference from four independent outgoing directions.
            std::vector<LogRatioProbe> probes;
            probes.reserve(dirs.size());
            for (const Vec3& dir : dirs)
                probes.push_back(
                    make_probe(hidden, ref_oracles, reference.metric, q, dir, opt.probe,
                               opt.trace));

            std::vector<SpacetimePoint> velocities;
            std::vector<double> pairings;
            for (const LogRatioProbe& probe : probes) {
                velocities.push_back(probe.velocity_at(opt.probe.s0));
                pairings.push_back(probe.pairing_at(opt.probe.s0));
            }
            const OneFormSolve sol = solve_oneform_point(velocities, pairings);
            pr.delta_b = sol.delta_b;
            pr.delta_b_residual = sol.residual;

            // Gauge factor by integrating the probed pairing from the boundary
            // along two distinct rays.
            const PairedPathSamples path_a =
                reversed_ray_path(probes[0], opt.probe.s0, opt.integration_step);
            const PairedPathSamples path_b =
                reversed_ray_path(probes[1], opt.probe.s0, opt.integration_step);
            const RhoRecovery rho = integrate_rho(path_a, path_b, opt.two_path_tol);
            pr.rho = rho.rho;
            pr.two_path_discrepancy = rho.discrepancy;
            pr.rho_direct = 1.0 / probes[0].ratio_at(opt.probe.s0);

            // Nonlinearity combinations at the point itself (vertex at q).
            const double b2r = reference.beta2(q);
            const double b3r = reference.beta3(q);
            const double a_ref = 2.0 * b2r * b2r + b3r;
            const double cprime_ref = 4.0 * b2r * b2r * b2r - 3.0 * b2r * b3r;
            const double cfall_ref = 40.0 * b2r * b2r * b2r - 9.0 * b2r * b3r;

            const M3Request vertex =
                frame_request(reference.metric, q, dirs[0], opt.probe);
            const LogRatioProbe boundary_probe(hidden.m3(vertex), ref_oracles.m3(vertex),
                                               opt.probe.fd_step);
            const double e_boundary = boundary_probe.ratio_at(boundary_probe.exit_parameter());
            pr.a_measured = a_ref * pr.rho * pr.rho * e_boundary;

            const std::vector<double> s_grid =
                sweep_s_grid(opt.sweep_points, opt.sweep_s_min, opt.sweep_s_max);
            const frames::LaurentFit fit_h = m4_sweep_fit(hidden.m4, q, opt.sweep_phi, s_grid);
            const frames::LaurentFit fit_r =
                m4_sweep_fit(ref_oracles.m4, q, opt.sweep_phi, s_grid);
            const double rho3 = pr.rho * pr.rho * pr.rho;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            const double lead_r = fit_r.coefficient(-3);
            const double tail_r = fit_r.coefficient(-1);
            pr.cprime_measured =
                std::abs(lead_r) > opt.degenerate_tol
                    ? cprime_ref * rho3 * (fit_h.coefficient(-3) / lead_r)
                    : nan;
            const double cfall_measured =
                std::abs(tail_r) > opt.degenerate_tol
                    ? cfall_ref * rho3 * (fit_h.coefficient(-1) / tail_r)
                    : nan;

            const BetaRecovery betas = recover_betas_point(
                pr.a_measured, pr.cprime_measured, cfall_measured, pr.rho, b2r, b3r);
            pr.beta2 = betas.beta2;
            pr.beta3 = betas.beta3;
            pr.beta3_residual = betas.beta3_residual;
        } catch (const std::exception& e) {
            pr.skipped = true;
            pr.skip_reason = e.what();
        }
        result.points.push_back(std::move(pr));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Verification

GaugeTruth truth_for(const SyntheticPair& pair) {
    GaugeTruth truth;
    truth.rho = [bump = pair.rho](const SpacetimePoint& q) { return bump.value(q.x); };
    truth.delta_b = [bump = pair.rho](const SpacetimePoint& q) {
        const Vec3 g = (2.0 / bump.value(q.x)) * bump.gradient(q.x);
        return std::array<double, 4>{0.0, g[0], g[1], g[2]};
    };
    truth.beta2 = pair.hidden.beta2;
    truth.beta3 = pair.hidden.beta3;
    return truth;
}

RelationReport verify_gauge_relations(const RecoveryResult& result, const GaugeTruth& truth) {
    RelationReport report;
    double sum_sq_b = 0.0, sum_sq_rho = 0.0;
    std::size_t n_b = 0;
    for (const PointRecovery& pr : result.points) {
        if (pr.skipped) {
            ++report.skipped;
            continue;
        }
        ++report.checked;

        const std::array<double, 4> db = truth.delta_b(pr.q);
        for (std::size_t i = 0; i < 4; ++i) {
            const double err = std::abs(pr.delta_b[i] - db[i]);
            report.max_delta_b_error = std::max(report.max_delta_b_error, err);
            sum_sq_b += err * err;
            ++n_b;
        }

        const double rho_true = truth.rho(pr.q);
        const double rho_err = std::abs(pr.rho - rho_true) / std::abs(rho_true);
        report.max_rho_error = std::max(report.max_rho_error, rho_err);
        sum_sq_rho += rho_err * rho_err;

        const double b2_true = truth.beta2(pr.q);
        const double b3_true = truth.beta3(pr.q);
        const double b2_err = std::abs(pr.beta2 - b2_true) / std::max(1e-300, std::abs(b2_true));
        const double b3_err = std::abs(pr.beta3 - b3_true) / std::max(1e-300, std::abs(b3_true));
        report.max_beta2_error = std::max(report.max_beta2_error, b2_err);
        report.max_beta3_error = std::max(report.max_beta3_error, b3_err);
    }
    if (n_b > 0) report.rms_delta_b_error = std::sqrt(sum_sq_b / static_cast<double>(n_b));
    if (report.checked > 0)
        report.rms_rho_error = std::sqrt(sum_sq_rho / static_cast<double>(report.checked));
    return report;
}

TimeIndependenceVerdict verify_time_independence(const SpacetimePoint& q,
                                                 const CandidateGauge& rho, double beta2,
                                                 double beta3, double beta4,
                                                 const FramePair& frames_pair, double tol) {
    if (!frames::three_frame_valid(frames_pair.phi1, frames_pair.theta1) ||
        !frames::three_frame_valid(frames_pair.phi2, frames_pair.theta2))
        throw IllConditionedFramesError(
            "verify_time_independence: a verification frame is degenerate");
    const double i3_1 = frames::i3_closed(frames_pair.phi1, frames_pair.theta1);
    const double i3_2 = frames::i3_closed(frames_pair.phi2, frames_pair.theta2);
    if (std::abs(i3_1 - i3_2) < 0.1) {
        std::ostringstream msg;
        msg << "verify_time_independence: the two frames share their interaction coefficient "
               "(|delta I3| = "
            << std::abs(i3_1 - i3_2) << " < 0.1); the vanishing conditions cannot be separated";
        throw IllConditionedFramesError(msg.str());
    }

    const double r = rho.value(q);
    const double rt = rho.dt(q);
    if (!(r > 0.0))
        throw std::invalid_argument(
            "verify_time_independence: candidate gauge factor must be positive");

    // Interaction-coefficient weights of a gauged medium: c_k multiplies the
    // first time derivative the gauge factor introduces at order k.
    const double c2 = 4.0 * beta2 * rt;
    const double c3 = 6.0 * beta3 * r * rt;
    const double c4 = 8.0 * beta4 * r * r * rt;

    const double e1 = c3 * (1.0 - beta2) + 2.0 * c2 * beta2 * i3_1;
    const double e2 = c3 * (1.0 - beta2) + 2.0 * c2 * beta2 * i3_2;
    const double frame_coef = (e2 - e1) / (i3_2 - i3_1);
    const double const_coef = e1 - frame_coef * i3_1;

    TimeIndependenceVerdict verdict;
    if (std::abs(beta2) > 1e-14) {
        verdict.branch = "second-order";
        verdict.c3_magnitude = std::abs(const_coef);
        verdict.c2_magnitude = std::abs(frame_coef);
        verdict.time_independent = verdict.c3_magnitude <= tol && verdict.c2_magnitude <= tol;
    } else if (std::abs(beta3) > 1e-14) {
        verdict.branch = "third-order";
        verdict.c3_magnitude = std::abs(const_coef);
        verdict.time_independent = verdict.c3_magnitude <= tol;
    } else {
        verdict.branch = "fourth-order";
        verdict.c4_magnitude = std::abs(c4 * beta4);
        verdict.time_independent = verdict.c4_magnitude <= tol;
    }
    return verdict;
}

}  // namespace ws::recover
