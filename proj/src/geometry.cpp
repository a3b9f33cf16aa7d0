#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ws {

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

SpeedProfile SpeedProfile::constant(double c0) {
    if (c0 <= 0.0) throw std::invalid_argument("SpeedProfile: c0 must be positive");
    SpeedProfile p;
    p.kind_ = Kind::Constant;
    p.c0_ = c0;
    return p;
}

SpeedProfile SpeedProfile::gaussian_lens(double c0, double amp, double width, const Vec3& center) {
    if (c0 <= 0.0) throw std::invalid_argument("SpeedProfile: c0 must be positive");
    if (width <= 0.0) throw std::invalid_argument("SpeedProfile: width must be positive");
    if (amp <= -1.0) throw std::invalid_argument("SpeedProfile: lens amplitude must keep c > 0");
    SpeedProfile p;
    p.kind_ = Kind::GaussianLens;
    p.c0_ = c0;
    p.amp_ = amp;
    p.width_ = width;
    p.center_ = center;
    return p;
}

double SpeedProfile::value(const Vec3& x) const {
    if (kind_ == Kind::Constant) return c0_;
    const Vec3 r = x - center_;
    return c0_ * (1.0 + amp_ * std::exp(-dot(r, r) / (2.0 * width_ * width_)));
}

Vec3 SpeedProfile::gradient(const Vec3& x) const {
    if (kind_ == Kind::Constant) return {0.0, 0.0, 0.0};
    const Vec3 r = x - center_;
    const double w2 = width_ * width_;
    const double g = c0_ * amp_ * std::exp(-dot(r, r) / (2.0 * w2));
    return (-g / w2) * r;
}

std::array<double, 9> SpeedProfile::hessian(const Vec3& x) const {
    std::array<double, 9> h{};
    if (kind_ == Kind::Constant) return h;
    const Vec3 r = x - center_;
    const double w2 = width_ * width_;
    const double g = c0_ * amp_ * std::exp(-dot(r, r) / (2.0 * w2));
    // d2c/dxi dxj = g (r_i r_j / w^4 - delta_ij / w^2)
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            h[static_cast<std::size_t>(3 * i + j)] =
                g * (r[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(j)] / (w2 * w2) -
                     (i == j ? 1.0 / w2 : 0.0));
    return h;
}

std::string SpeedProfile::describe() const {
    if (kind_ == Kind::Constant) return "constant(c0=" + std::to_string(c0_) + ")";
    return "gaussian_lens(c0=" + std::to_string(c0_) + ",amp=" + std::to_string(amp_) +
           ",width=" + std::to_string(width_) + ")";
}

double ProductMetric::hamiltonian(const Vec3& x, const Covector& z) const {
    const double c = speed_.value(x);
    return -z.zeta0 * z.zeta0 + c * c * dot(z.zeta, z.zeta);
}

double ProductMetric::dual_pairing(const Vec3& x, const Covector& a, const Covector& b) const {
    const double c = speed_.value(x);
    return -a.zeta0 * b.zeta0 + c * c * dot(a.zeta, b.zeta);
}

SpacetimePoint ProductMetric::flow_velocity(const Vec3& x, const Covector& z) const {
    const double c = speed_.value(x);
    SpacetimePoint v;
    v.t = -2.0 * z.zeta0;
    v.x = (2.0 * c * c) * z.zeta;
    return v;
}

Covector ProductMetric::project_to_null_cone(const Vec3& x, const Covector& z) const {
    const double c = speed_.value(x);
    const double zn = norm(z.zeta);
    if (zn == 0.0) throw std::invalid_argument("project_to_null_cone: zero spatial covector");
    Covector out = z;
    out.zeta = (std::abs(z.zeta0) / (c * zn)) * z.zeta;
    return out;
}

Covector ProductMetric::null_covector(const Vec3& x, double zeta0, const Vec3& unit_dir) const {
    const double c = speed_.value(x);
    Covector z;
    z.zeta0 = zeta0;
    z.zeta = (std::abs(zeta0) / c) * unit_dir;
    return z;
}

double natural_pairing(const Covector& b, const SpacetimePoint& v) {
    return b.zeta0 * v.t + dot(b.zeta, v.x);
}

std::size_t Bicharacteristic::nearest_index(double s) const {
    if (samples.size() < 2) return 0;
    const double ds = samples[1].s - samples[0].s;
    const double fi = (s - samples.front().s) / ds;
    const auto i = static_cast<std::ptrdiff_t>(std::llround(fi));
    const auto clamped = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(samples.size()) - 1);
    return static_cast<std::size_t>(clamped);
}

namespace {

// The Vec3 operators live in the enclosing namespace; redeclare them here so
// the FlowState operators below do not hide them.
using ws::operator+;
using ws::operator*;

// Phase-space state of the ray flow: (t, x, zeta_0, zeta).
struct FlowState {
    double t;
    Vec3 x;
    double zeta0;
    Vec3 zeta;
};

FlowState operator+(const FlowState& a, const FlowState& b) {
    return {a.t + b.t, a.x + b.x, a.zeta0 + b.zeta0, a.zeta + b.zeta};
}
FlowState operator*(double s, const FlowState& a) { return {s * a.t, s * a.x, s * a.zeta0, s * a.zeta}; }

// Hamilton's equations for H = -zeta_0^2 + c(x)^2 |zeta|^2:
//   dt/ds = -2 zeta_0,  dx/ds = 2 c^2 zeta,
//   dzeta_0/ds = 0,     dzeta/ds = -grad(c^2) |zeta|^2.
FlowState flow_rhs(const ProductMetric& metric, const FlowState& y) {
    const double c = metric.speed().value(y.x);
    const Vec3 gc = metric.speed().gradient(y.x);
    FlowState d;
    d.t = -2.0 * y.zeta0;
    d.x = (2.0 * c * c) * y.zeta;
    d.zeta0 = 0.0;
    d.zeta = (-2.0 * c * dot(y.zeta, y.zeta)) * gc;
    return d;
}

FlowState rk4_step(const ProductMetric& metric, const FlowState& y, double h) {
    const FlowState k1 = flow_rhs(metric, y);
    const FlowState k2 = flow_rhs(metric, y + (0.5 * h) * k1);
    const FlowState k3 = flow_rhs(metric, y + (0.5 * h) * k2);
    const FlowState k4 = flow_rhs(metric, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// One RK4 step refined by step-halving Richardson extrapolation (local
// order 5): y_fine + (y_fine - y_coarse)/15.
FlowState refined_step(const ProductMetric& metric, const FlowState& y, double h) {
    const FlowState coarse = rk4_step(metric, y, h);
    const FlowState mid = rk4_step(metric, y, 0.5 * h);
    const FlowState fine = rk4_step(metric, mid, 0.5 * h);
    return fine + (1.0 / 15.0) * (fine + (-1.0) * coarse);
}

RaySample make_sample(const ProductMetric& metric, double s, const FlowState& y) {
    RaySample smp;
    smp.s = s;
    smp.point.t = y.t;
    smp.point.x = y.x;
    smp.z.zeta0 = y.zeta0;
    smp.z.zeta = y.zeta;
    smp.velocity = metric.flow_velocity(y.x, smp.z);
    return smp;
}

}  // namespace

Bicharacteristic trace_bicharacteristic(const ProductMetric& metric,
                                        const SpacetimePoint& x0, const Covector& z0,
                                        double s_max, const StepControl& ctl) {
    if (s_max <= 0.0) throw std::invalid_argument("trace_bicharacteristic: s_max must be positive");
    if (ctl.ds <= 0.0) throw std::invalid_argument("trace_bicharacteristic: step must be positive");
    const double h0 = std::abs(metric.hamiltonian(x0.x, z0));
    const double scale = z0.zeta0 * z0.zeta0;
    if (h0 > 1e-10 * std::max(scale, 1.0))
        throw std::invalid_argument("trace_bicharacteristic: initial covector is not lightlike");

    const auto n_steps = static_cast<std::size_t>(std::ceil(s_max / ctl.ds));
    const double ds = s_max / static_cast<double>(n_steps);

    Bicharacteristic ray;
    ray.samples.reserve(n_steps + 1);
    FlowState y{x0.t, x0.x, z0.zeta0, z0.zeta};
    ray.samples.push_back(make_sample(metric, 0.0, y));
    for (std::size_t n = 1; n <= n_steps; ++n) {
        y = refined_step(metric, y, ds);
        if (ctl.reproject_every > 0 && n % static_cast<std::size_t>(ctl.reproject_every) == 0) {
            Covector z{y.zeta0, y.zeta};
            z = metric.project_to_null_cone(y.x, z);
            y.zeta = z.zeta;
        }
        ray.max_null_drift = std::max(ray.max_null_drift,
                                      std::abs(metric.hamiltonian(y.x, {y.zeta0, y.zeta})));
        ray.samples.push_back(make_sample(metric, static_cast<double>(n) * ds, y));
    }
    return ray;
}

namespace {

// Tangent-flow right-hand side: the flow Jacobian applied to a variation
// (dx, dzeta) with dzeta_0 = 0 (null-cone-preserving family).
struct Variation {
    Vec3 dx;
    Vec3 dzeta;
};

Variation operator+(const Variation& a, const Variation& b) { return {a.dx + b.dx, a.dzeta + b.dzeta}; }
Variation operator*(double s, const Variation& a) { return {s * a.dx, s * a.dzeta}; }

Variation variation_rhs(const ProductMetric& metric, const RaySample& base, const Variation& v) {
    const Vec3& x = base.point.x;
    const Vec3& zeta = base.z.zeta;
    const double c = metric.speed().value(x);
    const Vec3 gc = metric.speed().gradient(x);
    const auto hc = metric.speed().hessian(x);

    // d(dx)/ds = 2 c^2 dzeta + 4 c (gc . dx) zeta
    Variation out;
    out.dx = (2.0 * c * c) * v.dzeta + (4.0 * c * dot(gc, v.dx)) * zeta;

    // d(dzeta)/ds = -2 |zeta|^2 [ (gc.dx) gc + c Hc dx ] - 4 c (zeta.dzeta) gc
    const double z2 = dot(zeta, zeta);
    Vec3 hdx{0.0, 0.0, 0.0};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            hdx[static_cast<std::size_t>(i)] +=
                hc[static_cast<std::size_t>(3 * i + j)] * v.dx[static_cast<std::size_t>(j)];
    out.dzeta = (-2.0 * z2 * dot(gc, v.dx)) * gc + (-2.0 * z2 * c) * hdx +
                (-4.0 * c * dot(zeta, v.dzeta)) * gc;
    return out;
}

}  // namespace

std::optional<double> first_conjugate_parameter(const ProductMetric& metric,
                                                const Bicharacteristic& ray) {
    if (ray.size() < 3) return std::nullopt;

    // Transverse basis at the start: two unit vectors orthogonal to the
    // initial spatial direction.
    const Vec3 dir0 = ray.front().z.zeta;
    const double n0 = norm(dir0);
    if (n0 == 0.0) return std::nullopt;
    const Vec3 u = (1.0 / n0) * dir0;
    Vec3 e1 = std::abs(u[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    e1 = e1 - dot(e1, u) * u;
    e1 = (1.0 / norm(e1)) * e1;
    const Vec3 e2{u[1] * e1[2] - u[2] * e1[1], u[2] * e1[0] - u[0] * e1[2],
                  u[0] * e1[1] - u[1] * e1[0]};

    // Jacobi-type variations: dx(0) = 0, dzeta(0) transverse (focalizing family).
    std::array<Variation, 2> var{Variation{{0, 0, 0}, e1}, Variation{{0, 0, 0}, e2}};

    auto transverse_det = [&](const RaySample& smp, const std::array<Variation, 2>& w) {
        const Vec3 v = smp.velocity.x;
        const double vn = norm(v);
        Vec3 uu = vn > 0.0 ? (1.0 / vn) * v : u;
        Vec3 f1 = e1 - dot(e1, uu) * uu;
        const double f1n = norm(f1);
        if (f1n > 1e-12) f1 = (1.0 / f1n) * f1;
        Vec3 f2{uu[1] * f1[2] - uu[2] * f1[1], uu[2] * f1[0] - uu[0] * f1[2],
                uu[0] * f1[1] - uu[1] * f1[0]};
        const double a11 = dot(w[0].dx, f1), a12 = dot(w[0].dx, f2);
        const double a21 = dot(w[1].dx, f1), a22 = dot(w[1].dx, f2);
        return a11 * a22 - a12 * a21;
    };

    double prev_det = 0.0;
    bool have_nonzero = false;
    for (std::size_t n = 0; n + 1 < ray.size(); ++n) {
        const RaySample& a = ray.samples[n];
        const RaySample& b = ray.samples[n + 1];
        const double h = b.s - a.s;
        // RK4 on the variational system, freezing the base ray at the
        // endpoints/midpoint (midpoint state interpolated linearly).
        RaySample mid;
        mid.point.x = 0.5 * (a.point.x + b.point.x);
        mid.z.zeta = 0.5 * (a.z.zeta + b.z.zeta);
        mid.z.zeta0 = a.z.zeta0;
        mid.velocity.x = 0.5 * (a.velocity.x + b.velocity.x);
        for (auto& w : var) {
            const Variation k1 = variation_rhs(metric, a, w);
            const Variation k2 = variation_rhs(metric, mid, w + (0.5 * h) * k1);
            const Variation k3 = variation_rhs(metric, mid, w + (0.5 * h) * k2);
            const Variation k4 = variation_rhs(metric, b, w + h * k3);
            w = w + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        const double det = transverse_det(b, var);
        if (have_nonzero && prev_det != 0.0 && det * prev_det < 0.0) {
            // Sign change in (s_n, s_{n+1}]: report the bracketing midpoint.
            return 0.5 * (a.s + b.s);
        }
        if (std::abs(det) > 0.0) have_nonzero = true;
        prev_det = det;
    }
    return std::nullopt;
}

bool BoxDomain::contains(const Vec3& x) const {
    for (int i = 0; i < 3; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (x[k] < lo[k] || x[k] > hi[k]) return false;
    }
    return true;
}

double BoxDomain::exit_parameter(const BoxDomain& box, const Bicharacteristic& ray) {
    for (std::size_t n = 0; n < ray.size(); ++n) {
        if (!box.contains(ray.samples[n].point.x)) {
            if (n == 0) return 0.0;
            // Bisect between the last inside and first outside samples using
            // linear interpolation of positions (samples are densely spaced).
            double slo = ray.samples[n - 1].s, shi = ray.samples[n].s;
            const Vec3 a = ray.samples[n - 1].point.x, b = ray.samples[n].point.x;
            for (int it = 0; it < 60; ++it) {
                const double sm = 0.5 * (slo + shi);
                const double w = (sm - ray.samples[n - 1].s) / (ray.samples[n].s - ray.samples[n - 1].s);
                const Vec3 xm = a + w * (b - a);
                (box.contains(xm) ? slo : shi) = sm;
            }
            return 0.5 * (slo + shi);
        }
    }
    return ray.back().s;
}

}  // namespace ws
