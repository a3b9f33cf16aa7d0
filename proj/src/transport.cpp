#include "transport.hpp"

#include <cmath>
#include <stdexcept>

namespace ws::transport {

OneFormField OneFormField::zero() {
    OneFormField b;
    b.time_part = [](const SpacetimePoint&) { return 0.0; };
    b.space_part = [](const SpacetimePoint&) { return Vec3{0.0, 0.0, 0.0}; };
    b.potential = [](const SpacetimePoint&) { return 0.0; };
    b.is_exact = true;
    return b;
}

OneFormField OneFormField::constant(double b0, const Vec3& bs) {
    OneFormField b;
    b.time_part = [b0](const SpacetimePoint&) { return b0; };
    b.space_part = [bs](const SpacetimePoint&) { return bs; };
    // a constant form is d of a linear potential
    b.potential = [b0, bs](const SpacetimePoint& p) { return b0 * p.t + dot(bs, p.x); };
    b.is_exact = true;
    return b;
}

OneFormField OneFormField::from_potential(std::function<double(const SpacetimePoint&)> phi,
                                          std::function<double(const SpacetimePoint&)> dphi_dt,
                                          std::function<Vec3(const SpacetimePoint&)> grad_phi) {
    OneFormField b;
    b.time_part = std::move(dphi_dt);
    b.space_part = std::move(grad_phi);
    b.potential = std::move(phi);
    b.is_exact = true;
    return b;
}

OneFormField OneFormField::plus(const OneFormField& other) const {
    OneFormField b;
    auto t1 = time_part, t2 = other.time_part;
    b.time_part = [t1, t2](const SpacetimePoint& p) { return t1(p) + t2(p); };
    auto s1 = space_part, s2 = other.space_part;
    b.space_part = [s1, s2](const SpacetimePoint& p) { return s1(p) + s2(p); };
    b.is_exact = is_exact && other.is_exact;
    if (b.is_exact) {
        auto p1 = potential, p2 = other.potential;
        b.potential = [p1, p2](const SpacetimePoint& p) { return p1(p) + p2(p); };
    }
    return b;
}

double OneFormField::pair_with(const RaySample& sample) const {
    return time_part(sample.point) * sample.velocity.t +
           dot(space_part(sample.point), sample.velocity.x);
}

std::vector<double> corrected_cumulative(const std::vector<double>& g, double du) {
    const std::size_t n = g.size();
    if (n < 2) throw std::invalid_argument("corrected_cumulative: need at least 2 samples");
    if (du <= 0.0) throw std::invalid_argument("corrected_cumulative: du must be positive");

    if (n < 5) {  // too short for the correction stencils; plain trapezoid
        std::vector<double> cum(n, 0.0);
        for (std::size_t k = 1; k < n; ++k)
            cum[k] = cum[k - 1] + 0.5 * du * (g[k - 1] + g[k]);
        return cum;
    }

    // derivative estimates for the Euler-Maclaurin correction; 4th-order
    // central stencil inside, 3rd-order one-sided at the ends (the correction
    // itself carries an extra du^2, so these orders more than suffice)
    auto deriv = [&](std::size_t k) {
        if (k >= 2 && k + 2 < n)
            return (g[k - 2] - 8.0 * g[k - 1] + 8.0 * g[k + 1] - g[k + 2]) / (12.0 * du);
        if (k == 0)
            return (-11.0 * g[0] + 18.0 * g[1] - 9.0 * g[2] + 2.0 * g[3]) / (6.0 * du);
        if (k == 1) return (-2.0 * g[0] - 3.0 * g[1] + 6.0 * g[2] - g[3]) / (6.0 * du);
        if (k + 2 == n)
            return (2.0 * g[n - 1] + 3.0 * g[n - 2] - 6.0 * g[n - 3] + g[n - 4]) / (6.0 * du);
        return (11.0 * g[n - 1] - 18.0 * g[n - 2] + 9.0 * g[n - 3] - 2.0 * g[n - 4]) / (6.0 * du);
    };

    const double d0 = deriv(0);
    std::vector<double> cum(n, 0.0);
    double trapz = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        trapz += 0.5 * du * (g[k - 1] + g[k]);
        cum[k] = trapz - du * du / 12.0 * (deriv(k) - d0);
    }
    return cum;
}

namespace {

double uniform_step(const Bicharacteristic& ray) {
    const std::size_t n = ray.size();
    const double ds = ray.samples[1].s - ray.samples[0].s;
    const double span = ray.samples[n - 1].s - ray.samples[0].s;
    if (std::abs(span - static_cast<double>(n - 1) * ds) > 1e-9 * std::abs(span))
        throw std::invalid_argument("transport: ray samples are not uniform in s");
    return ds;
}

}  // namespace

std::vector<double> pairing_cumulative(const OneFormField& b, const Bicharacteristic& ray) {
    const std::size_t n = ray.size();
    if (n < 2) throw std::invalid_argument("pairing_cumulative: ray needs at least 2 samples");
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = b.pair_with(ray.samples[k]);
    return corrected_cumulative(g, uniform_step(ray));
}

double transport_ratio(const OneFormField& b, const Bicharacteristic& ray,
                       std::size_t from_sample, std::size_t to_sample) {
    if (from_sample >= ray.size() || to_sample >= ray.size())
        throw std::invalid_argument("transport_ratio: sample index out of range");
    const std::vector<double> cum = pairing_cumulative(b, ray);
    return std::exp(0.5 * (cum[to_sample] - cum[from_sample]));
}

double transport_ratio(const OneFormField& b, const Bicharacteristic& ray) {
    return transport_ratio(b, ray, 0, ray.size() - 1);
}

namespace {

// Cubic Hermite reconstruction of the ray state inside one sample interval.
// Positions use the stored velocities as exact nodal slopes; velocities are
// the derivative of the same polynomial, which keeps the pair consistent.
RaySample hermite_state(const RaySample& a, const RaySample& bnode, double s) {
    const double h = bnode.s - a.s;
    const double u = (s - a.s) / h;
    const double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    const double h10 = u * (1.0 - u) * (1.0 - u);
    const double h01 = u * u * (3.0 - 2.0 * u);
    const double h11 = u * u * (u - 1.0);
    const double d00 = 6.0 * u * (u - 1.0) / h;
    const double d10 = (1.0 - u) * (1.0 - 3.0 * u);
    const double d01 = -d00;
    const double d11 = u * (3.0 * u - 2.0);

    RaySample out;
    out.s = s;
    out.point.t = h00 * a.point.t + h10 * h * a.velocity.t + h01 * bnode.point.t +
                  h11 * h * bnode.velocity.t;
    out.velocity.t = d00 * a.point.t + d10 * a.velocity.t + d01 * bnode.point.t +
                     d11 * bnode.velocity.t;
    for (std::size_t i = 0; i < 3; ++i) {
        out.point.x[i] = h00 * a.point.x[i] + h10 * h * a.velocity.x[i] + h01 * bnode.point.x[i] +
                         h11 * h * bnode.velocity.x[i];
        out.velocity.x[i] = d00 * a.point.x[i] + d10 * a.velocity.x[i] + d01 * bnode.point.x[i] +
                            d11 * bnode.velocity.x[i];
    }
    return out;
}

}  // namespace

double transport_ode_ratio(const OneFormField& b, const Bicharacteristic& ray,
                           double s0, double s1) {
    if (ray.size() < 2) throw std::invalid_argument("transport_ode_ratio: ray needs samples");
    const double ds = uniform_step(ray);
    const double front = ray.front().s;
    const double back = ray.back().s;
    const double pad = 1e-9 * std::max(1.0, std::abs(back - front));
    if (s0 < front - pad || s1 > back + pad || s1 < s0)
        throw std::invalid_argument("transport_ode_ratio: requested span not covered by the ray");

    auto index_of = [&](double s) {
        const double k = (s - front) / ds;
        const double rounded = std::round(k);
        if (std::abs(k - rounded) > 1e-6)
            throw std::invalid_argument("transport_ode_ratio: endpoint is off the sample grid");
        return static_cast<std::size_t>(rounded);
    };
    const std::size_t k0 = index_of(s0);
    const std::size_t k1 = index_of(s1);

    double a = 1.0;  // a(s0) normalized; the return value is the ratio
    for (std::size_t k = k0; k < k1; ++k) {
        const RaySample& lo = ray.samples[k];
        const RaySample& hi = ray.samples[k + 1];
        const RaySample mid = hermite_state(lo, hi, 0.5 * (lo.s + hi.s));
        const double h = hi.s - lo.s;
        const double g_lo = 0.5 * b.pair_with(lo);
        const double g_mid = 0.5 * b.pair_with(mid);
        const double g_hi = 0.5 * b.pair_with(hi);
        const double k1v = g_lo * a;
        const double k2v = g_mid * (a + 0.5 * h * k1v);
        const double k3v = g_mid * (a + 0.5 * h * k2v);
        const double k4v = g_hi * (a + h * k3v);
        a += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    return a;
}

PairingProfile::PairingProfile(const OneFormField& b, const Bicharacteristic& ray) {
    const std::size_t n = ray.size();
    if (n < 2) throw std::invalid_argument("PairingProfile: ray needs at least 2 samples");
    ds_ = uniform_step(ray);
    s_front_ = ray.front().s;
    g_.resize(n);
    for (std::size_t k = 0; k < n; ++k) g_[k] = b.pair_with(ray.samples[k]);
    cum_ = corrected_cumulative(g_, ds_);
}

double PairingProfile::integral_to(double s) const {
    const std::size_t n = cum_.size();
    const double span = ds_ * static_cast<double>(n - 1);
    const double pad = 1e-9 * std::max(1.0, span);
    if (s < s_front_ - pad || s > s_front_ + span + pad)
        throw std::invalid_argument("PairingProfile: parameter outside the sampled span");
    double u = (s - s_front_) / ds_;
    if (u < 0.0) u = 0.0;
    if (u > static_cast<double>(n - 1)) u = static_cast<double>(n - 1);
    std::size_t k = static_cast<std::size_t>(u);
    if (k >= n - 1) k = n - 2;
    const double w = u - static_cast<double>(k);
    // cubic Hermite on the cumulative with nodal slopes g
    const double h00 = (1.0 + 2.0 * w) * (1.0 - w) * (1.0 - w);
    const double h10 = w * (1.0 - w) * (1.0 - w);
    const double h01 = w * w * (3.0 - 2.0 * w);
    const double h11 = w * w * (w - 1.0);
    return h00 * cum_[k] + h10 * ds_ * g_[k] + h01 * cum_[k + 1] + h11 * ds_ * g_[k + 1];
}

}  // namespace ws::transport
