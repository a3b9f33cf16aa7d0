#include "frames.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ws::frames {

double minkowski_dual(const Cov4& a, const Cov4& b) {
    return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

Cov4 add(const Cov4& a, const Cov4& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}

Cov4 scale(double s, const Cov4& a) { return {s * a[0], s * a[1], s * a[2], s * a[3]}; }

namespace {

void check_denominator(double d, const char* what) {
    if (std::abs(d) < 1e-14)
        throw std::domain_error(std::string("frame pair denominator vanishes in ") + what);
}

}  // namespace

ThreeFrame build_three_frame(double phi, double theta) {
    const double sp = std::sin(phi), cp = std::cos(phi);
    const double st = std::sin(theta), ct = std::cos(theta);

    ThreeFrame f;
    f.phi = phi;
    f.theta = theta;
    f.lambda = 2.0 * st * (1.0 - ct);
    f.alpha = {-2.0 * st * (cp + ct),
               (1.0 + cp) * st + (1.0 - ct) * sp,
               (1.0 + cp) * st - (1.0 - ct) * sp};
    if (std::abs(f.lambda) < 1e-12 || std::abs(cp + ct) < 1e-12)
        throw std::domain_error("build_three_frame: degenerate (phi, theta)");

    const Cov4 zhat{-1.0, -cp, sp, 0.0};
    const std::array<Cov4, 3> bare{Cov4{-1.0, 1.0, 0.0, 0.0},
                                   Cov4{-1.0, ct, st, 0.0},
                                   Cov4{-1.0, ct, -st, 0.0}};
    f.target = scale(f.lambda, zhat);
    for (int j = 0; j < 3; ++j)
        f.member[static_cast<std::size_t>(j)] =
            scale(f.alpha[static_cast<std::size_t>(j)], bare[static_cast<std::size_t>(j)]);
    return f;
}

bool three_frame_valid(double phi, double theta, double margin) {
    const double sp = std::sin(phi), cp = std::cos(phi);
    const double st = std::sin(theta), ct = std::cos(theta);
    if (std::abs(cp + ct) < margin) return false;
    if (std::abs(st) < margin || std::abs(1.0 - ct) < margin) return false;
    const double lambda = 2.0 * st * (1.0 - ct);
    const double a1 = -2.0 * st * (cp + ct);
    const double a2 = (1.0 + cp) * st + (1.0 - ct) * sp;
    const double a3 = (1.0 + cp) * st - (1.0 - ct) * sp;
    const double m = std::min(std::min(std::abs(a1), std::abs(a2)),
                              std::min(std::abs(a3), std::abs(lambda)));
    return m >= 1e-2;
}

double pair_sum_identity(const ThreeFrame& f) {
    double tot = 0.0;
    for (int j = 0; j < 3; ++j)
        for (int k = j + 1; k < 3; ++k) {
            const Cov4 w = add(f.member[static_cast<std::size_t>(j)],
                               f.member[static_cast<std::size_t>(k)]);
            const double den = minkowski_dual(w, w);
            check_denominator(den, "pair_sum_identity");
            tot += w[0] * w[0] / den;
        }
    return tot;
}

double i3_direct(const ThreeFrame& f) {
    double tot = 0.0;
    for (int j = 0; j < 3; ++j)
        for (int k = j + 1; k < 3; ++k) {
            const Cov4 w = add(f.member[static_cast<std::size_t>(j)],
                               f.member[static_cast<std::size_t>(k)]);
            const double den = minkowski_dual(w, w);
            check_denominator(den, "i3_direct");
            tot += f.target[0] * w[0] / den;
        }
    return -tot;
}

double i3_closed(double phi, double theta) {
    return (2.0 * std::cos(theta) + 1.0) / (2.0 * (std::cos(phi) + std::cos(theta)));
}

FourFrame build_four_frame(double phi, double theta) {
    const double sp = std::sin(phi), cp = std::cos(phi);
    const double st = std::sin(theta), ct = std::cos(theta);
    if (std::abs(st) < 1e-12)
        throw std::domain_error("build_four_frame: sin(theta) vanishes");

    FourFrame f;
    f.phi = phi;
    f.theta = theta;
    f.s = std::sin(0.5 * theta);
    const Cov4 zeta{-1.0, 0.0, cp, sp};
    const std::array<Cov4, 4> bare{Cov4{-1.0, 1.0, 0.0, 0.0},
                                   Cov4{-1.0, ct, st * sp, -st * cp},
                                   Cov4{-1.0, ct, -st * sp, st * cp},
                                   Cov4{-1.0, ct, st * cp, st * sp}};

    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            m(r, c) = bare[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
    Eigen::Vector4d rhs(zeta[0], zeta[1], zeta[2], zeta[3]);
    Eigen::ColPivHouseholderQR<Eigen::Matrix4d> qr(m);
    if (!qr.isInvertible())
        throw std::domain_error("build_four_frame: member covectors are linearly dependent");
    const Eigen::Vector4d alpha = qr.solve(rhs);

    f.target = zeta;
    for (int j = 0; j < 4; ++j) {
        f.alpha[static_cast<std::size_t>(j)] = alpha(j);
        f.member[static_cast<std::size_t>(j)] = scale(alpha(j), bare[static_cast<std::size_t>(j)]);
    }
    return f;
}

double x_triple(const FourFrame& f, int i, int j, int k) {
    const Cov4 w = add(add(f.member[static_cast<std::size_t>(i)],
                           f.member[static_cast<std::size_t>(j)]),
                       f.member[static_cast<std::size_t>(k)]);
    const double den = minkowski_dual(w, w);
    check_denominator(den, "x_triple");
    return w[0] * w[0] / den;
}

double y_pair(const FourFrame& f, int j, int k) {
    const Cov4 w = add(f.member[static_cast<std::size_t>(j)],
                       f.member[static_cast<std::size_t>(k)]);
    const double den = minkowski_dual(w, w);
    check_denominator(den, "y_pair");
    return w[0] * w[0] / den;
}

namespace {

template <typename Fn>
void for_each_permutation(Fn&& fn) {
    int idx[4] = {0, 1, 2, 3};
    do {
        fn(idx[0], idx[1], idx[2], idx[3]);
    } while (std::next_permutation(idx, idx + 4));
}

}  // namespace

double c_sum(const FourFrame& f) {
    double tot = 0.0;
    for_each_permutation([&](int i, int j, int k, int l) {
        tot += (4.0 * x_triple(f, i, j, k) + y_pair(f, i, l)) * y_pair(f, j, k);
    });
    return tot;
}

double d_sum(const FourFrame& f) {
    double tot = 0.0;
    for_each_permutation([&](int i, int j, int k, int l) {
        tot += 3.0 * y_pair(f, k, l) + 2.0 * x_triple(f, i, j, k);
    });
    return tot;
}

double curly_c(const FourFrame& f, double beta2, double beta3, double beta4) {
    return c_sum(f) * beta2 * beta2 * beta2 + d_sum(f) * beta2 * beta3 + beta4;
}

ProbeTriple build_probe_triple(double r0, double s) {
    if (std::abs(s) < 1e-12)
        throw std::domain_error("build_probe_triple: s vanishes, probe pair coincides");
    if (std::abs(r0) > 1.0)
        throw std::domain_error("build_probe_triple: |r0| must not exceed 1");

    ProbeTriple p;
    p.r0 = r0;
    p.s = s;
    const double cs = std::sqrt(1.0 - s * s);
    const double cr = std::sqrt(1.0 - r0 * r0);
    p.member = {Cov4{-1.0, 1.0, 0.0, 0.0}, Cov4{-1.0, cs, s, 0.0}, Cov4{-1.0, cs, -s, 0.0}};
    p.w = {1.0, cr, -r0, 0.0};

    // The construction is planar (last component identically zero), so the
    // span membership reduces to a 3x3 solve on the remaining components.
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            m(r, c) = p.member[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
    const Eigen::Vector3d rhs(p.w[0], p.w[1], p.w[2]);
    Eigen::ColPivHouseholderQR<Eigen::Matrix3d> qr(m);
    if (!qr.isInvertible())
        throw std::domain_error("build_probe_triple: probe members are linearly dependent");
    const Eigen::Vector3d weight = qr.solve(rhs);
    for (int j = 0; j < 3; ++j) p.weight[static_cast<std::size_t>(j)] = weight(j);

    Cov4 recon{0.0, 0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < 3; ++j) recon = add(recon, scale(p.weight[j], p.member[j]));
    double res = 0.0;
    for (std::size_t i = 0; i < 4; ++i) res = std::max(res, std::abs(recon[i] - p.w[i]));
    if (res > 1e-10)
        throw std::domain_error("build_probe_triple: span decomposition failed to verify");
    return p;
}

double LaurentFit::coefficient(int p) const {
    for (std::size_t k = 0; k < order.size(); ++k)
        if (order[k] == p) return coeff[k];
    return 0.0;
}

LaurentFit fit_laurent(const std::vector<double>& s, const std::vector<double>& values,
                       int min_order, int max_order) {
    if (s.size() != values.size())
        throw std::invalid_argument("fit_laurent: sample size mismatch");
    if (min_order > max_order) throw std::invalid_argument("fit_laurent: empty order range");
    const int n_basis = max_order - min_order + 1;
    if (static_cast<int>(s.size()) < n_basis)
        throw std::invalid_argument("fit_laurent: underdetermined fit");

    Eigen::MatrixXd a(static_cast<Eigen::Index>(s.size()), n_basis);
    Eigen::VectorXd b(static_cast<Eigen::Index>(s.size()));
    for (std::size_t r = 0; r < s.size(); ++r) {
        for (int k = 0; k < n_basis; ++k)
            a(static_cast<Eigen::Index>(r), k) = std::pow(s[r], min_order + k);
        b(static_cast<Eigen::Index>(r)) = values[r];
    }
    const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);

    LaurentFit fit;
    fit.order.resize(static_cast<std::size_t>(n_basis));
    fit.coeff.resize(static_cast<std::size_t>(n_basis));
    for (int k = 0; k < n_basis; ++k) {
        fit.order[static_cast<std::size_t>(k)] = min_order + k;
        fit.coeff[static_cast<std::size_t>(k)] = x(k);
    }
    return fit;
}

}  // namespace ws::frames
