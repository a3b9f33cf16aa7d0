// Lightlike covector frame algebra at a point, in normalized Minkowski dual
// coordinates (inverse metric diag(-1, 1, 1, 1) acting on covectors).
//
// Two constructions are provided:
//  * a three-member frame decomposing a target lightlike covector
//    lambda * zhat = a1 zhat1 + a2 zhat2 + a3 zhat3, carrying the closed-form
//    interaction coefficient I3 and the pair-sum identity equal to -1;
//  * a four-member frame, equal opening angle theta around the first member,
//    whose ordered-permutation sums C and D have Laurent expansions in
//    s = sin(theta/2) with leading data C: (-2, 14, 10), D: (3/2, -21/2, -9/4).
//
// All members are stored pre-multiplied by their decomposition weights, so the
// target is literally the sum of the stored members.

#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace ws::frames {

using Cov4 = std::array<double, 4>;

// Minkowski dual pairing of covectors: -a0 b0 + a.b.
double minkowski_dual(const Cov4& a, const Cov4& b);

Cov4 add(const Cov4& a, const Cov4& b);
Cov4 scale(double s, const Cov4& a);

struct ThreeFrame {
    double phi = 0.0;
    double theta = 0.0;
    double lambda = 0.0;                 // weight of the target covector
    Cov4 target{};                       // lambda * zhat
    std::array<Cov4, 3> member{};        // alpha_j * zhat_j, summing to target
    std::array<double, 3> alpha{};       // decomposition weights
};

// Builds the three-member frame for direction angles (phi, theta). Throws
// std::domain_error when the configuration is degenerate (lambda ~ 0,
// cos(phi) + cos(theta) ~ 0, or a pair denominator ~ 0).
ThreeFrame build_three_frame(double phi, double theta);

// Whether (phi, theta) is comfortably inside the valid region (used by the
// randomized property tests; margin mirrors the degeneracy guards).
bool three_frame_valid(double phi, double theta, double margin = 0.05);

// Sum over the 3 unordered member pairs of (z0^j + z0^k)^2 / <z^j+z^k, z^j+z^k>.
// Identically -1 on valid frames.
double pair_sum_identity(const ThreeFrame& f);

// Direct permutation-sum form of the interaction coefficient:
//   I3 = -sum_{unordered pairs} zeta_0 (z0^j + z0^k) / <z^j+z^k, z^j+z^k>,
// with zeta the (weighted) target covector.
double i3_direct(const ThreeFrame& f);

// Closed form I3 = (2 cos(theta) + 1) / (2 (cos(phi) + cos(theta))).
double i3_closed(double phi, double theta);

struct FourFrame {
    double phi = 0.0;
    double theta = 0.0;
    double s = 0.0;                      // sin(theta/2), the expansion parameter
    Cov4 target{};
    std::array<Cov4, 4> member{};        // alpha_j * zhat_j, summing to target
    std::array<double, 4> alpha{};
};

// Builds the four-member equal-angle frame. Throws std::domain_error when the
// member matrix is singular (sin(theta) ~ 0).
FourFrame build_four_frame(double phi, double theta);

// X_{ijk} = (z0^i+z0^j+z0^k)^2 / |z^i+z^j+z^k|^2 and Y_{jk} analogous for pairs.
double x_triple(const FourFrame& f, int i, int j, int k);
double y_pair(const FourFrame& f, int j, int k);

// Ordered sums over all 24 permutations (i,j,k,l) of {0,1,2,3}:
//   C = sum (4 X_{ijk} + Y_{il}) Y_{jk},   D = sum (3 Y_{kl} + 2 X_{ijk}).
double c_sum(const FourFrame& f);
double d_sum(const FourFrame& f);

// Full interaction coefficient at a base point, combining the permutation
// sums of a four-frame with the nonlinearity values there:
//   curly_c = C(frame) beta2^3 + D(frame) beta2 beta3 + beta4.
double curly_c(const FourFrame& f, double beta2, double beta3, double beta4);

// Three lightlike probe directions whose span contains a chosen lightlike
// observation direction w.  The members split a planar pair by s around the
// first probe; w is parametrized by r0.  Members are stored unweighted and the
// decomposition w = sum_j weight_j member_j is solved and verified.
struct ProbeTriple {
    double r0 = 0.0;
    double s = 0.0;
    Cov4 w{};                        // observation direction
    std::array<Cov4, 3> member{};    // unweighted lightlike probes
    std::array<double, 3> weight{};  // w = sum_j weight_j member_j
};

// Throws std::domain_error when s ~ 0 (coincident members) or |r0| > 1.
ProbeTriple build_probe_triple(double r0, double s);

// Least-squares Laurent fit sum_k coeff[k] s^{order[k]} over sample pairs.
struct LaurentFit {
    std::vector<int> order;
    std::vector<double> coeff;

    // Coefficient of s^p (0.0 when p is not in the basis).
    double coefficient(int p) const;
};

LaurentFit fit_laurent(const std::vector<double>& s, const std::vector<double>& values,
                       int min_order, int max_order);

}  // namespace ws::frames
