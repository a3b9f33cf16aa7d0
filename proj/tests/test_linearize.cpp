#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "linearize.hpp"
#include "solver.hpp"

using namespace ws::solver;
using namespace ws::lin;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<Wavefield1D> linear_waves(const Medium1D& med, const MultiSource& sources,
                                      double t_final) {
    auto zero = [](double) { return 0.0; };
    std::vector<Wavefield1D> v;
    for (const auto& slot : sources.slots)
        v.push_back(solve_linear(med, slot.left ? slot.left : zero,
                                 slot.right ? slot.right : zero, t_final));
    return v;
}

double sup_norm(const Wavefield1D& f) {
    double m = 0.0;
    for (double v : f.p) m = std::max(m, std::abs(v));
    return m;
}

// Multiplier field rho(t, x) sampled on the grid of `like`.
Wavefield1D multiplier_field(const Medium1D& med, const Wavefield1D& like,
                             double amp, double rate) {
    Wavefield1D rho = like;
    for (std::size_t n = 0; n < rho.n_levels; ++n)
        for (std::size_t i = 0; i < rho.n_nodes; ++i)
            rho.at(n, i) = 1.0 + amp * std::sin(kPi * med.x[i]) *
                                     (rate == 0.0 ? 1.0 : std::sin(rate * rho.t[n]));
    return rho;
}

}  // namespace

TEST_CASE("standard probes stagger sides and share the step") {
    const MultiSource s = MultiSource::standard_probes(3, 10.0, 1e-3);
    CHECK(s.order() == 3);
    REQUIRE(s.epsilons.size() == 3);
    for (double e : s.epsilons) CHECK(e == 1e-3);
    bool has_left = false, has_right = false;
    for (const auto& slot : s.slots) {
        if (slot.left) has_left = true;
        if (slot.right) has_right = true;
    }
    CHECK(has_left);
    CHECK(has_right);
}

TEST_CASE("the cascade vanishes identically on a linear medium") {
    const Medium1D med = Medium1D::uniform(40);  // all betas zero
    const MultiSource sources = MultiSource::standard_probes(2, 10.0, 1e-3);
    const std::vector<Wavefield1D> v = linear_waves(med, sources, 0.5);
    const CascadeTerms terms = cascade_terms(med, v);
    CHECK(sup_norm(terms.pair(0, 1)) == 0.0);
    CHECK(sup_norm(terms.pair(0, 0)) == 0.0);
}

TEST_CASE("the FD mixed derivative converges to the pair cascade") {
    const Medium1D med = Medium1D::uniform(50, 1.0, 0.0, 0.0, 0.0, 0.5, 0.4);
    const double t_final = 0.6;
    MultiSource sources = MultiSource::standard_probes(2, 10.0, 1e-3);

    const std::vector<Wavefield1D> v = linear_waves(med, sources, t_final);
    const CascadeTerms terms = cascade_terms(med, v);
    Wavefield1D u2 = terms.pair(0, 1);
    for (double& p : u2.p) p *= 2.0;  // both ordered pairs

    auto fd_at = [&](double eps, bool richardson) {
        MultiSource probes = sources;
        std::fill(probes.epsilons.begin(), probes.epsilons.end(), eps);
        FdOptions fd;
        fd.richardson = richardson;
        return fd_mixed_field(med, probes, t_final, {}, fd);
    };

    const double norm = field_l2(u2);
    const double rel_coarse = field_l2_distance(fd_at(1e-3, false), u2) / norm;
    const double rel_fine = field_l2_distance(fd_at(5e-4, false), u2) / norm;
    const double ratio = rel_coarse / rel_fine;
    CHECK(ratio > 2.5);
    CHECK(ratio < 5.5);
    CHECK(rel_fine < rel_coarse);

    // Richardson combination beats the plain stencil at the same step.
    const double rel_rich = field_l2_distance(fd_at(1e-3, true), u2) / norm;
    CHECK(rel_rich < rel_coarse);
}

TEST_CASE("a static multiplier reproduces the plain cascade bit for bit") {
    const Medium1D med = Medium1D::uniform(40, 1.0, 0.0, 0.0, 0.0, 0.5, 0.4);
    const MultiSource sources = MultiSource::standard_probes(3, 10.0, 1e-3);
    const std::vector<Wavefield1D> v = linear_waves(med, sources, 0.5);

    const CascadeTerms plain = cascade_terms(med, v);
    const Wavefield1D rho = multiplier_field(med, v[0], 0.1, 0.0);
    const CascadeTerms modified = cascade_modified(med, rho, v);
    CHECK(modified.modified);

    const Wavefield1D& a = plain.pair(0, 1);
    const Wavefield1D& b = modified.pair(0, 1);
    REQUIRE(a.p.size() == b.p.size());
    for (std::size_t k = 0; k < a.p.size(); ++k) CHECK(a.p[k] == b.p[k]);

    const Wavefield1D& ta = plain.triple(0, 1, 2);
    const Wavefield1D& tb = modified.triple(0, 1, 2);
    for (std::size_t k = 0; k < ta.p.size(); ++k) CHECK(ta.p[k] == tb.p[k]);
}

TEST_CASE("time-dependent multipliers change the cascade, zero betas kill it") {
    const MultiSource sources = MultiSource::standard_probes(2, 10.0, 1e-3);

    const Medium1D med = Medium1D::uniform(40, 1.0, 0.0, 0.0, 0.0, 0.5, 0.4);
    const std::vector<Wavefield1D> v = linear_waves(med, sources, 0.5);
    const Wavefield1D rho_t = multiplier_field(med, v[0], 0.1, 4.0);

    const CascadeTerms plain = cascade_terms(med, v);
    const CascadeTerms moved = cascade_modified(med, rho_t, v);
    double diff = 0.0;
    const Wavefield1D& a = plain.pair(0, 1);
    const Wavefield1D& b = moved.pair(0, 1);
    for (std::size_t k = 0; k < a.p.size(); ++k) diff = std::max(diff, std::abs(a.p[k] - b.p[k]));
    CHECK(diff > 1e-12 * sup_norm(a));

    const Medium1D lin_med = Medium1D::uniform(40);
    const std::vector<Wavefield1D> lv = linear_waves(lin_med, sources, 0.5);
    const Wavefield1D lrho = multiplier_field(lin_med, lv[0], 0.1, 4.0);
    const CascadeTerms dead = cascade_modified(lin_med, lrho, lv);
    CHECK(sup_norm(dead.pair(0, 1)) == 0.0);
}

TEST_CASE("multiplier fields are validated") {
    const Medium1D med = Medium1D::uniform(40, 1.0, 0.0, 0.0, 0.0, 0.5);
    const MultiSource sources = MultiSource::standard_probes(2, 10.0, 1e-3);
    const std::vector<Wavefield1D> v = linear_waves(med, sources, 0.5);

    Wavefield1D bad_boundary = v[0];
    for (double& p : bad_boundary.p) p = 1.1;  // not 1 at the boundary nodes
    CHECK_THROWS_AS(cascade_modified(med, bad_boundary, v), std::invalid_argument);

    Wavefield1D negative = multiplier_field(med, v[0], 0.1, 0.0);
    negative.at(negative.n_levels / 2, negative.n_nodes / 2) = -0.2;
    CHECK_THROWS_AS(cascade_modified(med, negative, v), std::invalid_argument);

    // Waves on different grids are refused.
    const Medium1D other = Medium1D::uniform(60, 1.0, 0.0, 0.0, 0.0, 0.5);
    std::vector<Wavefield1D> mixed = v;
    mixed[1] = linear_waves(other, sources, 0.5)[1];
    CHECK_THROWS_AS(cascade_terms(med, mixed), std::invalid_argument);
}

TEST_CASE("field norms behave like norms") {
    const Medium1D med = Medium1D::uniform(40);
    const MultiSource sources = MultiSource::standard_probes(2, 10.0, 1e-3);
    const std::vector<Wavefield1D> v = linear_waves(med, sources, 0.5);

    Wavefield1D doubled = v[0];
    for (double& p : doubled.p) p *= 2.0;
    CHECK(field_l2(doubled) == doctest::Approx(2.0 * field_l2(v[0])).epsilon(1e-12));
    CHECK(field_l2_distance(v[0], v[0]) == 0.0);
    CHECK(field_l2_distance(v[0], doubled) == doctest::Approx(field_l2(v[0])).epsilon(1e-12));
}
