#include "doctest.h"

#include <cmath>
#include <numbers>

#include "varplane/maximal_ops.hpp"
#include "varplane/rng.hpp"
#include "varplane/scaling_estimator.hpp"

using namespace vp;

namespace {

Grid3 box(double half, std::size_t n) {
    Grid3 g;
    g.half_extent = {half, half, half};
    g.points = {n, n, n};
    return g;
}

Grid3 small_eval() {
    Grid3 g;
    g.half_extent = {0.5, 0.5, 0.5};
    g.points = {3, 3, 3};
    return g;
}

ScalarField3 bumpy(const Grid3& g, std::uint64_t seed) {
    KeyedRng rng(seed, 11);
    const double c1 = rng.uniform(-1, 1), c2 = rng.uniform(-1, 1), c3 = rng.uniform(-1, 1);
    return ScalarField3::from_function(g, [=](double a, double b, double c) {
        return std::exp(-(a - c1) * (a - c1) - (b - c2) * (b - c2) - 4 * (c - c3) * (c - c3)) + 0.1 * std::sin(3 * a * b);
    });
}

}  // namespace

TEST_CASE("averages of constants") {
    const ScalarField3 one(box(6, 13), 1.0);
    for (const Matrix2& a : {Matrix2::rot90(), Matrix2::identity(), Matrix2::ic(1), Matrix2{}}) {
        CHECK(annulus_average(one, a, 1.0 / 16, 1.3, 0.2, -0.1, 0.1) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(nikodym_average(one, a, 1.0 / 16, 0.7, 0.2, -0.1, 0.1) == doctest::Approx(1.0).epsilon(1e-12));
        const ScalarField3 m = annulus_maximal(one, a, 1.0 / 8, DilationSet::geometric(8), small_eval());
        for (double v : m.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
        const ScalarField3 n = nikodym_maximal(one, a, 1.0 / 8, RotationSet::uniform(8), small_eval());
        for (double v : n.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(annulus_average(one, Matrix2{}, 1.0 / 16, 0.0, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("euclidean reduction at A = 0") {
    const Grid3 g = box(3, 31);
    const ScalarField3 f = bumpy(g, 1);
    const AnnulusAverager avg(1.0 / 16);
    KeyedRng rng(2, 2);
    for (int i = 0; i < 50; ++i) {
        const double x1 = rng.uniform(-0.5, 0.5), x2 = rng.uniform(-0.5, 0.5), x3 = rng.uniform(-1, 1);
        const double t = rng.uniform(0.5, 2);
        const auto slice = [&](double u, double v) { return f.sample(u, v, x3); };
        const double ref = euclidean_annulus_average(slice, avg.nodes(), avg.measure(), t, x1, x2);
        CHECK(std::abs(annulus_average(f, Matrix2{}, 1.0 / 16, t, x1, x2, x3) - ref) <= 1e-12);
    }
}

TEST_CASE("homogeneity, monotonicity, sublinearity") {
    const Grid3 g = box(3, 25);
    const ScalarField3 f = bumpy(g, 3), h = bumpy(g, 4);
    ScalarField3 sum(g), neg(g), absf(g), bigger(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        sum.values()[i] = f.values()[i] + h.values()[i];
        neg.values()[i] = -2.5 * f.values()[i];
        absf.values()[i] = std::abs(f.values()[i]);
        bigger.values()[i] = absf.values()[i] + std::abs(h.values()[i]);
    }
    const Matrix2 a = Matrix2::ic(1);
    const double d = 1.0 / 8;
    const DilationSet ts = DilationSet::geometric(6);
    const ScalarField3 mf = annulus_maximal(f, a, d, ts, small_eval());
    const ScalarField3 mh = annulus_maximal(h, a, d, ts, small_eval());
    const ScalarField3 ms = annulus_maximal(sum, a, d, ts, small_eval());
    const ScalarField3 mn = annulus_maximal(neg, a, d, ts, small_eval());
    const ScalarField3 ma = annulus_maximal(absf, a, d, ts, small_eval());
    const ScalarField3 mb = annulus_maximal(bigger, a, d, ts, small_eval());
    for (std::size_t i = 0; i < mf.values().size(); ++i) {
        CHECK(mf.values()[i] >= 0);
        CHECK(ms.values()[i] <= mf.values()[i] + mh.values()[i] + 1e-14);
        CHECK(mn.values()[i] == doctest::Approx(2.5 * mf.values()[i]).epsilon(1e-14));
        CHECK(ma.values()[i] <= mb.values()[i] + 1e-14);
    }
    const double av = nikodym_average(f, a, d, 0.4, 0.1, 0.2, 0.0);
    CHECK(nikodym_average(neg, a, d, 0.4, 0.1, 0.2, 0.0) == doctest::Approx(2.5 * av).epsilon(1e-14));
}

TEST_CASE("enlarging the dilation or rotation set never decreases the maximum") {
    const Grid3 g = box(3, 25);
    const ScalarField3 f = bumpy(g, 5);
    const Matrix2 a = Matrix2::identity();
    const DilationSet coarse = DilationSet::geometric(5);
    const DilationSet fine = DilationSet::geometric(17);   // contains the coarse nodes
    const ScalarField3 m1 = annulus_maximal(f, a, 1.0 / 8, coarse, small_eval());
    const ScalarField3 m2 = annulus_maximal(f, a, 1.0 / 8, fine, small_eval());
    const ScalarField3 n1 = nikodym_maximal(f, a, 1.0 / 8, RotationSet::uniform(4), small_eval());
    const ScalarField3 n2 = nikodym_maximal(f, a, 1.0 / 8, RotationSet::uniform(16), small_eval());
    for (std::size_t i = 0; i < m1.values().size(); ++i) {
        CHECK(m2.values()[i] >= m1.values()[i] - 1e-14);
        CHECK(n2.values()[i] >= n1.values()[i] - 1e-14);
    }
}

TEST_CASE("serial and parallel maximal functions agree") {
    const Grid3 g = box(3, 25);
    const ScalarField3 f = bumpy(g, 6);
    Grid3 ev = small_eval();
    ev.points = {5, 4, 3};
    const ScalarField3 p = annulus_maximal(f, Matrix2::rot90(), 1.0 / 8, DilationSet::geometric(6), ev);
    const ScalarField3 s = annulus_maximal_serial(f, Matrix2::rot90(), 1.0 / 8, DilationSet::geometric(6), ev);
    CHECK(p.values() == s.values());
    const ScalarField3 pn = nikodym_maximal(f, Matrix2::rot90(), 1.0 / 8, RotationSet::uniform(6), ev);
    const ScalarField3 sn = nikodym_maximal_serial(f, Matrix2::rot90(), 1.0 / 8, RotationSet::uniform(6), ev);
    CHECK(pn.values() == sn.values());
}

TEST_CASE("nikodym slab and periodicity") {
    const double d = 1.0 / 32;
    Grid3 g;
    g.half_extent = {1.5, 4 * d, 4 * d};
    g.points = {25, 33, 33};
    // flat where |x2| < d and |x3| < d
    const ScalarField3 slab = ScalarField3::from_function(g, [&](double, double b, double c) {
        return bump_psi(b / (2 * d)) * bump_psi(c / (2 * d));
    });
    CHECK(nikodym_average(slab, Matrix2{}, d, 0.0, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    const ScalarField3 f = bumpy(box(3, 25), 7);
    const double th = 1.1;
    CHECK(nikodym_average(f, Matrix2::ic(1), 0.0625, th, 0.1, 0.3, 0.2) ==
          doctest::Approx(nikodym_average(f, Matrix2::ic(1), 0.0625, th + 2 * std::numbers::pi, 0.1, 0.3, 0.2))
              .epsilon(1e-12));
}

TEST_CASE("isotropic witness reaches full average on its evaluation set") {
    const double d = 1.0 / 16;
    const Grid3 g = witness_grid(CanonicalClass::SKW0, d);
    const ScalarField3 w = witness_field(CanonicalClass::SKW0, d, g);
    const ShearedField f{&w, 1.0};
    const AnnulusAverager avg(d);
    KeyedRng rng(8, 8);
    for (int i = 0; i < 40; ++i) {
        double x1, x2;
        do {
            x1 = rng.uniform(-1, 1);
            x2 = rng.uniform(-1, 1);
        } while (x1 * x1 + x2 * x2 > 1);
        const double x3s = rng.uniform(1, 2);
        const double t = std::sqrt(2 * x3s);
        const double x3 = x3s + 0.5 * (x1 * x1 + x2 * x2);
        CHECK(avg(f, Matrix2::identity(), t, x1, x2, x3) >= 1 - 1e-9);
    }
}

TEST_CASE("conjugation transport") {
    const Grid3 g = box(3, 61);
    const ScalarField3 f = bumpy(g, 9);
    const Matrix2 a = Matrix2::ic(0.7);
    {
        const auto [ft, at] = conjugation_transport(f, a, Matrix2::identity());
        CHECK(at == a);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(ft.values()[i] == doctest::Approx(f.values()[i]).epsilon(1e-12));
    }
    {
        const ScalarField3 radial = ScalarField3::from_function(g, [](double x, double y, double z) {
            return std::exp(-(x * x + y * y)) * std::cos(z);
        });
        const auto [rt, at] = conjugation_transport(radial, a, Matrix2::rot90());
        // nodes map to nodes under a quarter turn of a centered square grid
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(rt.values()[i] - radial.values()[i]) <= 1e-12);
    }
    const Matrix2 q = Matrix2::rotation(0.37);
    const auto [ft, at] = conjugation_transport(f, a, q);
    KeyedRng rng(10, 10);
    double worst = 0;
    for (int i = 0; i < 30; ++i) {
        const double x1 = rng.uniform(-0.5, 0.5), x2 = rng.uniform(-0.5, 0.5), x3 = rng.uniform(-0.5, 0.5);
        const double t = rng.uniform(0.5, 1.5);
        const auto qx = q.apply(x1, x2);
        const double lhs = annulus_average(f, a, 1.0 / 16, t, qx[0], qx[1], x3);
        const double rhs = annulus_average(ft, at, 1.0 / 16, t, x1, x2, x3);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    // trilinear error is second order in h = 0.1
    CHECK(worst <= 0.05 * g.spacing(0));
    CHECK_THROWS(conjugation_transport(f, a, Matrix2{1, 1, 0, 1}));
}

TEST_CASE("annulus and nikodym predictions order the two model matrices oppositely") {
    const RankProfile e = classify(Matrix2::rot90()), i = classify(Matrix2::identity());
    CHECK(e.annulus_exponent.value() < i.annulus_exponent.value());
    CHECK(e.nikodym_exponent.value() > i.nikodym_exponent.value());
}
