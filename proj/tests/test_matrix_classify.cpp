#include "doctest.h"

#include <cmath>
#include <numbers>

#include "varplane/matrix_classify.hpp"
#include "varplane/rng.hpp"

using namespace vp;

namespace {

Matrix2 random_matrix(KeyedRng& rng) { return {rng.normal(), rng.normal(), rng.normal(), rng.normal()}; }

Matrix2 random_rotation(KeyedRng& rng) { return Matrix2::rotation(rng.uniform(0, 2 * std::numbers::pi)); }

Matrix2 inverse(const Matrix2& a) {
    const double d = a.det();
    return {a.a22 / d, -a.a12 / d, -a.a21 / d, a.a11 / d};
}

}  // namespace

TEST_CASE("numeric_rank examples") {
    CHECK(numeric_rank(Matrix2{}) == 0);
    CHECK(numeric_rank(Matrix2::identity(), 1e-8) == 2);
    CHECK(numeric_rank(Matrix2{1, 0, 0, 1e-12}, 1e-8) == 1);
}

TEST_CASE("eigen_analysis examples") {
    SUBCASE("E has eigenvalues +-i") {
        const EigenData e = eigen_analysis(Matrix2::rot90());
        CHECK(e.complex_pair);
        CHECK(std::abs(e.values[0].real()) < 1e-15);
        CHECK(std::abs(std::abs(e.values[0].imag()) - 1.0) < 1e-15);
        CHECK(std::abs(e.values[0] - std::conj(e.values[1])) < 1e-15);
    }
    SUBCASE("I_c is a single Jordan block") {
        const EigenData e = eigen_analysis(Matrix2::ic(2.0));
        CHECK(e.repeated);
        REQUIRE(e.multiplicities.size() == 1);
        CHECK(e.multiplicities[0] == 2);
        CHECK(e.eigenspace_dims[0] == 1);
        CHECK(std::abs(e.values[0] - 1.0) < 1e-15);
    }
    SUBCASE("I has a full eigenspace") {
        const EigenData e = eigen_analysis(Matrix2::identity());
        REQUIRE(e.multiplicities.size() == 1);
        CHECK(e.multiplicities[0] == 2);
        CHECK(e.eigenspace_dims[0] == 2);
    }
}

TEST_CASE("classify examples") {
    const RankProfile e = classify(Matrix2::rot90());
    CHECK(e.rank_skw == 2);
    CHECK(e.rank_sym == 0);
    CHECK(e.annulus_exponent == Rational{0, 1});
    CHECK(e.nikodym_exponent == Rational{1, 4});
    CHECK(e.canonical_class == CanonicalClass::SKW2);

    const RankProfile i = classify(Matrix2::identity());
    CHECK(i.rank_skw == 0);
    CHECK(i.annulus_exponent == Rational{1, 2});

    const RankProfile n = classify(Matrix2::nil(3.0));
    CHECK(n.rank_skw == 1);
    CHECK(n.rank == 1);
    CHECK(n.annulus_exponent == Rational{1, 4});

    const RankProfile c = classify(Matrix2::ic(-3.0));
    CHECK(c.canonical_class == CanonicalClass::SKW1_RANK2);
    CHECK(c.annulus_exponent == Rational{1, 6});

    const RankProfile s = classify(Matrix2::sym(2.0));
    CHECK(s.rank_sym == 2);
    CHECK(s.nikodym_exponent == Rational{0, 1});

    CHECK(classify(Matrix2{}).canonical_class == CanonicalClass::ZERO);
}

TEST_CASE("orthogonal_conjugate") {
    const Matrix2 a = Matrix2::ic(1.5);
    CHECK(orthogonal_conjugate(a, Matrix2::identity()) == a);
    const Matrix2 q = Matrix2::rot90();
    const Matrix2 expect = q.transpose() * a * q;
    const Matrix2 got = orthogonal_conjugate(a, q);
    CHECK((got - expect).frobenius() < 1e-15);
    CHECK_THROWS_AS(orthogonal_conjugate(a, Matrix2{1, 1, 0, 1}), std::invalid_argument);
}

TEST_CASE("rank invariances on random matrices") {
    KeyedRng rng(11, 1);
    for (int i = 0; i < 1000; ++i) {
        const Matrix2 a = random_matrix(rng);
        const Matrix2 q = random_rotation(rng);
        const int r = classify(a).rank_skw;
        CHECK(classify(a.transpose()).rank_skw == r);
        CHECK(classify(orthogonal_conjugate(a, q)).rank_skw == r);
        if (std::abs(a.det()) > 1e-3) CHECK(classify(inverse(a)).rank_skw == r);
        const Matrix2 e = Matrix2::rot90();
        const Matrix2 ae = a * e;
        CHECK(numeric_rank(ae + ae.transpose()) == numeric_rank(skew_symmetric_part(a)));
        const double lhs = -skew_symmetric_part(a).det();
        const double rhs = a.trace() * a.trace() - 4 * a.det();
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1 + a.frobenius() * a.frobenius()));
    }
}

TEST_CASE("canonical classes survive conjugation and scaling") {
    KeyedRng rng(12, 2);
    const Matrix2 presets[] = {Matrix2::rot90(), Matrix2::identity(), Matrix2::ic(1), Matrix2::ic(-3),
                               Matrix2::nil(1), Matrix2::sym(2)};
    for (const Matrix2& a : presets) {
        const RankProfile base = classify(a);
        CHECK(class_from_eigen(a) == base.canonical_class);
        for (int i = 0; i < 100; ++i) {
            const Matrix2 b = orthogonal_conjugate(a, random_rotation(rng));
            const RankProfile p = classify(b);
            CHECK(p.canonical_class == base.canonical_class);
            CHECK(class_from_eigen(b) == base.canonical_class);
            CHECK(p.annulus_exponent == base.annulus_exponent);
            CHECK(p.nikodym_exponent == base.nikodym_exponent);
        }
        for (double s : {-2.5, 0.1, 7.0}) {
            const RankProfile p = classify(a.scaled(s));
            CHECK(p.annulus_exponent == base.annulus_exponent);
            CHECK(p.nikodym_exponent == base.nikodym_exponent);
        }
    }
}

TEST_CASE("complex_eigen_gap") {
    CHECK(complex_eigen_gap(Matrix2::identity()) < 1e-2);
    // sigma_min of [[-s,1],[-1,-s]] is sqrt(s^2+1)
    CHECK(std::abs(complex_eigen_gap(Matrix2::rot90()) - std::sqrt(0.4 * 0.4 + 1.0)) < 1e-9);
    // NIL: dense sampling oracle over the same window
    const Matrix2 n = Matrix2::nil(1.0);
    double oracle = 1e300;
    for (int i = 0; i <= 20000; ++i) {
        const double s = 0.4 + 2.1 * i / 20000.0;
        Eigen::Matrix2d m = n.eigen().transpose() - s * Eigen::Matrix2d::Identity();
        oracle = std::min(oracle, Eigen::JacobiSVD<Eigen::Matrix2d>(m).singularValues()(1));
    }
    const double gap = complex_eigen_gap(n);
    CHECK(gap > 0);
    CHECK(std::abs(gap - oracle) < 1e-3);
}

TEST_CASE("parse_matrix presets") {
    CHECK(parse_matrix("E") == Matrix2::rot90());
    CHECK(parse_matrix("Ic:2") == Matrix2::ic(2));
    CHECK(parse_matrix("NIL:-1") == Matrix2::nil(-1));
    CHECK(parse_matrix("SYM:0.5") == Matrix2::sym(0.5));
    CHECK(parse_matrix("1,2,3,4") == Matrix2{1, 2, 3, 4});
    CHECK(parse_matrix("1 2 3 4") == Matrix2{1, 2, 3, 4});
    CHECK_THROWS(parse_matrix("Ic:0"));
    CHECK_THROWS(parse_matrix("1 2 3"));
    CHECK_THROWS(parse_matrix("FOO:1"));
}
