#include "doctest.h"

#include <cmath>
#include <numbers>

#include "varplane/field_grid.hpp"
#include "varplane/oscillatory_lab.hpp"
#include "varplane/rng.hpp"

using namespace vp;

namespace {

OperatorConfig coarse(const Matrix2& a) {
    OperatorConfig c;
    c.a = a;
    c.lambda = 8;
    c.xi_points = 32;
    c.x_points = 16;
    c.t_points = 8;
    c.enforce_resolution = false;
    return c;
}

cvec noise(std::size_t n, std::uint64_t seed) {
    KeyedRng rng(seed, 77);
    cvec g(n);
    for (auto& z : g) z = {rng.normal(), rng.normal()};
    return g;
}

double rel_diff(const cvec& a, const cvec& b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace

TEST_CASE("operator linearity") {
    const DiscretizedOperator op(coarse(Matrix2::ic(1)));
    cvec zero(op.input_size()), out;
    op.apply(zero, out);
    for (const auto& z : out) CHECK(z == cplx{});
    const cvec g1 = noise(op.input_size(), 1), g2 = noise(op.input_size(), 2);
    cvec s(g1.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = g1[i] + cplx(0, 2) * g2[i];
    cvec o1, o2, os;
    op.apply(g1, o1);
    op.apply(g2, o2);
    op.apply(s, os);
    for (std::size_t i = 0; i < o1.size(); ++i) o1[i] += cplx(0, 2) * o2[i];
    CHECK(rel_diff(os, o1) <= 1e-13);
}

TEST_CASE("coarse operator against dense materialization") {
    for (const Matrix2& a : {Matrix2::rot90(), Matrix2::identity(), Matrix2::nil(1)}) {
        const DiscretizedOperator op(coarse(a));
        CHECK(op.input_size() == 1024);
        CHECK(op.output_size() == 2048);
        CHECK_FALSE(op.lattice_aligned());
        const Eigen::MatrixXcd d = op.dense();
        const cvec g = noise(op.input_size(), 3);
        Eigen::VectorXcd gv(g.size());
        const double sw = std::sqrt(op.input_weight());
        for (std::size_t i = 0; i < g.size(); ++i) gv(i) = g[i] * sw;
        const Eigen::VectorXcd dv = d * gv;
        const double so = std::sqrt(op.output_weight(0, 0));
        cvec ref(dv.size());
        for (Eigen::Index i = 0; i < dv.size(); ++i) ref[i] = dv(i) / so;
        cvec out, ser;
        op.apply(g, out);
        op.apply_serial(g, ser);
        CHECK(rel_diff(out, ref) <= 1e-10);
        CHECK(rel_diff(ser, ref) <= 1e-10);

        const PowerResult p = opnorm(op, 1e-10, 200, 4);
        const double dn = dense_opnorm(op);
        CHECK(dn > 0);
        CHECK(p.converged);
        CHECK(std::abs(p.norm - dn) <= 1e-6 * dn);
        CHECK(opnorm(op, 1e-10, 200, 4, false).norm == doctest::Approx(p.norm).epsilon(1e-9));
    }
}

TEST_CASE("aligned lattice path matches kernel entries") {
    OperatorConfig c;
    c.a = Matrix2::ic(1);
    c.lambda = 2;
    const DiscretizedOperator op(c);
    REQUIRE(op.lattice_aligned());
    const cvec g = noise(op.input_size(), 5);
    cvec out, ser;
    op.apply(g, out);
    op.apply_serial(g, ser);
    CHECK(rel_diff(out, ser) <= 1e-12);
    KeyedRng rng(6, 6);
    const int n = op.x_axis().points, m = op.xi_axis().points;
    for (int s = 0; s < 20; ++s) {
        const int i1 = n / 4 + static_cast<int>(rng.uniform() * n / 2), i2 = n / 4 + static_cast<int>(rng.uniform() * n / 2);
        const int k = static_cast<int>(rng.uniform() * c.t_points);
        cplx ref{};
        for (int m1 = 0; m1 < m; ++m1)
            for (int m2 = 0; m2 < m; ++m2) ref += op.kernel(i1, i2, k, m1, m2) * g[static_cast<std::size_t>(m1) * m + m2];
        ref *= op.input_weight();
        CHECK(std::abs(out[op.output_index(i1, i2, k)] - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
    }
    // adjoint identity <T g, h>_out = <g, T* h>_in
    const cvec h = noise(op.output_size(), 7);
    cvec th;
    op.adjoint(h, th);
    cplx lhs{}, rhs{};
    for (std::size_t i = 0; i < out.size(); ++i) lhs += out[i] * std::conj(h[i]) * op.output_weight(0, 0);
    for (std::size_t i = 0; i < g.size(); ++i) rhs += g[i] * std::conj(th[i]) * op.input_weight();
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
}

TEST_CASE("resolution and zero operator") {
    OperatorConfig c = coarse(Matrix2::rot90());
    c.enforce_resolution = true;
    try {
        DiscretizedOperator op(c);
        FAIL("expected a resolution error");
    } catch (const OperatorResolutionError& e) {
        CHECK(e.required_points == OperatorConfig::resolved_points(8));
    }
    // t window where chi vanishes
    OperatorConfig z = coarse(Matrix2::rot90());
    z.t_min = 3;
    z.t_max = 4;
    const DiscretizedOperator op(z);
    CHECK(opnorm(op).norm == 0.0);
    CHECK(estimated_pair_ops(8) == doctest::Approx(std::numbers::pi / 4 * std::pow(65.0, 4) * 16));
}

TEST_CASE("sublevel measures") {
    const Matrix2 e = Matrix2::rot90(), i = Matrix2::identity();
    const Matrix2 m_e = symmetric_part(e * e), m_i = symmetric_part(e * i);
    CHECK(m_i.frobenius() == 0.0);
    for (double lambda : {4.0, 16.0, 64.0}) {
        const SublevelEstimate full = sublevel_measure(m_i, 1 / lambda, 100000, 1);
        CHECK(full.measure == doctest::Approx(std::numbers::pi).epsilon(1e-15));
        CHECK(sublevel_grid_measure(m_i, 1 / lambda) == doctest::Approx(std::numbers::pi).epsilon(1e-12));
        CHECK(sublevel_z(full, sublevel_grid_measure(m_i, 1 / lambda)) <= 3);
        const double exact = std::numbers::pi / (2 * lambda);
        const SublevelEstimate s = sublevel_measure(m_e, 1 / lambda, 1000000, 2);
        CHECK(std::abs(s.measure - exact) <= 4 * s.stderr_);
        CHECK(sublevel_grid_measure(m_e, 1 / lambda) == doctest::Approx(exact).epsilon(1e-3));
        // rank one: |v1| <= (c lambda)^(-1/2), width w: 2 (w sqrt(1-w^2) + asin w)
        const double c = 3, w = 1 / std::sqrt(c * lambda);
        const double strip = 2 * (w * std::sqrt(1 - w * w) + std::asin(w));
        CHECK(sublevel_grid_measure(Matrix2{c, 0, 0, 0}, 1 / lambda, 4096) == doctest::Approx(strip).epsilon(2e-3));
    }
    KeyedRng rng(12, 12);
    for (int k = 0; k < 20; ++k) {
        const double off = rng.uniform(-2, 2);
        const Matrix2 m{rng.uniform(-2, 2), off, off, rng.uniform(-2, 2)};
        const double thr = std::pow(2.0, -rng.uniform(2, 10));
        const SublevelEstimate s = sublevel_measure(m, thr, 200000, k);
        CHECK(sublevel_z(s, sublevel_grid_measure(m, thr)) <= 3);
        const SublevelEstimate ser = sublevel_measure_serial(m, thr, 200000, k);
        CHECK(ser.hits == s.hits);
    }
    CHECK_THROWS_AS(sublevel_measure(Matrix2{1, 2, 0, 1}, 0.1, 100, 0), std::invalid_argument);
}

TEST_CASE("sublevel forms diagonalize") {
    KeyedRng rng(13, 13);
    for (int k = 0; k < 100; ++k) {
        const Matrix2 a{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        const Matrix2 m = symmetric_part(Matrix2::rot90() * a);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m.eigen());
        const Eigen::Matrix2d d = es.eigenvectors().transpose() * m.eigen() * es.eigenvectors();
        CHECK(std::abs(d(0, 1)) <= 1e-10 * std::max(1.0, m.frobenius()));
    }
}

TEST_CASE("mixed hessian closed forms") {
    KeyedRng rng(14, 14);
    for (int k = 0; k < 100; ++k) {
        const Matrix2 a{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const double r = rng.uniform(0.5, 2), th = rng.uniform(0, 2 * std::numbers::pi);
        const double b1 = r * std::cos(th), b2 = r * std::sin(th), t = rng.uniform(-2, 2);
        const HessianReport h = mixed_hessian(a, b1, b2, t), f = mixed_hessian_fd(a, b1, b2, t);
        const double scale = std::max(1.0, h.hessian.norm());
        CHECK((h.hessian - f.hessian).norm() <= 1e-6 * scale);
        CHECK(std::abs(h.det_x1x2 - f.det_x1x2) <= 1e-6 * scale * scale);
        CHECK(std::abs(h.det_x1t - f.det_x1t) <= 1e-6 * scale * scale);
        CHECK(std::abs(h.det_x2t - f.det_x2t) <= 1e-6 * scale * scale);
        // gradient of the closed-form determinant in b
        const double e = 1e-6;
        const auto g = grad_det_x1x2(a, b1, b2, t);
        const double g1 = (mixed_hessian(a, b1 + e, b2, t).det_x1x2 - mixed_hessian(a, b1 - e, b2, t).det_x1x2) / (2 * e);
        const double g2 = (mixed_hessian(a, b1, b2 + e, t).det_x1x2 - mixed_hessian(a, b1, b2 - e, t).det_x1x2) / (2 * e);
        const double gs = std::max(1.0, std::hypot(g[0], g[1]));
        CHECK(std::abs(g[0] - g1) <= 1e-6 * gs);
        CHECK(std::abs(g[1] - g2) <= 1e-6 * gs);
    }
    for (int k = 0; k < 20; ++k) {
        const double th = rng.uniform(0, 2 * std::numbers::pi);
        CHECK(mixed_hessian(Matrix2::rot90(), std::cos(th), std::sin(th), rng.uniform(-2, 2)).det_x1x2 ==
              doctest::Approx(1.0).epsilon(1e-14));
    }
    for (double c : {0.5, 1.0, 2.0})
        for (double b1 : {1.0, -1.0})
            for (double b2 : {1.0, -1.0}) {
                const double t = std::sqrt(2.0) * c * ((b2 / b1) > 0 ? 1 : -1);
                const HessianReport h = mixed_hessian(Matrix2::sym(c), b1, b2, t);
                CHECK(std::abs(h.det_x1x2) <= 1e-12);
                CHECK(std::abs(h.det_x1t) <= 1e-12);
                CHECK(std::abs(h.det_x2t) <= 1e-12);
            }
    CHECK_THROWS_AS(mixed_hessian(Matrix2::rot90(), 0, 0, 1), std::domain_error);
}

TEST_CASE("explicit fold") {
    for (double c : {0.5, 1.0, 3.0}) {
        const FoldReport f = fold_check(Matrix2::ic(c), 0, 1, -1);
        CHECK(f.singular);
        CHECK_FALSE(f.degenerate);
        CHECK(f.two_sided_fold);
        CHECK(f.right_kernel[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(f.right_kernel[1]) <= 1e-12);
        const double n = std::hypot(1.0, c);
        CHECK(f.left_kernel[0] == doctest::Approx(-1 / n).epsilon(1e-12));
        CHECK(f.left_kernel[1] == doctest::Approx(c / n).epsilon(1e-12));
        // b2^3 / |b|^5 = 1 at b = (0, 1)
        CHECK(f.dv_det_scaled == doctest::Approx(c * -1.0).epsilon(1e-10));
        CHECK(f.du_det_scaled == doctest::Approx(-2 * c * -1.0).epsilon(1e-10));
    }
    KeyedRng rng(15, 15);
    for (int k = 0; k < 50; ++k) {
        const double th = rng.uniform(0, 2 * std::numbers::pi), r = rng.uniform(0.5, 2);
        const FoldReport f = fold_check(Matrix2::rot90(), r * std::cos(th), r * std::sin(th), rng.uniform(-2, 2));
        CHECK_FALSE(f.singular);
    }
    const FoldReport z = fold_check(Matrix2{}, 1, 0, 0);
    CHECK(z.degenerate);
    CHECK_FALSE(z.two_sided_fold);
}

TEST_CASE("kernel diagnostics") {
    // lambda = 1, A = 0, xi = eta: no oscillation, the entry is the amplitude mass
    const cplx k0 = kernel_Psi_circle_entry(Matrix2{}, 1, 0.4, 0.3, 0.4, 0.3, 41, 64);
    CHECK(k0.real() > 0);
    CHECK(std::abs(k0.imag()) <= 1e-15 * k0.real());
    double mass = 0;
    const Axis xa{-1, 1, 41};
    for (int i = 0; i < 41; ++i)
        for (int j = 0; j < 41; ++j)
            for (int k = 0; k < 64; ++k) {
                const double x1 = xa.coord(i), x2 = xa.coord(j), t = 0.5 + (k + 0.5) * 1.5 / 64;
                const double p = bump_psi(x1, x2), c = bump_chi(t), r = std::hypot(0.4 + x1, 0.3 + x2);
                mass += 2 * p * p * c * c * bump_chi(t * r) * bump_chi(t * r);
            }
    CHECK(k0.real() == doctest::Approx(mass * xa.spacing() * xa.spacing() * 1.5 / 64).epsilon(1e-12));

    KernelRowConfig cfg;
    cfg.lambda = 8;
    const KernelRow far = kernel_Psi_circle(Matrix2::rot90(), 9, 9, cfg);
    CHECK(far.row_sum == 0.0);

    // a row against entry-by-entry quadrature
    KernelRowConfig small;
    small.lambda = 2;
    small.s_max = 16;
    const KernelRow row = kernel_Psi_circle(Matrix2::ic(1), 0.5, 0.0, small);
    const Axis xi{-1, 1, OperatorConfig::resolved_points(2)};
    double ref = 0;
    for (int i = 0; i < xi.points; ++i)
        for (int j = 0; j < xi.points; ++j)
            ref += std::abs(kernel_Psi_circle_entry(Matrix2::ic(1), 2, xi.coord(i), xi.coord(j), 0.5, 0.0,
                                                    OperatorConfig::resolved_points(2), 96));
    ref *= xi.spacing() * xi.spacing();
    CHECK(row.row_sum == doctest::Approx(ref).epsilon(0.02));
}

TEST_CASE("extreme regimes") {
    CHECK_THROWS_AS(kernel_schur_extreme(Matrix2::nil(1), {}), std::invalid_argument);
    ExtremeConfig bad;
    bad.ratio = 1;
    CHECK_THROWS_AS(kernel_schur_extreme(Matrix2::rot90(), bad), std::invalid_argument);
    ExtremeConfig empty;
    empty.ratio = 1.0 / 8;
    empty.t = 0.01;   // the shell of radius ~ ratio / t lies far outside the unit ball around every eta
    const auto rows = kernel_schur_extreme(Matrix2::rot90(), empty);
    for (const auto& r : rows) CHECK(r.row_sum == 0.0);
    ExtremeConfig a, b;
    a.ratio = 1.0 / 16;
    b.ratio = 1.0 / 32;
    a.eta_samples = b.eta_samples = 2;
    const double ra = mean_row_sum(kernel_schur_extreme(Matrix2::rot90(), a));
    const double rb = mean_row_sum(kernel_schur_extreme(Matrix2::rot90(), b));
    CHECK(rb / ra == doctest::Approx(0.25).epsilon(0.1));
}
