#include <algorithm>
#include <cmath>
#include <numbers>
#include <omp.h>

#include <Eigen/SVD>

#include "varplane/field_grid.hpp"
#include "varplane/oscillatory_lab.hpp"
#include "varplane/rng.hpp"

namespace vp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline cplx cis(double phase) { return {std::cos(phase), std::sin(phase)}; }

// F(s; r1, r2) = int e^{2 pi i t s} chi(t)^2 chi(|t| r1) chi(|t| r2) dt over both signs of t.
// The integrand is even in t, so F is real and even in s.
class RadialTable {
public:
    static constexpr double r_lo = 0.25, r_hi = 4.0, s_hi = 16.0;
    static constexpr int nr = 161, ns = 1025, nt = 384;

    static const RadialTable& get() {
        static const RadialTable table;
        return table;
    }

    double hr() const { return (r_hi - r_lo) / (nr - 1); }
    double hs() const { return s_hi / (ns - 1); }
    const float* slice(int i_r2) const { return data_.data() + static_cast<std::size_t>(i_r2) * nr * ns; }

private:
    RadialTable() : data_(static_cast<std::size_t>(nr) * nr * ns) {
        const double ht = 1.5 / nt;
        Eigen::MatrixXd cosines(ns, nt);
        std::vector<double> tn(nt), chi_t(nt);
        for (int k = 0; k < nt; ++k) {
            tn[k] = 0.5 + (k + 0.5) * ht;
            chi_t[k] = bump_chi(tn[k]);
        }
        for (int i = 0; i < ns; ++i)
            for (int k = 0; k < nt; ++k) cosines(i, k) = 2.0 * ht * std::cos(kTwoPi * tn[k] * i * hs());
        std::vector<double> chi_r(static_cast<std::size_t>(nr) * nt);
        for (int i = 0; i < nr; ++i)
            for (int k = 0; k < nt; ++k) chi_r[static_cast<std::size_t>(i) * nt + k] = bump_chi(tn[k] * (r_lo + i * hr()));
#pragma omp parallel for schedule(dynamic)
        for (int i2 = 0; i2 < nr; ++i2) {
            Eigen::MatrixXd amp(nt, nr);
            for (int i1 = 0; i1 < nr; ++i1)
                for (int k = 0; k < nt; ++k)
                    amp(k, i1) = chi_t[k] * chi_t[k] * chi_r[static_cast<std::size_t>(i1) * nt + k] *
                                 chi_r[static_cast<std::size_t>(i2) * nt + k];
            const Eigen::MatrixXd f = cosines * amp;
            float* out = data_.data() + static_cast<std::size_t>(i2) * nr * ns;
            for (int i1 = 0; i1 < nr; ++i1)
                for (int i = 0; i < ns; ++i) out[static_cast<std::size_t>(i1) * ns + i] = static_cast<float>(f(i, i1));
        }
    }

    std::vector<float> data_;
};

struct Interval {
    int lo, hi;   // inclusive; empty when lo > hi
};

Interval index_range(double y_lo, double y_hi, double origin, double h, int n) {
    const int lo = std::max(0, static_cast<int>(std::ceil((y_lo - origin) / h - 1e-12)));
    const int hi = std::min(n - 1, static_cast<int>(std::floor((y_hi - origin) / h + 1e-12)));
    return {lo, hi};
}

// row[m] += F(|xi + x|) e1 e2[m] over one row segment
void accumulate_line(const double* __restrict xi2, const double* __restrict e2r, const double* __restrict e2i,
                     const double* __restrict line, double* __restrict rre, double* __restrict rim, int lo, int hi,
                     double c, double x2, double inner, double hu, int line_points, double fre, double fim) {
    const double top = line_points - 1.0 - 1e-9;
#pragma omp simd
    for (int m = lo; m < hi; ++m) {
        const double y = xi2[m] + x2;
        const double r1 = std::sqrt(c * c + y * y);
        double fu = (r1 - inner) / hu;
        fu = fu < 0.0 ? 0.0 : fu;
        fu = fu > top ? top : fu;
        const int q = static_cast<int>(fu);
        const double wu = fu - q;
        const double f = (1 - wu) * line[q] + wu * line[q + 1];
        rre[m] += f * (fre * e2r[m] - fim * e2i[m]);
        rim[m] += f * (fre * e2i[m] + fim * e2r[m]);
    }
}

}  // namespace

KernelRow kernel_Psi_circle(const Matrix2& a, double eta1, double eta2, const KernelRowConfig& cfg) {
    if (!(cfg.lambda > 0)) throw std::invalid_argument("lambda must be positive");
    const double lambda = cfg.lambda;
    const int need = OperatorConfig::resolved_points(lambda);
    const int n = cfg.xi_points > 0 ? cfg.xi_points : need;
    const int nx = cfg.x_points > 0 ? cfg.x_points : need;
    const Axis xi{-1, 1, n}, xa{-1, 1, nx};
    if (nx < need)
        throw OperatorResolutionError("x quadrature must resolve 1/(4 lambda); need " + std::to_string(need) +
                                          " points per axis",
                                      need);
    const int need_xi = static_cast<int>(std::ceil(2.0 * lambda - 1e-9)) + 1;
    if (n < need_xi)
        throw OperatorResolutionError("row grid must resolve 1/lambda; need " + std::to_string(need_xi) +
                                          " points per axis",
                                      need_xi);
    const auto& table = RadialTable::get();
    const double s_max = std::min(cfg.s_max, RadialTable::s_hi);
    const double hxi = xi.spacing(), hx = xa.spacing();
    const double hr = table.hr(), hs = table.hs();
    constexpr int nr = RadialTable::nr, ns = RadialTable::ns;

    // F oscillates in s with period >= 1/2, i.e. period 1/(2 lambda) in r1; 16 samples per period
    const double hu = 1.0 / (32.0 * lambda);
    const int line_points = static_cast<int>(std::ceil(2.0 * s_max / lambda / hu)) + 2;

    const std::size_t cells = static_cast<std::size_t>(n) * n;
    const int threads = omp_get_max_threads();
    std::vector<std::vector<double>> part_re(threads), part_im(threads);

#pragma omp parallel
    {
        auto& acc_re = part_re[omp_get_thread_num()];
        auto& acc_im = part_im[omp_get_thread_num()];
        acc_re.assign(cells, 0.0);
        acc_im.assign(cells, 0.0);
        std::vector<double> e1r(n), e1i(n), e2r(n), e2i(n), xi2(n), line(line_points);
        for (int m = 0; m < n; ++m) xi2[m] = xi.coord(m);
#pragma omp for schedule(static)
        for (int j1 = 0; j1 < nx; ++j1) {
            const double x1 = xa.coord(j1);
            for (int j2 = 0; j2 < nx; ++j2) {
                const double x2 = xa.coord(j2);
                const double px = bump_psi(x1, x2);
                if (px == 0) continue;
                const double r2 = std::hypot(eta1 + x1, eta2 + x2);
                if (r2 <= RadialTable::r_lo || r2 >= RadialTable::r_hi) continue;
                const double outer = std::min(r2 + s_max / lambda, RadialTable::r_hi - 1e-9);
                const double inner = std::max(r2 - s_max / lambda, RadialTable::r_lo);

                // <A(xi - eta), x> = <xi - eta, A^T x>
                const double p1 = a.a11 * x1 + a.a21 * x2, p2 = a.a12 * x1 + a.a22 * x2;
                const cplx base = px * px * hx * hx * cis(-kTwoPi * lambda * (eta1 * p1 + eta2 * p2));
                const cplx step1 = cis(kTwoPi * lambda * hxi * p1), step2 = cis(kTwoPi * lambda * hxi * p2);
                cplx z1 = base * cis(kTwoPi * lambda * xi.lo * p1), z2 = cis(kTwoPi * lambda * xi.lo * p2);
                for (int m = 0; m < n; ++m) {
                    e1r[m] = z1.real();
                    e1i[m] = z1.imag();
                    e2r[m] = z2.real();
                    e2i[m] = z2.imag();
                    z1 *= step1;
                    z2 *= step2;
                }

                // along a fixed x, F depends on r1 only: resample it on a fine radial line
                const double fr2 = (r2 - RadialTable::r_lo) / hr;
                const int i2 = std::min(static_cast<int>(fr2), nr - 2);
                const double w2 = fr2 - i2;
                const float* t0 = table.slice(i2);
                const float* t1 = table.slice(i2 + 1);
                for (int q = 0; q < line_points; ++q) {
                    const double r1 = inner + q * hu;
                    const double sv = std::abs(lambda * (r1 - r2));
                    if (sv >= s_max || r1 <= RadialTable::r_lo || r1 >= RadialTable::r_hi) {
                        line[q] = 0;
                        continue;
                    }
                    const double fs = std::min(sv / hs, ns - 1.0 - 1e-9);
                    const double fr1 = std::clamp((r1 - RadialTable::r_lo) / hr, 0.0, nr - 1.0 - 1e-9);
                    const int is = static_cast<int>(fs), i1 = static_cast<int>(fr1);
                    const double ws = fs - is, w1 = fr1 - i1;
                    const std::size_t o = static_cast<std::size_t>(i1) * ns + is;
                    const double a0 = (1 - ws) * t0[o] + ws * t0[o + 1];
                    const double a1 = (1 - ws) * t0[o + ns] + ws * t0[o + ns + 1];
                    const double b0 = (1 - ws) * t1[o] + ws * t1[o + 1];
                    const double b1 = (1 - ws) * t1[o + ns] + ws * t1[o + ns + 1];
                    line[q] = (1 - w2) * ((1 - w1) * a0 + w1 * a1) + w2 * ((1 - w1) * b0 + w1 * b1);
                }

                for (int m1 = 0; m1 < n; ++m1) {
                    const double c = xi.coord(m1) + x1;
                    if (std::abs(c) >= outer) continue;
                    const double yo = std::sqrt(outer * outer - c * c);
                    const double yi = inner > std::abs(c) ? std::sqrt(inner * inner - c * c) : 0.0;
                    const double fre = e1r[m1], fim = e1i[m1];
                    double* rre = acc_re.data() + static_cast<std::size_t>(m1) * n;
                    double* rim = acc_im.data() + static_cast<std::size_t>(m1) * n;
                    Interval parts[2] = {index_range(-yo - x2, -yi - x2, xi.lo, hxi, n),
                                         index_range(yi - x2, yo - x2, xi.lo, hxi, n)};
                    if (parts[1].lo <= parts[0].hi) parts[1].lo = parts[0].hi + 1;
                    for (const Interval& part : parts)
                        accumulate_line(xi2.data(), e2r.data(), e2i.data(), line.data(), rre, rim, part.lo, part.hi + 1,
                                        c, x2, inner, hu, line_points, fre, fim);
                }
            }
        }
    }

    KernelRow out;
    const double scale = lambda * lambda;
    for (std::size_t i = 0; i < cells; ++i) {
        double re = 0, im = 0;
        for (int p = 0; p < threads; ++p) {
            re += part_re[p][i];
            im += part_im[p][i];
        }
        const double mag = scale * std::hypot(re, im);
        if (mag > 0) ++out.support;
        out.peak = std::max(out.peak, mag);
        out.row_sum += mag * hxi * hxi;
    }
    return out;
}

cplx kernel_Psi_circle_entry(const Matrix2& a, double lambda, double xi1, double xi2, double eta1, double eta2,
                             int x_points, int t_points) {
    const Axis xa{-1, 1, x_points};
    const double hx = xa.spacing(), ht = 1.5 / t_points;
    const double d1 = xi1 - eta1, d2 = xi2 - eta2;
    cplx acc{};
    for (int j1 = 0; j1 < x_points; ++j1) {
        const double x1 = xa.coord(j1);
        for (int j2 = 0; j2 < x_points; ++j2) {
            const double x2 = xa.coord(j2);
            const double px = bump_psi(x1, x2);
            if (px == 0) continue;
            const double lin = d1 * (a.a11 * x1 + a.a21 * x2) + d2 * (a.a12 * x1 + a.a22 * x2);
            const double r1 = std::hypot(xi1 + x1, xi2 + x2), r2 = std::hypot(eta1 + x1, eta2 + x2);
            for (int k = 0; k < t_points; ++k) {
                const double tabs = 0.5 + (k + 0.5) * ht;
                const double c = bump_chi(tabs);
                const double amp = px * px * c * c * bump_chi(tabs * r1) * bump_chi(tabs * r2);
                if (amp == 0) continue;
                for (const double t : {tabs, -tabs}) acc += amp * cis(kTwoPi * lambda * (lin + t * (r1 - r2)));
            }
        }
    }
    return lambda * lambda * hx * hx * ht * acc;
}

// ---------------------------------------------------------------------------------------------
// Sublevel sets

namespace {

constexpr std::uint64_t kSublevelBatch = 1 << 16;
constexpr std::uint64_t kSublevelStream = 0x5b1e;

std::uint64_t sublevel_batch_hits(const Matrix2& m, double threshold, std::uint64_t seed, std::uint64_t batch,
                                  std::uint64_t count) {
    KeyedRng rng(seed, kSublevelStream, batch);
    const double off = m.a12 + m.a21;
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
        const double r = std::sqrt(rng.uniform());
        const double th = kTwoPi * rng.uniform();
        const double v1 = r * std::cos(th), v2 = r * std::sin(th);
        const double q = m.a11 * v1 * v1 + off * v1 * v2 + m.a22 * v2 * v2;
        if (std::abs(q) <= threshold) ++hits;
    }
    return hits;
}

SublevelEstimate finish(std::uint64_t hits, std::uint64_t samples) {
    SublevelEstimate e;
    e.hits = hits;
    e.samples = samples;
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    e.measure = std::numbers::pi * p;
    e.stderr_ = std::numbers::pi * std::sqrt(p * (1 - p) / static_cast<double>(samples));
    return e;
}

void check_symmetric(const Matrix2& m) {
    if (!m.finite()) throw std::invalid_argument("quadratic form entries must be finite");
    if (std::abs(m.a12 - m.a21) > 1e-12 * std::max(1.0, m.frobenius()))
        throw std::invalid_argument("quadratic form matrix must be symmetric");
}

}  // namespace

SublevelEstimate sublevel_measure(const Matrix2& m, double threshold, std::uint64_t samples, std::uint64_t seed) {
    check_symmetric(m);
    if (samples == 0) throw std::invalid_argument("need at least one sample");
    const std::int64_t batches = static_cast<std::int64_t>((samples + kSublevelBatch - 1) / kSublevelBatch);
    std::uint64_t hits = 0;
#pragma omp parallel for reduction(+ : hits) schedule(static)
    for (std::int64_t b = 0; b < batches; ++b) {
        const std::uint64_t start = static_cast<std::uint64_t>(b) * kSublevelBatch;
        hits += sublevel_batch_hits(m, threshold, seed, b, std::min(kSublevelBatch, samples - start));
    }
    return finish(hits, samples);
}

SublevelEstimate sublevel_measure_serial(const Matrix2& m, double threshold, std::uint64_t samples,
                                         std::uint64_t seed) {
    check_symmetric(m);
    if (samples == 0) throw std::invalid_argument("need at least one sample");
    std::uint64_t hits = 0;
    for (std::uint64_t start = 0, b = 0; start < samples; start += kSublevelBatch, ++b)
        hits += sublevel_batch_hits(m, threshold, seed, b, std::min(kSublevelBatch, samples - start));
    return finish(hits, samples);
}

double sublevel_grid_measure(const Matrix2& m, double threshold, int cells) {
    check_symmetric(m);
    if (cells < 1) throw std::invalid_argument("need at least one column");
    // columns are uniform in phi with u = sin(phi), which keeps the disk edge from limiting accuracy
    const double h = std::numbers::pi / cells;
    double total = 0;
    std::vector<double> cuts;
    for (int i = 0; i < cells; ++i) {
        const double phi = -0.5 * std::numbers::pi + (i + 0.5) * h;
        const double u = std::sin(phi);
        const double half = std::cos(phi);
        // q(y) = qa y^2 + qb y + qc on the column
        const double qa = m.a22, qb = (m.a12 + m.a21) * u, qc = m.a11 * u * u;
        cuts.assign({-half, half});
        for (const double level : {threshold, -threshold}) {
            const double c = qc - level;
            if (qa == 0) {
                if (qb != 0) cuts.push_back(-c / qb);
                continue;
            }
            const double disc = qb * qb - 4 * qa * c;
            if (disc < 0) continue;
            const double sq = std::sqrt(disc);
            const double q = -0.5 * (qb + std::copysign(sq, qb));
            if (q != 0) {
                cuts.push_back(q / qa);
                cuts.push_back(c / q);
            } else {
                cuts.push_back(0.0);
            }
        }
        std::sort(cuts.begin(), cuts.end());
        double len = 0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const double lo = std::max(cuts[k], -half), hi = std::min(cuts[k + 1], half);
            if (hi <= lo) continue;
            const double y = 0.5 * (lo + hi);
            if (std::abs(qa * y * y + qb * y + qc) <= threshold) len += hi - lo;
        }
        total += len * half * h;
    }
    return total;
}

double sublevel_z(const SublevelEstimate& e, double oracle) {
    const double se = std::max(e.stderr_, 1e-12 * std::numbers::pi);
    return std::abs(e.measure - oracle) / se;
}

// ---------------------------------------------------------------------------------------------
// Mixed Hessians and folds

double phase(const Matrix2& a, double x1, double x2, double t, double xi1, double xi2) {
    const auto ax = a.apply(x1, x2);
    return ax[0] * xi1 + ax[1] * xi2 + t * std::hypot(x1 + xi1, x2 + xi2);
}

HessianReport mixed_hessian(const Matrix2& a, double b1, double b2, double t) {
    const double r = std::hypot(b1, b2);
    if (!(r > 0)) throw std::domain_error("mixed Hessian is singular at b = 0");
    const double r3 = r * r * r;
    HessianReport h;
    h.hessian << a.a11 + t * b2 * b2 / r3, a.a12 - t * b1 * b2 / r3,
                 a.a21 - t * b1 * b2 / r3, a.a22 + t * b1 * b1 / r3,
                 b1 / r, b2 / r;
    const Matrix2 s = symmetric_part(a).scaled(0.5);
    const auto sb = s.apply(b1, b2);
    h.det_x1x2 = a.det() + t / r3 * (sb[0] * b1 + sb[1] * b2);
    h.det_x1t = (a.a11 * b2 - a.a12 * b1 + t * b2 / r) / r;
    h.det_x2t = (a.a21 * b2 - a.a22 * b1 - t * b1 / r) / r;
    return h;
}

HessianReport mixed_hessian_fd(const Matrix2& a, double b1, double b2, double t, double step) {
    if (!(std::hypot(b1, b2) > 0)) throw std::domain_error("mixed Hessian is singular at b = 0");
    // Row i, column j of the closed form carries a_ij, i.e. the x-derivative of <A^T x, xi>.
    // Differences are taken in extended precision around x = 0, xi = b.
    using ld = long double;
    const ld m11 = a.a11, m12 = a.a21, m21 = a.a12, m22 = a.a22;
    auto phi = [&](ld x1, ld x2, ld tt, ld y1, ld y2) {
        return (m11 * x1 + m12 * x2) * y1 + (m21 * x1 + m22 * x2) * y2 +
               tt * std::sqrt((x1 + y1) * (x1 + y1) + (x2 + y2) * (x2 + y2));
    };
    const ld hh = step;
    HessianReport out;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 2; ++j) {
            ld acc = 0;
            for (const int si : {1, -1}) {
                for (const int sj : {1, -1}) {
                    ld v[3] = {0, 0, static_cast<ld>(t)};
                    v[i] += si * hh;
                    ld y[2] = {static_cast<ld>(b1), static_cast<ld>(b2)};
                    y[j] += sj * hh;
                    acc += si * sj * phi(v[0], v[1], v[2], y[0], y[1]);
                }
            }
            out.hessian(i, j) = static_cast<double>(acc / (4 * hh * hh));
        }
    }
    const auto& m = out.hessian;
    out.det_x1x2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    out.det_x1t = m(0, 0) * m(2, 1) - m(0, 1) * m(2, 0);
    out.det_x2t = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
    return out;
}

std::array<double, 2> grad_det_x1x2(const Matrix2& a, double b1, double b2, double t) {
    const double r = std::hypot(b1, b2);
    if (!(r > 0)) throw std::domain_error("mixed Hessian is singular at b = 0");
    const Matrix2 s = symmetric_part(a).scaled(0.5);
    const auto sb = s.apply(b1, b2);
    const double q = sb[0] * b1 + sb[1] * b2;
    const double r3 = r * r * r, r5 = r3 * r * r;
    return {t * (2 * sb[0] / r3 - 3 * q * b1 / r5), t * (2 * sb[1] / r3 - 3 * q * b2 / r5)};
}

FoldReport fold_check(const Matrix2& a, double b1, double b2, double t, double tol, double transversal_floor) {
    const HessianReport h = mixed_hessian(a, b1, b2, t);
    const Eigen::Matrix2d m = h.hessian.topRows<2>();
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    FoldReport f;
    f.sigma_max = svd.singularValues()(0);
    f.sigma_min = svd.singularValues()(1);
    f.singular = f.sigma_min < tol;
    f.degenerate = f.sigma_max < tol;
    Eigen::Vector2d v = svd.matrixV().col(1), u = svd.matrixU().col(1);
    if (v(0) < -1e-12 || (std::abs(v(0)) <= 1e-12 && v(1) < 0)) v = -v;
    if (u(0) > 1e-12 || (std::abs(u(0)) <= 1e-12 && u(1) < 0)) u = -u;
    f.right_kernel = {v(0), v(1)};
    f.left_kernel = {u(0), u(1)};
    const auto g = grad_det_x1x2(a, b1, b2, t);
    f.dv_det = v(0) * g[0] + v(1) * g[1];
    f.du_det = u(0) * g[0] + u(1) * g[1];
    f.dv_det_scaled = std::abs(v(0)) > 1e-12 ? f.dv_det / std::abs(v(0)) : std::nan("");
    f.du_det_scaled = std::abs(u(0)) > 1e-12 ? f.du_det / std::abs(u(0)) : std::nan("");
    f.two_sided_fold = f.singular && !f.degenerate && std::abs(f.dv_det) > transversal_floor &&
                       std::abs(f.du_det) > transversal_floor;
    return f;
}

// ---------------------------------------------------------------------------------------------
// Extreme frequency regimes

namespace {

// Coordinates along e(theta) and its normal.
struct Frame {
    double c, s;
    std::array<double, 2> world(double par, double perp) const { return {par * c - perp * s, par * s + perp * c}; }
    std::array<double, 2> local(double w1, double w2) const { return {w1 * c + w2 * s, -w1 * s + w2 * c}; }
};

double sector(double b1, double b2, double ec, double es) {
    const double r = std::hypot(b1, b2);
    if (r == 0) return 0;
    return bump_psi(100.0 * std::hypot(b1 / r - ec, b2 / r - es));
}

}  // namespace

std::vector<ExtremeRow> kernel_schur_extreme(const Matrix2& a, const ExtremeConfig& cfg) {
    if (std::abs(a.det()) < 1e-12 * std::max(1.0, a.frobenius() * a.frobenius()))
        throw std::invalid_argument("extreme-regime kernel needs an invertible matrix");
    const double rho = cfg.ratio;
    if (!(rho <= 0.125 + 1e-15 || rho >= 8 - 1e-12))
        throw std::invalid_argument("ratio must be <= 1/8 or >= 8");
    if (!(cfg.t > 0)) throw std::invalid_argument("t must be positive");
    const bool small = rho < 1;
    const double lambda = small ? cfg.mu / rho : cfg.lambda_large;
    const double t = cfg.t;
    const Frame fr{std::cos(cfg.theta), std::sin(cfg.theta)};
    const double ppw = cfg.points_per_wave;

    // A in the rotated frame
    const Matrix2 rot{fr.c, -fr.s, fr.s, fr.c};
    const Matrix2 ar = rot.transpose() * a * rot;
    const double anorm = Eigen::JacobiSVD<Eigen::Matrix2d>(ar.eigen()).singularValues()(0);

    const double r_in = rho / (2 * t), r_out = 2 * rho / t;
    const double perp_max = 0.0101 * r_out;
    const double amp_par = std::min(rho / (32 * t), 1.0 / 32);
    const double amp_perp = std::min(0.0025 * rho / (8 * t), 1.0 / 32);
    const double amp_par_xi = rho / (32 * t), amp_perp_xi = 0.0025 * rho / (8 * t);
    constexpr double kCycles = 12;

    std::vector<ExtremeRow> rows;
    for (int k = 0; k < cfg.eta_samples; ++k) {
        const double ang = kTwoPi * k / cfg.eta_samples + 0.4;
        std::array<double, 2> eta;
        if (small) {
            eta = {0.25 * std::cos(ang), 0.25 * std::sin(ang)};
        } else {
            const auto e = fr.world(rho / t, 0);
            eta = {e[0] + 0.2 * std::cos(ang), e[1] + 0.2 * std::sin(ang)};
        }
        ExtremeRow row{eta[0], eta[1], 0.0};
        const auto el = fr.local(eta[0], eta[1]);

        // b = eta + x: inside the sector shell and within the unit ball around eta
        const double bp_lo = std::max(r_in * 0.999, el[0] - 1), bp_hi = std::min(r_out, el[0] + 1);
        const double bq_lo = std::max(-perp_max, el[1] - 1), bq_hi = std::min(perp_max, el[1] + 1);
        if (!(bp_hi > bp_lo && bq_hi > bq_lo)) {
            rows.push_back(row);
            continue;
        }
        const double lp = bp_hi - bp_lo, lq = bq_hi - bq_lo;
        const double cp = 0.5 * (bp_lo + bp_hi), cq = 0.5 * (bq_lo + bq_hi);

        // delta = xi - eta: b + delta inside the shell, truncated where the amplitude transform has decayed
        double dp_lo = r_in * 0.999 - bp_hi, dp_hi = r_out - bp_lo;
        double dq_lo = -perp_max - bq_hi, dq_hi = perp_max - bq_lo;
        {
            const Eigen::Matrix2d inv = (lambda * ar.transpose().eigen()).inverse();
            const double om_p = kTwoPi * kCycles / lp, om_q = kTwoPi * kCycles / lq;
            const double ext_p = std::abs(inv(0, 0)) * om_p + std::abs(inv(0, 1)) * om_q;
            const double ext_q = std::abs(inv(1, 0)) * om_p + std::abs(inv(1, 1)) * om_q;
            dp_lo = std::max(dp_lo, -ext_p);
            dp_hi = std::min(dp_hi, ext_p);
            dq_lo = std::max(dq_lo, -ext_q);
            dq_hi = std::min(dq_hi, ext_q);
        }
        const double dmax = std::max({std::abs(dp_lo), std::abs(dp_hi)}) + std::max(std::abs(dq_lo), std::abs(dq_hi));
        const double half_diag = 0.5 * std::hypot(lp, lq);

        const double phase_b = kTwoPi / (ppw * lambda * (anorm * dmax + 0.03 * t));
        const double phase_d = kTwoPi / (ppw * lambda * (anorm * half_diag + 0.03 * t));
        const double hp = std::min(amp_par, phase_b), hq = std::min(amp_perp, phase_b);
        const int mp = std::max(1, static_cast<int>(std::floor(std::min(amp_par_xi, phase_d) / hp)));
        const int mq = std::max(1, static_cast<int>(std::floor(std::min(amp_perp_xi, phase_d) / hq)));
        const int nbp = static_cast<int>(std::ceil(lp / hp)) + 1, nbq = static_cast<int>(std::ceil(lq / hq)) + 1;
        const int ndp = static_cast<int>(std::ceil((dp_hi - dp_lo) / (mp * hp))) + 1;
        const int ndq = static_cast<int>(std::ceil((dq_hi - dq_lo) / (mq * hq))) + 1;
        const double pairs = static_cast<double>(nbp) * nbq * ndp * ndq;
        if (pairs > 2e10)
            throw OperatorResolutionError("extreme-regime kernel needs " + std::to_string(pairs) + " pair evaluations",
                                          nbp);

        // b-side weights and xi-side lattice table, both including the t|.| phase
        cvec wb(static_cast<std::size_t>(nbp) * nbq);
        for (int i = 0; i < nbp; ++i) {
            for (int j = 0; j < nbq; ++j) {
                const double bp = bp_lo + i * hp, bq = bq_lo + j * hq;
                const auto b = fr.world(bp, bq);
                const double rb = std::hypot(b[0], b[1]);
                const double amp = bump_psi(b[0] - eta[0], b[1] - eta[1]) * bump_chi(t * rb / rho) *
                                   sector(b[0], b[1], fr.c, fr.s);
                wb[static_cast<std::size_t>(i) * nbq + j] =
                    amp == 0 ? cplx{} : amp * hp * hq * cis(-lambda * t * rb);
            }
        }
        const int ngp = nbp + mp * (ndp - 1), ngq = nbq + mq * (ndq - 1);
        cvec gt(static_cast<std::size_t>(ngp) * ngq);
        for (int i = 0; i < ngp; ++i) {
            for (int j = 0; j < ngq; ++j) {
                const double bp = bp_lo + dp_lo + i * hp, bq = bq_lo + dq_lo + j * hq;
                const auto b = fr.world(bp, bq);
                const double rb = std::hypot(b[0], b[1]);
                const double amp = bump_chi(t * rb / rho) * sector(b[0], b[1], fr.c, fr.s);
                gt[static_cast<std::size_t>(i) * ngq + j] = amp == 0 ? cplx{} : amp * cis(lambda * t * rb);
            }
        }

        std::vector<double> mag(static_cast<std::size_t>(ndp) * ndq, 0.0);
#pragma omp parallel
        {
            cvec ep(nbp), eq(nbq);
#pragma omp for schedule(dynamic) collapse(2)
            for (int u = 0; u < ndp; ++u) {
                for (int v = 0; v < ndq; ++v) {
                    const double dp = dp_lo + u * mp * hp, dq = dq_lo + v * mq * hq;
                    // <A^T delta, b - c> = <delta, A (b - c)> in frame coordinates
                    const double pp = lambda * (ar.a11 * dp + ar.a21 * dq), pq = lambda * (ar.a12 * dp + ar.a22 * dq);
                    const cplx sp = cis(pp * hp), sq = cis(pq * hq);
                    ep[0] = cis(pp * (bp_lo - cp));
                    eq[0] = cis(pq * (bq_lo - cq));
                    for (int i = 1; i < nbp; ++i) ep[i] = ep[i - 1] * sp;
                    for (int j = 1; j < nbq; ++j) eq[j] = eq[j - 1] * sq;
                    cplx acc{};
                    for (int i = 0; i < nbp; ++i) {
                        const cplx* w = wb.data() + static_cast<std::size_t>(i) * nbq;
                        const cplx* g = gt.data() + static_cast<std::size_t>(i + u * mp) * ngq + v * mq;
                        cplx inner{};
                        for (int j = 0; j < nbq; ++j) inner += w[j] * eq[j] * g[j];
                        acc += ep[i] * inner;
                    }
                    mag[static_cast<std::size_t>(u) * ndq + v] = std::abs(acc);
                }
            }
        }
        double sum = 0;
        for (double m : mag) sum += m;
        row.row_sum = lambda * lambda * sum * (mp * hp) * (mq * hq);
        row.pairs = static_cast<std::size_t>(pairs);
        rows.push_back(row);
    }
    return rows;
}

double mean_row_sum(const std::vector<ExtremeRow>& rows) {
    if (rows.empty()) return 0;
    double s = 0;
    for (const auto& r : rows) s += r.row_sum;
    return s / rows.size();
}

}  // namespace vp
