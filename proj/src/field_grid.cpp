#include "varplane/field_grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace vp {

namespace {
double smooth_ramp(double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; }
}  // namespace

// C-infinity step: 1 below 1/2, 0 above 1, ratio of exp(-1/s) ramps in between
double bump_psi(double r) {
    r = std::abs(r);
    if (r <= 0.5) return 1.0;
    if (r >= 1.0) return 0.0;
    const double a = smooth_ramp(1.0 - r), b = smooth_ramp(r - 0.5);
    return a / (a + b);
}

double bump_chi(double r) { return bump_psi(0.5 * r) - bump_psi(r); }
double bump_psi(double u1, double u2) { return bump_psi(std::hypot(u1, u2)); }
double bump_chi(double u1, double u2) { return bump_chi(std::hypot(u1, u2)); }
double bump_psi(double u1, double u2, double u3) { return bump_psi(std::sqrt(u1 * u1 + u2 * u2 + u3 * u3)); }

void Grid3::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (points[a] < 2) throw std::invalid_argument("Grid3: need at least 2 points per axis");
        if (!(half_extent[a] > 0) || !std::isfinite(half_extent[a]))
            throw std::invalid_argument("Grid3: half extents must be positive");
    }
}

ScalarField3::ScalarField3(const Grid3& g, double fill) : grid_(g), values_(g.size(), fill) { g.validate(); }

ScalarField3::ScalarField3(const Grid3& g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
    g.validate();
    if (values_.size() != g.size()) throw std::invalid_argument("ScalarField3: value count does not match grid");
    for (double v : values_)
        if (!std::isfinite(v)) throw std::invalid_argument("ScalarField3: non-finite value");
}

double ScalarField3::cell_weight(std::size_t i, std::size_t j, std::size_t k) const {
    const std::size_t idx[3] = {i, j, k};
    double w = 1.0;
    for (int a = 0; a < 3; ++a) {
        double h = grid_.spacing(a);
        if (idx[a] == 0 || idx[a] + 1 == grid_.points[a]) h *= 0.5;
        w *= h;
    }
    return w;
}

double ScalarField3::lp_norm_pow(double p) const {
    const auto& n = grid_.points;
    double acc = 0.0;
    for (std::size_t i = 0; i < n[0]; ++i)
        for (std::size_t j = 0; j < n[1]; ++j)
            for (std::size_t k = 0; k < n[2]; ++k) {
                const double v = std::abs(at(i, j, k));
                if (v != 0.0) acc += cell_weight(i, j, k) * std::pow(v, p);
            }
    return acc;
}

double ScalarField3::lp_norm(double p) const { return std::pow(lp_norm_pow(p), 1.0 / p); }

double ScalarField3::sample(double x1, double x2, double x3) const {
    const double p[3] = {x1, x2, x3};
    std::size_t i0[3];
    double fr[3];
    for (int a = 0; a < 3; ++a) {
        const double h = grid_.spacing(a);
        double s = (p[a] - (grid_.center[a] - grid_.half_extent[a])) / h;
        const double last = static_cast<double>(grid_.points[a] - 1);
        // points on the boundary faces can land a rounding error outside
        if (s < 0.0 && s > -1e-9) s = 0.0;
        if (s > last && s < last + 1e-9) s = last;
        if (!(s >= 0.0) || s > last) return 0.0;
        double fl = std::floor(s);
        if (fl >= last) fl = last - 1;
        i0[a] = static_cast<std::size_t>(fl);
        fr[a] = s - fl;
    }
    const std::size_t n1 = grid_.points[1], n2 = grid_.points[2];
    const double* v = values_.data() + (i0[0] * n1 + i0[1]) * n2 + i0[2];
    const std::size_t s0 = n1 * n2, s1 = n2;
    const double c00 = v[0] * (1 - fr[2]) + v[1] * fr[2];
    const double c01 = v[s1] * (1 - fr[2]) + v[s1 + 1] * fr[2];
    const double c10 = v[s0] * (1 - fr[2]) + v[s0 + 1] * fr[2];
    const double c11 = v[s0 + s1] * (1 - fr[2]) + v[s0 + s1 + 1] * fr[2];
    const double c0 = c00 * (1 - fr[1]) + c01 * fr[1];
    const double c1 = c10 * (1 - fr[1]) + c11 * fr[1];
    return c0 * (1 - fr[0]) + c1 * fr[0];
}

double trilinear_sample(const ScalarField3& f, double x1, double x2, double x3) { return f.sample(x1, x2, x3); }

namespace {

template <class T>
void put_le(std::ostream& out, T v) {
    static_assert(sizeof(T) == 8);
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

template <class T>
T get_le(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("field container truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

}  // namespace

// Layout: 3 x uint64 axis sizes, 3 x float64 centers, 3 x float64 half extents, then float64 samples (row-major).
void ScalarField3::write_binary(std::ostream& out) const {
    for (int a = 0; a < 3; ++a) put_le<std::uint64_t>(out, grid_.points[a]);
    for (int a = 0; a < 3; ++a) put_le<double>(out, grid_.center[a]);
    for (int a = 0; a < 3; ++a) put_le<double>(out, grid_.half_extent[a]);
    for (double v : values_) put_le<double>(out, v);
}

ScalarField3 ScalarField3::read_binary(std::istream& in) {
    Grid3 g;
    for (int a = 0; a < 3; ++a) g.points[a] = get_le<std::uint64_t>(in);
    for (int a = 0; a < 3; ++a) g.center[a] = get_le<double>(in);
    for (int a = 0; a < 3; ++a) g.half_extent[a] = get_le<double>(in);
    g.validate();
    std::vector<double> v(g.size());
    for (double& x : v) x = get_le<double>(in);
    return ScalarField3(g, std::move(v));
}

void ScalarField3::write_csv(std::ostream& out) const {
    out << "x1,x2,x3,value\n";
    out.precision(17);
    for (std::size_t i = 0; i < grid_.points[0]; ++i)
        for (std::size_t j = 0; j < grid_.points[1]; ++j)
            for (std::size_t k = 0; k < grid_.points[2]; ++k)
                out << grid_.coord(0, i) << ',' << grid_.coord(1, j) << ',' << grid_.coord(2, k) << ','
                    << at(i, j, k) << '\n';
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

AnnulusSpec AnnulusSpec::for_delta(double delta) {
    AnnulusSpec s;
    s.delta = delta;
    s.angular = std::max(256, static_cast<int>(std::ceil(8.0 * std::numbers::pi / delta)));
    return s;
}

void AnnulusSpec::validate() const {
    if (!(delta > 0) || !(delta < 1)) throw std::invalid_argument("AnnulusSpec: delta must lie in (0, 1)");
    if (radial < 1) throw std::invalid_argument("AnnulusSpec: need radial samples");
    if (angular < static_cast<int>(std::ceil(4.0 * std::numbers::pi / delta)))
        throw std::invalid_argument("AnnulusSpec: angular samples do not resolve the annulus");
}

TubeSpec TubeSpec::for_delta(double delta) {
    TubeSpec s;
    s.delta = delta;
    s.along = std::max(64, static_cast<int>(std::ceil(4.0 / delta)));
    return s;
}

void TubeSpec::validate() const {
    if (!(delta > 0) || !(delta < 1)) throw std::invalid_argument("TubeSpec: delta must lie in (0, 1)");
    if (along < 1 || across < 1) throw std::invalid_argument("TubeSpec: need samples in both directions");
}

std::vector<QuadNode> sample_annulus(const AnnulusSpec& spec) {
    spec.validate();
    std::vector<double> gx, gw;
    gauss_legendre(spec.radial, gx, gw);
    const double half = 0.5 * spec.delta * spec.radius;
    const double dth = 2.0 * std::numbers::pi / spec.angular;
    std::vector<QuadNode> out;
    out.reserve(static_cast<std::size_t>(spec.radial) * spec.angular);
    for (int a = 0; a < spec.angular; ++a) {
        const double th = dth * a;
        const double c = std::cos(th), s = std::sin(th);
        for (int r = 0; r < spec.radial; ++r) {
            const double rad = spec.radius + half * gx[r];
            out.push_back({rad * c, rad * s, gw[r] * half * rad * dth});
        }
    }
    return out;
}

std::vector<QuadNode> sample_tube(const TubeSpec& spec, double theta) {
    spec.validate();
    std::vector<double> gx, gw;
    gauss_legendre(spec.across, gx, gw);
    const double c = std::cos(theta), s = std::sin(theta);
    const double h = 1.0 / spec.along;
    std::vector<QuadNode> out;
    out.reserve(static_cast<std::size_t>(spec.along) * spec.across);
    for (int i = 0; i < spec.along; ++i) {
        const double y1 = -0.5 + (i + 0.5) * h;
        for (int j = 0; j < spec.across; ++j) {
            const double y2 = 0.5 * spec.delta * gx[j];
            out.push_back({c * y1 - s * y2, s * y1 + c * y2, h * 0.5 * spec.delta * gw[j]});
        }
    }
    return out;
}

WitnessScales witness_scales(CanonicalClass cls, double delta) {
    switch (cls) {
        case CanonicalClass::SKW1_RANK2: return {{1.0, 10.0 * std::cbrt(delta), 10.0 * delta}};
        case CanonicalClass::SKW1_RANK1: return {{1.0, 10.0 * std::sqrt(delta), 10.0 * std::pow(delta, 1.5)}};
        case CanonicalClass::SKW0: return {{10.0, 10.0, 100.0 * delta}};
        default: throw std::invalid_argument("no witness construction for class " + to_string(cls));
    }
}

namespace {

// horizontal axes: h <= support/16; vertical axis: h <= min(delta, support/4)/4
std::array<double, 3> max_spacing(CanonicalClass cls, double delta) {
    const auto s = witness_scales(cls, delta).support;
    return {s[0] / 16.0, s[1] / 16.0, std::min(delta, s[2] / 4.0) / 4.0};
}

}  // namespace

Grid3 witness_grid(CanonicalClass cls, double delta, int refine) {
    if (refine < 1) throw std::invalid_argument("witness_grid: refine must be >= 1");
    const auto s = witness_scales(cls, delta).support;
    const auto hmax = max_spacing(cls, delta);
    Grid3 g;
    for (int a = 0; a < 3; ++a) {
        g.half_extent[a] = s[a];
        const auto cells = static_cast<std::size_t>(std::ceil(2.0 * s[a] / hmax[a] - 1e-9));
        g.points[a] = cells * static_cast<std::size_t>(refine) + 1;
    }
    return g;
}

void check_witness_resolution(CanonicalClass cls, double delta, const Grid3& grid) {
    const auto hmax = max_spacing(cls, delta);
    const Grid3 need = witness_grid(cls, delta);
    bool ok = true;
    std::array<std::size_t, 3> req{};
    for (int a = 0; a < 3; ++a) {
        const double h = grid.spacing(a);
        const std::size_t r = static_cast<std::size_t>(std::ceil(2.0 * grid.half_extent[a] / hmax[a] - 1e-9)) + 1;
        req[a] = std::max(r, need.points[a]);
        if (h > hmax[a] * (1 + 1e-12)) ok = false;
    }
    if (!ok) {
        std::ostringstream msg;
        msg << "grid does not resolve the witness at delta=" << delta << "; need at least " << req[0] << "x" << req[1]
            << "x" << req[2] << " points";
        throw ResolutionError(msg.str(), req);
    }
}

double witness_value(CanonicalClass cls, double delta, double u1, double u2, double u3) {
    const auto s = witness_scales(cls, delta).support;
    return bump_psi(u1 / s[0]) * bump_psi(u2 / s[1]) * bump_psi(u3 / s[2]);
}

ScalarField3 witness_field(CanonicalClass cls, double delta, const Grid3& grid) {
    check_witness_resolution(cls, delta, grid);
    return ScalarField3::from_function(grid, [&](double a, double b, double c) { return witness_value(cls, delta, a, b, c); });
}

}  // namespace vp
