#include "varplane/maximal_ops.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace vp {

DilationSet DilationSet::geometric(int n, double t_min, double t_max) {
    if (n < 1 || !(t_min > 0) || !(t_max >= t_min)) throw std::invalid_argument("DilationSet: bad window");
    DilationSet d;
    d.values.resize(n);
    if (n == 1) {
        d.values[0] = t_min;
        return d;
    }
    const double r = std::log(t_max / t_min) / (n - 1);
    for (int i = 0; i < n; ++i) d.values[i] = t_min * std::exp(r * i);
    d.values.back() = t_max;
    return d;
}

void DilationSet::validate() const {
    if (values.empty()) throw std::invalid_argument("DilationSet: empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0)) throw std::invalid_argument("DilationSet: t must be positive");
        if (i && values[i] < values[i - 1]) throw std::invalid_argument("DilationSet: values must be sorted");
    }
}

RotationSet RotationSet::uniform(int n) {
    if (n < 1) throw std::invalid_argument("RotationSet: need at least one angle");
    RotationSet r;
    r.values.resize(n);
    for (int i = 0; i < n; ++i) r.values[i] = 2.0 * std::numbers::pi * i / n;
    return r;
}

void RotationSet::validate() const {
    if (values.empty()) throw std::invalid_argument("RotationSet: empty");
}

AnnulusAverager::AnnulusAverager(const AnnulusSpec& spec)
    : spec_(spec), nodes_(sample_annulus(spec)), measure_(2.0 * std::numbers::pi * spec.delta * spec.radius) {}

TubeAverager::TubeAverager(const TubeSpec& spec, const RotationSet& thetas) : measure_(spec.delta) {
    thetas.validate();
    nodes_.reserve(thetas.values.size());
    for (double th : thetas.values) nodes_.push_back(sample_tube(spec, th));
}

double annulus_average(const ScalarField3& f, const Matrix2& a, double delta, double t, double x1, double x2,
                       double x3) {
    if (!(t > 0)) throw std::invalid_argument("annulus_average: t must be positive");
    return AnnulusAverager(delta)(f, a, t, x1, x2, x3);
}

double nikodym_average(const ScalarField3& f, const Matrix2& a, double delta, double theta, double x1, double x2,
                       double x3) {
    return TubeAverager(TubeSpec::for_delta(delta), RotationSet{{theta}})(f, a, 0, x1, x2, x3);
}

namespace {

template <class Avg>
void max_over(ScalarField3& out, std::size_t node, const Grid3& g, std::size_t count, const Avg& avg) {
    const std::size_t n12 = g.points[1] * g.points[2];
    const std::size_t i = node / n12, j = (node / g.points[2]) % g.points[1], k = node % g.points[2];
    const double x1 = g.coord(0, i), x2 = g.coord(1, j), x3 = g.coord(2, k);
    double best = 0.0;
    for (std::size_t s = 0; s < count; ++s) best = std::max(best, avg(s, x1, x2, x3));
    out.values()[node] = best;
}

}  // namespace

ScalarField3 annulus_maximal(const ScalarField3& f, const Matrix2& a, double delta, const DilationSet& ts,
                             const Grid3& eval_grid) {
    ts.validate();
    const AnnulusAverager avg(delta);
    ScalarField3 out(eval_grid);
    const auto n = static_cast<std::ptrdiff_t>(eval_grid.size());
    const auto body = [&](std::size_t s, double x1, double x2, double x3) { return avg(f, a, ts.values[s], x1, x2, x3); };
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t node = 0; node < n; ++node) max_over(out, node, eval_grid, ts.values.size(), body);
    return out;
}

ScalarField3 annulus_maximal_serial(const ScalarField3& f, const Matrix2& a, double delta, const DilationSet& ts,
                                    const Grid3& eval_grid) {
    ts.validate();
    const AnnulusAverager avg(delta);
    ScalarField3 out(eval_grid);
    const auto body = [&](std::size_t s, double x1, double x2, double x3) { return avg(f, a, ts.values[s], x1, x2, x3); };
    for (std::size_t node = 0; node < eval_grid.size(); ++node) max_over(out, node, eval_grid, ts.values.size(), body);
    return out;
}

ScalarField3 nikodym_maximal(const ScalarField3& f, const Matrix2& a, double delta, const RotationSet& thetas,
                             const Grid3& eval_grid) {
    const TubeAverager avg(TubeSpec::for_delta(delta), thetas);
    ScalarField3 out(eval_grid);
    const auto n = static_cast<std::ptrdiff_t>(eval_grid.size());
    const auto body = [&](std::size_t s, double x1, double x2, double x3) { return avg(f, a, s, x1, x2, x3); };
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t node = 0; node < n; ++node) max_over(out, node, eval_grid, avg.size(), body);
    return out;
}

ScalarField3 nikodym_maximal_serial(const ScalarField3& f, const Matrix2& a, double delta, const RotationSet& thetas,
                                    const Grid3& eval_grid) {
    const TubeAverager avg(TubeSpec::for_delta(delta), thetas);
    ScalarField3 out(eval_grid);
    const auto body = [&](std::size_t s, double x1, double x2, double x3) { return avg(f, a, s, x1, x2, x3); };
    for (std::size_t node = 0; node < eval_grid.size(); ++node) max_over(out, node, eval_grid, avg.size(), body);
    return out;
}

std::pair<ScalarField3, Matrix2> conjugation_transport(const ScalarField3& f, const Matrix2& a, const Matrix2& q) {
    const Matrix2 a_tilde = orthogonal_conjugate(a, q);
    const Grid3& g = f.grid();
    ScalarField3 out = ScalarField3::from_function(g, [&](double x1, double x2, double x3) {
        const auto qx = q.apply(x1, x2);
        return f.sample(qx[0], qx[1], x3);
    });
    return {std::move(out), a_tilde};
}

}  // namespace vp
