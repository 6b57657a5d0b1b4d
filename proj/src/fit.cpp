#include "varplane/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace vp {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::CONSISTENT: return "CONSISTENT";
        case Verdict::INCONSISTENT: return "INCONSISTENT";
        default: return "INCONCLUSIVE";
    }
}

FitResult fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit: size mismatch");
    if (xs.size() < 3) throw std::invalid_argument("fit: need at least 3 points");
    const std::size_t n = xs.size();
    std::vector<double> u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0) || !(ys[i] > 0) || !std::isfinite(xs[i]) || !std::isfinite(ys[i]))
            throw std::invalid_argument("fit: inputs must be positive and finite");
        u[i] = std::log2(xs[i]);
        v[i] = std::log2(ys[i]);
    }
    double mu = 0, mv = 0;
    for (std::size_t i = 0; i < n; ++i) mu += u[i], mv += v[i];
    mu /= n;
    mv /= n;
    double suu = 0, suv = 0;
    for (std::size_t i = 0; i < n; ++i) {
        suu += (u[i] - mu) * (u[i] - mu);
        suv += (u[i] - mu) * (v[i] - mv);
    }
    if (suu == 0) throw std::invalid_argument("fit: scales must not all coincide");
    FitResult r;
    r.slope = suv / suu;
    r.intercept = mv - r.slope * mu;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = v[i] - r.intercept - r.slope * u[i];
        sse += e * e;
    }
    r.stderr_ = std::sqrt(sse / (n - 2) / suu);
    if (r.stderr_ < 1e-13) r.stderr_ = 0;
    return r;
}

FitResult fit_exponent(const std::vector<double>& scales, const std::vector<double>& values) {
    std::vector<double> inv(scales.size());
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0)) throw std::invalid_argument("fit: scales must be positive");
        inv[i] = 1.0 / scales[i];
    }
    return fit_loglog(inv, values);
}

Verdict judge(double slope, double stderr_, double predicted, double tolerance) {
    if (!std::isfinite(slope)) return Verdict::INCONCLUSIVE;
    if (std::abs(slope - predicted) <= tolerance && stderr_ <= tolerance / 2) return Verdict::CONSISTENT;
    if (stderr_ > tolerance / 2) return Verdict::INCONCLUSIVE;
    return Verdict::INCONSISTENT;
}

void finalize_report(ScalingReport& r, bool growth_in_scale) {
    bool ok = r.scales.size() >= 3;
    for (double v : r.values) ok = ok && v > 0 && std::isfinite(v);
    if (!ok) {
        r.slope = std::nan("");
        r.stderr_ = std::nan("");
        r.verdict = Verdict::INCONCLUSIVE;
        return;
    }
    const FitResult f = growth_in_scale ? fit_loglog(r.scales, r.values) : fit_exponent(r.scales, r.values);
    r.slope = f.slope;
    r.stderr_ = f.stderr_;
    r.verdict = judge(r.slope, r.stderr_, r.predicted, r.tolerance);
}

}  // namespace vp
