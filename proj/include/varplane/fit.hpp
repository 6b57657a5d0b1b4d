#pragma once

#include <string>
#include <vector>

namespace vp {

enum class Verdict { CONSISTENT, INCONSISTENT, INCONCLUSIVE };
std::string to_string(Verdict v);

struct FitResult {
    double slope = 0;
    double stderr_ = 0;
    double intercept = 0;
};

// least squares of log2(value) against log2(1/scale)
FitResult fit_exponent(const std::vector<double>& scales, const std::vector<double>& values);
// least squares of log2(value) against log2(scale)
FitResult fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys);

struct ScalingReport {
    std::string preset;
    std::string method;
    std::string anchor;
    std::vector<double> scales;
    std::vector<double> values;
    std::vector<double> skipped;
    double slope = 0;
    double stderr_ = 0;
    double predicted = 0;
    double tolerance = 0.08;
    Verdict verdict = Verdict::INCONCLUSIVE;
};

Verdict judge(double slope, double stderr_, double predicted, double tolerance);
// fits values against scales; set growth_in_scale for lambda-type sweeps
void finalize_report(ScalingReport& r, bool growth_in_scale);

}  // namespace vp
