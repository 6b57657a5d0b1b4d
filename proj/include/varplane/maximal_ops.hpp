#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "varplane/field_grid.hpp"
#include "varplane/matrix_classify.hpp"

namespace vp {

struct DilationSet {
    std::vector<double> values;
    static DilationSet geometric(int n = 64, double t_min = 0.5, double t_max = 2.0);
    void validate() const;
};

struct RotationSet {
    std::vector<double> values;
    static RotationSet uniform(int n);
    void validate() const;
};

// (1/measure) * sum_k w_k |f(x - t y_k, x3 - <A x, t y_k>)|
template <class F>
double plane_average(const F& f, const Matrix2& a, const std::vector<QuadNode>& nodes, double measure, double t,
                     double x1, double x2, double x3) {
    const auto ax = a.apply(x1, x2);
    double acc = 0.0;
    for (const QuadNode& n : nodes) {
        const double y1 = t * n.y1, y2 = t * n.y2;
        acc += n.w * std::abs(f(x1 - y1, x2 - y2, x3 - (ax[0] * y1 + ax[1] * y2)));
    }
    return acc / measure;
}

// Prebuilt annulus quadrature, reused across evaluation nodes and dilations.
class AnnulusAverager {
public:
    explicit AnnulusAverager(const AnnulusSpec& spec);
    explicit AnnulusAverager(double delta) : AnnulusAverager(AnnulusSpec::for_delta(delta)) {}

    template <class F>
    double operator()(const F& f, const Matrix2& a, double t, double x1, double x2, double x3) const {
        return plane_average(f, a, nodes_, measure_, t, x1, x2, x3);
    }
    double operator()(const ScalarField3& f, const Matrix2& a, double t, double x1, double x2, double x3) const {
        return plane_average([&f](double u, double v, double w) { return f.sample(u, v, w); }, a, nodes_, measure_, t,
                             x1, x2, x3);
    }

    const AnnulusSpec& spec() const { return spec_; }
    const std::vector<QuadNode>& nodes() const { return nodes_; }
    double measure() const { return measure_; }

private:
    AnnulusSpec spec_;
    std::vector<QuadNode> nodes_;
    double measure_;
};

class TubeAverager {
public:
    explicit TubeAverager(const TubeSpec& spec, const RotationSet& thetas);

    template <class F>
    double operator()(const F& f, const Matrix2& a, std::size_t theta_index, double x1, double x2, double x3) const {
        return plane_average(f, a, nodes_[theta_index], measure_, 1.0, x1, x2, x3);
    }
    double operator()(const ScalarField3& f, const Matrix2& a, std::size_t theta_index, double x1, double x2,
                      double x3) const {
        return plane_average([&f](double u, double v, double w) { return f.sample(u, v, w); }, a,
                             nodes_[theta_index], measure_, 1.0, x1, x2, x3);
    }
    std::size_t size() const { return nodes_.size(); }

private:
    std::vector<std::vector<QuadNode>> nodes_;
    double measure_;
};

double annulus_average(const ScalarField3& f, const Matrix2& a, double delta, double t, double x1, double x2,
                       double x3);
double nikodym_average(const ScalarField3& f, const Matrix2& a, double delta, double theta, double x1, double x2,
                       double x3);

ScalarField3 annulus_maximal(const ScalarField3& f, const Matrix2& a, double delta, const DilationSet& ts,
                             const Grid3& eval_grid);
ScalarField3 annulus_maximal_serial(const ScalarField3& f, const Matrix2& a, double delta, const DilationSet& ts,
                                    const Grid3& eval_grid);
ScalarField3 nikodym_maximal(const ScalarField3& f, const Matrix2& a, double delta, const RotationSet& thetas,
                             const Grid3& eval_grid);
ScalarField3 nikodym_maximal_serial(const ScalarField3& f, const Matrix2& a, double delta, const RotationSet& thetas,
                                    const Grid3& eval_grid);

// Planar annulus average of a function of two variables
template <class G>
double euclidean_annulus_average(const G& g, const std::vector<QuadNode>& nodes, double measure, double t, double x1,
                                 double x2) {
    double acc = 0.0;
    for (const QuadNode& n : nodes) acc += n.w * std::abs(g(x1 - t * n.y1, x2 - t * n.y2));
    return acc / measure;
}

// f~(x, x3) = f(Qx, x3) on the grid of f, and Q^T A Q
std::pair<ScalarField3, Matrix2> conjugation_transport(const ScalarField3& f, const Matrix2& a, const Matrix2& q);

}  // namespace vp
