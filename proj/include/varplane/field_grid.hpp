#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "varplane/matrix_classify.hpp"

namespace vp {

// Radial cutoffs. psi == 1 on |u| < 1/2, 0 on |u| >= 1; chi(u) = psi(u/2) - psi(u).
double bump_psi(double r);
double bump_chi(double r);
double bump_psi(double u1, double u2);
double bump_chi(double u1, double u2);
double bump_psi(double u1, double u2, double u3);

class ResolutionError : public std::runtime_error {
public:
    ResolutionError(const std::string& what, std::array<std::size_t, 3> required)
        : std::runtime_error(what), required_points(required) {}
    std::array<std::size_t, 3> required_points;
};

struct Grid3 {
    std::array<double, 3> center{0, 0, 0};
    std::array<double, 3> half_extent{1, 1, 1};
    std::array<std::size_t, 3> points{2, 2, 2};

    double spacing(int axis) const { return 2.0 * half_extent[axis] / static_cast<double>(points[axis] - 1); }
    double coord(int axis, std::size_t i) const {
        return center[axis] - half_extent[axis] + spacing(axis) * static_cast<double>(i);
    }
    std::size_t size() const { return points[0] * points[1] * points[2]; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * points[1] + j) * points[2] + k; }
    void validate() const;
};

class ScalarField3 {
public:
    ScalarField3() = default;
    explicit ScalarField3(const Grid3& g, double fill = 0.0);
    ScalarField3(const Grid3& g, std::vector<double> values);

    const Grid3& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return values_[grid_.index(i, j, k)]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) { return values_[grid_.index(i, j, k)]; }

    // trapezoidal weights, so a constant field integrates exactly over the box
    double lp_norm_pow(double p) const;
    double lp_norm(double p) const;
    double cell_weight(std::size_t i, std::size_t j, std::size_t k) const;

    // zero outside the grid box
    double sample(double x1, double x2, double x3) const;

    template <class F>
    static ScalarField3 from_function(const Grid3& g, F&& f) {
        ScalarField3 out(g);
        for (std::size_t i = 0; i < g.points[0]; ++i)
            for (std::size_t j = 0; j < g.points[1]; ++j)
                for (std::size_t k = 0; k < g.points[2]; ++k)
                    out.at(i, j, k) = f(g.coord(0, i), g.coord(1, j), g.coord(2, k));
        return out;
    }

    void write_binary(std::ostream& out) const;
    static ScalarField3 read_binary(std::istream& in);
    void write_csv(std::ostream& out) const;

private:
    Grid3 grid_;
    std::vector<double> values_;
};

double trilinear_sample(const ScalarField3& f, double x1, double x2, double x3);

// A field g viewed through the vertical shear f(x, x3) = g(x, x3 - kappa |x|^2 / 2).
struct ShearedField {
    const ScalarField3* base = nullptr;
    double kappa = 0.0;
    double operator()(double x1, double x2, double x3) const {
        return base->sample(x1, x2, x3 - 0.5 * kappa * (x1 * x1 + x2 * x2));
    }
};

struct QuadNode {
    double y1, y2, w;
};

struct AnnulusSpec {
    double radius = 1.0;
    double delta = 0.0625;
    int radial = 4;
    int angular = 256;
    static AnnulusSpec for_delta(double delta);
    void validate() const;
};

struct TubeSpec {
    double delta = 0.0625;
    int along = 64;
    int across = 4;
    static TubeSpec for_delta(double delta);
    void validate() const;
};

std::vector<QuadNode> sample_annulus(const AnnulusSpec& spec);
std::vector<QuadNode> sample_tube(const TubeSpec& spec, double theta);

// Gauss-Legendre nodes/weights on [-1, 1]
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

struct WitnessScales {
    std::array<double, 3> support;   // psi(u_i / support_i)
};
WitnessScales witness_scales(CanonicalClass cls, double delta);
Grid3 witness_grid(CanonicalClass cls, double delta, int refine = 1);
void check_witness_resolution(CanonicalClass cls, double delta, const Grid3& grid);
ScalarField3 witness_field(CanonicalClass cls, double delta, const Grid3& grid);
double witness_value(CanonicalClass cls, double delta, double u1, double u2, double u3);

}  // namespace vp
