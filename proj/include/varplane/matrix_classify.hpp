#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vp {

struct Matrix2 {
    double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

    static Matrix2 identity() { return {1, 0, 0, 1}; }
    static Matrix2 rot90() { return {0, -1, 1, 0}; }            // E
    static Matrix2 ic(double c) { return {1, c, 0, 1}; }         // I_c
    static Matrix2 nil(double c) { return {0, c, 0, 0}; }
    static Matrix2 sym(double c) { return {0, c, c, 0}; }
    static Matrix2 rotation(double theta);

    Matrix2 transpose() const { return {a11, a21, a12, a22}; }
    double trace() const { return a11 + a22; }
    double det() const { return a11 * a22 - a12 * a21; }
    double frobenius() const;
    bool finite() const;
    Matrix2 operator*(const Matrix2& o) const;
    Matrix2 operator+(const Matrix2& o) const;
    Matrix2 operator-(const Matrix2& o) const;
    Matrix2 scaled(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
    std::array<double, 2> apply(double x1, double x2) const { return {a11 * x1 + a12 * x2, a21 * x1 + a22 * x2}; }
    Eigen::Matrix2d eigen() const;
    bool operator==(const Matrix2& o) const = default;
};

struct Rational {
    int num = 0, den = 1;
    double value() const { return static_cast<double>(num) / den; }
    std::string str() const;
    bool operator==(const Rational& o) const { return num * o.den == o.num * den; }
};

enum class CanonicalClass { SKW2, SKW1_RANK2, SKW1_RANK1, SKW0, ZERO };
std::string to_string(CanonicalClass c);

struct EigenData {
    std::array<std::complex<double>, 2> values;
    bool repeated = false;
    bool complex_pair = false;
    std::vector<int> multiplicities;      // per distinct eigenvalue
    std::vector<int> eigenspace_dims;     // per distinct eigenvalue
};

struct RankProfile {
    int rank = 0;
    int rank_sym = 0;
    int rank_skw = 0;
    EigenData eigen;
    CanonicalClass canonical_class = CanonicalClass::ZERO;
    Rational annulus_exponent;
    Rational nikodym_exponent;
};

struct ClassifyTolerance {
    double rank_rel = 1e-8;
    double abs_floor = 1e-14;
    double disc_rel = 1e-10;
};

class ClassificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Matrix2 skew_symmetric_part(const Matrix2& a);
Matrix2 symmetric_part(const Matrix2& a);
int numeric_rank(const Matrix2& m, double tol = 1e-8, double abs_floor = 1e-14);
int numeric_rank(const Eigen::MatrixXd& m, double tol = 1e-8, double abs_floor = 1e-14);
EigenData eigen_analysis(const Matrix2& a, const ClassifyTolerance& tol = {});
RankProfile classify(const Matrix2& a, const ClassifyTolerance& tol = {});
CanonicalClass class_from_eigen(const Matrix2& a, const ClassifyTolerance& tol = {});
Rational annulus_exponent_for(int rank_skw, int rank);
Rational nikodym_exponent_for(int rank_sym);
Matrix2 orthogonal_conjugate(const Matrix2& a, const Matrix2& q, double tol = 1e-10);
double complex_eigen_gap(const Eigen::MatrixXd& a, double s_lo = 0.4, double s_hi = 2.5, int samples = 512);
double complex_eigen_gap(const Matrix2& a, double s_lo = 0.4, double s_hi = 2.5, int samples = 512);

// "a11 a12 a21 a22", "a11,a12,a21,a22", or a preset: E, I, Ic:<c>, NIL:<c>, SYM:<c>
Matrix2 parse_matrix(const std::string& text);

}  // namespace vp
