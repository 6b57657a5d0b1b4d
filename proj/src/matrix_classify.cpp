#include "varplane/matrix_classify.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

namespace vp {

Matrix2 Matrix2::rotation(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c, -s, s, c};
}

double Matrix2::frobenius() const { return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22); }

bool Matrix2::finite() const {
    return std::isfinite(a11) && std::isfinite(a12) && std::isfinite(a21) && std::isfinite(a22);
}

Matrix2 Matrix2::operator*(const Matrix2& o) const {
    return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
            a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
}
Matrix2 Matrix2::operator+(const Matrix2& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
Matrix2 Matrix2::operator-(const Matrix2& o) const { return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22}; }

Eigen::Matrix2d Matrix2::eigen() const {
    Eigen::Matrix2d m;
    m << a11, a12, a21, a22;
    return m;
}

std::string Rational::str() const {
    if (num == 0) return "0";
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

std::string to_string(CanonicalClass c) {
    switch (c) {
        case CanonicalClass::SKW2: return "SKW2";
        case CanonicalClass::SKW1_RANK2: return "SKW1_RANK2";
        case CanonicalClass::SKW1_RANK1: return "SKW1_RANK1";
        case CanonicalClass::SKW0: return "SKW0";
        case CanonicalClass::ZERO: return "ZERO";
    }
    return "?";
}

Matrix2 skew_symmetric_part(const Matrix2& a) {
    const Matrix2 ea = Matrix2::rot90() * a;
    return ea + ea.transpose();
}

Matrix2 symmetric_part(const Matrix2& a) { return a + a.transpose(); }

int numeric_rank(const Eigen::MatrixXd& m, double tol, double abs_floor) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    if (!(smax > abs_floor)) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol * smax) ++r;
    return r;
}

int numeric_rank(const Matrix2& m, double tol, double abs_floor) {
    Eigen::MatrixXd d = m.eigen();
    return numeric_rank(d, tol, abs_floor);
}

EigenData eigen_analysis(const Matrix2& a, const ClassifyTolerance& tol) {
    EigenData out;
    const double tr = a.trace(), det = a.det();
    const double disc = tr * tr - 4.0 * det;
    const double scale = 1.0 + a.frobenius() * a.frobenius();
    if (std::abs(disc) < tol.disc_rel * scale) {
        const double lam = 0.5 * tr;
        out.values = {std::complex<double>(lam, 0.0), std::complex<double>(lam, 0.0)};
        out.repeated = true;
        out.multiplicities = {2};
        const Matrix2 shifted = a - Matrix2::identity().scaled(lam);
        const double fl = tol.abs_floor * std::max(1.0, a.frobenius());
        out.eigenspace_dims = {2 - numeric_rank(shifted, tol.rank_rel, fl)};
    } else if (disc < 0) {
        const double im = 0.5 * std::sqrt(-disc);
        out.values = {std::complex<double>(0.5 * tr, im), std::complex<double>(0.5 * tr, -im)};
        out.complex_pair = true;
        out.multiplicities = {1, 1};
        out.eigenspace_dims = {1, 1};
    } else {
        const double r = std::sqrt(disc);
        // avoid cancellation in the smaller root
        const double big = 0.5 * (tr + (tr >= 0 ? r : -r));
        const double small = big != 0.0 ? det / big : 0.5 * (tr - r);
        out.values = {std::complex<double>(std::max(big, small), 0.0), std::complex<double>(std::min(big, small), 0.0)};
        out.multiplicities = {1, 1};
        out.eigenspace_dims = {1, 1};
    }
    return out;
}

Rational annulus_exponent_for(int rank_skw, int rank) {
    if (rank == 0) return {0, 1};
    switch (rank_skw) {
        case 2: return {0, 1};
        case 1: return rank == 2 ? Rational{1, 6} : Rational{1, 4};
        default: return {1, 2};
    }
}

Rational nikodym_exponent_for(int rank_sym) {
    switch (rank_sym) {
        case 2: return {0, 1};
        case 1: return {1, 6};
        default: return {1, 4};
    }
}

namespace {

Matrix2 normalized(const Matrix2& a) {
    const double f = a.frobenius();
    return f > 0 ? a.scaled(1.0 / f) : a;
}

CanonicalClass class_from_ranks(int rank, int rank_skw) {
    if (rank == 0) return CanonicalClass::ZERO;
    if (rank_skw == 2) return CanonicalClass::SKW2;
    if (rank_skw == 1) return rank == 2 ? CanonicalClass::SKW1_RANK2 : CanonicalClass::SKW1_RANK1;
    return CanonicalClass::SKW0;
}

}  // namespace

CanonicalClass class_from_eigen(const Matrix2& a, const ClassifyTolerance& tol) {
    if (!(a.frobenius() > tol.abs_floor)) return CanonicalClass::ZERO;
    const Matrix2 n = normalized(a);
    const EigenData e = eigen_analysis(n, tol);
    if (!e.repeated) return CanonicalClass::SKW2;
    const bool zero_eig = std::abs(e.values[0].real()) <= std::sqrt(tol.disc_rel);
    if (e.eigenspace_dims[0] == 2) return zero_eig ? CanonicalClass::ZERO : CanonicalClass::SKW0;
    return zero_eig ? CanonicalClass::SKW1_RANK1 : CanonicalClass::SKW1_RANK2;
}

RankProfile classify(const Matrix2& a, const ClassifyTolerance& tol) {
    if (!a.finite()) throw ClassificationError("matrix has non-finite entries");
    RankProfile p;
    if (!(a.frobenius() > tol.abs_floor)) {
        p.eigen = eigen_analysis(Matrix2{}, tol);
        p.canonical_class = CanonicalClass::ZERO;
        p.annulus_exponent = {0, 1};
        p.nikodym_exponent = {0, 1};
        return p;
    }
    const Matrix2 n = normalized(a);
    p.rank = numeric_rank(n, tol.rank_rel, tol.abs_floor);
    p.rank_sym = numeric_rank(symmetric_part(n), tol.rank_rel, tol.abs_floor);
    p.rank_skw = numeric_rank(skew_symmetric_part(n), tol.rank_rel, tol.abs_floor);
    p.eigen = eigen_analysis(a, tol);
    p.canonical_class = class_from_ranks(p.rank, p.rank_skw);
    const CanonicalClass by_eigen = class_from_eigen(a, tol);
    if (by_eigen != p.canonical_class)
        throw ClassificationError("rank path gives " + to_string(p.canonical_class) + " but eigen path gives " +
                                  to_string(by_eigen));
    p.annulus_exponent = annulus_exponent_for(p.rank_skw, p.rank);
    p.nikodym_exponent = nikodym_exponent_for(p.rank_sym);
    return p;
}

Matrix2 orthogonal_conjugate(const Matrix2& a, const Matrix2& q, double tol) {
    const Matrix2 qtq = q.transpose() * q;
    if ((qtq - Matrix2::identity()).frobenius() > tol)
        throw std::invalid_argument("orthogonal_conjugate: Q is not orthogonal");
    return q.transpose() * a * q;
}

double complex_eigen_gap(const Eigen::MatrixXd& a, double s_lo, double s_hi, int samples) {
    if (a.rows() != a.cols()) throw std::invalid_argument("complex_eigen_gap: matrix must be square");
    if (!(s_lo > 0) || !(s_hi >= s_lo) || samples < 1)
        throw std::invalid_argument("complex_eigen_gap: s range must be a closed interval of positive reals");
    const Eigen::Index d = a.rows();
    const Eigen::MatrixXd at = a.transpose();
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        const double s = samples == 1 ? s_lo : s_lo + (s_hi - s_lo) * k / (samples - 1);
        Eigen::MatrixXd m = at - s * Eigen::MatrixXd::Identity(d, d);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        best = std::min(best, svd.singularValues()(d - 1));
    }
    return best;
}

double complex_eigen_gap(const Matrix2& a, double s_lo, double s_hi, int samples) {
    Eigen::MatrixXd m = a.eigen();
    return complex_eigen_gap(m, s_lo, s_hi, samples);
}

Matrix2 parse_matrix(const std::string& text) {
    std::string s = text;
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), [](unsigned char ch) { return !std::isspace(ch); }));
    s.erase(std::find_if(s.rbegin(), s.rend(), [](unsigned char ch) { return !std::isspace(ch); }).base(), s.end());
    if (s == "E") return Matrix2::rot90();
    if (s == "I") return Matrix2::identity();
    const auto colon = s.find(':');
    if (colon != std::string::npos) {
        const std::string name = s.substr(0, colon);
        double c = 0;
        try {
            size_t used = 0;
            c = std::stod(s.substr(colon + 1), &used);
            if (used != s.size() - colon - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw std::invalid_argument("matrix preset '" + s + "': bad parameter");
        }
        if (!std::isfinite(c)) throw std::invalid_argument("matrix preset '" + s + "': parameter must be finite");
        if (name == "Ic" || name == "NIL" || name == "SYM") {
            if (c == 0.0) throw std::invalid_argument("matrix preset '" + s + "': c must be nonzero");
            if (name == "Ic") return Matrix2::ic(c);
            if (name == "NIL") return Matrix2::nil(c);
            return Matrix2::sym(c);
        }
        throw std::invalid_argument("unknown matrix preset '" + name + "'");
    }
    std::string t = s;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream in(t);
    double v[4];
    for (double& x : v)
        if (!(in >> x)) throw std::invalid_argument("matrix '" + text + "': expected four numbers or a preset");
    std::string rest;
    if (in >> rest) throw std::invalid_argument("matrix '" + text + "': expected exactly four numbers");
    Matrix2 m{v[0], v[1], v[2], v[3]};
    if (!m.finite()) throw std::invalid_argument("matrix '" + text + "': entries must be finite");
    return m;
}

}  // namespace vp
