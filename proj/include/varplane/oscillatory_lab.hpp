#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "varplane/fit.hpp"
#include "varplane/matrix_classify.hpp"

namespace vp {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

class OperatorResolutionError : public std::runtime_error {
public:
    OperatorResolutionError(const std::string& what, int required) : std::runtime_error(what), required_points(required) {}
    int required_points;
};

struct Axis {
    double lo = -1, hi = 1;
    int points = 2;
    double spacing() const { return (hi - lo) / (points - 1); }
    double coord(int i) const { return lo + spacing() * i; }
};

struct OperatorConfig {
    Matrix2 a;
    double lambda = 8;
    int xi_points = 0;    // per axis over [-1,1]; 0 picks the minimal resolved count
    int x_points = 0;     // per axis over [-1,1]; 0 copies xi_points
    int t_points = 16;
    double t_min = -2.0, t_max = -0.5;
    bool enforce_resolution = true;

    static int resolved_points(double lambda);
};

// T g(x,t) = lambda chi(t) psi(x) sum_xi w e^{2 pi i lambda (<Ax,xi> + t|x+xi|)} chi(x+xi) g(xi)
class DiscretizedOperator {
public:
    explicit DiscretizedOperator(const OperatorConfig& cfg);

    const OperatorConfig& config() const { return cfg_; }
    const Axis& xi_axis() const { return xi_; }
    const Axis& x_axis() const { return x_; }
    double t_node(int k) const { return t_nodes_[k]; }
    std::size_t input_size() const { return static_cast<std::size_t>(xi_.points) * xi_.points; }
    std::size_t output_size() const { return static_cast<std::size_t>(x_.points) * x_.points * t_nodes_.size(); }
    std::size_t output_index(int i1, int i2, int k) const {
        return (static_cast<std::size_t>(i1) * x_.points + i2) * t_nodes_.size() + k;
    }
    double input_weight() const { return w_xi_; }
    double output_weight(int i1, int i2) const;   // x cell weight times t cell weight
    double t_phase_step() const;                  // 2 pi lambda dt max|x+xi|
    bool lattice_aligned() const { return aligned_; }

    cplx kernel(int i1, int i2, int k, int m1, int m2) const;   // without the input weight

    void apply(const cvec& g, cvec& out) const;
    void apply_serial(const cvec& g, cvec& out) const;
    // adjoint with respect to the weighted inner products on both sides
    void adjoint(const cvec& h, cvec& out) const;
    void adjoint_serial(const cvec& h, cvec& out) const;

    // W_out^{1/2} K W_in^{1/2}; its largest singular value is the operator norm
    Eigen::MatrixXcd dense() const;

private:
    void build_tables();

    OperatorConfig cfg_;
    Axis xi_, x_;
    std::vector<double> t_nodes_, chi_t_;
    double dt_ = 1;
    double w_xi_ = 1;
    bool aligned_ = false;
    std::vector<int> active_x_;     // flat x indices with psi(x) != 0
    // b = x + xi tables on the shared lattice: chi(|b|) e^{2 pi i lambda t_0 |b|} and the per-step
    // factor e^{2 pi i lambda dt |b|}, rows padded with zeros
    int b_points_ = 0;
    std::size_t b_stride_ = 0;
    std::vector<double> v0r_, v0i_, sr_, si_;
};

struct PowerResult {
    double norm = 0;
    int iterations = 0;
    double residual = 0;
    bool converged = false;
};

PowerResult opnorm(const DiscretizedOperator& op, double tol = 1e-4, int max_iters = 200, std::uint64_t seed = 0,
                   bool parallel = true);
double dense_opnorm(const DiscretizedOperator& op);

struct SweepPoint {
    int j;
    double lambda;
    PowerResult result;
    double seconds;
};

struct LambdaSweep {
    std::vector<SweepPoint> points;
    ScalingReport report;
};

// j-points whose estimated work exceeds max_pair_ops are skipped and listed in report.skipped
LambdaSweep lambda_sweep(const Matrix2& a, int j_min, int j_max, double tolerance = 0.1, std::uint64_t seed = 0,
                         double max_pair_ops = 1e30, double power_tol = 1e-4, int max_iters = 200);
double estimated_pair_ops(double lambda, int t_points = 16);

// Row of |K(xi, eta)| for the normal-operator kernel, and its weighted sum
struct KernelRow {
    double row_sum = 0;        // lambda^2 * sum_xi w |K(xi, eta)|
    double peak = 0;
    std::size_t support = 0;
};
struct KernelRowConfig {
    double lambda = 8;
    int xi_points = 0;          // row grid per axis over [-1,1]; 0 picks spacing 1/(4 lambda), minimum 1/lambda
    int x_points = 0;           // x quadrature per axis over [-1,1]; 0 picks spacing 1/(4 lambda)
    double s_max = 6;           // pairs with lambda | |xi+x| - |eta+x| | > s_max are dropped
};
KernelRow kernel_Psi_circle(const Matrix2& a, double eta1, double eta2, const KernelRowConfig& cfg);
// direct (x, t) quadrature of one entry, t over both signs
cplx kernel_Psi_circle_entry(const Matrix2& a, double lambda, double xi1, double xi2, double eta1, double eta2,
                             int x_points, int t_points);

struct SublevelEstimate {
    double measure = 0;
    double stderr_ = 0;
    std::uint64_t hits = 0, samples = 0;
};
// |{xi in unit disk : |<M xi, xi>| <= threshold}|
SublevelEstimate sublevel_measure(const Matrix2& m, double threshold, std::uint64_t samples, std::uint64_t seed);
SublevelEstimate sublevel_measure_serial(const Matrix2& m, double threshold, std::uint64_t samples,
                                         std::uint64_t seed);
double sublevel_grid_measure(const Matrix2& m, double threshold, int cells = 512);
// |estimate - oracle| in standard errors; a zero-variance estimate (no hits or all hits) uses a 1e-12 relative floor
double sublevel_z(const SublevelEstimate& e, double oracle);

struct HessianReport {
    Eigen::Matrix<double, 3, 2> hessian;   // rows x1, x2, t; columns xi1, xi2
    double det_x1x2 = 0;   // rows x1, x2
    double det_x1t = 0;    // rows x1, t
    double det_x2t = 0;    // rows x2, t
};
HessianReport mixed_hessian(const Matrix2& a, double b1, double b2, double t);
HessianReport mixed_hessian_fd(const Matrix2& a, double b1, double b2, double t, double step = 1e-5);
double phase(const Matrix2& a, double x1, double x2, double t, double xi1, double xi2);
// gradient of det Phi''_{(x1 x2)(xi1 xi2)} with respect to b = x + xi at fixed t
std::array<double, 2> grad_det_x1x2(const Matrix2& a, double b1, double b2, double t);

struct FoldReport {
    bool singular = false;
    bool two_sided_fold = false;
    bool degenerate = false;
    double sigma_min = 0, sigma_max = 0;
    std::array<double, 2> right_kernel{0, 0};   // v, with H v = 0
    std::array<double, 2> left_kernel{0, 0};    // u, with u^T H = 0
    double dv_det = 0;   // <v, grad_x> det
    double du_det = 0;   // <u, grad_xi> det
    // the same derivatives along v and u rescaled to first component +1 and -1 (NaN if that component is ~0)
    double dv_det_scaled = 0;
    double du_det_scaled = 0;
};
FoldReport fold_check(const Matrix2& a, double b1, double b2, double t, double tol = 1e-8,
                      double transversal_floor = 1e-6);

struct ExtremeConfig {
    double ratio = 1.0 / 16;   // 2^j / lambda
    double mu = 16;            // 2^j for small ratios
    double lambda_large = 128; // lambda for large ratios
    double t = 1.0;
    double theta = 0.0;
    int eta_samples = 8;
    int points_per_wave = 4;
};
struct ExtremeRow {
    double eta1, eta2;
    double row_sum;
    std::size_t pairs = 0;
};
std::vector<ExtremeRow> kernel_schur_extreme(const Matrix2& a, const ExtremeConfig& cfg);
double mean_row_sum(const std::vector<ExtremeRow>& rows);

}  // namespace vp
