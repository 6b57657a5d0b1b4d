#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "varplane/field_grid.hpp"
#include "varplane/fit.hpp"
#include "varplane/matrix_classify.hpp"
#include "varplane/maximal_ops.hpp"

namespace vp {

class UnsupportedClassError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The witness constructions need A in one of the reduced shapes
//   s*I + c*e1 e2^T (SKW1_RANK2), c*e1 e2^T (SKW1_RANK1), s*I (SKW0).
struct WitnessSetup {
    CanonicalClass cls;
    double s = 0;   // diagonal entry, also the shear rate of the vertical change of variables
    double c = 0;   // off-diagonal entry
};
WitnessSetup witness_setup(const Matrix2& a);

struct WitnessConfig {
    std::array<int, 3> b_points{48, 16, 32};   // midpoint lattice on the evaluation set
    int refine = 1;                            // multiplies witness grid cells
};

struct WitnessResult {
    double value = 0;            // (int_B |avg|^2 / int |g|^2)^(1/2)
    double b_integral = 0;       // int_B |avg|^2
    double field_norm_sq = 0;    // int |g|^2
    double b_measure = 0;
    std::size_t active_nodes = 0;   // lattice nodes with a usable dilation
    std::size_t grid_points = 0;
};

// Evaluation set for the class: box in (x1, x2, x3') with x3' the sheared height.
struct WitnessBox {
    std::array<double, 3> lo, hi;
    bool mirror_x3 = false;   // also the reflected slab -hi3 <= x3' <= -lo3
};
WitnessBox witness_box(CanonicalClass cls, double delta);

// analytic dilation at the sheared node, NaN if there is no positive root
double witness_dilation(const WitnessSetup& w, double x2, double x3s);

WitnessResult witness_lower_bound_detail(const Matrix2& a, double delta, const WitnessConfig& cfg = {});
double witness_lower_bound(const Matrix2& a, double delta, const WitnessConfig& cfg = {});

// int_B |avg|^2 floor in the unnormalized (1/delta) average convention
double witness_b_floor(CanonicalClass cls, double delta);
// exponent-level bound (floor numerator over the stated field norm), squared
double witness_norm_floor_sq(CanonicalClass cls, double delta);

struct AdversarialConfig {
    std::array<int, 3> b_points{12, 8, 8};
    int t_count = 12;            // geometric dilations in [1/2, 2] in addition to the analytic one
    int iterations = 200;
    int backtracks = 8;
    double step = 0.5;           // initial step relative to |f|
    double noise_starts = 1;     // number of seeded random starts
    bool from_witness = true;
    // used when the class has no witness
    std::array<double, 3> box_half{1.5, 1.5, 1.0};
    std::array<std::size_t, 3> generic_points{25, 25, 33};
};

struct AdversarialResult {
    double ratio = 0;
    double witness_start = 0;   // objective at the witness start, 0 if none
    int accepted_steps = 0;
    int evaluations = 0;
};

// Objective used by the ascent: over lattice nodes of the box, the best of the analytic dilation (if any)
// and the t grid, L2-normalized by the field norm.
class MaximalRatio {
public:
    MaximalRatio(const Matrix2& a, double delta, const Grid3& grid, double shear, const WitnessBox& box,
                 const std::array<int, 3>& b_points, const DilationSet& ts, bool analytic_t);

    double operator()(const std::vector<double>& g) const;
    // value and a supergradient with respect to the grid values
    double value_and_gradient(const std::vector<double>& g, std::vector<double>& grad) const;
    double field_norm_sq(const std::vector<double>& g) const;

    const Grid3& grid() const { return grid_; }
    std::size_t node_count() const { return nodes_.size(); }
    double node_weight() const { return node_w_; }
    double measure() const { return avg_.measure(); }
    // sample position of annulus node k for lattice node n at dilation t, in g's coordinates
    std::array<double, 3> sample_point(std::size_t n, double t, std::size_t k) const;
    const std::vector<double>& dilations(std::size_t n) const { return nodes_[n].ts; }
    const std::vector<QuadNode>& annulus() const { return avg_.nodes(); }

private:
    struct Node {
        double x1, x2, x3;   // unsheared position
        std::vector<double> ts;
    };
    double average(const std::vector<double>& g, const Node& n, double t) const;

    Matrix2 a_;
    Grid3 grid_;
    double shear_;
    AnnulusAverager avg_;
    std::vector<Node> nodes_;
    double node_w_;
    std::vector<double> cell_w_;
};

AdversarialResult adversarial_lower_bound_detail(const Matrix2& a, double delta, int iterations, std::uint64_t seed,
                                                 const AdversarialConfig& cfg = {});
double adversarial_lower_bound(const Matrix2& a, double delta, int iterations, std::uint64_t seed);

enum class EstimatorMethod { witness, adversarial, both };
std::string to_string(EstimatorMethod m);
EstimatorMethod parse_method(const std::string& text);

struct ExperimentConfig {
    WitnessConfig witness;
    AdversarialConfig adversarial;
    std::uint64_t seed = 0;
    double tolerance = 0.08;
};

ScalingReport scaling_experiment(const Matrix2& a, const std::vector<double>& deltas, EstimatorMethod method,
                                 const ExperimentConfig& cfg = {});

struct ContrastCell {
    std::string matrix;
    std::string form;          // "circle" (EA+(EA)^T) or "tube" (A+A^T)
    int form_rank = 0;
    double predicted = 0;      // slope of the measure against 1/threshold
    ScalingReport report;
};
struct ContrastReport {
    std::vector<ContrastCell> cells;   // E circle, E tube, I circle, I tube
    bool swapped = false;              // E row equals I row with the two forms exchanged
};
ContrastReport tube_circle_contrast(const std::vector<double>& deltas, std::uint64_t samples = 1000000,
                                    std::uint64_t seed = 0);

}  // namespace vp
