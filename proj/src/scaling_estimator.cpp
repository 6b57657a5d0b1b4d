#include "varplane/scaling_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "varplane/oscillatory_lab.hpp"
#include "varplane/rng.hpp"

namespace vp {

namespace {

constexpr double kShapeTol = 1e-12;

bool near_zero(double v, double scale) { return std::abs(v) <= kShapeTol * std::max(1.0, scale); }

struct Lattice {
    std::vector<std::array<double, 3>> nodes;   // sheared coordinates (x1, x2, x3')
    double cell = 0;
    double measure = 0;
};

Lattice build_lattice(const WitnessBox& box, const std::array<int, 3>& n, bool disk) {
    Lattice out;
    std::array<double, 3> h{};
    for (int a = 0; a < 3; ++a) {
        if (n[a] < 1) throw std::invalid_argument("evaluation lattice needs at least one point per axis");
        h[a] = (box.hi[a] - box.lo[a]) / n[a];
    }
    out.cell = h[0] * h[1] * h[2];
    const int slabs = box.mirror_x3 ? 2 : 1;
    for (int s = 0; s < slabs; ++s)
        for (int i = 0; i < n[0]; ++i)
            for (int j = 0; j < n[1]; ++j)
                for (int k = 0; k < n[2]; ++k) {
                    const double x1 = box.lo[0] + (i + 0.5) * h[0];
                    const double x2 = box.lo[1] + (j + 0.5) * h[1];
                    double x3 = box.lo[2] + (k + 0.5) * h[2];
                    if (s == 1) x3 = -x3;
                    if (disk && x1 * x1 + x2 * x2 > 1.0) continue;
                    out.nodes.push_back({x1, x2, x3});
                }
    out.measure = out.cell * static_cast<double>(out.nodes.size());
    return out;
}

bool box_is_disk(CanonicalClass cls) { return cls == CanonicalClass::SKW0; }

// trilinear stencil matching ScalarField3::sample; returns false outside the grid
struct Stencil {
    std::size_t base;
    double fr[3];
};

bool stencil(const Grid3& g, double x1, double x2, double x3, Stencil& st) {
    const double p[3] = {x1, x2, x3};
    std::size_t i0[3];
    for (int a = 0; a < 3; ++a) {
        const double h = g.spacing(a);
        const double s = (p[a] - (g.center[a] - g.half_extent[a])) / h;
        const double last = static_cast<double>(g.points[a] - 1);
        if (!(s >= 0.0) || s > last) return false;
        double fl = std::floor(s);
        if (fl >= last) fl = last - 1;
        i0[a] = static_cast<std::size_t>(fl);
        st.fr[a] = s - fl;
    }
    st.base = (i0[0] * g.points[1] + i0[1]) * g.points[2] + i0[2];
    return true;
}

template <class Visit>
void for_corners(const Grid3& g, const Stencil& st, Visit&& visit) {
    const std::size_t s0 = g.points[1] * g.points[2], s1 = g.points[2];
    for (int c = 0; c < 8; ++c) {
        const int b0 = c >> 2, b1 = (c >> 1) & 1, b2 = c & 1;
        const double w = (b0 ? st.fr[0] : 1 - st.fr[0]) * (b1 ? st.fr[1] : 1 - st.fr[1]) *
                         (b2 ? st.fr[2] : 1 - st.fr[2]);
        visit(st.base + b0 * s0 + b1 * s1 + b2, w);
    }
}

std::vector<double> trapezoid_weights(const Grid3& g) {
    ScalarField3 tmp(g);
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < g.points[0]; ++i)
        for (std::size_t j = 0; j < g.points[1]; ++j)
            for (std::size_t k = 0; k < g.points[2]; ++k) w[g.index(i, j, k)] = tmp.cell_weight(i, j, k);
    return w;
}

}  // namespace

WitnessSetup witness_setup(const Matrix2& a) {
    const RankProfile p = classify(a);
    const CanonicalClass cls = p.canonical_class;
    if (cls == CanonicalClass::SKW2 || cls == CanonicalClass::ZERO)
        throw UnsupportedClassError("no witness construction for class " + to_string(cls));
    const double scale = a.frobenius();
    if (!near_zero(a.a21, scale) || !near_zero(a.a11 - a.a22, scale))
        throw std::invalid_argument("witness needs A reduced to upper-triangular form with equal diagonal");
    WitnessSetup w{cls, a.a11, a.a12};
    const bool shape_ok = (cls == CanonicalClass::SKW1_RANK2 && !near_zero(w.s, scale) && !near_zero(w.c, scale)) ||
                          (cls == CanonicalClass::SKW1_RANK1 && near_zero(w.s, scale)) ||
                          (cls == CanonicalClass::SKW0 && near_zero(w.c, scale));
    if (!shape_ok) throw std::invalid_argument("witness needs A in reduced orientation");
    if (cls == CanonicalClass::SKW1_RANK1) w.s = 0;
    if (cls == CanonicalClass::SKW0) w.c = 0;
    return w;
}

WitnessBox witness_box(CanonicalClass cls, double delta) {
    switch (cls) {
        case CanonicalClass::SKW1_RANK2: {
            const double w = std::cbrt(delta);
            return {{-5, -w, 1}, {5, w, 5}, true};
        }
        case CanonicalClass::SKW1_RANK1: {
            const double w = std::sqrt(delta);
            return {{-5, -w, 1}, {5, w, 5}, true};
        }
        case CanonicalClass::SKW0: return {{-1, -1, 1}, {1, 1, 2}, false};
        default: throw UnsupportedClassError("no witness construction for class " + to_string(cls));
    }
}

double witness_dilation(const WitnessSetup& w, double x2, double x3s) {
    // (s/2) t^2 + c x2 t - x3' = 0, smallest positive root
    const double qa = 0.5 * w.s, qb = w.c * x2, qc = -x3s;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (qa == 0.0) {
        if (qb == 0.0) return nan;
        const double t = -qc / qb;
        return t > 0 ? t : nan;
    }
    const double disc = qb * qb - 4 * qa * qc;
    if (disc < 0) return nan;
    const double sq = std::sqrt(disc);
    // stable pair of roots
    const double q = -0.5 * (qb + std::copysign(sq, qb));
    double r1 = q / qa, r2 = q != 0.0 ? qc / q : nan;
    if (q == 0.0) r1 = r2 = 0.0;
    double best = nan;
    for (double r : {r1, r2})
        if (r > 0 && !(best <= r)) best = r;
    return best;
}

WitnessResult witness_lower_bound_detail(const Matrix2& a, double delta, const WitnessConfig& cfg) {
    const WitnessSetup w = witness_setup(a);
    const Grid3 grid = witness_grid(w.cls, delta, cfg.refine);
    const ScalarField3 g = witness_field(w.cls, delta, grid);
    const ShearedField f{&g, w.s};
    const AnnulusAverager avg(delta);
    const Lattice lat = build_lattice(witness_box(w.cls, delta), cfg.b_points, box_is_disk(w.cls));

    const auto n = static_cast<std::ptrdiff_t>(lat.nodes.size());
    std::vector<double> vals(lat.nodes.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& p = lat.nodes[i];
        const double t = witness_dilation(w, p[1], p[2]);
        if (!(t > 0)) continue;
        const double x3 = p[2] + 0.5 * w.s * (p[0] * p[0] + p[1] * p[1]);
        vals[i] = avg(f, a, t, p[0], p[1], x3);
    }
    double acc = 0.0;
    std::size_t active = 0;
    for (double v : vals) {
        acc += v * v;
        if (v > 0) ++active;
    }

    WitnessResult r;
    r.b_integral = acc * lat.cell;
    r.field_norm_sq = g.lp_norm_pow(2.0);
    r.value = std::sqrt(r.b_integral / r.field_norm_sq);
    r.b_measure = lat.measure;
    r.active_nodes = active;
    r.grid_points = grid.size();
    return r;
}

double witness_lower_bound(const Matrix2& a, double delta, const WitnessConfig& cfg) {
    return witness_lower_bound_detail(a, delta, cfg).value;
}

double witness_b_floor(CanonicalClass cls, double delta) {
    switch (cls) {
        case CanonicalClass::SKW1_RANK2: return std::pow(delta, 2.0 / 3.0) * 1e-4 * std::cbrt(delta);
        case CanonicalClass::SKW1_RANK1: return delta * 1e-4 * std::sqrt(delta);
        case CanonicalClass::SKW0: return 1.0;
        default: throw UnsupportedClassError("no witness construction for class " + to_string(cls));
    }
}

double witness_norm_floor_sq(CanonicalClass cls, double delta) {
    switch (cls) {
        case CanonicalClass::SKW1_RANK2: return witness_b_floor(cls, delta) / (20 * std::cbrt(delta) * delta);
        case CanonicalClass::SKW1_RANK1: return witness_b_floor(cls, delta) / (20 * std::sqrt(delta) * std::pow(delta, 1.5));
        case CanonicalClass::SKW0: return witness_b_floor(cls, delta) / delta;
        default: throw UnsupportedClassError("no witness construction for class " + to_string(cls));
    }
}

MaximalRatio::MaximalRatio(const Matrix2& a, double delta, const Grid3& grid, double shear, const WitnessBox& box,
                           const std::array<int, 3>& b_points, const DilationSet& ts, bool analytic_t)
    : a_(a), grid_(grid), shear_(shear), avg_(delta), cell_w_(trapezoid_weights(grid)) {
    ts.validate();
    std::optional<WitnessSetup> setup;
    if (analytic_t) setup = witness_setup(a);
    const CanonicalClass cls = setup ? setup->cls : CanonicalClass::SKW2;
    const Lattice lat = build_lattice(box, b_points, setup && box_is_disk(cls));
    node_w_ = lat.cell;
    nodes_.reserve(lat.nodes.size());
    for (const auto& p : lat.nodes) {
        Node nd{p[0], p[1], p[2] + 0.5 * shear_ * (p[0] * p[0] + p[1] * p[1]), ts.values};
        if (setup) {
            const double t = witness_dilation(*setup, p[1], p[2]);
            if (t > 0) nd.ts.push_back(t);
        }
        nodes_.push_back(std::move(nd));
    }
}

std::array<double, 3> MaximalRatio::sample_point(std::size_t n, double t, std::size_t k) const {
    const Node& nd = nodes_[n];
    const QuadNode& q = avg_.nodes()[k];
    const auto ax = a_.apply(nd.x1, nd.x2);
    const double y1 = t * q.y1, y2 = t * q.y2;
    const double u1 = nd.x1 - y1, u2 = nd.x2 - y2;
    const double u3 = nd.x3 - (ax[0] * y1 + ax[1] * y2) - 0.5 * shear_ * (u1 * u1 + u2 * u2);
    return {u1, u2, u3};
}

double MaximalRatio::average(const std::vector<double>& g, const Node& nd, double t) const {
    const auto ax = a_.apply(nd.x1, nd.x2);
    double acc = 0.0;
    Stencil st;
    for (const QuadNode& q : avg_.nodes()) {
        const double y1 = t * q.y1, y2 = t * q.y2;
        const double u1 = nd.x1 - y1, u2 = nd.x2 - y2;
        const double u3 = nd.x3 - (ax[0] * y1 + ax[1] * y2) - 0.5 * shear_ * (u1 * u1 + u2 * u2);
        if (!stencil(grid_, u1, u2, u3, st)) continue;
        double v = 0.0;
        for_corners(grid_, st, [&](std::size_t idx, double w) { v += w * g[idx]; });
        acc += q.w * std::abs(v);
    }
    return acc / avg_.measure();
}

double MaximalRatio::field_norm_sq(const std::vector<double>& g) const {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += cell_w_[i] * g[i] * g[i];
    return s;
}

double MaximalRatio::operator()(const std::vector<double>& g) const {
    const auto n = static_cast<std::ptrdiff_t>(nodes_.size());
    std::vector<double> best(nodes_.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        for (double t : nodes_[i].ts) best[i] = std::max(best[i], average(g, nodes_[i], t));
    double acc = 0.0;
    for (double b : best) acc += b * b;
    const double d = field_norm_sq(g);
    return d > 0 ? std::sqrt(acc * node_w_ / d) : 0.0;
}

double MaximalRatio::value_and_gradient(const std::vector<double>& g, std::vector<double>& grad) const {
    const auto n = static_cast<std::ptrdiff_t>(nodes_.size());
    std::vector<double> best(nodes_.size(), 0.0), best_t(nodes_.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        for (double t : nodes_[i].ts) {
            const double v = average(g, nodes_[i], t);
            if (v > best[i]) best[i] = v, best_t[i] = t;
        }
    double num = 0.0;
    for (double b : best) num += b * b;
    num *= node_w_;
    const double den = field_norm_sq(g);
    grad.assign(g.size(), 0.0);
    if (num <= 0 || den <= 0) return 0.0;

    // d num / d g_j = 2 w sum_n avg_n d avg_n / d g_j (g >= 0 on the feasible cone)
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (best[i] <= 0) continue;
        const Node& nd = nodes_[i];
        const double t = best_t[i];
        const auto ax = a_.apply(nd.x1, nd.x2);
        const double scale = 2.0 * node_w_ * best[i] / avg_.measure();
        Stencil st;
        for (const QuadNode& q : avg_.nodes()) {
            const double y1 = t * q.y1, y2 = t * q.y2;
            const double u1 = nd.x1 - y1, u2 = nd.x2 - y2;
            const double u3 = nd.x3 - (ax[0] * y1 + ax[1] * y2) - 0.5 * shear_ * (u1 * u1 + u2 * u2);
            if (!stencil(grid_, u1, u2, u3, st)) continue;
            for_corners(grid_, st, [&](std::size_t idx, double w) { grad[idx] += scale * q.w * w; });
        }
    }
    const double ratio = std::sqrt(num / den);
    // ratio = sqrt(num/den): d ratio = ratio/2 (d num/num - d den/den)
    for (std::size_t j = 0; j < g.size(); ++j)
        grad[j] = 0.5 * ratio * (grad[j] / num - 2.0 * cell_w_[j] * g[j] / den);
    return ratio;
}

namespace {

void project_normalize(std::vector<double>& g, const MaximalRatio& obj) {
    for (double& v : g) v = std::max(v, 0.0);
    const double nrm = std::sqrt(obj.field_norm_sq(g));
    if (nrm > 0)
        for (double& v : g) v /= nrm;
}

double ascend(const MaximalRatio& obj, std::vector<double>& g, const AdversarialConfig& cfg, int iterations,
              AdversarialResult& res) {
    project_normalize(g, obj);
    std::vector<double> grad, trial(g.size());
    double cur = obj.value_and_gradient(g, grad);
    ++res.evaluations;
    double step = cfg.step;
    for (int it = 0; it < iterations; ++it) {
        double gn = 0.0;
        for (double v : grad) gn += v * v;
        gn = std::sqrt(gn);
        if (!(gn > 0)) break;
        bool accepted = false;
        for (int b = 0; b <= cfg.backtracks; ++b) {
            for (std::size_t j = 0; j < g.size(); ++j) trial[j] = g[j] + step * grad[j] / gn;
            project_normalize(trial, obj);
            const double v = obj(trial);
            ++res.evaluations;
            if (v > cur) {
                g.swap(trial);
                cur = obj.value_and_gradient(g, grad);
                ++res.evaluations;
                ++res.accepted_steps;
                accepted = true;
                step = std::min(step * 1.5, 4.0);
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    return cur;
}

}  // namespace

AdversarialResult adversarial_lower_bound_detail(const Matrix2& a, double delta, int iterations, std::uint64_t seed,
                                                 const AdversarialConfig& cfg) {
    if (iterations < 1) throw std::invalid_argument("adversarial search needs at least one iteration");
    AdversarialResult res;
    const DilationSet ts = DilationSet::geometric(cfg.t_count);

    std::optional<WitnessSetup> setup;
    try {
        setup = witness_setup(a);
    } catch (const std::invalid_argument&) {
    }

    Grid3 grid;
    WitnessBox box;
    double shear = 0.0;
    if (setup) {
        grid = witness_grid(setup->cls, delta);
        box = witness_box(setup->cls, delta);
        shear = setup->s;
    } else {
        for (int ax = 0; ax < 3; ++ax) grid.half_extent[ax] = cfg.box_half[ax];
        grid.points = cfg.generic_points;
        const auto vertical = static_cast<std::size_t>(std::ceil(2.0 * cfg.box_half[2] / (delta / 4.0) - 1e-9)) + 1;
        grid.points[2] = std::max(grid.points[2], vertical);
        box = {{-cfg.box_half[0] / 2, -cfg.box_half[1] / 2, -cfg.box_half[2] / 2},
               {cfg.box_half[0] / 2, cfg.box_half[1] / 2, cfg.box_half[2] / 2},
               false};
    }
    const MaximalRatio obj(a, delta, grid, shear, box, cfg.b_points, ts, setup.has_value());

    double best = 0.0;
    if (setup && cfg.from_witness) {
        ScalarField3 w = witness_field(setup->cls, delta, grid);
        std::vector<double> g = w.values();
        project_normalize(g, obj);
        res.witness_start = obj(g);
        best = std::max(best, ascend(obj, g, cfg, iterations, res));
        // the witness itself, scored on the finer witness lattice
        best = std::max(best, witness_lower_bound(a, delta));
    }
    for (int s = 0; s < static_cast<int>(cfg.noise_starts); ++s) {
        KeyedRng rng(seed, 0xad5e, static_cast<std::uint64_t>(s));
        std::vector<double> g(grid.size());
        for (double& v : g) v = std::abs(rng.normal());
        best = std::max(best, ascend(obj, g, cfg, iterations, res));
    }
    res.ratio = best;
    return res;
}

double adversarial_lower_bound(const Matrix2& a, double delta, int iterations, std::uint64_t seed) {
    return adversarial_lower_bound_detail(a, delta, iterations, seed).ratio;
}

std::string to_string(EstimatorMethod m) {
    switch (m) {
        case EstimatorMethod::witness: return "witness";
        case EstimatorMethod::adversarial: return "adversarial";
        default: return "both";
    }
}

EstimatorMethod parse_method(const std::string& text) {
    if (text == "witness") return EstimatorMethod::witness;
    if (text == "adversarial") return EstimatorMethod::adversarial;
    if (text == "both") return EstimatorMethod::both;
    throw std::invalid_argument("unknown estimator method '" + text + "'");
}

ScalingReport scaling_experiment(const Matrix2& a, const std::vector<double>& deltas, EstimatorMethod method,
                                 const ExperimentConfig& cfg) {
    const RankProfile prof = classify(a);
    ScalingReport r;
    r.method = to_string(method);
    r.predicted = prof.annulus_exponent.value();
    r.tolerance = cfg.tolerance;
    r.values.assign(deltas.size(), 0.0);
    for (double d : deltas) {
        if (!(d > 0 && d < 1)) throw std::invalid_argument("scaling_experiment: delta must lie in (0, 1)");
        const double j = -std::log2(d);
        if (std::abs(j - std::round(j)) > 1e-12) throw std::invalid_argument("scaling_experiment: delta must be dyadic");
    }
    // fails up front on unresolvable or unsupported inputs
    if (method == EstimatorMethod::witness) witness_setup(a);

    const auto n = static_cast<std::ptrdiff_t>(deltas.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double d = deltas[i];
        const std::uint64_t seed = KeyedRng::mix(cfg.seed ^ KeyedRng::mix(static_cast<std::uint64_t>(i) + 0x5ca1));
        switch (method) {
            case EstimatorMethod::witness: r.values[i] = witness_lower_bound(a, d, cfg.witness); break;
            case EstimatorMethod::adversarial:
            case EstimatorMethod::both: {
                AdversarialConfig ac = cfg.adversarial;
                ac.from_witness = method == EstimatorMethod::both;
                r.values[i] = adversarial_lower_bound_detail(a, d, ac.iterations, seed, ac).ratio;
                break;
            }
        }
    }
    r.scales = deltas;
    finalize_report(r, false);
    return r;
}

ContrastReport tube_circle_contrast(const std::vector<double>& deltas, std::uint64_t samples, std::uint64_t seed) {
    ContrastReport out;
    const std::pair<const char*, Matrix2> mats[] = {{"E", Matrix2::rot90()}, {"I", Matrix2::identity()}};
    std::uint64_t stream = 0;
    for (const auto& [name, a] : mats) {
        const std::pair<const char*, Matrix2> forms[] = {{"circle", skew_symmetric_part(a)}, {"tube", symmetric_part(a)}};
        for (const auto& [form, m] : forms) {
            ContrastCell c;
            c.matrix = name;
            c.form = form;
            c.form_rank = numeric_rank(m);
            c.predicted = c.form_rank ? -0.5 * c.form_rank : 0.0;
            c.report.preset = name;
            c.report.method = std::string("sublevel-") + form;
            c.report.predicted = c.predicted;
            c.report.tolerance = 0.05;
            c.report.scales = deltas;
            for (double d : deltas)
                c.report.values.push_back(sublevel_measure(m, d, samples, KeyedRng::mix(seed + ++stream)).measure);
            finalize_report(c.report, false);
            out.cells.push_back(std::move(c));
        }
    }
    out.swapped = out.cells.size() == 4 && out.cells[0].form_rank == out.cells[3].form_rank &&
                  out.cells[1].form_rank == out.cells[2].form_rank && out.cells[0].form_rank != out.cells[1].form_rank;
    return out;
}

}  // namespace vp
