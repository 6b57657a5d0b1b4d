#include "varplane/cli_runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "varplane/field_grid.hpp"
#include "varplane/oscillatory_lab.hpp"
#include "varplane/rng.hpp"
#include "varplane/scaling_estimator.hpp"

namespace vp {

using json = nlohmann::ordered_json;

std::string to_string(Command c) {
    switch (c) {
        case Command::classify: return "classify";
        case Command::scaling: return "scaling";
        case Command::oscillatory: return "oscillatory";
        case Command::sublevel: return "sublevel";
        case Command::hessian: return "hessian";
        case Command::fold: return "fold";
        case Command::contrast: return "contrast";
        default: return "all";
    }
}

Command parse_command(const std::string& text) {
    for (Command c : {Command::classify, Command::scaling, Command::oscillatory, Command::sublevel, Command::hessian,
                      Command::fold, Command::contrast, Command::all})
        if (to_string(c) == text) return c;
    throw std::invalid_argument("unknown command '" + text + "'");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

// "2..6" or "2-6" or a single "4"
std::pair<int, int> parse_range(const std::string& field, const std::string& text) {
    std::string t = trim(text);
    auto sep = t.find("..");
    std::size_t skip = 2;
    if (sep == std::string::npos) {
        sep = t.find('-', 1);
        skip = 1;
    }
    try {
        if (sep == std::string::npos) {
            const int v = std::stoi(t);
            return {v, v};
        }
        return {std::stoi(t.substr(0, sep)), std::stoi(t.substr(sep + skip))};
    } catch (const std::exception&) {
        throw std::invalid_argument(field + ": expected a range like 2..6, got '" + text + "'");
    }
}

template <class T>
T parse_number(const std::string& field, const std::string& text) {
    std::istringstream in(trim(text));
    T v{};
    if (!(in >> v)) throw std::invalid_argument(field + ": expected a number, got '" + text + "'");
    std::string rest;
    if (in >> rest) throw std::invalid_argument(field + ": trailing characters in '" + text + "'");
    return v;
}

void assign_key(JobConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "command") cfg.command = parse_command(value);
    else if (key == "preset" || key == "matrix") cfg.matrix = value;
    else if (key == "deltas") {
        const auto [a, b] = parse_range("deltas", value);
        cfg.delta_jmin = a, cfg.delta_jmax = b;
    } else if (key == "jrange") {
        const auto [a, b] = parse_range("jrange", value);
        cfg.jmin = a, cfg.jmax = b;
    } else if (key == "samples") cfg.samples = parse_number<std::uint64_t>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "grid") cfg.grid = parse_number<std::size_t>(key, value);
    else if (key == "out") cfg.out = value;
    else if (key == "tolerance") cfg.tolerance = parse_number<double>(key, value);
    else if (key == "method") cfg.method = value;
    else if (key == "t_count") cfg.t_count = parse_number<int>(key, value);
    else if (key == "theta_count") cfg.theta_count = parse_number<int>(key, value);
    else if (key == "memory_gib") cfg.memory_gib = parse_number<double>(key, value);
    else if (key == "pair_budget") cfg.pair_budget = parse_number<double>(key, value);
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

template <class T>
void take(std::optional<T>& dst, const std::optional<T>& src) {
    if (src) dst = src;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json report_json(const ScalingReport& r) {
    json j;
    j["preset"] = r.preset;
    j["method"] = r.method;
    j["anchor"] = r.anchor;
    j["scales"] = r.scales;
    j["values"] = r.values;
    j["skipped"] = r.skipped;
    j["slope"] = std::isfinite(r.slope) ? json(r.slope) : json(nullptr);
    j["stderr"] = std::isfinite(r.stderr_) ? json(r.stderr_) : json(nullptr);
    j["predicted"] = r.predicted;
    j["tolerance"] = r.tolerance;
    j["verdict"] = to_string(r.verdict);
    return j;
}

std::string slug(const std::string& s) {
    std::string out;
    for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

std::string two_column(const std::vector<double>& x, const std::vector<double>& y, const std::string& head) {
    std::string s = "# " + head + "\n";
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) s += fmt_full(x[i]) + " " + fmt_full(y[i]) + "\n";
    return s;
}

class Runner {
public:
    explicit Runner(const NormalizedConfig& cfg) : cfg_(cfg), a_(cfg.matrix), name_(slug(cfg.matrix_text)) {}

    RunResult go() {
        res_.report["config"] = config_json();
        const Command c = cfg_.command;
        const bool all = c == Command::all;
        if (all || c == Command::classify) classify_job();
        if (all || c == Command::hessian) hessian_job();
        if (all || c == Command::fold) fold_job();
        if (all || c == Command::sublevel) sublevel_job();
        if (all || c == Command::contrast) contrast_job();
        if (all || c == Command::scaling) scaling_job();
        if (all || c == Command::oscillatory) oscillatory_job();
        finish();
        return std::move(res_);
    }

private:
    json config_json() const {
        json j;
        j["command"] = to_string(cfg_.command);
        j["matrix"] = cfg_.matrix_text;
        j["entries"] = {a_.a11, a_.a12, a_.a21, a_.a22};
        j["deltas"] = {cfg_.delta_jmin, cfg_.delta_jmax};
        j["jrange"] = {cfg_.jmin, cfg_.jmax};
        j["samples"] = cfg_.samples;
        j["seed"] = cfg_.seed;
        j["grid"] = cfg_.grid;
        j["method"] = cfg_.method;
        j["t_count"] = cfg_.t_count;
        j["theta_count"] = cfg_.theta_count;
        j["memory_gib"] = cfg_.memory_gib;
        j["pair_budget"] = cfg_.pair_budget;
        if (cfg_.tolerance) j["tolerance"] = *cfg_.tolerance;
        return j;
    }

    std::uint64_t seed_for(std::uint64_t experiment) const {
        return KeyedRng::mix(cfg_.seed ^ KeyedRng::mix(experiment * 0x9e3779b97f4a7c15ULL + 1));
    }

    void row(const std::string& exp, const std::string& check, const std::string& tag, const std::string& measured,
             const std::string& predicted, std::optional<Verdict> v) {
        res_.rows.push_back({exp, check, tag, measured, predicted, v});
    }

    static Verdict pass(bool ok) { return ok ? Verdict::CONSISTENT : Verdict::INCONSISTENT; }

    void classify_job() {
        const RankProfile p = classify(a_);
        json j;
        j["rank"] = p.rank;
        j["rank_sym"] = p.rank_sym;
        j["rank_skw"] = p.rank_skw;
        j["canonical_class"] = to_string(p.canonical_class);
        j["annulus_exponent"] = p.annulus_exponent.str();
        j["nikodym_exponent"] = p.nikodym_exponent.str();
        j["complex_eigenvalues"] = p.eigen.complex_pair;
        res_.report["classify"] = j;
        header_ += "rank_skw=" + std::to_string(p.rank_skw) + " rank_sym=" + std::to_string(p.rank_sym) +
                   " class=" + to_string(p.canonical_class) + " annulus exponent " + p.annulus_exponent.str() +
                   " nikodym exponent " + p.nikodym_exponent.str() + "\n\n";
        const std::string tag = "rank-profile";
        row("classify", "rank_skw", tag, std::to_string(p.rank_skw), "", std::nullopt);
        row("classify", "rank_sym", tag, std::to_string(p.rank_sym), "", std::nullopt);
        row("classify", "annulus exponent", "annulus-exponent-table", p.annulus_exponent.str(), "", std::nullopt);
        row("classify", "nikodym exponent", "nikodym-exponent-table", p.nikodym_exponent.str(), "", std::nullopt);

        // class and exponents survive orthogonal conjugation
        KeyedRng rng(cfg_.seed, 1);
        int mismatches = 0;
        for (int i = 0; i < 100; ++i) {
            const Matrix2 q = Matrix2::rotation(rng.uniform(0, 2 * std::numbers::pi));
            const RankProfile pq = classify(orthogonal_conjugate(a_, q));
            if (pq.canonical_class != p.canonical_class || !(pq.annulus_exponent == p.annulus_exponent) ||
                !(pq.nikodym_exponent == p.nikodym_exponent))
                ++mismatches;
        }
        row("classify", "conjugation invariance (100 rotations)", "orthogonal-conjugation", std::to_string(mismatches),
            "0", pass(mismatches == 0));
    }

    void hessian_job() {
        KeyedRng rng(seed_for(2));
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double r = rng.uniform(0.5, 2.0), th = rng.uniform(0, 2 * std::numbers::pi);
            const double t = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 2.0);
            const double b1 = r * std::cos(th), b2 = r * std::sin(th);
            const HessianReport h = mixed_hessian(a_, b1, b2, t), f = mixed_hessian_fd(a_, b1, b2, t);
            const double scale = std::max(1.0, h.hessian.norm());
            double e = (h.hessian - f.hessian).norm() / scale;
            e = std::max({e, std::abs(h.det_x1x2 - f.det_x1x2) / (scale * scale),
                          std::abs(h.det_x1t - f.det_x1t) / (scale * scale),
                          std::abs(h.det_x2t - f.det_x2t) / (scale * scale)});
            worst = std::max(worst, e);
        }
        res_.report["hessian"] = {{"max_relative_error", worst}, {"samples", 100}};
        row("hessian", "closed form vs finite differences", "mixed-hessian-determinants", fmt(worst), "<= 1e-6",
            pass(worst <= 1e-6));
        if (a_ == Matrix2::rot90()) {
            const HessianReport h = mixed_hessian(a_, 0.6, 0.8, 1.3);
            row("hessian", "det at A=E", "heisenberg-determinant", fmt(h.det_x1x2), "1",
                pass(std::abs(h.det_x1x2 - 1.0) <= 1e-12));
        }
        if (a_.a11 == 0 && a_.a22 == 0 && a_.a12 == a_.a21 && a_.a12 != 0) {
            const double c = a_.a12;
            double worst_det = 0.0;
            for (double b1 : {1.0, -1.0})
                for (double b2 : {1.0, -1.0}) {
                    const double t = std::sqrt(2.0) * c * ((b2 / b1) > 0 ? 1.0 : -1.0);
                    const HessianReport h = mixed_hessian(a_, b1, b2, t);
                    worst_det = std::max({worst_det, std::abs(h.det_x1x2), std::abs(h.det_x1t), std::abs(h.det_x2t)});
                }
            row("hessian", "symmetric degenerate point", "symmetric-degenerate-point", fmt(worst_det), "< 1e-10",
                pass(worst_det < 1e-10));
        }
    }

    void fold_job() {
        const FoldReport f = fold_check(a_, 0.0, 1.0, -1.0);
        json j;
        j["singular"] = f.singular;
        j["two_sided_fold"] = f.two_sided_fold;
        j["degenerate"] = f.degenerate;
        j["sigma_min"] = f.sigma_min;
        j["right_kernel"] = f.right_kernel;
        j["left_kernel"] = f.left_kernel;
        j["dv_det_scaled"] = std::isfinite(f.dv_det_scaled) ? json(f.dv_det_scaled) : json(nullptr);
        j["du_det_scaled"] = std::isfinite(f.du_det_scaled) ? json(f.du_det_scaled) : json(nullptr);
        res_.report["fold"] = j;
        const bool ic_shape = a_.a21 == 0 && a_.a11 == 1 && a_.a22 == 1 && a_.a12 != 0;
        if (!ic_shape) {
            row("fold", "two-sided fold at b=(0,1), t=-1", "fold-condition", f.two_sided_fold ? "yes" : "no", "",
                std::nullopt);
            return;
        }
        const double c = a_.a12, t = -1.0;
        const double nu = std::hypot(1.0, c);
        const double kv = std::hypot(f.right_kernel[0] - 1.0, f.right_kernel[1]);
        const double ku = std::hypot(f.left_kernel[0] + 1.0 / nu, f.left_kernel[1] - c / nu);
        const double dv_pred = c * t, du_pred = -2.0 * c * t;
        const bool ok = f.two_sided_fold && kv <= 1e-3 && ku <= 1e-3 &&
                        std::abs(f.dv_det_scaled - dv_pred) <= 0.05 * std::abs(dv_pred) &&
                        std::abs(f.du_det_scaled - du_pred) <= 0.05 * std::abs(du_pred);
        row("fold", "two-sided fold at b=(0,1), t=-1", "explicit-fold",
            "kernel err " + fmt(std::max(kv, ku)) + ", dv " + fmt(f.dv_det_scaled) + ", du " + fmt(f.du_det_scaled),
            "dv " + fmt(dv_pred) + ", du " + fmt(du_pred), pass(ok));
    }

    void sublevel_job() {
        const Matrix2 m = skew_symmetric_part(a_);
        const int rank = numeric_rank(m);
        ScalingReport r;
        r.preset = cfg_.matrix_text;
        r.method = "sublevel-circle";
        r.anchor = "sublevel-rank-criterion";
        r.predicted = rank ? -0.5 * rank : 0.0;
        r.tolerance = cfg_.tolerance.value_or(rank == 0 ? 0.02 : 0.05);
        std::string csv = "lambda,measure,stderr,grid_oracle,z\n";
        double worst_z = 0.0;
        for (int j = 4; j <= 12; ++j) {
            const double lam = std::ldexp(1.0, j);
            const SublevelEstimate e = sublevel_measure(m, 1.0 / lam, cfg_.samples, seed_for(100 + j));
            const double g = sublevel_grid_measure(m, 1.0 / lam);
            const double z = sublevel_z(e, g);
            worst_z = std::max(worst_z, z);
            r.scales.push_back(lam);
            r.values.push_back(e.measure);
            csv += fmt_full(lam) + "," + fmt_full(e.measure) + "," + fmt_full(e.stderr_) + "," + fmt_full(g) + "," +
                   fmt_full(z) + "\n";
        }
        finalize_report(r, true);
        res_.report["sublevel"] = report_json(r);
        res_.report["sublevel"]["max_z_vs_grid"] = worst_z;
        res_.csv["sublevel_" + name_ + ".csv"] = csv;
        res_.dat["sublevel_" + name_ + ".dat"] = two_column(r.scales, r.values, "lambda measure");
        row("sublevel", "measure slope over lambda=2^4..2^12", r.anchor, fmt(r.slope), fmt(r.predicted), r.verdict);
        row("sublevel", "Monte Carlo vs grid oracle", "sublevel-grid-oracle", "max z " + fmt(worst_z), "<= 3",
            pass(worst_z <= 3.0));
    }

    void contrast_job() {
        std::vector<double> th;
        for (int j = 4; j <= 12; ++j) th.push_back(std::ldexp(1.0, -j));
        const ContrastReport c = tube_circle_contrast(th, cfg_.samples, seed_for(3));
        json cells = json::array();
        std::string csv = "matrix,form,form_rank,slope,stderr,predicted,verdict\n";
        for (const ContrastCell& cell : c.cells) {
            json jc = report_json(cell.report);
            jc["matrix"] = cell.matrix;
            jc["form"] = cell.form;
            jc["form_rank"] = cell.form_rank;
            cells.push_back(jc);
            csv += cell.matrix + "," + cell.form + "," + std::to_string(cell.form_rank) + "," +
                   fmt_full(cell.report.slope) + "," + fmt_full(cell.report.stderr_) + "," + fmt_full(cell.predicted) +
                   "," + to_string(cell.report.verdict) + "\n";
            row("contrast", cell.matrix + " " + cell.form + " form slope", "tube-circle-contrast",
                fmt(cell.report.slope), fmt(cell.predicted), cell.report.verdict);
        }
        res_.report["contrast"] = {{"cells", cells}, {"swapped", c.swapped}};
        res_.csv["contrast.csv"] = csv;
        row("contrast", "E and I rows swap between forms", "tube-circle-contrast", c.swapped ? "yes" : "no", "yes",
            pass(c.swapped));
    }

    void scaling_job() {
        std::vector<double> deltas;
        for (int j = cfg_.delta_jmin; j <= cfg_.delta_jmax; ++j) deltas.push_back(std::ldexp(1.0, -j));
        EstimatorMethod method = parse_method(cfg_.method);
        const RankProfile p = classify(a_);
        const bool has_witness =
            p.canonical_class != CanonicalClass::SKW2 && p.canonical_class != CanonicalClass::ZERO;
        std::string note;
        if (!has_witness && method != EstimatorMethod::adversarial) {
            method = EstimatorMethod::adversarial;
            note = "class has no witness construction; adversarial search only";
        }
        ExperimentConfig ec;
        ec.seed = seed_for(4);
        ec.tolerance = cfg_.tolerance.value_or(0.08);
        ec.adversarial.t_count = std::min(cfg_.t_count, 16);
        ScalingReport r;
        std::vector<WitnessResult> details;
        if (method == EstimatorMethod::witness) {
            r.method = to_string(method);
            r.predicted = p.annulus_exponent.value();
            r.tolerance = ec.tolerance;
            r.scales = deltas;
            for (double d : deltas) {
                details.push_back(witness_lower_bound_detail(a_, d, ec.witness));
                r.values.push_back(details.back().value);
            }
            finalize_report(r, false);
        } else {
            r = scaling_experiment(a_, deltas, method, ec);
        }
        r.preset = cfg_.matrix_text;
        r.anchor = "annulus-maximal-lower-bound";
        json j = report_json(r);
        if (!note.empty()) j["note"] = note;

        std::string csv = "delta,value\n";
        for (std::size_t i = 0; i < r.scales.size(); ++i) csv += fmt_full(r.scales[i]) + "," + fmt_full(r.values[i]) + "\n";
        if (!details.empty()) {
            json floors = json::array();
            csv = "delta,value,b_integral_unnormalized,b_floor\n";
            for (std::size_t i = 0; i < deltas.size(); ++i) {
                const double d = deltas[i];
                // the floor is stated for averages normalized by 1/delta instead of 1/(2 pi delta)
                const double unnorm = 4.0 * std::numbers::pi * std::numbers::pi * details[i].b_integral;
                const double fl = witness_b_floor(p.canonical_class, d);
                floors.push_back({{"delta", d}, {"b_integral_unnormalized", unnorm}, {"b_floor", fl}});
                csv += fmt_full(d) + "," + fmt_full(details[i].value) + "," + fmt_full(unnorm) + "," + fmt_full(fl) + "\n";
                row("scaling", "witness floor at delta=" + fmt(d), "witness-floor", fmt(unnorm), ">= " + fmt(0.5 * fl),
                    pass(unnorm >= 0.5 * fl));
            }
            j["floors"] = floors;
        }
        res_.report["scaling"] = j;
        res_.csv["scaling_" + name_ + ".csv"] = csv;
        res_.dat["scaling_" + name_ + ".dat"] = two_column(r.scales, r.values, "delta lower_bound");
        row("scaling", to_string(method) + " exponent over delta=2^-" + std::to_string(cfg_.delta_jmin) + "..2^-" +
                           std::to_string(cfg_.delta_jmax),
            r.anchor, fmt(r.slope), fmt(r.predicted), r.verdict);
    }

    void oscillatory_job() {
        const double tol = cfg_.tolerance.value_or(0.1);
        LambdaSweep s = lambda_sweep(a_, cfg_.jmin, cfg_.jmax, tol, seed_for(5), cfg_.pair_budget);
        s.report.preset = cfg_.matrix_text;
        s.report.anchor = "oscillatory-operator-growth";
        json j = report_json(s.report);
        json pts = json::array();
        std::string csv = "j,lambda,norm,iterations,residual,converged\n";
        for (const SweepPoint& p : s.points) {
            pts.push_back({{"j", p.j},
                           {"lambda", p.lambda},
                           {"norm", p.result.norm},
                           {"iterations", p.result.iterations},
                           {"residual", p.result.residual},
                           {"converged", p.result.converged}});
            csv += std::to_string(p.j) + "," + fmt_full(p.lambda) + "," + fmt_full(p.result.norm) + "," +
                   std::to_string(p.result.iterations) + "," + fmt_full(p.result.residual) + "," +
                   (p.result.converged ? "1" : "0") + "\n";
        }
        j["points"] = pts;
        res_.report["oscillatory"] = j;
        res_.csv["oscillatory_" + name_ + ".csv"] = csv;
        res_.dat["oscillatory_" + name_ + ".dat"] = two_column(s.report.scales, s.report.values, "lambda opnorm");
        std::string measured = s.report.values.size() >= 3 ? fmt(s.report.slope) : "n/a";
        if (!s.report.skipped.empty()) measured += " (" + std::to_string(s.report.skipped.size()) + " j over budget)";
        row("oscillatory", "opnorm slope over j=" + std::to_string(cfg_.jmin) + ".." + std::to_string(cfg_.jmax),
            s.report.anchor, measured, fmt(s.report.predicted), s.report.verdict);

        const int rank_skw = classify(a_).rank_skw;
        if (rank_skw == 1) return;
        ScalingReport rows;
        rows.preset = cfg_.matrix_text;
        rows.method = "kernel-row-sum";
        rows.anchor = "schur-row-sums";
        rows.predicted = rank_skw == 2 ? 0.0 : 1.0;
        rows.tolerance = 0.15;
        std::string rcsv = "j,lambda,mean_row_sum\n";
        const int jtop = std::min(cfg_.jmax, 6);
        for (int jj = cfg_.jmin; jj <= jtop; ++jj) {
            KernelRowConfig kc;
            kc.lambda = std::ldexp(1.0, jj);
            double sum = 0.0;
            constexpr int kEta = 4;
            for (int k = 0; k < kEta; ++k) {
                const double ang = 2.0 * std::numbers::pi * k / kEta + 0.3;
                sum += kernel_Psi_circle(a_, 0.5 * std::cos(ang), 0.5 * std::sin(ang), kc).row_sum;
            }
            rows.scales.push_back(kc.lambda);
            rows.values.push_back(sum / kEta);
            rcsv += std::to_string(jj) + "," + fmt_full(kc.lambda) + "," + fmt_full(sum / kEta) + "\n";
        }
        finalize_report(rows, true);
        res_.report["kernel_rows"] = report_json(rows);
        res_.csv["kernel_rows_" + name_ + ".csv"] = rcsv;
        res_.dat["kernel_rows_" + name_ + ".dat"] = two_column(rows.scales, rows.values, "lambda mean_row_sum");
        row("oscillatory", "kernel row-sum slope", rows.anchor, rows.values.size() >= 3 ? fmt(rows.slope) : "n/a",
            fmt(rows.predicted), rows.verdict);
    }

    void finish() {
        json checks = json::array();
        bool all_ok = true;
        std::ostringstream sum;
        sum << "varplane run: command=" << to_string(cfg_.command) << " matrix=" << cfg_.matrix_text
            << " seed=" << cfg_.seed << "\n\n"
            << header_;
        for (const CheckRow& r : res_.rows) {
            json c;
            c["experiment"] = r.experiment;
            c["check"] = r.check;
            c["tag"] = r.tag;
            c["measured"] = r.measured;
            c["predicted"] = r.predicted;
            c["verdict"] = r.verdict ? json(to_string(*r.verdict)) : json("OBSERVATION");
            checks.push_back(c);
            if (r.verdict && *r.verdict != Verdict::CONSISTENT) all_ok = false;
            sum << "[" << (r.verdict ? to_string(*r.verdict) : std::string("OBSERVATION")) << "] " << r.experiment
                << ": " << r.check << " {" << r.tag << "} measured " << r.measured;
            if (!r.predicted.empty()) sum << ", predicted " << r.predicted;
            sum << "\n";
        }
        res_.report["checks"] = checks;
        res_.report["all_consistent"] = all_ok;
        sum << "\n" << (all_ok ? "all checks CONSISTENT" : "some checks not CONSISTENT") << "\n";
        res_.summary = sum.str();
        res_.exit_code = all_ok ? 0 : 1;
    }

    const NormalizedConfig& cfg_;
    Matrix2 a_;
    std::string name_;
    std::string header_;
    RunResult res_;
};

}  // namespace

JobConfig parse_config_text(const std::string& text) {
    JobConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty() || line.front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        assign_key(cfg, trim(line.substr(0, eq)), unquote(trim(line.substr(eq + 1))));
    }
    return cfg;
}

JobConfig merge(const JobConfig& base, const JobConfig& o) {
    JobConfig r = base;
    take(r.command, o.command);
    take(r.matrix, o.matrix);
    take(r.delta_jmin, o.delta_jmin);
    take(r.delta_jmax, o.delta_jmax);
    take(r.jmin, o.jmin);
    take(r.jmax, o.jmax);
    take(r.samples, o.samples);
    take(r.seed, o.seed);
    take(r.grid, o.grid);
    take(r.out, o.out);
    take(r.tolerance, o.tolerance);
    take(r.method, o.method);
    take(r.t_count, o.t_count);
    take(r.theta_count, o.theta_count);
    take(r.memory_gib, o.memory_gib);
    take(r.pair_budget, o.pair_budget);
    return r;
}

std::size_t required_grid_points(double delta) {
    return static_cast<std::size_t>(std::ceil(2.0 / (delta / 4.0) - 1e-9)) + 1;
}

ValidationResult validate(const JobConfig& in) {
    ValidationResult vr;
    NormalizedConfig c;
    auto& err = vr.errors;
    if (in.command) c.command = *in.command;
    if (in.matrix) c.matrix_text = *in.matrix;
    try {
        c.matrix = parse_matrix(c.matrix_text);
        if (c.matrix == Matrix2{}) err.push_back("matrix: the zero matrix has no variable plane to test");
    } catch (const std::exception& e) {
        err.push_back(std::string("matrix: ") + e.what());
    }
    if (in.delta_jmin) c.delta_jmin = *in.delta_jmin;
    if (in.delta_jmax) c.delta_jmax = *in.delta_jmax;
    if (in.jmin) c.jmin = *in.jmin;
    if (in.jmax) c.jmax = *in.jmax;
    if (c.delta_jmin < 1 || c.delta_jmax < c.delta_jmin) err.push_back("deltas: need 1 <= jmin <= jmax");
    if (c.jmin < 1 || c.jmax < c.jmin) err.push_back("jrange: need 1 <= jmin <= jmax");
    if (in.samples) c.samples = *in.samples;
    if (c.samples < 1000) err.push_back("samples: need at least 1000");
    if (in.seed) c.seed = *in.seed;
    if (in.out) c.out = *in.out;
    if (c.out.empty()) err.push_back("out: empty output directory");
    if (in.tolerance) {
        c.tolerance = *in.tolerance;
        if (!(*c.tolerance > 0)) err.push_back("tolerance: must be positive");
    }
    if (in.method) c.method = *in.method;
    try {
        parse_method(c.method);
    } catch (const std::exception& e) {
        err.push_back(std::string("method: ") + e.what());
    }
    if (in.t_count) c.t_count = *in.t_count;
    if (in.theta_count) c.theta_count = *in.theta_count;
    if (c.t_count < 1) err.push_back("t_count: need at least one dilation");
    if (c.theta_count < 1) err.push_back("theta_count: need at least one rotation");
    if (in.memory_gib) c.memory_gib = *in.memory_gib;
    if (!(c.memory_gib > 0)) err.push_back("memory_gib: must be positive");
    if (in.pair_budget) c.pair_budget = *in.pair_budget;
    if (!(c.pair_budget > 0)) err.push_back("pair_budget: must be positive");

    // grid cap: explicit, or the cube that fits one double field in the budget
    const double budget_bytes = c.memory_gib * 1024.0 * 1024.0 * 1024.0;
    c.grid = in.grid ? *in.grid : static_cast<std::size_t>(std::cbrt(budget_bytes / sizeof(double)));
    if (c.grid < 2) err.push_back("grid: need at least 2 points per axis");

    if (err.empty()) {
        const double finest = std::ldexp(1.0, -c.delta_jmax);
        const std::size_t need = required_grid_points(finest);
        if (need > c.grid)
            err.push_back("deltas: delta=2^-" + std::to_string(c.delta_jmax) + " needs spacing delta/4, i.e. at least " +
                          std::to_string(need) + " points per axis, but the grid cap is " + std::to_string(c.grid));
        // witness fields are allocated per delta; refuse before allocating
        const RankProfile p = classify(c.matrix);
        if (p.canonical_class != CanonicalClass::SKW2 && p.canonical_class != CanonicalClass::ZERO) {
            const Grid3 g = witness_grid(p.canonical_class, finest);
            const double bytes = static_cast<double>(g.size()) * sizeof(double);
            if (bytes > budget_bytes)
                err.push_back("deltas: witness grid " + std::to_string(g.points[0]) + "x" + std::to_string(g.points[1]) +
                              "x" + std::to_string(g.points[2]) + " exceeds the memory budget");
            for (int ax = 0; ax < 3; ++ax)
                if (g.points[ax] > c.grid)
                    err.push_back("deltas: witness grid needs " + std::to_string(g.points[ax]) + " points on axis " +
                                  std::to_string(ax) + ", above the grid cap " + std::to_string(c.grid));
        }
    }
    if (err.empty()) vr.config = c;
    return vr;
}

RunResult execute(const NormalizedConfig& cfg) { return Runner(cfg).go(); }

int run(const NormalizedConfig& cfg) {
    RunResult r = execute(cfg);
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream f(fs::path(cfg.out) / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (fs::path(cfg.out) / name).string());
        f << text;
    };
    write("report.json", r.report.dump(2) + "\n");
    write("summary.txt", r.summary);
    for (const auto& [name, text] : r.csv) write(name, text);
    for (const auto& [name, text] : r.dat) write(name, text);
    std::cout << r.summary;
    return r.exit_code;
}

}  // namespace vp
