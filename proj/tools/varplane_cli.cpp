#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "varplane/cli_runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"varplane: maximal averages along variable hyperplanes, numerical experiments"};
    app.allow_extras(false);

    std::string positional, command, matrix, deltas, jrange, out, method, config_file;
    std::uint64_t samples = 0, seed = 0;
    std::size_t grid = 0;
    double tolerance = 0, memory = 0, pair_budget = 0;
    int t_count = 0, theta_count = 0;

    app.add_option("action", positional, "classify | scaling | oscillatory | sublevel | hessian | fold | contrast | all | run");
    auto* o_cmd = app.add_option("--command", command, "experiment to run (with the 'run' action)");
    auto* o_preset = app.add_option("--preset,--matrix", matrix, "E, I, Ic:<c>, NIL:<c>, SYM:<c> or \"a11,a12,a21,a22\"");
    auto* o_deltas = app.add_option("--deltas", deltas, "delta = 2^-j for j in jmin..jmax");
    auto* o_jrange = app.add_option("--jrange", jrange, "lambda = 2^j for j in jmin..jmax");
    auto* o_samples = app.add_option("--samples", samples, "Monte Carlo samples per point");
    auto* o_seed = app.add_option("--seed", seed, "master seed");
    auto* o_grid = app.add_option("--grid", grid, "grid cap, points per axis");
    auto* o_out = app.add_option("--out", out, "output directory");
    auto* o_tol = app.add_option("--tolerance", tolerance, "slope tolerance override");
    auto* o_method = app.add_option("--method", method, "witness | adversarial | both");
    auto* o_t = app.add_option("--t-count", t_count, "dilations in the maximal function");
    auto* o_theta = app.add_option("--theta-count", theta_count, "rotations in the Nikodym maximal function");
    auto* o_mem = app.add_option("--memory-gib", memory, "memory budget in GiB");
    auto* o_pairs = app.add_option("--pair-budget", pair_budget, "skip oscillatory points above this many kernel pairs");
    app.add_option("--config", config_file, "key = value file; flags override it");

    CLI11_PARSE(app, argc, argv);

    vp::JobConfig file_cfg, flags;
    try {
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw std::invalid_argument("config: cannot open " + config_file);
            std::stringstream ss;
            ss << in.rdbuf();
            file_cfg = vp::parse_config_text(ss.str());
        }
        if (!positional.empty() && positional != "run") flags.command = vp::parse_command(positional);
        if (*o_cmd) flags.command = vp::parse_command(command);
        if (*o_preset) flags.matrix = matrix;
        std::string text;
        if (*o_deltas) text += "deltas = " + deltas + "\n";
        if (*o_jrange) text += "jrange = " + jrange + "\n";
        if (!text.empty()) {
            const vp::JobConfig ranges = vp::parse_config_text(text);
            flags.delta_jmin = ranges.delta_jmin, flags.delta_jmax = ranges.delta_jmax;
            flags.jmin = ranges.jmin, flags.jmax = ranges.jmax;
        }
        if (*o_samples) flags.samples = samples;
        if (*o_seed) flags.seed = seed;
        if (*o_grid) flags.grid = grid;
        if (*o_out) flags.out = out;
        if (*o_tol) flags.tolerance = tolerance;
        if (*o_method) flags.method = method;
        if (*o_t) flags.t_count = t_count;
        if (*o_theta) flags.theta_count = theta_count;
        if (*o_mem) flags.memory_gib = memory;
        if (*o_pairs) flags.pair_budget = pair_budget;
    } catch (const std::exception& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    const vp::ValidationResult v = vp::validate(vp::merge(file_cfg, flags));
    if (!v.ok()) {
        for (const auto& e : v.errors) std::cerr << "usage error: " << e << "\n";
        return 2;
    }
    try {
        return vp::run(*v.config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
