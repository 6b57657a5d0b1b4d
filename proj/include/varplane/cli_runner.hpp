#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "varplane/fit.hpp"
#include "varplane/matrix_classify.hpp"

namespace vp {

enum class Command { classify, scaling, oscillatory, sublevel, hessian, fold, contrast, all };
std::string to_string(Command c);
Command parse_command(const std::string& text);

struct JobConfig {
    std::optional<Command> command;
    std::optional<std::string> matrix;          // preset name or four entries
    std::optional<int> delta_jmin, delta_jmax;  // delta = 2^-j
    std::optional<int> jmin, jmax;              // lambda = 2^j
    std::optional<std::uint64_t> samples;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> grid;            // points per axis cap
    std::optional<std::string> out;
    std::optional<double> tolerance;
    std::optional<std::string> method;
    std::optional<int> t_count;
    std::optional<int> theta_count;
    std::optional<double> memory_gib;
    std::optional<double> pair_budget;
};

struct NormalizedConfig {
    Command command = Command::all;
    std::string matrix_text = "Ic:1";
    Matrix2 matrix;
    int delta_jmin = 2, delta_jmax = 6;
    int jmin = 3, jmax = 7;
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 0;
    std::size_t grid = 0;
    std::string out = "varplane_out";
    std::optional<double> tolerance;
    std::string method = "witness";
    int t_count = 64;
    int theta_count = 64;
    double memory_gib = 8.0;
    double pair_budget = 4e9;
};

struct ValidationResult {
    std::optional<NormalizedConfig> config;
    std::vector<std::string> errors;   // "field: message"
    bool ok() const { return errors.empty(); }
};

// "key = value" lines; '#' starts a comment, [sections] are ignored
JobConfig parse_config_text(const std::string& text);
JobConfig merge(const JobConfig& base, const JobConfig& overrides);
ValidationResult validate(const JobConfig& cfg);

// points per axis on a unit half-extent axis for spacing delta / 4
std::size_t required_grid_points(double delta);

struct CheckRow {
    std::string experiment;
    std::string check;
    std::string tag;          // stable anchor naming the identity or bound being exercised
    std::string measured;
    std::string predicted;
    std::optional<Verdict> verdict;   // empty for observations
};

struct RunResult {
    std::vector<CheckRow> rows;
    nlohmann::ordered_json report;
    std::map<std::string, std::string> csv;   // file name -> contents
    std::map<std::string, std::string> dat;
    std::string summary;
    int exit_code = 0;
};

RunResult execute(const NormalizedConfig& cfg);
// executes and writes report.json, summary.txt and the per-sweep tables under cfg.out
int run(const NormalizedConfig& cfg);

}  // namespace vp
