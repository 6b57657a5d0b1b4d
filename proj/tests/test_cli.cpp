#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "varplane/cli_runner.hpp"

using namespace vp;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

bool mentions(const std::vector<std::string>& errs, const std::string& what) {
    for (const auto& e : errs)
        if (e.find(what) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("defaults") {
    const ValidationResult v = validate({});
    REQUIRE(v.ok());
    const NormalizedConfig& c = *v.config;
    CHECK(c.command == Command::all);
    CHECK(c.delta_jmin == 2);
    CHECK(c.delta_jmax == 6);
    CHECK(c.jmin == 3);
    CHECK(c.jmax == 7);
    CHECK(c.seed == 0);
    CHECK(c.grid == 1024);
    CHECK(c.memory_gib == 8.0);
}

TEST_CASE("rejections") {
    JobConfig fine;
    fine.delta_jmin = 2;
    fine.delta_jmax = 10;
    fine.grid = 128;
    const ValidationResult v = validate(fine);
    REQUIRE_FALSE(v.ok());
    CHECK(mentions(v.errors, std::to_string(required_grid_points(std::ldexp(1.0, -10)))));
    CHECK(required_grid_points(std::ldexp(1.0, -10)) == 8193);

    for (const char* bad : {"Ic:0", "NIL:0", "SYM:0", "Q:1", "1,2,3"}) {
        JobConfig c;
        c.matrix = bad;
        CHECK_FALSE(validate(c).ok());
    }
    JobConfig range;
    range.jmin = 5;
    range.jmax = 3;
    CHECK(mentions(validate(range).errors, "jrange"));
    JobConfig method;
    method.method = "guess";
    CHECK(mentions(validate(method).errors, "method"));
}

TEST_CASE("config text and overrides") {
    const JobConfig f = parse_config_text("# sweep\n[job]\ncommand = scaling\npreset = \"I\"\ndeltas = 2..5\nseed = 9 # master\n");
    CHECK(f.command == Command::scaling);
    CHECK(f.matrix == "I");
    CHECK(f.delta_jmax == 5);
    JobConfig flags;
    flags.seed = 3;
    const JobConfig m = merge(f, flags);
    CHECK(m.seed == 3u);
    CHECK(m.matrix == "I");
    CHECK_THROWS_AS(parse_config_text("colour = blue\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("seed\n"), std::invalid_argument);
}

TEST_CASE("classify report") {
    JobConfig c;
    c.command = Command::classify;
    c.matrix = "E";
    const RunResult r = execute(*validate(c).config);
    CHECK(r.exit_code == 0);
    CHECK(r.summary.find("rank_skw=2") != std::string::npos);
    CHECK(r.summary.find("rank_sym=0") != std::string::npos);
    CHECK(r.report["checks"].size() > 0);
    for (const auto& row : r.rows) CHECK_FALSE(row.tag.empty());
}

TEST_CASE("deterministic reruns") {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "varplane_cli_test";
    fs::remove_all(base);
    JobConfig c;
    c.command = Command::sublevel;
    c.matrix = "NIL:1";
    c.samples = 20000;
    c.seed = 42;
    for (const char* sub : {"a", "b"}) {
        c.out = (base / sub).string();
        NormalizedConfig n = *validate(c).config;
        run(n);
    }
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(base / "a")) {
        ++files;
        CHECK(slurp(e.path()) == slurp(base / "b" / e.path().filename()));
    }
    CHECK(files >= 2);
    fs::remove_all(base);
}
