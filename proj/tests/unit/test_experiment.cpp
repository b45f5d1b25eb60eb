#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "pushforward/experiment.hpp"

using namespace pushforward;

namespace {

bool names_field(const std::vector<FieldError>& errors, const std::string& field, const std::string& fragment = "") {
    return std::any_of(errors.begin(), errors.end(), [&](const FieldError& e) {
        return e.field == field && e.message.find(fragment) != std::string::npos;
    });
}

const char* kEntropy = R"(
experiment = "entropy"
seed = 3
[system]
name = "circle_doubling"
)";

}  // namespace

TEST_CASE("config parsing") {
    auto c = parse_config(kEntropy);
    CHECK(c.experiment == "entropy");
    CHECK(c.seed == 3);
    CHECK(c.system["name"] == "circle_doubling");
    CHECK(validate(c).empty());

    try {
        parse_config("experiment = \"entropy\"\n[system\n");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        CHECK(std::string(e.what()).find("column") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("experiment = \"matrix\"\ncolour = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = \"matrix\"\nseed = -1\n"), ConfigError);
}

TEST_CASE("validation names the offending field") {
    auto c = parse_config(kEntropy);
    c.params = {{"eps_list", {0.0, 0.1}}};
    CHECK(names_field(validate(c), "params.eps_list"));

    c.params = {{"n_range", {2, 3}}};
    CHECK(names_field(validate(c), "params.n_range", "need ≥ 4 points"));

    c.params = {{"per_axis", 1}, {"bogus", true}};
    auto errors = validate(c);
    CHECK(names_field(errors, "params.per_axis"));
    CHECK(names_field(errors, "params.bogus", "unknown"));

    c.system = {{"name", "rotation"}, {"alpha", "x"}};
    CHECK(names_field(validate(c), "system.alpha"));
    c.system = {{"name", "solenoid"}, {"lambda", 0.5}};
    CHECK(names_field(validate(c), "system.lambda"));
    c.system = nlohmann::json::object();
    CHECK(names_field(validate(c), "system.name", "required"));

    c.experiment = "nonsense";
    CHECK(names_field(validate(c), "experiment"));

    auto m = parse_config("experiment = \"matrix\"\n[system]\nname = \"rotation\"\n");
    CHECK(names_field(validate(m), "system.name", "finite"));
    auto p = parse_config("experiment = \"entropy_product\"\n[system]\nname = \"circle_doubling\"\n");
    CHECK(names_field(validate(p), "system_b.name", "required"));
    auto q = parse_config("experiment = \"metrics\"\nspace = \"square\"\n[params.mu]\npoints = [[0.5, 2.0]]\n");
    CHECK(names_field(validate(q), "params.mu.points", "invalid point"));
    auto w = parse_config("experiment = \"metrics\"\nspace = \"circle\"\n[params.mu]\npoints = [0.1, 0.2]\nweights = [0.5, 0.6]\n");
    CHECK(names_field(validate(w), "params.mu.weights", "sum to 1"));
}

TEST_CASE("every default config validates") {
    for (const auto& ex : kExperiments) {
        ExperimentConfig c;
        c.experiment = ex;
        if (ex == "matrix" || ex == "invariant") c.system = {{"name", "cycle"}, {"n", 5}};
        else if (ex == "attractor") c.system = {{"name", "contraction"}};
        else c.system = {{"name", "circle_doubling"}};
        if (ex == "entropy_product") c.system_b = {{"name", "rotation"}};
        if (ex == "omega") c.params = {{"x", 0.1}};
        INFO(ex);
        CHECK(validate(c).empty());
    }
}

TEST_CASE("matrix experiment reproduces the doubling example") {
    auto c = parse_config("experiment = \"matrix\"\n[system]\nname = \"finite_doubling\"\nn = 4\n");
    auto r = run(c);
    const nlohmann::json expected = {{1, 0, 1, 0}, {0, 0, 0, 0}, {0, 1, 0, 1}, {0, 0, 0, 0}};
    CHECK(r.summary["results"]["phi_matrix"] == expected);
    CHECK(r.csv.rfind("row,col,t,phi\n", 0) == 0);
    CHECK(r.csv.find('\r') == std::string::npos);
}

TEST_CASE("metrics of a measure with itself are zero") {
    auto c = parse_config(R"(
experiment = "metrics"
space = "square"
[params.mu]
points = [[0.1, 0.2], [0.7, 0.9]]
weights = [0.25, 0.75]
[params.nu]
points = [[0.1, 0.2], [0.7, 0.9]]
weights = [0.25, 0.75]
)");
    auto r = run(c);
    CHECK(r.summary["results"]["wasserstein"] == 0.0);
    CHECK(r.summary["results"]["prokhorov"] == 0.0);
    CHECK(r.summary["results"]["weak_star"] == 0.0);
}

TEST_CASE("entropy defaults recover log 2") {
    auto r = run(parse_config(kEntropy));
    const double h = r.summary["results"]["h_estimate"];
    CHECK(h >= 0.6);
    CHECK(h <= 0.8);
    CHECK(r.csv.rfind("eps,n,count,saturated\n", 0) == 0);
    // One saturation warning although many cells saturate.
    CHECK(std::count_if(r.warnings.begin(), r.warnings.end(),
                        [](const std::string& w) { return w.rfind("saturation", 0) == 0; }) == 1);
}

TEST_CASE("estimate-invalid and parameter errors map to exit codes") {
    auto c = parse_config(kEntropy);
    c.params = {{"per_axis", 64}, {"eps_list", {0.01, 0.02}}, {"n_range", {1, 2, 3, 4}}};
    try {
        run(c);
        FAIL("expected EstimateInvalid");
    } catch (const std::exception& e) {
        CHECK(exit_code_for(e) == 3);
    }
    c.params = {{"n_range", {1, 2}}};
    try {
        run(c);
        FAIL("expected ConfigError");
    } catch (const std::exception& e) {
        CHECK(exit_code_for(e) == 2);
    }
    CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("invariant on the truncated shift reports no vector") {
    auto c = parse_config("experiment = \"invariant\"\n[system]\nname = \"shift\"\nn = 5\n");
    c.params = {{"max_iterations", 200}};
    auto r = run(c);
    CHECK(r.summary["results"]["found"] == false);
    CHECK(r.warnings.size() == 1);
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
    const std::vector<std::string> configs{
        "experiment = \"probe\"\nseed = 9\n[system]\nname = \"contraction\"\n[params]\ntrials = 40\n",
        "experiment = \"entropy\"\n[system]\nname = \"circle_doubling\"\n[params]\nper_axis = 4096\n"
        "eps_list = [0.03, 0.06]\nn_range = [1, 2, 3, 4, 5]\n",
        "experiment = \"orbit\"\nseed = 4\n[system]\nname = \"square_attractor\"\n[params]\nn = 5\n",
        "experiment = \"quantize\"\nseed = 2\n[system]\nname = \"circle_doubling\"\n[params]\ndelta = 0.1\nperiodic = true\n",
    };
    for (const auto& text : configs) {
        auto c = parse_config(text);
        c.threads = 1;
        const auto a = run(c);
        c.threads = 3;
        const auto b = run(c);
        CHECK(a.csv == b.csv);
        CHECK(a.summary["results"] == b.summary["results"]);
    }
}

TEST_CASE("every experiment runs") {
    const std::vector<std::string> configs{
        "experiment = \"orbit\"\n[system]\nname = \"shift\"\nn = 4\n[params]\nn = 5\n[params.initial]\nuniform = true\n",
        "experiment = \"attractor\"\n[system]\nname = \"solenoid\"\n[params]\nn = 30\nlevel = 5\n",
        "experiment = \"omega\"\n[system]\nname = \"rotation\"\n[params]\nx = 0.1\nreturn_eps = 0.05\n",
        "experiment = \"witness\"\n[system]\nname = \"circle_doubling\"\n[params]\neps = 0.2\n",
        "experiment = \"entropy_embedded\"\n[system]\nname = \"rotation\"\n[params]\nn_embed = 2\n"
        "eps_list = [0.0625, 0.125]\nn_range = [1, 2, 3, 4]\n",
        "experiment = \"entropy_product\"\n[system]\nname = \"circle_doubling\"\n[system_b]\nname = \"rotation\"\n"
        "[params]\nper_axis = 128\n",
        "experiment = \"quantize\"\nspace = { name = \"finite\", size = 6 }\n[params]\ndelta = 0.5\n",
    };
    for (const auto& text : configs) {
        INFO(text);
        auto r = run(parse_config(text));
        CHECK(r.csv.find('\n') != std::string::npos);
        CHECK(r.summary.contains("config"));
        std::set<std::string> unique(r.warnings.begin(), r.warnings.end());
        CHECK(unique.size() == r.warnings.size());
    }
}

TEST_CASE("write_outputs and format_number") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(std::ldexp(1.0, -6)) == "0.015625");
    CHECK(format_number(std::nan("")) == "nan");
    auto c = parse_config("experiment = \"matrix\"\nname = \"m\"\n[system]\nname = \"cycle\"\nn = 3\n");
    c.out_dir = std::filesystem::temp_directory_path() / "pushforward_lab_test_out";
    write_outputs(c, run(c));
    CHECK(std::filesystem::exists(c.out_dir / "m.csv"));
    std::ifstream js(c.out_dir / "m.summary.json");
    auto j = nlohmann::json::parse(js);
    CHECK(j["config"]["system"]["n"] == 3);
    std::filesystem::remove_all(c.out_dir);
}
