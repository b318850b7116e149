#include "detscope/cache.hpp"
#include "detscope/commands.hpp"
#include "detscope/errors.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

using namespace detscope;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("detscope_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json gaussian_doc() {
    return json{{"schema_version", 1},
                {"potential", {{"kind", "gaussian-well"}, {"depth", 2.0}, {"width", 1.0}}},
                {"scan", {{"t_max", 1.6}, {"step", 0.1}}}};
}
} // namespace

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(parse_config(json::array()), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"potential", {{"kind", "zero"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"schema_version", 7}, {"potential", {{"kind", "zero"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"schema_version", 1}, {"potential", {{"kind", "lumpy"}}}}), ConfigError);
    json bad = gaussian_doc();
    bad["tolerances"] = {{"newton", -1.0}};
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = gaussian_doc();
    bad["search_region"] = {{"re", {-1.0, 1.0}}, {"im", {-90.0, 0.0}}};
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("effective config round trip") {
    const RunConfig cfg = parse_config(gaussian_doc());
    const std::string text = dump17(effective_config(cfg));
    const RunConfig back = parse_config(json::parse(text));
    CHECK(dump17(effective_config(back)) == text);
    CHECK(back.t_max == cfg.t_max);
    CHECK(back.resolution == cfg.resolution);
    CHECK(fmt17(0.1) == "0.10000000000000001");
    CHECK(fmt17(2.0) == "2.0");
}

TEST_CASE("disk cache") {
    const fs::path dir = scratch("cache");
    DiskCache cache(dir.string());
    CHECK_FALSE(cache.get("k1").has_value());
    DetValue v = make_det_value(cd(0.1, 0.2), cd(-0.25, 1.0 / 3));
    v.branch_path = 2;
    cache.put("k1", v);
    CHECK(fs::exists(dir / sha256_hex("k1")));
    const auto back = cache.get("k1");
    REQUIRE(back.has_value());
    CHECK(back->log_d == v.log_d);
    CHECK(back->d == v.d);
    CHECK(back->branch_path == 2);
    CHECK(cache.hits() == 1);
    CHECK(cache.misses() == 1);
    int calls = 0;
    const json a = cache.record("r", [&] { ++calls; return json{{"x", 1.5}}; });
    const json b = cache.record("r", [&] { ++calls; return json{{"x", 9.0}}; });
    CHECK(calls == 1);
    CHECK(a == b);
    fs::remove_all(dir);
}

TEST_CASE("moments command and exit codes") {
    const fs::path out = scratch("moments");
    RunConfig cfg = parse_config(json{{"schema_version", 1}, {"potential", {{"kind", "zero"}}}});
    cfg.out_dir = out.string();
    cfg.cache_dir = (out / "cache").string();
    CommandStats s = run_command("moments", cfg);
    CHECK(s.exit_code == 0);
    const json m = json::parse(slurp(out / "moments.json"));
    CHECK(m.at("alpha_m1") == 0.0);
    CHECK(m.at("alpha_0") == 0.0);
    CHECK(m.at("alpha_1") == 0.0);
    CHECK(fs::exists(out / "effective_config.json"));

    RunConfig sw = parse_config(json{{"schema_version", 1}, {"potential", {{"kind", "square-well"}, {"depth", 4.0}, {"width", 1.0}}}});
    sw.out_dir = out.string();
    sw.cache_dir = cfg.cache_dir;
    CHECK(run_command("moments", sw).exit_code == 3);
    CHECK(run_command("bogus", cfg).exit_code == 2);
    CHECK(exit_code_for(BranchJumpDetected("x")) == 4);
    CHECK(exit_code_for(DepthLimitExceeded("x")) == 5);
    CHECK(exit_code_for(TailNotConverged("x")) == 6);
    fs::remove_all(out);
}

TEST_CASE("scan command: warm cache contract") {
    const fs::path out = scratch("scan");
    RunConfig cfg = parse_config(gaussian_doc());
    cfg.out_dir = out.string();
    cfg.cache_dir = (out / "cache").string();
    const CommandStats cold = run_command("scan", cfg);
    REQUIRE(cold.exit_code == 0);
    CHECK(cold.assemblies > 0);
    const std::string first = slurp(out / "scan.csv");
    CHECK(first.rfind("t,ReD,ImD,rho,phi,phi_sc,phi_B,rho_B,dphiB_dt\n", 0) == 0);
    const CommandStats warm = run_command("scan", cfg);
    REQUIRE(warm.exit_code == 0);
    CHECK(warm.assemblies == 0);
    CHECK(warm.cache_hits == warm.rows);
    CHECK(slurp(out / "scan.csv") == first);

    // the effective config reproduces the output
    const RunConfig again = parse_config(json::parse(slurp(out / "effective_config.json")));
    RunConfig copy = again;
    copy.out_dir = (out / "rerun").string();
    copy.cache_dir = cfg.cache_dir;
    REQUIRE(run_command("scan", copy).exit_code == 0);
    CHECK(slurp(out / "rerun" / "scan.csv") == first);
    fs::remove_all(out);
}

TEST_CASE("spectrum and report on the zero potential") {
    const fs::path out = scratch("report");
    RunConfig cfg = parse_config(json{{"schema_version", 1},
                                      {"potential", {{"kind", "zero"}}},
                                      {"scan", {{"t_max", 3.2}, {"step", 0.2}}},
                                      {"search_region", {{"re", {-3.0, 3.0}}, {"im", {-1.0, 0.0}}}},
                                      {"report", {{"radii", {1.0, 2.0}}, {"levels", json::array({json::array({3.2, 0.2})})}}}});
    cfg.out_dir = out.string();
    cfg.cache_dir = (out / "cache").string();
    REQUIRE(run_command("spectrum", cfg).exit_code == 0);
    const json cat = json::parse(slurp(out / "catalog.json"));
    CHECK(cat.at("resonances").empty());
    CHECK(cat.at("bound_states").empty());

    REQUIRE(run_command("trace-check", cfg).exit_code == 0);
    const json rep = json::parse(slurp(out / "trace_report.json"));
    for (const auto& r : rep.at("formulas")) CHECK(r.at("abs_err") == 0.0);
    CHECK(json::parse(dump17(rep)) == rep);

    REQUIRE(run_command("report", cfg).exit_code == 0);
    int files = 0;
    for (const auto& e : fs::directory_iterator(out / "plotdata")) files += e.path().extension() == ".csv";
    CHECK(files == 4);
    CHECK(slurp(out / "plotdata" / "resonances.csv") == "re,im,multiplicity,residual\n");
    const std::string before = slurp(out / "plotdata" / "breit_wigner.csv");
    REQUIRE(run_command("report", cfg).exit_code == 0);
    CHECK(slurp(out / "plotdata" / "breit_wigner.csv") == before);
    fs::remove_all(out);
}
