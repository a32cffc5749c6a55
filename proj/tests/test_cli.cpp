#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>

#include "json.hpp"
#include "vax/harness.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::current_path() / "cli_work";

int run(const std::string& args) {
    const std::string cmd = std::string(VAXSYNTH_PATH) + " " + args + " > " + (kWork / "stdout.txt").string() +
                            " 2> " + (kWork / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    return rc == 0 ? 0 : 1;
}

std::string out() { return vax::read_file(kWork / "stdout.txt"); }
std::string err() { return vax::read_file(kWork / "stderr.txt"); }
std::string p(const std::string& rel) { return (kWork / rel).string(); }

}  // namespace

TEST_CASE("vaxsynth end to end") {
    fs::remove_all(kWork);
    fs::create_directories(kWork);

    REQUIRE(run("gen --family rca_adder --width 4 --out " + p("rca4.net")) == 0);
    const auto n = vax::parse_netlist(vax::read_file(kWork / "rca4.net"));
    CHECK(n.gate_count() == 20);
    REQUIRE(run("gen --family array_multiplier --width 4") == 0);
    CHECK(vax::parse_netlist(out()).outputs().size() == 8);
    CHECK(run("gen --family rca_adder --width 5") != 0);
    CHECK(err().find("width") != std::string::npos);

    REQUIRE(run("--seed 5 sample-libs --count 3 --write-variation --out " + p("libs")) == 0);
    CHECK(fs::exists(kWork / "libs" / "variation.json"));
    std::size_t jsons = 0;
    for (const auto& e : fs::directory_iterator(kWork / "libs")) jsons += e.path().extension() == ".json";
    CHECK(jsons == 4);

    REQUIRE(run("sta --netlist " + p("rca4.net")) == 0);
    const auto sta = nlohmann::json::parse(out());
    CHECK(sta["cpd_ps"].get<double>() > 0);
    REQUIRE(run("sta --netlist " + p("rca4.net") + " --sample-seed 3") == 0);
    CHECK(nlohmann::json::parse(out())["cpd_ps"].get<double>() != sta["cpd_ps"].get<double>());

    REQUIRE(run("ssta --netlist " + p("rca4.net") + " --mc-k 50") == 0);
    const auto ssta = nlohmann::json::parse(out());
    CHECK(ssta["confidence"].get<double>() <= 1.0);
    CHECK(ssta["candidates"].size() > 0);

    REQUIRE(run("simulate --netlist " + p("rca4.net") + " --exhaustive --write-dataset " + p("ds.txt")) == 0);
    CHECK(nlohmann::json::parse(out())["functional"]["nmed"].get<double>() == 0.0);
    REQUIRE(run("simulate --netlist " + p("rca4.net") + " --dataset " + p("ds.txt") + " --clock 50") == 0);
    CHECK(nlohmann::json::parse(out())["timing"]["nmed"].get<double>() > 0.0);
    CHECK(run("simulate --netlist " + p("missing.net")) != 0);

    const std::string opt = "--seed 2 optimize --netlist " + p("rca4.net") +
                            " --pop 8 --gens 3 --mc-k 40 --eval-vectors 512 --report-vectors 2000 --out ";
    REQUIRE(run(opt + p("run1")) == 0);
    for (const char* f : {"netlists/baseline.net", "libs/variation.json", "fronts/final.chrom", "fronts/gen_0003.chrom",
                          "fronts/summary.txt", "report/config"}) {
        CHECK_MESSAGE(fs::exists(kWork / "run1" / f), f);
    }
    REQUIRE(run("evaluate --run " + p("run1")) == 0);
    REQUIRE(run("report --run " + p("run1")) == 0);
    for (const char* f : {"mc/summary.csv", "mc/cpds.csv", "report/designs.csv", "report/selected.csv",
                          "report/pareto.csv", "report/nmed_ratio.csv", "report/greedy.csv"}) {
        CHECK_MESSAGE(fs::exists(kWork / "run1" / f), f);
    }

    // Same seed, different thread count, config replayed from the first run.
    REQUIRE(run("--threads 1 --config " + p("run1/report/config") + " optimize --full --out " + p("run2")) == 0);
    for (const char* f : {"fronts/final.chrom", "mc/summary.csv", "report/designs.csv"}) {
        CHECK_MESSAGE(vax::read_file(kWork / "run1" / f) == vax::read_file(kWork / "run2" / f), f);
    }

    CHECK(run("report --run " + p("nowhere")) != 0);
    CHECK(run("bogus") != 0);
    fs::remove_all(kWork);
}
