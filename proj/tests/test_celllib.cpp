#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "vax/celllib.hpp"

using namespace vax;

namespace {

// Mean and population std of one arc across seeds.
std::pair<double, double> arc_stats(const VariationLibrary& lib, CellKind k, std::size_t pin, Edge e, int n,
                                    double rho) {
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double d = sample_library(lib, static_cast<std::uint64_t>(i), rho).delay(k, pin, e);
        s += d;
        s2 += d * d;
    }
    const double mean = s / n;
    return {mean, std::sqrt(s2 / n - mean * mean)};
}

}  // namespace

TEST_CASE("default library completeness") {
    const auto lib = default_variation_library();
    CHECK(lib.arcs(CellKind::INV).size() == 2);
    CHECK(lib.arcs(CellKind::MUX2).size() == 6);
    CHECK(lib.arcs(CellKind::XOR2).size() == 4);
    const auto j = nlohmann::json::parse(serialize_variation_library(lib));
    CHECK(j["cells"].size() == 9);
    CHECK(j["rho_default"].get<double>() == doctest::Approx(0.5));
    // INV fastest, XOR2 slower than NAND2.
    CHECK(lib.arc(CellKind::INV, 0, Edge::Rise).mu_ps < lib.arc(CellKind::NAND2, 0, Edge::Rise).mu_ps);
    CHECK(lib.arc(CellKind::XOR2, 0, Edge::Rise).mu_ps > lib.arc(CellKind::NAND2, 0, Edge::Rise).mu_ps);
}

TEST_CASE("library file errors") {
    const auto text = serialize_variation_library(default_variation_library());
    auto j = nlohmann::ordered_json::parse(text);
    SUBCASE("missing arc names it") {
        auto& arcs = j["cells"]["XOR2"];
        for (auto it = arcs.begin(); it != arcs.end(); ++it) {
            if ((*it)["pin"] == "B" && (*it)["edge"] == "fall") {
                arcs.erase(it);
                break;
            }
        }
        try {
            (void)parse_variation_library(j.dump());
            FAIL("expected LibraryError");
        } catch (const LibraryError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("XOR2") != std::string::npos);
            CHECK(msg.find("fall") != std::string::npos);
        }
    }
    SUBCASE("non-positive mu") {
        j["cells"]["INV"][0]["mu_ps"] = 0.0;
        CHECK_THROWS_AS((void)parse_variation_library(j.dump()), LibraryError);
    }
    SUBCASE("malformed") { CHECK_THROWS_AS((void)parse_variation_library("{not json"), LibraryError); }
}

TEST_CASE("save/load round trip is byte-identical") {
    const auto lib = default_variation_library().with_sigma_ratio(0.1);
    const auto dir = std::filesystem::temp_directory_path() / "vax_celllib_test";
    std::filesystem::create_directories(dir);
    save_variation_library(lib, dir / "a.json");
    const auto back = load_variation_library(dir / "a.json");
    save_variation_library(back, dir / "b.json");
    std::ifstream a(dir / "a.json"), b(dir / "b.json");
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    CHECK(sa == serialize_variation_library(lib));
    // Canonical ordering: cells alphabetical.
    CHECK(sa.find("\"AND2\"") < sa.find("\"BUF\""));
    CHECK(sa.find("\"XNOR2\"") < sa.find("\"XOR2\""));
    std::filesystem::remove_all(dir);
}

TEST_CASE("sampling") {
    const auto lib = default_variation_library();
    SUBCASE("pure function of (lib, seed, rho)") {
        CHECK(sample_library(lib, 42, 0.5) == sample_library(lib, 42, 0.5));
        CHECK(!(sample_library(lib, 42, 0.5) == sample_library(lib, 43, 0.5)));
    }
    SUBCASE("zero sigma gives nominal") {
        const auto flat = lib.with_sigma_ratio(0.0);
        for (std::uint64_t s : {1ULL, 7ULL, 99ULL}) {
            auto a = sample_library(flat, s, 0.5);
            auto b = nominal_library(lib);
            a.seed = b.seed;
            CHECK(a == b);
        }
    }
    SUBCASE("rho = 1 shares the z-score") {
        const auto sl = sample_library(lib, 5, 1.0);
        double z0 = 0;
        bool first = true;
        for (auto k : kAllCellKinds) {
            for (const auto& arc : lib.arcs(k)) {
                const double z = (sl.delay(k, arc.pin, arc.out_edge) - arc.mu_ps) / arc.sigma_ps;
                if (first) {
                    z0 = z;
                    first = false;
                }
                CHECK(z == doctest::Approx(z0).epsilon(1e-9));
            }
        }
    }
    SUBCASE("per-arc statistics at 10 000 seeds") {
        const auto l10 = lib.with_sigma_ratio(0.1);
        for (double rho : {0.0, 0.5}) {
            const auto [mean, sd] = arc_stats(l10, CellKind::XOR2, 1, Edge::Fall, 10000, rho);
            const auto& a = l10.arc(CellKind::XOR2, 1, Edge::Fall);
            CHECK(std::abs(mean - a.mu_ps) / a.mu_ps < 0.02);
            CHECK(std::abs(sd - a.sigma_ps) / a.sigma_ps < 0.02);
        }
    }
    SUBCASE("clamp is rare at sigma/mu = 0.2") {
        const auto l20 = lib.with_sigma_ratio(0.2);
        std::size_t clamped = 0, total = 0;
        for (std::uint64_t s = 0; s < 2000; ++s) {
            const auto sl = sample_library(l20, s, 0.5);
            for (auto k : kAllCellKinds) {
                for (const auto& arc : l20.arcs(k)) {
                    ++total;
                    if (sl.delay(k, arc.pin, arc.out_edge) <= kClampFraction * arc.mu_ps) ++clamped;
                }
            }
        }
        CHECK(static_cast<double>(clamped) / static_cast<double>(total) < 1e-4);
    }
    SUBCASE("running sigma/mu estimate converges") {
        const auto& a = lib.arc(CellKind::NAND2, 0, Edge::Rise);
        double s = 0, s2 = 0;
        double est = 0;
        for (int i = 1; i <= 1000; ++i) {
            const double d = sample_library(lib, static_cast<std::uint64_t>(i), 0.5).delay(CellKind::NAND2, 0, Edge::Rise);
            s += d;
            s2 += d * d;
            const double m = s / i;
            est = std::sqrt(std::max(0.0, s2 / i - m * m)) / m;
        }
        const double target = a.sigma_ps / a.mu_ps;
        CHECK(std::abs(est - target) < 0.1 * target);
    }
}

TEST_CASE("nominal library") {
    const auto lib = default_variation_library();
    const auto nom = nominal_library(lib);
    CHECK(nom.seed == 0);
    CHECK(nom.delay(CellKind::INV, 0, Edge::Rise) == lib.arc(CellKind::INV, 0, Edge::Rise).mu_ps);
    CHECK(nom.delay(CellKind::NAND2, 1, Edge::Fall) == lib.arc(CellKind::NAND2, 1, Edge::Fall).mu_ps);
    CHECK(nom.delay(CellKind::XOR2, 0, Edge::Rise) == lib.arc(CellKind::XOR2, 0, Edge::Rise).mu_ps);
    CHECK(nominal_library(lib) == nom);
}

TEST_CASE("sampled library serialization") {
    const auto lib = default_variation_library();
    const auto s = sample_library(lib, 9, 0.3);
    CHECK(parse_sampled_library(serialize_sampled_library(s, 0.3)) == s);
}

TEST_CASE("library validation") {
    auto table = default_variation_library().table();
    table[static_cast<std::size_t>(CellKind::INV)][0][0].sigma_ps = 100.0;  // sigma/mu > 0.5
    CHECK_THROWS_AS(VariationLibrary("bad", 0.5, table), LibraryError);
    CHECK_THROWS_AS(VariationLibrary("bad", 1.5, default_variation_library().table()), LibraryError);
}
