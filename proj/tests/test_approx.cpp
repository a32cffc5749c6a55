#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "support/random_circuits.hpp"
#include "vax/approx.hpp"
#include "vax/harness.hpp"

using namespace vax;

namespace {

Netlist rca(int w) { return generate_benchmark({BenchmarkFamily::RcaAdder, w, 1, Signedness::Unsigned}); }

SstaResult baseline_ssta(const Netlist& n) {
    const auto vlib = default_variation_library();
    return ssta_traverse(n, vlib, annotate_edge_transitions(n, vlib, 100, 1));
}

Chromosome random_chromosome(std::mt19937_64& rng, std::size_t len, double p_exact) {
    std::uniform_real_distribution<double> u(0, 1);
    Chromosome c;
    for (std::size_t i = 0; i < len; ++i) {
        c.genes.push_back(u(rng) < p_exact ? kExact : static_cast<Gene>(u(rng) < 0.5 ? 0 : 1));
    }
    return c;
}

}  // namespace

TEST_CASE("build_candidates") {
    const auto n = rca(8);
    const auto ssta = baseline_ssta(n);
    CHECK_THROWS_AS((void)build_candidates(n, ssta, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)build_candidates(n, ssta, 1.5), std::invalid_argument);

    const auto all = build_candidates(n, ssta, 1e-300);
    std::size_t nonzero = 0;
    for (NetId id = 2; id < n.net_count(); ++id) nonzero += ssta.cpb[id] > 0.0;
    CHECK(all.size() == nonzero);

    const auto cs = build_candidates(n, ssta);
    CHECK(cs.size() > 0);
    CHECK(cs.size() < n.net_count() - 2);
    MESSAGE("rca8 candidate retention: " << cs.size() << " of " << n.net_count() - 2);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        CHECK(cs.cpb[i] >= cs.threshold);
        CHECK(cs.nets[i] != "GND");
        CHECK(cs.nets[i] != "VDD");
        if (i > 0) {
            const bool ordered = cs.cpb[i - 1] > cs.cpb[i] || (cs.cpb[i - 1] == cs.cpb[i] && cs.nets[i - 1] < cs.nets[i]);
            CHECK(ordered);
        }
    }
    CHECK(cs.source_fingerprint == fingerprint(n));
}

TEST_CASE("single chain candidates") {
    const auto n = parse_netlist(
        "circuit c\ninput a\noutput y\ngate g1 INV A=a Y=x1\ngate g2 BUF A=x1 Y=x2\ngate g3 INV A=x2 Y=y\nend\n");
    const auto cs = build_candidates(n, baseline_ssta(n), 0.5);
    CHECK(cs.size() == 4);
}

TEST_CASE("apply_chromosome") {
    const auto n = rca(4);
    const auto cs = build_candidates(n, baseline_ssta(n), 1e-300);
    SUBCASE("all exact is identity") {
        Chromosome c{std::vector<Gene>(cs.size(), kExact)};
        CHECK(apply_chromosome(n, cs, c) == n);
    }
    SUBCASE("input tied low equals simplified tie") {
        const auto it = std::find_if(cs.nets.begin(), cs.nets.end(),
                                     [&](const std::string& s) { return n.is_input(*n.find_net(s)); });
        REQUIRE(it != cs.nets.end());
        Chromosome c{std::vector<Gene>(cs.size(), kExact)};
        c.genes[static_cast<std::size_t>(it - cs.nets.begin())] = 0;
        const std::pair<NetId, bool> tie{*n.find_net(*it), false};
        CHECK(apply_chromosome(n, cs, c) == simplify_constants(tie_nets(n, std::span(&tie, 1))));
    }
    SUBCASE("gate output gene removes the driver") {
        for (std::size_t i = 0; i < cs.size(); ++i) {
            const NetId id = *n.find_net(cs.nets[i]);
            if (n.driver(id) < 0) continue;
            Chromosome c{std::vector<Gene>(cs.size(), kExact)};
            c.genes[i] = 1;
            const auto out = apply_chromosome(n, cs, c);
            const auto& gname = n.gates()[static_cast<std::size_t>(n.driver(id))].name;
            CHECK(!out.find_gate(gname).has_value());
            CHECK(out.inputs().size() == n.inputs().size());
            CHECK(out.outputs().size() == n.outputs().size());
        }
    }
    SUBCASE("invalid chromosomes") {
        CHECK_THROWS_AS((void)apply_chromosome(n, cs, Chromosome{{0}}), ChromosomeError);
        Chromosome bad{std::vector<Gene>(cs.size(), kExact)};
        bad.genes[0] = 2;
        CHECK_THROWS_AS((void)apply_chromosome(n, cs, bad), ChromosomeError);
    }
}

TEST_CASE("apply_chromosome properties") {
    std::mt19937_64 rng(41);
    const auto vlib = default_variation_library();
    for (int t = 0; t < 30; ++t) {
        const auto n = testsupport::random_dag(rng, 30, 8, 3);
        const auto cs = build_candidates(n, baseline_ssta(n), 1e-300);
        const auto c = random_chromosome(rng, cs.size(), 0.8);
        const auto a = apply_chromosome(n, cs, c);

        // Function equals the exact netlist with candidates forced.
        std::vector<std::pair<NetId, bool>> forced;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            if (c.genes[i] != kExact) forced.emplace_back(*n.find_net(cs.nets[i]), c.genes[i] == 1);
        }
        for (std::uint64_t v = 0; v < 256; ++v) {
            const auto in = testsupport::bits_of(v, 8);
            CHECK(testsupport::interpret(a, in) == testsupport::interpret(n, in, forced));
        }
        // CPD never increases.
        for (std::uint64_t s = 0; s < 5; ++s) {
            const auto lib = sample_library(vlib, s, 0.5);
            CHECK(sta_cpd(a, lib) <= sta_cpd(n, lib));
        }
        // Idempotent in effect.
        CHECK(apply_chromosome(a, cs, c) == a);
    }
}

TEST_CASE("chromosome_distance") {
    const Chromosome a{{-1, 0, 1, 1}}, b{{-1, 0, 1, 0}}, c{{0, 1, -1, -1}};
    CHECK(chromosome_distance(a, a) == 0);
    CHECK(chromosome_distance(a, b) == 1);
    CHECK(chromosome_distance(a, c) == 4);
    CHECK_THROWS_AS((void)chromosome_distance(a, Chromosome{{0}}), ChromosomeError);
}

TEST_CASE("chromosome and candidate files") {
    const auto n = rca(4);
    const auto cs = build_candidates(n, baseline_ssta(n));
    std::mt19937_64 rng(3);
    std::vector<Chromosome> pop;
    for (int i = 0; i < 5; ++i) pop.push_back(random_chromosome(rng, cs.size(), 0.5));
    const auto text = format_chromosomes(cs, pop);
    CHECK(parse_chromosomes(text, cs) == pop);

    const auto cs2 = parse_candidates(format_candidates(cs));
    CHECK(cs2.nets == cs.nets);
    CHECK(cs2.cpb == cs.cpb);
    CHECK(cs2.source_fingerprint == cs.source_fingerprint);
    CHECK(cs2.threshold == cs.threshold);

    SUBCASE("fingerprint mismatch is refused") {
        auto other = cs;
        other.source_fingerprint ^= 1;
        CHECK_THROWS_AS((void)parse_chromosomes(text, other), ChromosomeError);
    }
    SUBCASE("bad gene") {
        auto bad = text;
        bad.replace(bad.find('\n') + 1, 2, "7,");
        CHECK_THROWS_AS((void)parse_chromosomes(bad, cs), ChromosomeError);
    }
}
