#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "support/random_circuits.hpp"
#include "vax/errsim.hpp"
#include "vax/harness.hpp"
#include "vax/parallel.hpp"
#include "vax/timing.hpp"

using namespace vax;

namespace {

Netlist rca(int w) { return generate_benchmark({BenchmarkFamily::RcaAdder, w, 1, Signedness::Unsigned}); }

std::uint64_t out_value(const Evaluator& ev, std::uint64_t in_bits) {
    std::vector<std::uint8_t> in(ev.input_count());
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = (in_bits >> i) & 1U;
    const auto out = ev.evaluate(in);
    std::uint64_t v = 0;
    for (std::size_t o = 0; o < out.size(); ++o) v |= static_cast<std::uint64_t>(out[o]) << o;
    return v;
}

}  // namespace

TEST_CASE("evaluator basics") {
    const auto inv = parse_netlist("circuit t\ninput a\noutput y\ngate g INV A=a Y=y\nend\n");
    CHECK(out_value(compile_evaluator(inv), 0) == 1);
    CHECK(out_value(compile_evaluator(inv), 1) == 0);

    const auto x = parse_netlist("circuit t\ninput a b\noutput y\ngate g XOR2 A=a B=b Y=y\nend\n");
    const auto ev = compile_evaluator(x);
    CHECK(out_value(ev, 0b00) == 0);
    CHECK(out_value(ev, 0b01) == 1);
    CHECK(out_value(ev, 0b10) == 1);
    CHECK(out_value(ev, 0b11) == 0);

    const auto m = parse_netlist("circuit t\ninput a b s\noutput y\ngate g MUX2 A=a B=b S=s Y=y\nend\n");
    const auto mev = compile_evaluator(m);
    CHECK(out_value(mev, 0b001) == 1);  // s=0 selects a
    CHECK(out_value(mev, 0b101) == 0);  // s=1 selects b
    CHECK(out_value(mev, 0b110) == 1);
}

TEST_CASE("4-bit RCA matches integer addition") {
    const auto ev = compile_evaluator(rca(4));
    for (std::uint64_t a = 0; a < 16; ++a) {
        for (std::uint64_t b = 0; b < 16; ++b) {
            for (std::uint64_t c = 0; c < 2; ++c) CHECK(out_value(ev, a | (b << 4) | (c << 8)) == a + b + c);
        }
    }
    CHECK(out_value(ev, 5 | (7 << 4)) == 12);
}

TEST_CASE("evaluator equals a naive interpreter") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 30; ++t) {
        const auto n = testsupport::random_dag(rng, 40, 10, 6);
        const auto ev = compile_evaluator(n);
        for (std::uint64_t v = 0; v < 1024; ++v) {
            CHECK(out_value(ev, v) == testsupport::value_of(testsupport::interpret(n, testsupport::bits_of(v, 10))));
        }
    }
}

TEST_CASE("bit-parallel equals scalar") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 10; ++t) {
        const auto n = testsupport::random_dag(rng, 60, 12, 8);
        const auto ds = generate_dataset(n, 1000 + static_cast<std::size_t>(t) * 7, rng());
        const Evaluator ev(n);
        const auto a = ev.simulate(ds), b = ev.simulate_serial(ds);
        CHECK(a.po == b.po);
    }
}

TEST_CASE("simulate_metrics") {
    SUBCASE("identical netlists") {
        const auto n = rca(8);
        const auto m = simulate_metrics(n, n, generate_dataset(n, 5000, 1));
        CHECK(m.nmed == 0.0);
        CHECK(m.error_rate == 0.0);
        CHECK(m.max_ed == 0);
    }
    SUBCASE("RCA4 with b0 tied low, exhaustive") {
        const auto n = rca(4);
        const std::pair<NetId, bool> tie{*n.find_net("b0"), false};
        const auto approx = simplify_constants(tie_nets(n, std::span(&tie, 1)));
        const auto ds = generate_dataset(n, 0, 0, true);
        REQUIRE(ds.size() == 512);
        // Oracle: integer arithmetic over every pattern.
        double sum = 0;
        double err = 0;
        for (std::uint64_t v = 0; v < 512; ++v) {
            const std::uint64_t a = v & 15, b = (v >> 4) & 15, c = v >> 8;
            const auto y = static_cast<double>(a + b + c), yh = static_cast<double>(a + (b & ~1ULL) + c);
            sum += std::abs(y - yh);
            err += y != yh;
        }
        const auto m = simulate_metrics(n, approx, ds);
        CHECK(m.nmed == sum / 512.0 / 31.0);
        CHECK(m.error_rate == err / 512.0);
        CHECK(m.max_ed == 1);
    }
    SUBCASE("maximal error") {
        const auto e = parse_netlist("circuit t\ninput a\noutput y\ngate g BUF A=a Y=y\nend\n");
        const auto w = parse_netlist("circuit t\ninput a\noutput y\ngate g INV A=a Y=y\nend\n");
        const auto m = simulate_metrics(e, w, generate_dataset(e, 100, 3));
        CHECK(m.nmed == 1.0);
        CHECK(m.error_rate == 1.0);
    }
    SUBCASE("interface mismatch") {
        const auto a = rca(4);
        const auto b = rca(8);
        CHECK_THROWS_AS((void)simulate_metrics(a, b, generate_dataset(a, 10, 1)), InterfaceMismatch);
    }
}

TEST_CASE("metric invariants on random approximations") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
        const auto n = testsupport::random_dag(rng, 40, 10, 6);
        std::uniform_int_distribution<NetId> pick(2, static_cast<NetId>(n.net_count() - 1));
        const std::pair<NetId, bool> tie{pick(rng), (rng() & 1U) != 0};
        const auto a = simplify_constants(tie_nets(n, std::span(&tie, 1)));
        const auto d1 = generate_dataset(n, 700, rng());
        const auto d2 = generate_dataset(n, 900, rng());
        const auto m1 = simulate_metrics(n, a, d1);
        const auto m2 = simulate_metrics(n, a, d2);
        const auto mu = simulate_metrics(n, a, SimulationDataset::concat(d1, d2));
        CHECK(mu.sum_ed == m1.sum_ed + m2.sum_ed);
        CHECK(m1.nmed >= 0.0);
        CHECK(m1.nmed <= 1.0);
        CHECK((m1.nmed == 0.0) == (m1.error_rate == 0.0));
        CHECK(simulate_metrics(n, a, d1).nmed == m1.nmed);

        const Evaluator en(n), ea(a);
        const auto on = en.simulate(d1), oa = ea.simulate(d1);
        const auto par = compare_outputs(on, oa, Signedness::Unsigned);
        const auto ser = compare_outputs_serial(on, oa, Signedness::Unsigned);
        CHECK(par.sum_ed == ser.sum_ed);
        CHECK(par.error_rate == ser.error_rate);
        CHECK(par.mred == doctest::Approx(ser.mred).epsilon(1e-12));
        const auto ps = compare_outputs(on, oa, Signedness::TwosComplement);
        const auto ss = compare_outputs_serial(on, oa, Signedness::TwosComplement);
        CHECK(ps.sum_ed == ss.sum_ed);
        CHECK(ps.max_ed == ss.max_ed);
    }
}

TEST_CASE("signed interpretation") {
    // Two outputs: y0 = a, y1 = b. Vector (a=1, b=1) reads as -1 signed, 3 unsigned.
    const auto n = parse_netlist("circuit t\ninput a b\noutput y0 y1\ngate g0 BUF A=a Y=y0\ngate g1 BUF A=b Y=y1\nend\n");
    const auto ds = generate_dataset(n, 0, 0, true, Signedness::TwosComplement);
    const auto out = Evaluator(n).simulate(ds);
    CHECK(output_value(out, 3, Signedness::TwosComplement) == -1);
    CHECK(output_value(out, 3, Signedness::Unsigned) == 3);
    CHECK(output_value(out, 2, Signedness::TwosComplement) == -2);
}

TEST_CASE("datasets") {
    const auto n = rca(8);
    SUBCASE("seed determinism") {
        const auto a = generate_dataset(n, 1000, 9), b = generate_dataset(n, 1000, 9), c = generate_dataset(n, 1000, 10);
        CHECK(format_dataset(a) == format_dataset(b));
        CHECK(format_dataset(a) != format_dataset(c));
    }
    SUBCASE("exhaustive vectors are distinct") {
        const auto small = rca(4);
        const auto ds = generate_dataset(small, 0, 0, true);
        std::set<std::uint64_t> seen;
        for (std::size_t v = 0; v < ds.size(); ++v) {
            std::uint64_t x = 0;
            for (std::size_t i = 0; i < ds.input_count(); ++i) x |= static_cast<std::uint64_t>(ds.bit(v, i)) << i;
            seen.insert(x);
        }
        CHECK(seen.size() == 512);
        CHECK_THROWS_AS((void)generate_dataset(rca(16), 0, 0, true), std::invalid_argument);
    }
    SUBCASE("per-bit frequency") {
        const auto ds = generate_dataset(n, 100000, 12);
        for (std::size_t i = 0; i < ds.input_count(); ++i) {
            std::size_t ones = 0;
            for (std::size_t v = 0; v < ds.size(); ++v) ones += ds.bit(v, i);
            CHECK(std::abs(static_cast<double>(ones) / 1e5 - 0.5) < 0.01);
        }
    }
    SUBCASE("file round trip") {
        const auto ds = generate_dataset(n, 300, 4);
        const auto text = format_dataset(ds);
        const auto back = parse_dataset(text);
        CHECK(format_dataset(back) == text);
        CHECK(back.size() == 300);
        CHECK(back.seed() == 4);
        CHECK(back.pi_names() == ds.pi_names());
        CHECK_THROWS((void)parse_dataset("# dataset n 2 seed 0 signed 0\n# pis a\n1\nz\n"));
    }
}

TEST_CASE("timing error metrics") {
    const auto n = rca(8);
    const auto vlib = default_variation_library();
    const auto nom = nominal_library(vlib);
    const double cpd = sta_cpd(n, nom);
    SUBCASE("clock at CPD") {
        const auto m = timing_error_metrics(n, nom, cpd, generate_dataset(n, 2000, 1));
        CHECK(m.nmed == 0.0);
        CHECK(m.error_rate == 0.0);
    }
    SUBCASE("two vectors, everything late") {
        const auto inv = parse_netlist(
            "circuit t\ninput a b\noutput y0 y1\ngate g0 INV A=a Y=y0\ngate g1 INV A=b Y=y1\nend\n");
        // Vector 0: a=b=0 (Y=3); vector 1: a=b=1 (Y=0).
        const SimulationDataset ds({"a", "b"}, 2, 0, Signedness::Unsigned, {{0b10}, {0b10}});
        const auto m = timing_error_metrics(inv, nom, 1.0, ds);
        CHECK(m.sum_ed == 3.0);
        CHECK(m.error_rate == 0.5);
        CHECK(m.nmed == 3.0 / 2.0 / 3.0);
    }
    SUBCASE("8-bit RCA below nominal clock") {
        const auto ds = generate_dataset(n, 2000, 21);
        const auto a = timing_error_metrics(n, nom, 0.9 * cpd, ds);
        const auto b = timing_error_metrics(n, nom, 0.9 * cpd, ds);
        CHECK(a.nmed > 0.0);
        CHECK(a.nmed == b.nmed);
        MESSAGE("rca8 stale-value nmed at 0.9x nominal: " << a.nmed);
    }
    SUBCASE("thread count does not change metrics") {
        const auto ds = generate_dataset(n, 5000, 22);
        const auto ref = timing_error_metrics(n, nom, 0.8 * cpd, ds);
        for (int th : {1, 2, 3}) {
            set_threads(th);
            const auto m = timing_error_metrics(n, nom, 0.8 * cpd, ds);
            CHECK(m.nmed == ref.nmed);
            CHECK(m.mred == ref.mred);
        }
        set_threads(0);
    }
}
