#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "support/random_circuits.hpp"
#include "vax/harness.hpp"
#include "vax/optimize.hpp"
#include "vax/parallel.hpp"

using namespace vax;

namespace {

Netlist rca(int w) { return generate_benchmark({BenchmarkFamily::RcaAdder, w, 1, Signedness::Unsigned}); }

CandidateSet dummy_candidates(std::size_t n) {
    CandidateSet cs;
    for (std::size_t i = 0; i < n; ++i) {
        cs.nets.push_back("n" + std::to_string(i));
        cs.cpb.push_back(1.0);
    }
    return cs;
}

// Constrained dominance written out directly.
bool oracle_dominates(const Objectives& a, double va, const Objectives& b, double vb) {
    if (va <= 0 && vb > 0) return true;
    if (va > 0 && vb <= 0) return false;
    if (va > 0 && vb > 0) return va < vb;
    bool le = true, lt = false;
    for (int k = 0; k < 3; ++k) {
        le = le && a[k] <= b[k];
        lt = lt || a[k] < b[k];
    }
    return le && lt;
}

// Fronts by repeated peeling of the undominated remainder.
std::vector<std::vector<std::size_t>> oracle_fronts(const std::vector<Objectives>& o, const std::vector<double>& v) {
    std::vector<bool> done(o.size(), false);
    std::vector<std::vector<std::size_t>> fronts;
    std::size_t left = o.size();
    while (left > 0) {
        std::vector<std::size_t> f;
        for (std::size_t i = 0; i < o.size(); ++i) {
            if (done[i]) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < o.size() && !dominated; ++j) {
                dominated = !done[j] && j != i && oracle_dominates(o[j], v[j], o[i], v[i]);
            }
            if (!dominated) f.push_back(i);
        }
        for (auto i : f) done[i] = true;
        left -= f.size();
        fronts.push_back(f);
    }
    return fronts;
}

struct Rca4Setup {
    Netlist n = rca(4);
    VariationLibrary vlib = default_variation_library();
    EdgeTransitionMap tmap = annotate_edge_transitions(n, vlib, 200, 1);
    SstaResult base = ssta_traverse(n, vlib, tmap);
    CandidateSet cs = build_candidates(n, base);
    SimulationDataset ds = generate_dataset(n, 0, 0, true);
};

}  // namespace

TEST_CASE("initialize_population") {
    const auto cs = dummy_candidates(100);
    GaConfig cfg;
    cfg.init_exact_prob = 1.0;
    for (const auto& c : initialize_population(cfg, cs)) CHECK(c.is_exact());
    cfg.init_exact_prob = 0.0;
    for (const auto& c : initialize_population(cfg, cs)) {
        for (auto g : c.genes) CHECK(g != kExact);
    }
    cfg.init_exact_prob = 0.9;
    const auto pop = initialize_population(cfg, cs);
    std::size_t exact = 0, ones = 0, total = 0;
    for (const auto& c : pop) {
        for (auto g : c.genes) {
            ++total;
            exact += g == kExact;
            ones += g == 1;
        }
    }
    CHECK(total == 10000);
    CHECK(std::abs(static_cast<double>(exact) / 1e4 - 0.9) < 0.02);
    CHECK(std::abs(static_cast<double>(ones) / static_cast<double>(total - exact) - 0.5) < 0.1);
    CHECK(initialize_population(cfg, cs) == pop);
    cfg.seed = 2;
    CHECK(initialize_population(cfg, cs) != pop);
}

TEST_CASE("config validation") {
    GaConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.crossover_prob = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.base_mutation_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.lambda = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    CHECK(cfg.mutation_rate(40) == doctest::Approx(0.05));
    cfg.base_mutation_rate = 0.3;
    CHECK(cfg.mutation_rate(40) == 0.3);
}

TEST_CASE("evaluate_individual") {
    const Rca4Setup s;
    GaConfig cfg;
    cfg.error_bound = 0.05;
    SUBCASE("all exact") {
        const auto d = evaluate_individual(s.n, s.cs, Chromosome{std::vector<Gene>(s.cs.size(), kExact)}, s.vlib,
                                           s.tmap, s.ds, cfg);
        CHECK(d.nmed() == 0.0);
        CHECK(d.mu_cpd == doctest::Approx(s.base.cpd.mu).epsilon(1e-12));
        CHECK(d.sigma_cpd() == doctest::Approx(s.base.cpd.sigma()).epsilon(1e-12));
        CHECK(d.feasible);
    }
    SUBCASE("sole output tied to GND") {
        const auto n = parse_netlist("circuit t\ninput a b\noutput y\ngate g AND2 A=a B=b Y=y\nend\n");
        CandidateSet cs;
        cs.nets = {"y"};
        cs.cpb = {1.0};
        cs.source_fingerprint = fingerprint(n);
        const auto tmap = default_edge_transitions(n, s.vlib);
        const auto ds = generate_dataset(n, 0, 0, true);
        // Oracle: |Y| averaged over the four patterns, max output value 1.
        double sum = 0;
        for (int v = 0; v < 4; ++v) sum += (v & 1) && (v >> 1);
        const auto d = evaluate_individual(n, cs, Chromosome{{0}}, s.vlib, tmap, ds, cfg);
        CHECK(d.nmed() == sum / 4.0);
        CHECK_FALSE(d.feasible);
        CHECK(d.confidence == 1.0);
        CHECK(d.mu_cpd_eff() == d.mu_cpd);
    }
    SUBCASE("penalty identity") {
        std::mt19937_64 rng(2);
        cfg.lambda = 0.3;
        const FitnessEvaluator fit(s.n, s.cs, s.vlib, s.tmap, s.ds, cfg);
        for (int t = 0; t < 20; ++t) {
            Chromosome c;
            for (std::size_t i = 0; i < s.cs.size(); ++i) c.genes.push_back(static_cast<Gene>(rng() % 3) - 1);
            const auto d = fit.evaluate(c);
            CHECK(d.mu_cpd_eff() == penalized_mu(d.mu_cpd, d.confidence, 0.3));
            CHECK(d.mu_cpd_eff() >= d.mu_cpd);
            CHECK(d.feasible == (d.nmed() <= 0.05));
            CHECK(fit.evaluate(c).objectives == d.objectives);
        }
    }
}

TEST_CASE("dominance") {
    const Objectives a{0.1, 5, 1}, b{0.2, 6, 2};
    CHECK(pareto_dominates(a, b));
    CHECK_FALSE(pareto_dominates(b, a));
    CHECK_FALSE(pareto_dominates(a, a));
    const std::vector<Objectives> objs{a, b};
    const std::vector<double> feas{-1, -1};
    const auto fronts = nondominated_sort(objs, feas);
    REQUIRE(fronts.size() == 2);
    CHECK(fronts[0] == std::vector<std::size_t>{0});
    // Feasibility beats objectives; infeasible points order by violation.
    CHECK(constrained_dominates(b, 0.0, a, 0.1));
    CHECK(constrained_dominates(b, 0.1, a, 0.2));
    CHECK_FALSE(constrained_dominates(a, 0.2, b, 0.1));
}

TEST_CASE("sorting and crowding against brute force") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 1 + rng() % 200;
        std::vector<Objectives> o(n);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse grid on some sets to exercise ties.
            for (auto& x : o[i]) x = t % 3 == 0 ? std::floor(u(rng) * 5) : u(rng);
            v[i] = t % 2 == 0 ? -1.0 : u(rng) - 0.7;
        }
        auto got = nondominated_sort(o, v);
        auto want = oracle_fronts(o, v);
        for (auto& f : got) std::sort(f.begin(), f.end());
        CHECK(got == want);

        if (t % 3 == 0) continue;  // crowding oracle below assumes distinct values
        for (const auto& f : got) {
            const auto cd = crowding_distance(o, f);
            for (std::size_t i = 0; i < f.size(); ++i) {
                double want_cd = 0;
                if (f.size() <= 2) want_cd = std::numeric_limits<double>::infinity();
                for (int k = 0; k < 3 && f.size() > 2; ++k) {
                    double lo = INFINITY, hi = -INFINITY, below = -INFINITY, above = INFINITY;
                    const double x = o[f[i]][k];
                    for (auto j : f) {
                        const double y = o[j][k];
                        lo = std::min(lo, y);
                        hi = std::max(hi, y);
                        if (y < x) below = std::max(below, y);
                        if (y > x) above = std::min(above, y);
                    }
                    if (x == lo || x == hi) want_cd = INFINITY;
                    else want_cd += (above - below) / (hi - lo);
                }
                if (std::isinf(want_cd)) CHECK(std::isinf(cd[i]));
                else CHECK(cd[i] == doctest::Approx(want_cd).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("mutation") {
    CHECK(mutation_probability(0, 10, 0.5) == doctest::Approx(0.5 / 11));
    CHECK(mutation_probability(10, 10, 0.5) == 0.5);

    const std::vector<int> depth{0, 3, 10, 5};
    const double base = 0.5;
    std::vector<std::size_t> hits(depth.size(), 0);
    std::size_t to_zero = 0;
    std::mt19937_64 rng(9);
    const Chromosome c{{-1, 0, 1, -1}};
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) {
        const auto m = mutate(c, depth, base, rng);
        for (std::size_t i = 0; i < depth.size(); ++i) {
            if (m.genes[i] != c.genes[i]) ++hits[i];
        }
        if (m.genes[0] == 0) ++to_zero;
    }
    for (std::size_t i = 0; i < depth.size(); ++i) {
        const double want = base * (depth[i] + 1) / 11.0;
        CHECK(std::abs(static_cast<double>(hits[i]) / trials - want) < 0.1 * want);
    }
    CHECK(std::abs(static_cast<double>(to_zero) / static_cast<double>(hits[0]) - 0.5) < 0.05);
}

TEST_CASE("uniform crossover") {
    std::mt19937_64 rng(4);
    const Chromosome a{std::vector<Gene>(50, -1)}, b{std::vector<Gene>(50, 1)};
    const auto [x, y] = uniform_crossover(a, b, rng);
    for (std::size_t i = 0; i < 50; ++i) CHECK(x.genes[i] + y.genes[i] == 0);
    CHECK(std::count(x.genes.begin(), x.genes.end(), 1) > 10);
}

TEST_CASE("nsga2 on a 4-bit RCA") {
    const Rca4Setup s;
    GaConfig cfg;
    cfg.population = 30;
    cfg.generations = 30;
    cfg.error_bound = 0.05;
    cfg.seed = 3;
    std::size_t snapshots = 0;
    const auto res = nsga2_run(s.n, s.cs, s.vlib, s.tmap, s.ds, cfg,
                               [&](std::size_t gen, std::span<const EvaluatedDesign>) { CHECK(gen == snapshots++); });
    CHECK(snapshots == 31);
    REQUIRE_FALSE(res.no_feasible);
    REQUIRE_FALSE(res.front.empty());
    CHECK(res.population.size() == 30);

    bool improved = false;
    double ga_best_mu = INFINITY;
    for (const auto& d : res.front) {
        CHECK(d.feasible);
        CHECK(d.nmed() <= 0.05);
        improved = improved || (d.mu_cpd < s.base.cpd.mu && d.nmed() > 0.0);
        ga_best_mu = std::min(ga_best_mu, d.mu_cpd_eff());
        const auto a = apply_chromosome(s.n, s.cs, d.chromosome);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto lib = sample_library(s.vlib, seed, 0.5);
            CHECK(sta_cpd(a, lib) <= sta_cpd(s.n, lib));
        }
    }
    CHECK(improved);
    for (std::size_t g = 1; g < res.best_feasible_nmed.size(); ++g) {
        CHECK(res.best_feasible_nmed[g] <= res.best_feasible_nmed[g - 1]);
    }

    // Reference: every 1- and 2-gene chromosome.
    const FitnessEvaluator fit(s.n, s.cs, s.vlib, s.tmap, s.ds, cfg);
    double enum_best_mu = INFINITY;
    const std::size_t m = s.cs.size();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            for (Gene gi : {0, 1}) {
                for (Gene gj : {0, 1}) {
                    if (i == j && gi != gj) continue;
                    Chromosome c{std::vector<Gene>(m, kExact)};
                    c.genes[i] = gi;
                    c.genes[j] = gj;
                    const auto d = fit.evaluate(c);
                    if (d.feasible) enum_best_mu = std::min(enum_best_mu, d.mu_cpd_eff());
                }
            }
        }
    }
    MESSAGE("rca4 best feasible mu_eff: ga " << ga_best_mu << " vs 2-gene enumeration " << enum_best_mu
                                             << " (baseline " << s.base.cpd.mu << ")");
    CHECK(ga_best_mu <= enum_best_mu * 1.05);
}

TEST_CASE("nsga2 determinism and scheduling independence") {
    const Rca4Setup s;
    GaConfig cfg;
    cfg.population = 20;
    cfg.generations = 10;
    cfg.error_bound = 0.05;
    const auto key = [](const GaResult& r) {
        std::vector<std::pair<Chromosome, Objectives>> v;
        for (const auto& d : r.front) v.emplace_back(d.chromosome, d.objectives);
        for (const auto& d : r.population) v.emplace_back(d.chromosome, d.objectives);
        return v;
    };
    const auto a = key(nsga2_run(s.n, s.cs, s.vlib, s.tmap, s.ds, cfg));
    CHECK(a == key(nsga2_run(s.n, s.cs, s.vlib, s.tmap, s.ds, cfg)));
    CHECK(a == key(nsga2_run_serial(s.n, s.cs, s.vlib, s.tmap, s.ds, cfg)));
    set_threads(3);
    CHECK(a == key(nsga2_run(s.n, s.cs, s.vlib, s.tmap, s.ds, cfg)));
    set_threads(0);
    cfg.seed = 99;
    CHECK(a != key(nsga2_run(s.n, s.cs, s.vlib, s.tmap, s.ds, cfg)));
}

TEST_CASE("nsga2 edge cases") {
    const Rca4Setup s;
    GaConfig cfg;
    cfg.population = 10;
    cfg.generations = 0;
    cfg.init_exact_prob = 1.0;
    const auto r = nsga2_run(s.n, s.cs, s.vlib, s.tmap, s.ds, cfg);
    REQUIRE(r.front.size() == 1);
    CHECK(r.front[0].chromosome.is_exact());

    // Bound 0 without an exact start: either a zero-error design turns up or the flag is set.
    cfg.init_exact_prob = 0.0;
    cfg.error_bound = 0.0;
    cfg.generations = 2;
    const auto nf = nsga2_run(s.n, s.cs, s.vlib, s.tmap, s.ds, cfg);
    for (const auto& d : nf.front) CHECK((nf.no_feasible || d.feasible));
}

TEST_CASE("lowest_output_bit") {
    const auto n = rca(4);
    const auto bit = lowest_output_bit(n);
    CHECK(bit[*n.find_net("a0")] == 0);
    CHECK(bit[*n.find_net("a3")] == 3);
    CHECK(bit[*n.find_net("cout")] == 4);
    CHECK(bit[kGnd] == -1);
}

TEST_CASE("greedy_glp") {
    const auto vlib = default_variation_library();
    const auto nom = nominal_library(vlib);
    SUBCASE("target at baseline CPD") {
        const auto n = rca(8);
        const auto r = greedy_glp(n, nom, generate_dataset(n, 1000, 1), sta_cpd(n, nom));
        CHECK(r.reached);
        CHECK(r.pruned.empty());
        CHECK(r.netlist == n);
    }
    SUBCASE("single chain") {
        const auto n = parse_netlist(
            "circuit c\ninput a\noutput y\ngate g1 INV A=a Y=x1\ngate g2 BUF A=x1 Y=x2\ngate g3 INV A=x2 Y=y\nend\n");
        const double cpd = sta_cpd(n, nom);
        const auto r = greedy_glp(n, nom, generate_dataset(n, 500, 2), cpd - 1.0);
        CHECK(r.pruned.size() >= 1);
        CHECK(r.final_cpd < cpd);
        CHECK(r.reached);
    }
    SUBCASE("8-bit RCA at 0.9x") {
        const auto n = rca(8);
        const double target = 0.9 * sta_cpd(n, nom);
        const auto ds = generate_dataset(n, 2000, 5);
        const auto r = greedy_glp(n, nom, ds, target);
        CHECK(r.reached);
        CHECK(r.final_cpd <= target);
        CHECK(sta_cpd(r.netlist, nom) == r.final_cpd);
        CHECK(!r.pruned.empty());
        const auto again = greedy_glp(n, nom, ds, target);
        CHECK(again.pruned == r.pruned);
        const auto m = simulate_metrics(n, r.netlist, ds);
        MESSAGE("greedy rca8 pruned " << r.pruned.size() << " gates, nmed " << m.nmed);
        CHECK(m.nmed < 0.5);
    }
}
