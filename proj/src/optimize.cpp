#include "vax/optimize.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "vax/rng.hpp"

namespace vax {

namespace {

// RNG stream tags.
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kBreedStream = 0xb4ee;

double violation_of(const EvaluatedDesign& d, double bound) { return d.nmed() - bound; }

}  // namespace

void GaConfig::validate() const {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (population < 2) throw std::invalid_argument("population must be at least 2");
    if (!in01(crossover_prob)) throw std::invalid_argument("crossover probability must be in [0, 1]");
    if (base_mutation_rate && !(*base_mutation_rate > 0.0 && *base_mutation_rate <= 1.0)) {
        throw std::invalid_argument("base mutation rate must be in (0, 1]");
    }
    if (!in01(init_exact_prob)) throw std::invalid_argument("initial exact probability must be in [0, 1]");
    if (!(lambda >= 0.0)) throw std::invalid_argument("confidence penalty must be non-negative");
    if (!in01(error_bound)) throw std::invalid_argument("error bound must be in [0, 1]");
    if (eval_vectors == 0) throw std::invalid_argument("evaluation dataset needs at least one vector");
}

double GaConfig::mutation_rate(std::size_t genes) const {
    if (base_mutation_rate) return *base_mutation_rate;
    if (genes == 0) return 1.0;
    return std::min(1.0, 2.0 / static_cast<double>(genes));
}

std::vector<Chromosome> initialize_population(const GaConfig& cfg, const CandidateSet& cs) {
    cfg.validate();
    std::vector<Chromosome> pop(cfg.population);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        auto rng = make_engine(cfg.seed, {kInitStream, i});
        std::uniform_real_distribution<double> u(0.0, 1.0);
        pop[i].genes.resize(cs.size());
        for (auto& g : pop[i].genes) {
            if (u(rng) < cfg.init_exact_prob) g = kExact;
            else g = static_cast<Gene>(u(rng) < 0.5 ? 0 : 1);
        }
    }
    return pop;
}

// ---------------------------------------------------------------------------
// Fitness

FitnessEvaluator::FitnessEvaluator(const Netlist& n, const CandidateSet& cs, const VariationLibrary& lib,
                                   const EdgeTransitionMap& tmap, const SimulationDataset& ds, const GaConfig& cfg)
    : n_(n), cs_(cs), lib_(lib), tmap_(tmap), ds_(ds), cfg_(cfg), exact_(Evaluator(n).simulate(ds)) {}

EvaluatedDesign FitnessEvaluator::evaluate(const Chromosome& c) const {
    const Netlist approx = apply_chromosome(n_, cs_, c);
    // Serial simulation here: individuals are already evaluated in parallel.
    const Evaluator ev(approx);
    OutputWords out;
    out.count = ds_.size();
    out.po.assign(ev.output_count(), std::vector<std::uint64_t>(ds_.word_count()));
    {
        std::vector<std::uint64_t> slots, in(ev.input_count()), res(ev.output_count());
        for (std::size_t w = 0; w < ds_.word_count(); ++w) {
            for (std::size_t i = 0; i < in.size(); ++i) in[i] = ds_.words(i)[w];
            ev.evaluate_word(in, res, slots);
            for (std::size_t o = 0; o < res.size(); ++o) out.po[o][w] = res[o];
        }
        const auto rem = ds_.size() % 64;
        if (rem != 0) {
            for (auto& p : out.po) p.back() &= (1ULL << rem) - 1;
        }
    }
    const auto metrics = compare_outputs_serial(exact_, out, ds_.signedness());
    const auto ssta = ssta_traverse(approx, lib_, tmap_);

    EvaluatedDesign d;
    d.chromosome = c;
    d.mu_cpd = ssta.cpd.mu;
    d.confidence = ssta.confidence;
    d.objectives = {metrics.nmed, penalized_mu(d.mu_cpd, d.confidence, cfg_.lambda), ssta.cpd.sigma()};
    d.feasible = metrics.nmed <= cfg_.error_bound;
    return d;
}

EvaluatedDesign evaluate_individual(const Netlist& n, const CandidateSet& cs, const Chromosome& c,
                                    const VariationLibrary& lib, const EdgeTransitionMap& tmap,
                                    const SimulationDataset& ds, const GaConfig& cfg) {
    return FitnessEvaluator(n, cs, lib, tmap, ds, cfg).evaluate(c);
}

// ---------------------------------------------------------------------------
// Sorting

bool pareto_dominates(std::span<const double> a, std::span<const double> b) {
    bool strictly = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strictly = true;
    }
    return strictly;
}

bool constrained_dominates(const Objectives& a, double violation_a, const Objectives& b, double violation_b) {
    const bool fa = violation_a <= 0.0, fb = violation_b <= 0.0;
    if (fa && !fb) return true;
    if (!fa && fb) return false;
    if (!fa) return violation_a < violation_b;
    return pareto_dominates(a, b);
}

std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const Objectives> objs,
                                                        std::span<const double> violation) {
    const std::size_t n = objs.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> count(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (constrained_dominates(objs[p], violation[p], objs[q], violation[q])) {
                dominated[p].push_back(q);
                ++count[q];
            } else if (constrained_dominates(objs[q], violation[q], objs[p], violation[p])) {
                dominated[q].push_back(p);
                ++count[p];
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p) {
        if (count[p] == 0) fronts[0].push_back(p);
    }
    while (!fronts.back().empty()) {
        std::vector<std::size_t> next;
        for (std::size_t p : fronts.back()) {
            for (std::size_t q : dominated[p]) {
                if (--count[q] == 0) next.push_back(q);
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(next));
    }
    fronts.pop_back();
    return fronts;
}

std::vector<double> crowding_distance(std::span<const Objectives> objs, std::span<const std::size_t> front) {
    const std::size_t m = front.size();
    std::vector<double> dist(m, 0.0);
    if (m <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    std::vector<std::size_t> order(m);
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < m; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return objs[front[a]][k] < objs[front[b]][k]; });
        const double lo = objs[front[order.front()]][k];
        const double hi = objs[front[order.back()]][k];
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        if (!(hi > lo)) continue;
        for (std::size_t i = 1; i + 1 < m; ++i) {
            dist[order[i]] += (objs[front[order[i + 1]]][k] - objs[front[order[i - 1]]][k]) / (hi - lo);
        }
    }
    return dist;
}

// ---------------------------------------------------------------------------
// Variation operators

std::vector<int> candidate_depths(const Netlist& n, const CandidateSet& cs) {
    const auto depth = depth_to_output(n);
    std::vector<int> out(cs.size(), 0);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (auto id = n.find_net(cs.nets[i])) out[i] = std::max(0, depth[*id]);
    }
    return out;
}

double mutation_probability(int depth, int max_depth, double base_rate) {
    return base_rate * static_cast<double>(depth + 1) / static_cast<double>(max_depth + 1);
}

Chromosome mutate(const Chromosome& c, std::span<const int> gene_depth, double base_rate, std::mt19937_64& rng) {
    const int dmax = gene_depth.empty() ? 0 : *std::max_element(gene_depth.begin(), gene_depth.end());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Chromosome out = c;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (u(rng) >= mutation_probability(gene_depth[i], dmax, base_rate)) continue;
        // The two values other than the current one, in ascending order.
        const Gene cur = out.genes[i];
        std::array<Gene, 2> alt{};
        std::size_t k = 0;
        for (Gene g = -1; g <= 1; ++g) {
            if (g != cur) alt[k++] = g;
        }
        out.genes[i] = alt[u(rng) < 0.5 ? 0 : 1];
    }
    return out;
}

std::pair<Chromosome, Chromosome> uniform_crossover(const Chromosome& a, const Chromosome& b, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Chromosome x = a, y = b;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (u(rng) < 0.5) std::swap(x.genes[i], y.genes[i]);
    }
    return {std::move(x), std::move(y)};
}

// ---------------------------------------------------------------------------
// NSGA-II

namespace {

void assign_rank_and_crowding(std::vector<EvaluatedDesign>& pop, double bound) {
    std::vector<Objectives> objs;
    std::vector<double> viol;
    for (const auto& d : pop) {
        objs.push_back(d.objectives);
        viol.push_back(violation_of(d, bound));
    }
    const auto fronts = nondominated_sort(objs, viol);
    for (std::size_t r = 0; r < fronts.size(); ++r) {
        const auto cd = crowding_distance(objs, fronts[r]);
        for (std::size_t i = 0; i < fronts[r].size(); ++i) {
            pop[fronts[r][i]].rank = r;
            pop[fronts[r][i]].crowding = cd[i];
        }
    }
}

// Environmental selection over R = P u Q; keeps `size` designs.
std::vector<EvaluatedDesign> select_survivors(std::vector<EvaluatedDesign> merged, std::size_t size, double bound) {
    std::vector<Objectives> objs;
    std::vector<double> viol;
    for (const auto& d : merged) {
        objs.push_back(d.objectives);
        viol.push_back(violation_of(d, bound));
    }
    const auto fronts = nondominated_sort(objs, viol);
    std::vector<EvaluatedDesign> next;
    next.reserve(size);
    for (std::size_t r = 0; r < fronts.size() && next.size() < size; ++r) {
        const auto cd = crowding_distance(objs, fronts[r]);
        std::vector<std::size_t> order(fronts[r].size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        if (next.size() + order.size() > size) {
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cd[a] > cd[b]; });
            order.resize(size - next.size());
        }
        for (std::size_t i : order) {
            EvaluatedDesign d = merged[fronts[r][i]];
            d.rank = r;
            d.crowding = cd[i];
            next.push_back(std::move(d));
        }
    }
    return next;
}

std::size_t tournament(const std::vector<EvaluatedDesign>& pop, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    const std::size_t a = pick(rng), b = pick(rng);
    if (pop[a].rank != pop[b].rank) return pop[a].rank < pop[b].rank ? a : b;
    if (pop[a].crowding != pop[b].crowding) return pop[a].crowding > pop[b].crowding ? a : b;
    return std::min(a, b);
}

using Cache = std::map<std::vector<Gene>, EvaluatedDesign>;

// Evaluates every chromosome, reusing cached results. Unseen chromosomes
// are deduplicated and evaluated (in parallel when `parallel`).
std::vector<EvaluatedDesign> evaluate_all(const std::vector<Chromosome>& chroms, const FitnessEvaluator& fit,
                                          Cache& cache, bool parallel) {
    std::vector<Chromosome> todo;
    for (const auto& c : chroms) {
        if (!cache.contains(c.genes)) {
            cache.emplace(c.genes, EvaluatedDesign{});
            todo.push_back(c);
        }
    }
    std::vector<EvaluatedDesign> results(todo.size());
    const auto count = static_cast<std::int64_t>(todo.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < count; ++i) {
            results[static_cast<std::size_t>(i)] = fit.evaluate(todo[static_cast<std::size_t>(i)]);
        }
    } else {
        for (std::int64_t i = 0; i < count; ++i) {
            results[static_cast<std::size_t>(i)] = fit.evaluate(todo[static_cast<std::size_t>(i)]);
        }
    }
    for (std::size_t i = 0; i < todo.size(); ++i) cache[todo[i].genes] = std::move(results[i]);
    std::vector<EvaluatedDesign> out;
    out.reserve(chroms.size());
    for (const auto& c : chroms) out.push_back(cache.at(c.genes));
    return out;
}

std::vector<EvaluatedDesign> first_front(const std::vector<EvaluatedDesign>& pop) {
    std::vector<EvaluatedDesign> front;
    for (const auto& d : pop) {
        if (d.rank != 0) continue;
        const bool dup = std::any_of(front.begin(), front.end(),
                                     [&](const EvaluatedDesign& e) { return e.chromosome == d.chromosome; });
        if (!dup) front.push_back(d);
    }
    std::sort(front.begin(), front.end(), [](const EvaluatedDesign& a, const EvaluatedDesign& b) {
        if (a.objectives != b.objectives) return a.objectives < b.objectives;
        return a.chromosome < b.chromosome;
    });
    return front;
}

double best_feasible(const std::vector<EvaluatedDesign>& pop) {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const auto& d : pop) {
        if (d.feasible && !(d.nmed() >= best)) best = d.nmed();
    }
    return best;
}

GaResult run(const Netlist& n, const CandidateSet& cs, const VariationLibrary& lib, const EdgeTransitionMap& tmap,
             const SimulationDataset& ds, const GaConfig& cfg, const GenerationCallback& on_generation,
             bool parallel) {
    cfg.validate();
    const FitnessEvaluator fit(n, cs, lib, tmap, ds, cfg);
    const auto depths = candidate_depths(n, cs);
    const double rate = cfg.mutation_rate(cs.size());
    Cache cache;

    GaResult res;
    auto pop = evaluate_all(initialize_population(cfg, cs), fit, cache, parallel);
    assign_rank_and_crowding(pop, cfg.error_bound);
    res.best_feasible_nmed.push_back(best_feasible(pop));
    if (on_generation) on_generation(0, first_front(pop));

    for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
        std::vector<Chromosome> children;
        children.reserve(cfg.population + 1);
        for (std::size_t k = 0; children.size() < cfg.population; ++k) {
            auto rng = make_engine(cfg.seed, {kBreedStream, gen, k});
            std::uniform_real_distribution<double> u(0.0, 1.0);
            const auto& pa = pop[tournament(pop, rng)].chromosome;
            const auto& pb = pop[tournament(pop, rng)].chromosome;
            auto [ca, cb] = u(rng) < cfg.crossover_prob ? uniform_crossover(pa, pb, rng) : std::pair{pa, pb};
            children.push_back(mutate(ca, depths, rate, rng));
            if (children.size() < cfg.population) children.push_back(mutate(cb, depths, rate, rng));
        }
        auto offspring = evaluate_all(children, fit, cache, parallel);
        std::vector<EvaluatedDesign> merged = std::move(pop);
        merged.insert(merged.end(), std::make_move_iterator(offspring.begin()),
                      std::make_move_iterator(offspring.end()));
        pop = select_survivors(std::move(merged), cfg.population, cfg.error_bound);
        res.best_feasible_nmed.push_back(best_feasible(pop));
        if (on_generation) on_generation(gen, first_front(pop));
    }

    res.front = first_front(pop);
    std::vector<EvaluatedDesign> feasible;
    for (const auto& d : res.front) {
        if (d.feasible) feasible.push_back(d);
    }
    if (feasible.empty()) {
        res.no_feasible = true;
    } else {
        res.front = std::move(feasible);
    }
    res.population = std::move(pop);
    return res;
}

}  // namespace

GaResult nsga2_run(const Netlist& n, const CandidateSet& cs, const VariationLibrary& lib,
                   const EdgeTransitionMap& tmap, const SimulationDataset& ds, const GaConfig& cfg,
                   const GenerationCallback& on_generation) {
    return run(n, cs, lib, tmap, ds, cfg, on_generation, true);
}

GaResult nsga2_run_serial(const Netlist& n, const CandidateSet& cs, const VariationLibrary& lib,
                          const EdgeTransitionMap& tmap, const SimulationDataset& ds, const GaConfig& cfg) {
    return run(n, cs, lib, tmap, ds, cfg, {}, false);
}

// ---------------------------------------------------------------------------
// GreedyGLP

std::vector<int> lowest_output_bit(const Netlist& n) {
    std::vector<int> bit(n.net_count(), -1);
    auto merge = [](int& slot, int v) {
        if (v >= 0 && (slot < 0 || v < slot)) slot = v;
    };
    const auto outs = n.outputs();
    for (std::size_t i = 0; i < outs.size(); ++i) merge(bit[outs[i]], static_cast<int>(i));
    const auto gates = n.gates();
    for (std::size_t g = gates.size(); g-- > 0;) {
        for (NetId in : gates[g].inputs()) merge(bit[in], bit[gates[g].out]);
    }
    return bit;
}

GreedyResult greedy_glp(const Netlist& n, const SampledLibrary& lib, const SimulationDataset& ds, double target_cpd) {
    GreedyResult res{n, false, {}, 0.0};
    const std::size_t count = ds.size();
    const double outputs = static_cast<double>(n.outputs().size());
    while (true) {
        const auto sta = sta_arrivals(res.netlist, lib);
        res.final_cpd = sta.cpd;
        if (sta.cpd <= target_cpd) {
            res.reached = true;
            break;
        }
        const auto path = extract_critical_path(res.netlist, sta);
        if (path.empty()) break;

        const Netlist& cur = res.netlist;
        const auto nets = Evaluator(cur).simulate_nets(ds);
        const auto low_bit = lowest_output_bit(cur);
        std::size_t best_gate = 0;
        double best_score = std::numeric_limits<double>::infinity();
        bool best_value = false;
        bool found = false;
        for (const auto& step : path) {
            const Gate& g = cur.gates()[step.gate];
            const auto& w = nets[g.out];
            std::size_t toggles = 0, ones = 0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                ones += static_cast<std::size_t>(std::popcount(w[i]));
                const std::uint64_t prev = (w[i] << 1) | (i == 0 ? (w[0] & 1U) : (w[i - 1] >> 63));
                std::uint64_t diff = w[i] ^ prev;
                if (i + 1 == w.size() && count % 64 != 0) diff &= (1ULL << (count % 64)) - 1;
                toggles += static_cast<std::size_t>(std::popcount(diff));
            }
            const double activity = count > 1 ? static_cast<double>(toggles) / static_cast<double>(count - 1) : 0.0;
            const int b = low_bit[g.out];
            const double significance = b < 0 ? 0.0 : std::exp2(static_cast<double>(b) - (outputs - 1.0));
            const double score = activity * significance;
            if (!found || score < best_score || (score == best_score && g.name < cur.gates()[best_gate].name)) {
                found = true;
                best_score = score;
                best_gate = step.gate;
                best_value = ones * 2 > count;
            }
        }
        if (!found) break;
        const Gate& victim = cur.gates()[best_gate];
        res.pruned.push_back(victim.name);
        const std::pair<NetId, bool> tie{victim.out, best_value};
        res.netlist = simplify_constants(tie_nets(cur, std::span(&tie, 1)));
    }
    return res;
}

}  // namespace vax
