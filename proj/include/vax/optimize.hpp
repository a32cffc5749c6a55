#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vax/approx.hpp"
#include "vax/celllib.hpp"
#include "vax/errsim.hpp"
#include "vax/netlist.hpp"
#include "vax/timing.hpp"

namespace vax {

struct GaConfig {
    std::size_t population = 100;
    std::size_t generations = 100;
    double crossover_prob = 0.9;
    /// Unset means 2 / |genes|.
    std::optional<double> base_mutation_rate;
    double init_exact_prob = 0.9;
    double lambda = 0.1;
    double error_bound = 1.0;
    std::uint64_t seed = 1;
    std::size_t eval_vectors = 10000;

    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;
    [[nodiscard]] double mutation_rate(std::size_t genes) const;
};

using Objectives = std::array<double, 3>;  // nmed, mu_cpd_eff, sigma_cpd

struct EvaluatedDesign {
    Chromosome chromosome;
    Objectives objectives{};
    double mu_cpd = 0.0;
    double confidence = 1.0;
    bool feasible = true;
    std::size_t rank = 0;
    double crowding = 0.0;

    [[nodiscard]] double nmed() const { return objectives[0]; }
    [[nodiscard]] double mu_cpd_eff() const { return objectives[1]; }
    [[nodiscard]] double sigma_cpd() const { return objectives[2]; }
};

/// mu * (1 + lambda * (1 - confidence)).
inline double penalized_mu(double mu, double confidence, double lambda) {
    return mu * (1.0 + lambda * (1.0 - confidence));
}

std::vector<Chromosome> initialize_population(const GaConfig& cfg, const CandidateSet& cs);

/// Fitness of chromosomes against one baseline; exact outputs are computed once.
class FitnessEvaluator {
public:
    FitnessEvaluator(const Netlist& n, const CandidateSet& cs, const VariationLibrary& lib,
                     const EdgeTransitionMap& tmap, const SimulationDataset& ds, const GaConfig& cfg);

    [[nodiscard]] EvaluatedDesign evaluate(const Chromosome& c) const;

private:
    const Netlist& n_;
    const CandidateSet& cs_;
    const VariationLibrary& lib_;
    const EdgeTransitionMap& tmap_;
    const SimulationDataset& ds_;
    GaConfig cfg_;
    OutputWords exact_;
};

EvaluatedDesign evaluate_individual(const Netlist& n, const CandidateSet& cs, const Chromosome& c,
                                    const VariationLibrary& lib, const EdgeTransitionMap& tmap,
                                    const SimulationDataset& ds, const GaConfig& cfg);

/// Constrained dominance: a feasible point beats an infeasible one, two
/// infeasible points compare by violation, two feasible ones by Pareto order.
bool constrained_dominates(const Objectives& a, double violation_a, const Objectives& b, double violation_b);
bool pareto_dominates(std::span<const double> a, std::span<const double> b);

/// Fronts of point indices, best first. violation <= 0 means feasible.
std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const Objectives> objs,
                                                        std::span<const double> violation);
/// Crowding distance of each member of `front`, aligned with it.
std::vector<double> crowding_distance(std::span<const Objectives> objs, std::span<const std::size_t> front);

/// Distance of each candidate net to the nearest primary output.
std::vector<int> candidate_depths(const Netlist& n, const CandidateSet& cs);

/// Gene i flips with probability base_rate * (d_i + 1) / (D_max + 1) to one of
/// the two other values, uniformly.
Chromosome mutate(const Chromosome& c, std::span<const int> gene_depth, double base_rate, std::mt19937_64& rng);
double mutation_probability(int depth, int max_depth, double base_rate);

std::pair<Chromosome, Chromosome> uniform_crossover(const Chromosome& a, const Chromosome& b, std::mt19937_64& rng);

struct GaResult {
    std::vector<EvaluatedDesign> population;
    std::vector<EvaluatedDesign> front;
    /// Set when no feasible design was found; `front` then holds the
    /// first-rank designs regardless of feasibility.
    bool no_feasible = false;
    /// Smallest feasible nmed in the population after each generation (NaN if none).
    std::vector<double> best_feasible_nmed;
};

using GenerationCallback = std::function<void(std::size_t generation, std::span<const EvaluatedDesign> front)>;

GaResult nsga2_run(const Netlist& n, const CandidateSet& cs, const VariationLibrary& lib,
                   const EdgeTransitionMap& tmap, const SimulationDataset& ds, const GaConfig& cfg,
                   const GenerationCallback& on_generation = {});

/// Serial evaluation of offspring; otherwise identical to nsga2_run.
GaResult nsga2_run_serial(const Netlist& n, const CandidateSet& cs, const VariationLibrary& lib,
                          const EdgeTransitionMap& tmap, const SimulationDataset& ds, const GaConfig& cfg);

// ---------------------------------------------------------------------------
// GreedyGLP

struct GreedyResult {
    Netlist netlist;
    bool reached = false;
    std::vector<std::string> pruned;  // gate instances in pruning order
    double final_cpd = 0.0;
};

/// For every net, the lowest primary-output bit index it can reach (-1 if none).
std::vector<int> lowest_output_bit(const Netlist& n);

/// Repeatedly prunes the critical-path gate with the lowest
/// activity x significance score until the nominal CPD meets target_cpd.
GreedyResult greedy_glp(const Netlist& n, const SampledLibrary& lib, const SimulationDataset& ds, double target_cpd);

}  // namespace vax
