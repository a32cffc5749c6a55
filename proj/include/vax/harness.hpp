#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vax/celllib.hpp"
#include "vax/errsim.hpp"
#include "vax/netlist.hpp"
#include "vax/optimize.hpp"

namespace vax {

enum class BenchmarkFamily { RcaAdder, ClaAdder, ArrayMultiplier, MacFir };

std::string_view family_name(BenchmarkFamily f);
std::optional<BenchmarkFamily> parse_family(std::string_view s);

struct BenchmarkSpec {
    BenchmarkFamily family = BenchmarkFamily::RcaAdder;
    int width = 8;
    int taps = 1;  // mac_fir only
    Signedness signedness = Signedness::Unsigned;

    /// Throws std::invalid_argument for unsupported combinations.
    void validate() const;
    [[nodiscard]] std::string circuit_name() const;
};

/// Structural netlists:
///  rca_adder   a[w], b[w], cin -> s[w], cout (five-gate full-adder slices);
///              signed adds a sign bit s[w] instead of cout
///  cla_adder   same interface, 4-bit lookahead groups rippling between groups
///  array_multiplier  a[w], b[w] -> p[2w], AND2 partial products + ripple rows
///  mac_fir     x_k[w], h_k[w] for k < taps -> y, sum of products chained
Netlist generate_benchmark(const BenchmarkSpec& spec);

struct McEvaluation {
    std::string id;
    double nominal_cpd_ps = 0.0;
    double worst_cpd_ps = 0.0;
    double mean_cpd_ps = 0.0;
    double std_cpd_ps = 0.0;  // population standard deviation
    double nmed = 0.0;        // functional, vs the exact reference
    /// Max over libraries of the stale-value NMED at the baseline clock.
    double worst_case_nmed = 0.0;
    std::size_t violations = 0;  // libraries with CPD > baseline clock
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<double> cpds;  // per library, seed order
};

struct McSettings {
    std::size_t k = 1000;
    std::uint64_t seed = 1;
    double rho = 0.5;
    double baseline_clock_ps = 0.0;
};

/// STA over sampled libraries seed..seed+k-1, parallel across libraries.
McEvaluation monte_carlo_evaluate(const Netlist& exact, const Netlist& n, const VariationLibrary& vlib,
                                  const McSettings& mc, const SimulationDataset& ds, std::string id = {});
McEvaluation monte_carlo_evaluate_serial(const Netlist& exact, const Netlist& n, const VariationLibrary& vlib,
                                         const McSettings& mc, const SimulationDataset& ds, std::string id = {});

/// Designs with no violation at the baseline clock, worst CPD below the
/// baseline nominal CPD and nmed below the bound, reduced to the
/// nondominated set on (nmed, worst_cpd). Input order is kept.
std::vector<McEvaluation> pareto_filter(std::span<const McEvaluation> designs, const McEvaluation& baseline,
                                        double baseline_worstcase_nmed);

/// 100 * (1 - value / baseline); 0 when the baseline is 0.
double reduction_pct(double value, double baseline);

// ---------------------------------------------------------------------------
// Run directories

struct RunConfig {
    std::filesystem::path netlist;
    std::filesystem::path library;  // empty: built-in default library
    double cpb_threshold = 1e-3;
    GaConfig ga;
    /// Negative: use the baseline worst-case NMED at the nominal clock.
    double error_bound = -1.0;
    std::size_t mc_k = 1000;
    std::uint64_t mc_seed = 1;
    std::size_t report_vectors = 100000;
    bool greedy = true;
    Signedness signedness = Signedness::Unsigned;
};

std::string format_run_config(const RunConfig& cfg);
RunConfig parse_run_config(std::string_view text);

struct OptimizeSummary {
    std::size_t candidates = 0;
    std::size_t nets = 0;
    double error_bound = 0.0;
    std::size_t front_size = 0;
    bool no_feasible = false;
};

/// Writes netlists/, libs/, fronts/ and report/config.
OptimizeSummary optimize_run(const RunConfig& cfg, const std::filesystem::path& dir);
/// Reads the front back, writes mc/.
void evaluate_run(const std::filesystem::path& dir);
/// Writes report/*.csv from mc/.
void report_run(const std::filesystem::path& dir);

class RunError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Worst-case stale-value NMED of the exact netlist at its nominal CPD.
double baseline_worstcase_nmed(const Netlist& n, const VariationLibrary& vlib, const McSettings& mc,
                               const SimulationDataset& ds);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view text);

}  // namespace vax
