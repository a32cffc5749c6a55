#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vax/celllib.hpp"
#include "vax/netlist.hpp"

namespace vax {

// ---------------------------------------------------------------------------
// Gaussian delay random variables

struct DelayRV {
    double mu = 0.0;
    double var = 0.0;

    [[nodiscard]] double sigma() const { return std::sqrt(var); }
    friend bool operator==(const DelayRV&, const DelayRV&) = default;
};

/// Standard normal CDF via erfc; absolute error well below 1e-15.
double normal_cdf(double x);

/// Sum of independent Gaussians.
DelayRV rv_sum(DelayRV x, DelayRV y);

/// P(X > Y) = 1 - Phi((mu_y - mu_x) / sqrt(var_x + var_y)). When both
/// variances are zero: 1, 0 or 0.5 by comparing the means.
double rv_gt_prob(DelayRV x, DelayRV y);

// ---------------------------------------------------------------------------
// Deterministic STA over one sampled library

inline constexpr double kUntimed = -std::numeric_limits<double>::infinity();

/// Winning predecessor of one (net, edge) arrival.
struct ArrivalPred {
    std::int8_t pin = -1;  // -1 at primary inputs and constants
    Edge in_edge = Edge::Rise;
};

struct StaResult {
    std::vector<std::array<double, 2>> arrival;  // per net, [rise, fall]; kUntimed for constants
    std::vector<std::array<ArrivalPred, 2>> pred;
    std::vector<double> po_arrival;              // worst edge per primary output
    double cpd = 0.0;
    std::optional<std::size_t> endpoint;         // primary output index
    Edge endpoint_edge = Edge::Rise;
};

/// Dual-transition longest-path propagation. Primary inputs arrive at 0 on
/// both edges, constants never arrive.
StaResult sta_arrivals(const Netlist& n, const SampledLibrary& lib);

/// CPD only, without predecessor bookkeeping.
double sta_cpd(const Netlist& n, const SampledLibrary& lib);

struct PathStep {
    std::size_t gate;
    std::uint8_t pin;
    Edge in_edge;
    Edge out_edge;
};

/// Backtracks the worst endpoint through argmax predecessors. Ordered from
/// the primary input side to the output.
std::vector<PathStep> extract_critical_path(const Netlist& n, const StaResult& sta);

/// CPDs over the sampled libraries with seeds seed..seed+k-1. The parallel
/// version returns the same vector regardless of thread count.
std::vector<double> monte_carlo_cpds(const Netlist& n, const VariationLibrary& lib, std::uint64_t seed,
                                     std::size_t k, double rho);
std::vector<double> monte_carlo_cpds_serial(const Netlist& n, const VariationLibrary& lib,
                                            std::uint64_t seed, std::size_t k, double rho);

// ---------------------------------------------------------------------------
// Statistical traversal

/// Output transition used for each gate input arc during the statistical
/// traversal. Keyed by gate instance name so it carries over to
/// approximate netlists derived from the annotated one.
class EdgeTransitionMap {
public:
    void set(const std::string& gate, std::uint8_t pin, Edge e) { map_[gate][pin] = e; }
    [[nodiscard]] std::optional<Edge> find(const std::string& gate, std::uint8_t pin) const;
    /// Throws std::out_of_range if the gate is unknown.
    [[nodiscard]] Edge at(const std::string& gate, std::uint8_t pin) const;
    [[nodiscard]] bool covers(const Netlist& n) const;
    [[nodiscard]] std::size_t size() const { return map_.size(); }

    std::string to_json() const;
    static EdgeTransitionMap from_json(std::string_view text);

private:
    std::unordered_map<std::string, std::array<Edge, kMaxPins>> map_;
};

/// The output edge whose arc has the larger mean (rise on ties).
Edge slower_edge(const VariationLibrary& lib, CellKind kind, std::size_t pin);

/// Every arc at its slower_edge.
EdgeTransitionMap default_edge_transitions(const Netlist& n, const VariationLibrary& lib);

/// Modal critical-path transition per gate input over k sampled libraries
/// (seeds seed..seed+k-1, rho = lib.rho_default()); arcs never seen on a
/// critical path fall back to slower_edge.
EdgeTransitionMap annotate_edge_transitions(const Netlist& n, const VariationLibrary& lib, std::size_t k,
                                            std::uint64_t seed);

struct SstaResult {
    std::vector<std::optional<DelayRV>> arrival;     // per net
    std::vector<std::optional<DelayRV>> po_arrival;  // per primary output
    DelayRV cpd;
    std::optional<std::size_t> endpoint;
    double confidence = 1.0;
    std::vector<std::int8_t> critical_fanin;         // per gate; -1 if untimed
    std::vector<double> endpoint_prob;               // per primary output, sums to 1
    std::vector<double> cpb;                         // per net
};

SstaResult ssta_traverse(const Netlist& n, const VariationLibrary& lib, const EdgeTransitionMap& tmap);

/// p_i = C_i / sum_j C_j with C_i = prod_{j != i} P(D_i > D_j). Untimed
/// outputs get probability 0. When `po_nets` is given, outputs sharing a net
/// are not compared against each other.
std::vector<double> endpoint_probabilities(std::span<const std::optional<DelayRV>> po_arrival,
                                          std::span<const NetId> po_nets = {});

/// Reverse-topological mass propagation: a net collects the CPB of every
/// gate whose critical fanin it drives, plus the endpoint probability of
/// each primary output it feeds.
std::vector<double> cpb_backprop(const Netlist& n, std::span<const std::int8_t> critical_fanin,
                                 std::span<const double> endpoint_prob);

}  // namespace vax
