#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vax/netlist.hpp"
#include "vax/timing.hpp"

namespace vax {

/// Nets eligible for approximation, ordered by descending CPB then name.
struct CandidateSet {
    std::vector<std::string> nets;
    std::vector<double> cpb;  // aligned with nets
    double threshold = 1e-3;
    std::uint64_t source_fingerprint = 0;

    [[nodiscard]] std::size_t size() const { return nets.size(); }
};

inline constexpr double kDefaultCpbThreshold = 1e-3;

/// Primary inputs and gate outputs with CPB >= cpb_t. cpb_t must be in (0, 1].
CandidateSet build_candidates(const Netlist& n, const SstaResult& ssta, double cpb_t = kDefaultCpbThreshold);

using Gene = std::int8_t;
inline constexpr Gene kExact = -1;

/// genes[i] in {-1, 0, 1}: keep candidate i exact, or tie it to GND / VDD.
struct Chromosome {
    std::vector<Gene> genes;

    [[nodiscard]] std::size_t size() const { return genes.size(); }
    [[nodiscard]] bool is_exact() const;
    friend bool operator==(const Chromosome&, const Chromosome&) = default;
    friend auto operator<=>(const Chromosome&, const Chromosome&) = default;
};

class ChromosomeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws ChromosomeError unless the chromosome has one {-1,0,1} gene per candidate.
void validate(const Chromosome& c, const CandidateSet& cs);

/// Ties every non-exact candidate net to its constant, then simplifies.
/// Candidates are resolved by net name; names absent from `n` are skipped.
Netlist apply_chromosome(const Netlist& n, const CandidateSet& cs, const Chromosome& c);

/// Hamming distance. Throws ChromosomeError on length mismatch.
std::size_t chromosome_distance(const Chromosome& a, const Chromosome& b);

// Chromosome files: a header line `fingerprint <16 hex digits> genes <count>`
// followed by one comma-separated chromosome per line.
std::string format_chromosomes(const CandidateSet& cs, std::span<const Chromosome> chromosomes);
/// Throws ChromosomeError if the fingerprint or gene count disagrees with `cs`.
std::vector<Chromosome> parse_chromosomes(std::string_view text, const CandidateSet& cs);

// Candidate files: header `fingerprint <hex> threshold <t>`, then `<net> <cpb>` lines.
std::string format_candidates(const CandidateSet& cs);
CandidateSet parse_candidates(std::string_view text);

std::string hex64(std::uint64_t v);

}  // namespace vax
