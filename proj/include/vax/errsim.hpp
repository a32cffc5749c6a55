#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vax/celllib.hpp"
#include "vax/netlist.hpp"

namespace vax {

enum class Signedness : std::uint8_t { Unsigned, TwosComplement };

/// Primary-input vectors, bit-packed 64 per word and stored per input.
/// Bits past size() in the last word are zero.
class SimulationDataset {
public:
    SimulationDataset() = default;
    SimulationDataset(std::vector<std::string> pi_names, std::size_t count, std::uint64_t seed,
                      Signedness signedness, std::vector<std::vector<std::uint64_t>> words);

    [[nodiscard]] std::size_t size() const { return count_; }
    [[nodiscard]] std::size_t input_count() const { return words_.size(); }
    [[nodiscard]] std::size_t word_count() const { return (count_ + 63) / 64; }
    [[nodiscard]] std::span<const std::uint64_t> words(std::size_t pi) const { return words_[pi]; }
    [[nodiscard]] bool bit(std::size_t vector, std::size_t pi) const {
        return ((words_[pi][vector / 64] >> (vector % 64)) & 1U) != 0;
    }
    [[nodiscard]] const std::vector<std::string>& pi_names() const { return pi_names_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] Signedness signedness() const { return signedness_; }

    /// Vectors of `a` followed by those of `b`.
    static SimulationDataset concat(const SimulationDataset& a, const SimulationDataset& b);

private:
    std::vector<std::string> pi_names_;
    std::size_t count_ = 0;
    std::uint64_t seed_ = 0;
    Signedness signedness_ = Signedness::Unsigned;
    std::vector<std::vector<std::uint64_t>> words_;
};

inline constexpr std::size_t kMaxExhaustiveInputs = 20;

/// `count` uniform i.i.d. vectors from a seeded PRNG, or every one of the
/// 2^|PI| input patterns in index order when `exhaustive` is set (requires
/// |PI| <= 20; `count` is then ignored).
SimulationDataset generate_dataset(const Netlist& n, std::size_t count, std::uint64_t seed,
                                   bool exhaustive = false, Signedness signedness = Signedness::Unsigned);

std::string format_dataset(const SimulationDataset& ds);
SimulationDataset parse_dataset(std::string_view text);

/// Primary-output bits, packed like the dataset: [po][word].
struct OutputWords {
    std::size_t count = 0;
    std::vector<std::vector<std::uint64_t>> po;

    [[nodiscard]] bool bit(std::size_t vector, std::size_t out) const {
        return ((po[out][vector / 64] >> (vector % 64)) & 1U) != 0;
    }
};

/// Netlist compiled to a straight-line program over net slots.
class Evaluator {
public:
    explicit Evaluator(const Netlist& n);

    [[nodiscard]] std::size_t input_count() const { return inputs_.size(); }
    [[nodiscard]] std::size_t output_count() const { return outputs_.size(); }

    /// One vector. inputs[i] drives primary input i.
    [[nodiscard]] std::vector<std::uint8_t> evaluate(std::span<const std::uint8_t> inputs) const;

    /// 64 vectors at once; `slots` is caller-provided scratch.
    void evaluate_word(std::span<const std::uint64_t> pi_words, std::span<std::uint64_t> po_words,
                       std::vector<std::uint64_t>& slots) const;

    /// Bit-parallel over dataset words, OpenMP across words.
    [[nodiscard]] OutputWords simulate(const SimulationDataset& ds) const;
    /// Reference: one vector at a time through evaluate().
    [[nodiscard]] OutputWords simulate_serial(const SimulationDataset& ds) const;

    /// Value of every net for every vector: [net][word].
    [[nodiscard]] std::vector<std::vector<std::uint64_t>> simulate_nets(const SimulationDataset& ds) const;

private:
    struct Op {
        CellKind kind;
        std::array<NetId, kMaxPins> in;
        NetId out;
    };
    std::size_t slot_count_ = 0;
    std::vector<NetId> inputs_;
    std::vector<NetId> outputs_;
    std::vector<Op> program_;
};

Evaluator compile_evaluator(const Netlist& n);

struct ErrorMetrics {
    double nmed = 0.0;
    double mred = 0.0;
    double error_rate = 0.0;
    std::uint64_t max_ed = 0;
    /// Sum of error distances, exact while below 2^53.
    double sum_ed = 0.0;
    std::size_t count = 0;
};

class InterfaceMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kMaxOutputBits = 64;

/// Error of `approx` against `exact` under the output integer interpretation.
/// NMED = mean(ED) / (2^|PO| - 1); MRED = mean(ED / max(1, |Y|)).
ErrorMetrics compare_outputs(const OutputWords& exact, const OutputWords& approx, Signedness signedness);
ErrorMetrics compare_outputs_serial(const OutputWords& exact, const OutputWords& approx, Signedness signedness);

/// Integer value of output vector `v`.
std::int64_t output_value(const OutputWords& out, std::size_t v, Signedness signedness);

ErrorMetrics simulate_metrics(const Netlist& exact, const Netlist& approx, const SimulationDataset& ds);

/// Stale-value timing errors: an output whose STA arrival exceeds `clock_ps`
/// shows its value from the previous vector (the first vector is correct).
ErrorMetrics timing_error_metrics(const Netlist& n, const SampledLibrary& lib, double clock_ps,
                                  const SimulationDataset& ds);

/// Same model with precomputed exact outputs and per-output arrivals.
ErrorMetrics stale_value_metrics(const OutputWords& exact, std::span<const double> po_arrival, double clock_ps,
                                 Signedness signedness);
/// Late outputs of `observed` go stale; the result is measured against `reference`.
ErrorMetrics stale_value_metrics(const OutputWords& reference, const OutputWords& observed,
                                 std::span<const double> po_arrival, double clock_ps, Signedness signedness);

}  // namespace vax
