#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace vax {

using NetId = std::uint32_t;

// Reserved constant nets. Every netlist owns them at ids 0 and 1.
inline constexpr NetId kGnd = 0;
inline constexpr NetId kVdd = 1;
inline constexpr std::string_view kGndName = "GND";
inline constexpr std::string_view kVddName = "VDD";

enum class CellKind : std::uint8_t { INV, BUF, AND2, OR2, NAND2, NOR2, XOR2, XNOR2, MUX2 };
inline constexpr std::size_t kCellKindCount = 9;
inline constexpr std::size_t kMaxPins = 3;

enum class Unateness : std::uint8_t { Positive, Negative, NonUnate };

struct CellInfo {
    std::string_view name;
    std::uint8_t arity;
    std::array<std::string_view, kMaxPins> pins;
    std::array<Unateness, kMaxPins> unateness;
};

const CellInfo& cell_info(CellKind kind);
std::optional<CellKind> parse_cell_kind(std::string_view name);
std::optional<std::uint8_t> pin_index(CellKind kind, std::string_view pin);

inline constexpr std::array<CellKind, kCellKindCount> kAllCellKinds{
    CellKind::INV, CellKind::BUF, CellKind::AND2, CellKind::OR2, CellKind::NAND2,
    CellKind::NOR2, CellKind::XOR2, CellKind::XNOR2, CellKind::MUX2};

/// Boolean cell function. Works on `bool` and on 64-lane bit words alike.
/// MUX2 selects B when S is set.
template <class Word>
constexpr Word eval_cell(CellKind kind, Word a, Word b, Word s) {
    switch (kind) {
    case CellKind::INV: return ~a;
    case CellKind::BUF: return a;
    case CellKind::AND2: return a & b;
    case CellKind::OR2: return a | b;
    case CellKind::NAND2: return ~(a & b);
    case CellKind::NOR2: return ~(a | b);
    case CellKind::XOR2: return a ^ b;
    case CellKind::XNOR2: return ~(a ^ b);
    case CellKind::MUX2: return (s & b) | (~s & a);
    }
    return a;
}

template <>
constexpr bool eval_cell<bool>(CellKind kind, bool a, bool b, bool s) {
    return (eval_cell<unsigned>(kind, a ? 1u : 0u, b ? 1u : 0u, s ? 1u : 0u) & 1u) != 0;
}

struct Gate {
    std::string name;
    CellKind kind{CellKind::BUF};
    std::array<NetId, kMaxPins> fanin{};
    NetId out{0};

    [[nodiscard]] std::size_t arity() const { return cell_info(kind).arity; }
    [[nodiscard]] std::span<const NetId> inputs() const { return {fanin.data(), arity()}; }
};

/// A gate input pin reading a net.
struct Sink {
    std::uint32_t gate;
    std::uint8_t pin;
};

class NetlistError : public std::runtime_error {
public:
    enum class Kind { Syntax, UnknownCell, Cycle, MultipleDrivers, UndrivenNet, DuplicateName, Interface };

    NetlistError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class ParseError : public NetlistError {
public:
    ParseError(Kind kind, std::size_t line, std::size_t col, const std::string& msg);
    [[nodiscard]] std::size_t line() const { return line_; }
    [[nodiscard]] std::size_t column() const { return col_; }

private:
    std::size_t line_;
    std::size_t col_;
};

/// Validated combinational gate-level netlist.
///
/// Immutable once constructed. Construction canonicalizes the net numbering:
/// GND and VDD first, then primary inputs in declaration order, then gate
/// outputs in topological order. Gates are stored topologically sorted, with
/// ready gates taken in lexicographic instance-name order, so gate index
/// equals topological position.
class Netlist {
public:
    Netlist();

    /// Builds from gates whose net ids index into `net_names`. `net_names[0]`
    /// and `net_names[1]` must be GND and VDD. Throws NetlistError.
    Netlist(std::string name, std::vector<std::string> net_names, std::vector<NetId> inputs,
            std::vector<NetId> outputs, std::vector<Gate> gates);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] std::size_t net_count() const { return net_names_.size(); }
    [[nodiscard]] const std::string& net_name(NetId id) const { return net_names_[id]; }
    [[nodiscard]] const std::vector<std::string>& net_names() const { return net_names_; }
    [[nodiscard]] std::optional<NetId> find_net(std::string_view name) const;

    [[nodiscard]] std::span<const NetId> inputs() const { return inputs_; }
    [[nodiscard]] std::span<const NetId> outputs() const { return outputs_; }
    [[nodiscard]] std::span<const Gate> gates() const { return gates_; }
    [[nodiscard]] std::size_t gate_count() const { return gates_.size(); }
    [[nodiscard]] std::optional<std::size_t> find_gate(std::string_view name) const;

    /// Index of the driving gate, or -1 for constants and primary inputs.
    [[nodiscard]] std::int32_t driver(NetId net) const { return driver_[net]; }
    [[nodiscard]] std::span<const Sink> fanout(NetId net) const {
        return {fanout_.data() + fanout_begin_[net], fanout_begin_[net + 1] - fanout_begin_[net]};
    }
    [[nodiscard]] bool is_constant(NetId net) const { return net == kGnd || net == kVdd; }
    [[nodiscard]] bool is_input(NetId net) const { return net >= 2 && net < 2 + inputs_.size(); }
    /// Number of primary outputs referencing the net.
    [[nodiscard]] std::uint32_t po_refs(NetId net) const { return po_refs_[net]; }

    friend bool operator==(const Netlist& a, const Netlist& b);

private:
    std::string name_;
    std::vector<std::string> net_names_;
    std::vector<NetId> inputs_;
    std::vector<NetId> outputs_;
    std::vector<Gate> gates_;
    std::vector<std::int32_t> driver_;
    std::vector<std::uint32_t> fanout_begin_;
    std::vector<Sink> fanout_;
    std::vector<std::uint32_t> po_refs_;
    std::unordered_map<std::string, NetId> net_index_;
    std::unordered_map<std::string, std::size_t> gate_index_;
};

Netlist parse_netlist(std::string_view text);
std::string write_netlist(const Netlist& n);

/// Gates in topological order (drivers first, name-ordered ties).
std::span<const Gate> topological_order(const Netlist& n);

/// Folds constants through gates until fixpoint, then deletes gates that
/// drive nothing. Never inserts cells.
Netlist simplify_constants(const Netlist& n);

/// Reconnects every sink (gate pins and primary outputs) of each listed net
/// to GND (false) or VDD (true). The interface is unchanged; gates left
/// without fanout are not removed here.
Netlist tie_nets(const Netlist& n, std::span<const std::pair<NetId, bool>> ties);

inline constexpr int kUnreachable = -1;

/// Minimum number of gates between each net and any primary output. Primary
/// output nets are 0; nets that reach no output get kUnreachable.
std::vector<int> depth_to_output(const Netlist& n);

/// 64-bit FNV-1a over the canonical text form.
std::uint64_t fingerprint(const Netlist& n);

}  // namespace vax
