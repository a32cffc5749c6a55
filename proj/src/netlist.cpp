#include "vax/netlist.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <sstream>

namespace vax {

namespace {

constexpr auto P = Unateness::Positive;
constexpr auto N = Unateness::Negative;
constexpr auto X = Unateness::NonUnate;

constexpr std::array<CellInfo, kCellKindCount> kCells{{
    {"INV", 1, {"A", "", ""}, {N, P, P}},
    {"BUF", 1, {"A", "", ""}, {P, P, P}},
    {"AND2", 2, {"A", "B", ""}, {P, P, P}},
    {"OR2", 2, {"A", "B", ""}, {P, P, P}},
    {"NAND2", 2, {"A", "B", ""}, {N, N, P}},
    {"NOR2", 2, {"A", "B", ""}, {N, N, P}},
    {"XOR2", 2, {"A", "B", ""}, {X, X, P}},
    {"XNOR2", 2, {"A", "B", ""}, {X, X, P}},
    {"MUX2", 3, {"A", "B", "S"}, {P, P, X}},
}};

std::string quoted(std::string_view s) { return "'" + std::string(s) + "'"; }

}  // namespace

const CellInfo& cell_info(CellKind kind) { return kCells[static_cast<std::size_t>(kind)]; }

std::optional<CellKind> parse_cell_kind(std::string_view name) {
    for (auto kind : kAllCellKinds) {
        if (cell_info(kind).name == name) return kind;
    }
    return std::nullopt;
}

std::optional<std::uint8_t> pin_index(CellKind kind, std::string_view pin) {
    const auto& info = cell_info(kind);
    for (std::uint8_t p = 0; p < info.arity; ++p) {
        if (info.pins[p] == pin) return p;
    }
    return std::nullopt;
}

ParseError::ParseError(Kind kind, std::size_t line, std::size_t col, const std::string& msg)
    : NetlistError(kind, "line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + msg),
      line_(line),
      col_(col) {}

Netlist::Netlist() : Netlist("empty", {std::string(kGndName), std::string(kVddName)}, {}, {}, {}) {}

Netlist::Netlist(std::string name, std::vector<std::string> net_names, std::vector<NetId> inputs,
                 std::vector<NetId> outputs, std::vector<Gate> gates)
    : name_(std::move(name)) {
    using K = NetlistError::Kind;
    const std::size_t nets = net_names.size();
    if (nets < 2 || net_names[kGnd] != kGndName || net_names[kVdd] != kVddName) {
        throw NetlistError(K::Interface, "net table must start with GND, VDD");
    }
    auto check_id = [&](NetId id) {
        if (id >= nets) throw NetlistError(K::Interface, "net id " + std::to_string(id) + " out of range");
    };

    // Driver resolution: -3 undriven, -2 constant, -1 primary input, >=0 gate.
    std::vector<std::int32_t> drv(nets, -3);
    drv[kGnd] = drv[kVdd] = -2;
    for (NetId in : inputs) {
        check_id(in);
        if (drv[in] != -3) {
            throw NetlistError(K::MultipleDrivers, "net " + quoted(net_names[in]) + " has multiple drivers");
        }
        drv[in] = -1;
    }
    std::unordered_map<std::string, std::size_t> seen_gate;
    for (std::size_t g = 0; g < gates.size(); ++g) {
        const Gate& gate = gates[g];
        if (!seen_gate.emplace(gate.name, g).second) {
            throw NetlistError(K::DuplicateName, "duplicate gate instance " + quoted(gate.name));
        }
        check_id(gate.out);
        if (drv[gate.out] != -3) {
            throw NetlistError(K::MultipleDrivers,
                               "net " + quoted(net_names[gate.out]) + " has multiple drivers");
        }
        drv[gate.out] = static_cast<std::int32_t>(g);
    }
    for (const Gate& gate : gates) {
        for (NetId in : gate.inputs()) {
            check_id(in);
            if (drv[in] == -3) {
                throw NetlistError(K::UndrivenNet, "net " + quoted(net_names[in]) + " read by gate " +
                                                       quoted(gate.name) + " is undriven");
            }
        }
    }
    for (NetId out : outputs) {
        check_id(out);
        if (drv[out] == -3) {
            throw NetlistError(K::UndrivenNet, "primary output " + quoted(net_names[out]) + " is undriven");
        }
    }

    // Kahn's algorithm; ready gates popped in name order.
    std::vector<std::uint32_t> pending(gates.size(), 0);
    std::vector<std::vector<std::uint32_t>> consumers(gates.size());
    for (std::size_t g = 0; g < gates.size(); ++g) {
        for (NetId in : gates[g].inputs()) {
            if (drv[in] >= 0) {
                ++pending[g];
                consumers[static_cast<std::size_t>(drv[in])].push_back(static_cast<std::uint32_t>(g));
            }
        }
    }
    auto by_name = [&](std::uint32_t a, std::uint32_t b) { return gates[a].name > gates[b].name; };
    std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, decltype(by_name)> ready(by_name);
    for (std::uint32_t g = 0; g < gates.size(); ++g) {
        if (pending[g] == 0) ready.push(g);
    }
    std::vector<std::uint32_t> order;
    order.reserve(gates.size());
    while (!ready.empty()) {
        auto g = ready.top();
        ready.pop();
        order.push_back(g);
        for (auto c : consumers[g]) {
            if (--pending[c] == 0) ready.push(c);
        }
    }
    if (order.size() != gates.size()) {
        for (std::size_t g = 0; g < gates.size(); ++g) {
            if (pending[g] != 0) {
                throw NetlistError(K::Cycle, "combinational cycle through gate " + quoted(gates[g].name));
            }
        }
    }

    // Canonical renumbering.
    std::vector<NetId> remap(nets, static_cast<NetId>(-1));
    net_names_.reserve(2 + inputs.size() + gates.size());
    auto assign = [&](NetId old) {
        remap[old] = static_cast<NetId>(net_names_.size());
        net_names_.push_back(std::move(net_names[old]));
    };
    assign(kGnd);
    assign(kVdd);
    for (NetId in : inputs) assign(in);
    for (auto g : order) assign(gates[g].out);

    inputs_.reserve(inputs.size());
    for (NetId in : inputs) inputs_.push_back(remap[in]);
    outputs_.reserve(outputs.size());
    for (NetId out : outputs) outputs_.push_back(remap[out]);
    gates_.reserve(gates.size());
    for (auto g : order) {
        Gate gate = std::move(gates[g]);
        for (std::size_t p = 0; p < gate.arity(); ++p) gate.fanin[p] = remap[gate.fanin[p]];
        for (std::size_t p = gate.arity(); p < kMaxPins; ++p) gate.fanin[p] = 0;
        gate.out = remap[gate.out];
        gates_.push_back(std::move(gate));
    }

    const std::size_t n = net_names_.size();
    driver_.assign(n, -1);
    po_refs_.assign(n, 0);
    fanout_begin_.assign(n + 1, 0);
    for (std::size_t g = 0; g < gates_.size(); ++g) {
        driver_[gates_[g].out] = static_cast<std::int32_t>(g);
        for (NetId in : gates_[g].inputs()) ++fanout_begin_[in + 1];
    }
    for (NetId out : outputs_) ++po_refs_[out];
    for (std::size_t i = 0; i < n; ++i) fanout_begin_[i + 1] += fanout_begin_[i];
    fanout_.resize(fanout_begin_[n]);
    std::vector<std::uint32_t> fill(fanout_begin_.begin(), fanout_begin_.end() - 1);
    for (std::uint32_t g = 0; g < gates_.size(); ++g) {
        const Gate& gate = gates_[g];
        for (std::uint8_t p = 0; p < gate.arity(); ++p) {
            fanout_[fill[gate.fanin[p]]++] = Sink{g, p};
        }
    }
    net_index_.reserve(n);
    for (NetId id = 0; id < n; ++id) net_index_.emplace(net_names_[id], id);
    gate_index_.reserve(gates_.size());
    for (std::size_t g = 0; g < gates_.size(); ++g) gate_index_.emplace(gates_[g].name, g);
}

std::optional<NetId> Netlist::find_net(std::string_view name) const {
    auto it = net_index_.find(std::string(name));
    if (it == net_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Netlist::find_gate(std::string_view name) const {
    auto it = gate_index_.find(std::string(name));
    if (it == gate_index_.end()) return std::nullopt;
    return it->second;
}

bool operator==(const Netlist& a, const Netlist& b) {
    auto same_nets = [&](std::span<const NetId> x, std::span<const NetId> y) {
        return std::equal(x.begin(), x.end(), y.begin(), y.end(),
                          [&](NetId i, NetId j) { return a.net_name(i) == b.net_name(j); });
    };
    if (a.name() != b.name() || !same_nets(a.inputs(), b.inputs()) || !same_nets(a.outputs(), b.outputs()) ||
        a.gate_count() != b.gate_count()) {
        return false;
    }
    for (std::size_t g = 0; g < a.gate_count(); ++g) {
        const Gate& x = a.gates()[g];
        const Gate& y = b.gates()[g];
        if (x.name != y.name || x.kind != y.kind || !same_nets(x.inputs(), y.inputs()) ||
            a.net_name(x.out) != b.net_name(y.out)) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

struct Token {
    std::string_view text;
    std::size_t col;
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == '#') break;
        if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' && line[j] != '#') ++j;
        out.push_back({line.substr(i, j - i), i + 1});
        i = j;
    }
    return out;
}

}  // namespace

Netlist parse_netlist(std::string_view text) {
    using K = NetlistError::Kind;
    std::vector<std::string> names{std::string(kGndName), std::string(kVddName)};
    std::unordered_map<std::string, NetId> ids{{names[0], kGnd}, {names[1], kVdd}};
    auto net = [&](std::string_view name) {
        auto [it, fresh] = ids.try_emplace(std::string(name), static_cast<NetId>(names.size()));
        if (fresh) names.emplace_back(name);
        return it->second;
    };

    std::optional<std::string> circuit;
    bool ended = false;
    std::vector<NetId> inputs, outputs;
    std::vector<Gate> gates;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        auto fail = [&](const Token& t, const std::string& msg, K kind = K::Syntax) {
            return ParseError(kind, line_no, t.col, msg);
        };
        if (ended) throw fail(toks[0], "content after 'end'");
        const auto kw = toks[0].text;
        if (kw == "circuit") {
            if (circuit) throw fail(toks[0], "duplicate 'circuit' statement");
            if (toks.size() != 2) throw fail(toks[0], "expected 'circuit <name>'");
            circuit = std::string(toks[1].text);
            continue;
        }
        if (!circuit) throw fail(toks[0], "expected 'circuit <name>' first");
        if (kw == "input" || kw == "output") {
            if (toks.size() < 2) throw fail(toks[0], "expected at least one net");
            for (std::size_t t = 1; t < toks.size(); ++t) {
                if (toks[t].text.find('=') != std::string_view::npos) throw fail(toks[t], "invalid net name");
                if (kw == "input" && (toks[t].text == kGndName || toks[t].text == kVddName)) {
                    throw fail(toks[t], "reserved net cannot be an input", K::MultipleDrivers);
                }
                (kw == "input" ? inputs : outputs).push_back(net(toks[t].text));
            }
        } else if (kw == "gate") {
            if (toks.size() < 4) throw fail(toks[0], "expected 'gate <inst> <CELL> <PIN>=<net> ... Y=<net>'");
            auto kind = parse_cell_kind(toks[2].text);
            if (!kind) throw fail(toks[2], "unknown cell kind " + quoted(toks[2].text), K::UnknownCell);
            Gate gate;
            gate.name = std::string(toks[1].text);
            gate.kind = *kind;
            std::array<bool, kMaxPins> bound{};
            bool has_out = false;
            for (std::size_t t = 3; t < toks.size(); ++t) {
                auto eq = toks[t].text.find('=');
                if (eq == std::string_view::npos || eq == 0 || eq + 1 == toks[t].text.size()) {
                    throw fail(toks[t], "expected <PIN>=<net>");
                }
                auto pin = toks[t].text.substr(0, eq);
                auto target = toks[t].text.substr(eq + 1);
                if (pin == "Y") {
                    if (has_out) throw fail(toks[t], "duplicate pin Y");
                    has_out = true;
                    gate.out = net(target);
                    continue;
                }
                auto p = pin_index(*kind, pin);
                if (!p) throw fail(toks[t], "cell " + std::string(toks[2].text) + " has no pin " + quoted(pin));
                if (bound[*p]) throw fail(toks[t], "duplicate pin " + quoted(pin));
                bound[*p] = true;
                gate.fanin[*p] = net(target);
            }
            for (std::size_t p = 0; p < gate.arity(); ++p) {
                if (!bound[p]) {
                    throw fail(toks[1], "gate " + quoted(gate.name) + " leaves pin " +
                                      std::string(cell_info(*kind).pins[p]) + " unconnected");
                }
            }
            if (!has_out) throw fail(toks[1], "gate " + quoted(gate.name) + " has no Y pin");
            gates.push_back(std::move(gate));
        } else if (kw == "end") {
            if (toks.size() != 1) throw fail(toks[1], "unexpected token after 'end'");
            ended = true;
        } else {
            throw fail(toks[0], "unknown statement " + quoted(kw));
        }
    }
    if (!circuit) throw ParseError(K::Syntax, line_no, 1, "missing 'circuit' statement");
    if (!ended) throw ParseError(K::Syntax, line_no, 1, "missing 'end'");
    return Netlist(*circuit, std::move(names), std::move(inputs), std::move(outputs), std::move(gates));
}

std::string write_netlist(const Netlist& n) {
    std::ostringstream os;
    os << "circuit " << n.name() << '\n';
    auto net_line = [&](std::string_view kw, std::span<const NetId> nets) {
        if (nets.empty()) return;
        os << kw;
        for (NetId id : nets) os << ' ' << n.net_name(id);
        os << '\n';
    };
    net_line("input", n.inputs());
    net_line("output", n.outputs());
    for (const Gate& g : n.gates()) {
        const auto& info = cell_info(g.kind);
        os << "gate " << g.name << ' ' << info.name;
        for (std::size_t p = 0; p < info.arity; ++p) os << ' ' << info.pins[p] << '=' << n.net_name(g.fanin[p]);
        os << " Y=" << n.net_name(g.out) << '\n';
    }
    os << "end\n";
    return os.str();
}

std::span<const Gate> topological_order(const Netlist& n) { return n.gates(); }

// ---------------------------------------------------------------------------
// Transformations

namespace {

Netlist rebuild(const Netlist& n, std::vector<NetId> outputs, std::vector<Gate> gates) {
    return Netlist(n.name(), n.net_names(), {n.inputs().begin(), n.inputs().end()}, std::move(outputs),
                   std::move(gates));
}

}  // namespace

Netlist simplify_constants(const Netlist& n) {
    std::vector<NetId> subst(n.net_count());
    for (NetId i = 0; i < subst.size(); ++i) subst[i] = i;
    auto is_const = [](NetId id) { return id == kGnd || id == kVdd; };
    auto constant = [](bool v) { return v ? kVdd : kGnd; };

    std::vector<Gate> kept;
    kept.reserve(n.gate_count());
    for (const Gate& g0 : n.gates()) {
        Gate g = g0;
        for (std::size_t p = 0; p < g.arity(); ++p) g.fanin[p] = subst[g.fanin[p]];
        const NetId a = g.fanin[0], b = g.fanin[1], s = g.fanin[2];

        bool all_const = true;
        for (NetId in : g.inputs()) all_const = all_const && is_const(in);
        if (all_const) {
            subst[g.out] = constant(eval_cell<bool>(g.kind, a == kVdd, b == kVdd, s == kVdd));
            continue;
        }

        // Returns the replacement net, or nullopt to keep the gate.
        std::optional<NetId> repl;
        auto other = [&](NetId c) { return a == c ? b : a; };
        auto has = [&](NetId c) { return a == c || b == c; };
        switch (g.kind) {
        case CellKind::INV:
        case CellKind::BUF: break;
        case CellKind::AND2:
            if (has(kGnd)) repl = kGnd;
            else if (has(kVdd)) repl = other(kVdd);
            break;
        case CellKind::OR2:
            if (has(kVdd)) repl = kVdd;
            else if (has(kGnd)) repl = other(kGnd);
            break;
        case CellKind::NAND2:
            if (has(kGnd)) repl = kVdd;
            break;
        case CellKind::NOR2:
            if (has(kVdd)) repl = kGnd;
            break;
        case CellKind::XOR2:
            if (has(kGnd)) repl = other(kGnd);
            break;
        case CellKind::XNOR2:
            if (has(kVdd)) repl = other(kVdd);
            break;
        case CellKind::MUX2:
            if (is_const(s)) repl = (s == kVdd) ? b : a;
            else if (is_const(a) && a == b) repl = a;
            else if (a == kGnd && b == kVdd) repl = s;
            break;
        }
        if (repl) {
            subst[g.out] = *repl;
        } else {
            kept.push_back(std::move(g));
        }
    }

    std::vector<NetId> outputs;
    outputs.reserve(n.outputs().size());
    for (NetId o : n.outputs()) outputs.push_back(subst[o]);

    // Dead-gate elimination, reverse topological.
    std::vector<char> needed(n.net_count(), 0);
    for (NetId o : outputs) needed[o] = 1;
    std::vector<char> live(kept.size(), 0);
    for (std::size_t i = kept.size(); i-- > 0;) {
        if (!needed[kept[i].out]) continue;
        live[i] = 1;
        for (NetId in : kept[i].inputs()) needed[in] = 1;
    }
    std::vector<Gate> gates;
    gates.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (live[i]) gates.push_back(std::move(kept[i]));
    }
    return rebuild(n, std::move(outputs), std::move(gates));
}

Netlist tie_nets(const Netlist& n, std::span<const std::pair<NetId, bool>> ties) {
    std::vector<NetId> subst(n.net_count());
    for (NetId i = 0; i < subst.size(); ++i) subst[i] = i;
    for (auto [net, value] : ties) {
        if (net >= n.net_count()) throw std::out_of_range("tie_nets: net id out of range");
        if (n.is_constant(net)) continue;
        subst[net] = value ? kVdd : kGnd;
    }
    std::vector<Gate> gates(n.gates().begin(), n.gates().end());
    for (Gate& g : gates) {
        for (std::size_t p = 0; p < g.arity(); ++p) g.fanin[p] = subst[g.fanin[p]];
    }
    std::vector<NetId> outputs;
    for (NetId o : n.outputs()) outputs.push_back(subst[o]);
    return rebuild(n, std::move(outputs), std::move(gates));
}

std::vector<int> depth_to_output(const Netlist& n) {
    std::vector<int> depth(n.net_count(), kUnreachable);
    for (NetId o : n.outputs()) depth[o] = 0;
    const auto gates = n.gates();
    for (std::size_t i = gates.size(); i-- > 0;) {
        const int d = depth[gates[i].out];
        if (d == kUnreachable) continue;
        for (NetId in : gates[i].inputs()) {
            if (depth[in] == kUnreachable || depth[in] > d + 1) depth[in] = d + 1;
        }
    }
    return depth;
}

std::uint64_t fingerprint(const Netlist& n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : write_netlist(n)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace vax
