#include "vax/timing.hpp"

#include <algorithm>

#include "json.hpp"

namespace vax {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

DelayRV rv_sum(DelayRV x, DelayRV y) { return {x.mu + y.mu, x.var + y.var}; }

double rv_gt_prob(DelayRV x, DelayRV y) {
    const double var = x.var + y.var;
    if (var <= 0.0) {
        if (x.mu > y.mu) return 1.0;
        if (x.mu < y.mu) return 0.0;
        return 0.5;
    }
    // 1 - Phi(z) == Phi(-z); the latter keeps precision in the upper tail.
    return normal_cdf((x.mu - y.mu) / std::sqrt(var));
}

// ---------------------------------------------------------------------------
// STA

namespace {

template <bool kTrackPred>
void propagate(const Netlist& n, const SampledLibrary& lib, std::vector<std::array<double, 2>>& arrival,
               std::vector<std::array<ArrivalPred, 2>>* pred) {
    arrival.assign(n.net_count(), {kUntimed, kUntimed});
    if constexpr (kTrackPred) pred->assign(n.net_count(), {});
    for (NetId in : n.inputs()) arrival[in] = {0.0, 0.0};

    for (const Gate& g : n.gates()) {
        const auto& info = cell_info(g.kind);
        for (auto e : {Edge::Rise, Edge::Fall}) {
            double best = kUntimed;
            ArrivalPred best_pred;
            for (std::uint8_t p = 0; p < info.arity; ++p) {
                const auto& in = arrival[g.fanin[p]];
                const double d = lib.delay(g.kind, p, e);
                auto consider = [&](Edge in_edge) {
                    const double a = in[static_cast<std::size_t>(in_edge)];
                    if (a == kUntimed) return;
                    if (a + d > best) {
                        best = a + d;
                        best_pred = {static_cast<std::int8_t>(p), in_edge};
                    }
                };
                switch (info.unateness[p]) {
                case Unateness::Positive: consider(e); break;
                case Unateness::Negative: consider(opposite(e)); break;
                case Unateness::NonUnate:
                    consider(e);
                    consider(opposite(e));
                    break;
                }
            }
            arrival[g.out][static_cast<std::size_t>(e)] = best;
            if constexpr (kTrackPred) (*pred)[g.out][static_cast<std::size_t>(e)] = best_pred;
        }
    }
}

const std::string& endpoint_name(const Netlist& n, NetId net) {
    const auto d = n.driver(net);
    return d >= 0 ? n.gates()[static_cast<std::size_t>(d)].name : n.net_name(net);
}

}  // namespace

StaResult sta_arrivals(const Netlist& n, const SampledLibrary& lib) {
    StaResult r;
    propagate<true>(n, lib, r.arrival, &r.pred);
    const auto outs = n.outputs();
    r.po_arrival.resize(outs.size());
    double best = kUntimed;
    for (std::size_t i = 0; i < outs.size(); ++i) {
        const auto& a = r.arrival[outs[i]];
        r.po_arrival[i] = std::max(a[0], a[1]);
        for (auto e : {Edge::Rise, Edge::Fall}) {
            const double v = a[static_cast<std::size_t>(e)];
            if (v == kUntimed) continue;
            const bool better = v > best || (v == best && endpoint_name(n, outs[i]) <
                                                               endpoint_name(n, outs[*r.endpoint]));
            if (better) {
                best = v;
                r.endpoint = i;
                r.endpoint_edge = e;
            }
        }
    }
    r.cpd = r.endpoint ? best : 0.0;
    return r;
}

double sta_cpd(const Netlist& n, const SampledLibrary& lib) {
    std::vector<std::array<double, 2>> arrival;
    propagate<false>(n, lib, arrival, nullptr);
    double best = 0.0;
    for (NetId o : n.outputs()) best = std::max({best, arrival[o][0], arrival[o][1]});
    return best;
}

std::vector<PathStep> extract_critical_path(const Netlist& n, const StaResult& sta) {
    std::vector<PathStep> path;
    if (!sta.endpoint) return path;
    NetId net = n.outputs()[*sta.endpoint];
    Edge edge = sta.endpoint_edge;
    while (n.driver(net) >= 0) {
        const auto g = static_cast<std::size_t>(n.driver(net));
        const ArrivalPred& p = sta.pred[net][static_cast<std::size_t>(edge)];
        path.push_back({g, static_cast<std::uint8_t>(p.pin), p.in_edge, edge});
        net = n.gates()[g].fanin[static_cast<std::size_t>(p.pin)];
        edge = p.in_edge;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<double> monte_carlo_cpds(const Netlist& n, const VariationLibrary& lib, std::uint64_t seed,
                                     std::size_t k, double rho) {
    std::vector<double> out(k);
    const auto count = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = sta_cpd(n, sample_library(lib, seed + static_cast<std::uint64_t>(i), rho));
    }
    return out;
}

std::vector<double> monte_carlo_cpds_serial(const Netlist& n, const VariationLibrary& lib,
                                            std::uint64_t seed, std::size_t k, double rho) {
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = sta_arrivals(n, sample_library(lib, seed + i, rho)).cpd;
    return out;
}

// ---------------------------------------------------------------------------
// Edge transitions

std::optional<Edge> EdgeTransitionMap::find(const std::string& gate, std::uint8_t pin) const {
    auto it = map_.find(gate);
    if (it == map_.end()) return std::nullopt;
    return it->second[pin];
}

Edge EdgeTransitionMap::at(const std::string& gate, std::uint8_t pin) const {
    auto it = map_.find(gate);
    if (it == map_.end()) throw std::out_of_range("no edge transition for gate '" + gate + "'");
    return it->second[pin];
}

bool EdgeTransitionMap::covers(const Netlist& n) const {
    return std::all_of(n.gates().begin(), n.gates().end(),
                       [&](const Gate& g) { return map_.count(g.name) != 0; });
}

std::string EdgeTransitionMap::to_json() const {
    std::vector<std::string> names;
    names.reserve(map_.size());
    for (const auto& [name, _] : map_) names.push_back(name);
    std::sort(names.begin(), names.end());
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& name : names) {
        auto arr = nlohmann::ordered_json::array();
        for (auto e : map_.at(name)) arr.push_back(edge_name(e));
        j[name] = std::move(arr);
    }
    return j.dump(1) + "\n";
}

EdgeTransitionMap EdgeTransitionMap::from_json(std::string_view text) {
    EdgeTransitionMap m;
    auto j = nlohmann::json::parse(text);
    for (const auto& [name, arr] : j.items()) {
        std::array<Edge, kMaxPins> edges{};
        for (std::size_t p = 0; p < kMaxPins && p < arr.size(); ++p) {
            edges[p] = arr[p].get<std::string>() == "fall" ? Edge::Fall : Edge::Rise;
        }
        m.map_[name] = edges;
    }
    return m;
}

Edge slower_edge(const VariationLibrary& lib, CellKind kind, std::size_t pin) {
    return lib.arc(kind, pin, Edge::Fall).mu_ps > lib.arc(kind, pin, Edge::Rise).mu_ps ? Edge::Fall : Edge::Rise;
}

EdgeTransitionMap default_edge_transitions(const Netlist& n, const VariationLibrary& lib) {
    EdgeTransitionMap m;
    for (const Gate& g : n.gates()) {
        for (std::uint8_t p = 0; p < g.arity(); ++p) m.set(g.name, p, slower_edge(lib, g.kind, p));
    }
    return m;
}

EdgeTransitionMap annotate_edge_transitions(const Netlist& n, const VariationLibrary& lib, std::size_t k,
                                            std::uint64_t seed) {
    std::vector<std::vector<PathStep>> paths(k);
    const auto count = static_cast<std::int64_t>(k);
    const double rho = lib.rho_default();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        const auto sampled = sample_library(lib, seed + static_cast<std::uint64_t>(i), rho);
        paths[static_cast<std::size_t>(i)] = extract_critical_path(n, sta_arrivals(n, sampled));
    }

    std::vector<std::array<std::array<std::uint32_t, 2>, kMaxPins>> counts(n.gate_count());
    for (const auto& path : paths) {
        for (const auto& step : path) ++counts[step.gate][step.pin][static_cast<std::size_t>(step.out_edge)];
    }
    EdgeTransitionMap m;
    for (std::size_t g = 0; g < n.gate_count(); ++g) {
        const Gate& gate = n.gates()[g];
        for (std::uint8_t p = 0; p < gate.arity(); ++p) {
            const auto rise = counts[g][p][0];
            const auto fall = counts[g][p][1];
            Edge e = slower_edge(lib, gate.kind, p);
            if (rise > fall) e = Edge::Rise;
            else if (fall > rise) e = Edge::Fall;
            m.set(gate.name, p, e);
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Statistical traversal

std::vector<double> endpoint_probabilities(std::span<const std::optional<DelayRV>> po_arrival,
                                          std::span<const NetId> po_nets) {
    const std::size_t m = po_arrival.size();
    std::vector<double> c(m, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (!po_arrival[i]) continue;
        double prod = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i || !po_arrival[j]) continue;
            if (!po_nets.empty() && po_nets[i] == po_nets[j]) continue;
            prod *= rv_gt_prob(*po_arrival[i], *po_arrival[j]);
        }
        c[i] = prod;
        total += prod;
    }
    if (total > 0.0) {
        for (double& v : c) v /= total;
    }
    return c;
}

std::vector<double> cpb_backprop(const Netlist& n, std::span<const std::int8_t> critical_fanin,
                                 std::span<const double> endpoint_prob) {
    std::vector<double> cpb(n.net_count(), 0.0);
    const auto outs = n.outputs();
    for (std::size_t i = 0; i < outs.size(); ++i) cpb[outs[i]] += endpoint_prob[i];
    const auto gates = n.gates();
    for (std::size_t g = gates.size(); g-- > 0;) {
        const double mass = cpb[gates[g].out];
        const auto pin = critical_fanin[g];
        if (mass <= 0.0 || pin < 0) continue;
        cpb[gates[g].fanin[static_cast<std::size_t>(pin)]] += mass;
    }
    return cpb;
}

SstaResult ssta_traverse(const Netlist& n, const VariationLibrary& lib, const EdgeTransitionMap& tmap) {
    SstaResult r;
    r.arrival.assign(n.net_count(), std::nullopt);
    r.critical_fanin.assign(n.gate_count(), -1);
    for (NetId in : n.inputs()) r.arrival[in] = DelayRV{};

    const auto gates = n.gates();
    for (std::size_t g = 0; g < gates.size(); ++g) {
        const Gate& gate = gates[g];
        std::int8_t winner = -1;
        for (std::uint8_t p = 0; p < gate.arity(); ++p) {
            const auto& a = r.arrival[gate.fanin[p]];
            if (!a) continue;
            if (winner < 0 || rv_gt_prob(*a, *r.arrival[gate.fanin[static_cast<std::size_t>(winner)]]) > 0.5) {
                winner = static_cast<std::int8_t>(p);
            }
        }
        if (winner < 0) continue;
        r.critical_fanin[g] = winner;
        const auto w = static_cast<std::size_t>(winner);
        const auto& arc = lib.arc(gate.kind, w, tmap.at(gate.name, static_cast<std::uint8_t>(w)));
        r.arrival[gate.out] = rv_sum(*r.arrival[gate.fanin[w]], {arc.mu_ps, arc.sigma_ps * arc.sigma_ps});
    }

    const auto outs = n.outputs();
    r.po_arrival.resize(outs.size());
    for (std::size_t i = 0; i < outs.size(); ++i) {
        r.po_arrival[i] = r.arrival[outs[i]];
        if (!r.po_arrival[i]) continue;
        if (!r.endpoint || rv_gt_prob(*r.po_arrival[i], *r.po_arrival[*r.endpoint]) > 0.5) r.endpoint = i;
    }
    if (r.endpoint) {
        const auto best = *r.endpoint;
        r.cpd = *r.po_arrival[best];
        for (std::size_t j = 0; j < outs.size(); ++j) {
            if (j == best || !r.po_arrival[j] || outs[j] == outs[best]) continue;
            r.confidence *= rv_gt_prob(r.cpd, *r.po_arrival[j]);
        }
    }
    r.endpoint_prob = endpoint_probabilities(r.po_arrival, outs);
    r.cpb = cpb_backprop(n, r.critical_fanin, r.endpoint_prob);
    return r;
}

}  // namespace vax
