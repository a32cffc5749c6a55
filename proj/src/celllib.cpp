#include "vax/celllib.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "vax/rng.hpp"

namespace vax {

using ordered_json = nlohmann::ordered_json;

std::string_view edge_name(Edge e) { return e == Edge::Rise ? "rise" : "fall"; }

namespace {

void validate_arc(std::string_view cell, std::string_view pin, Edge e, const ArcStats& a) {
    auto where = [&] {
        return std::string(cell) + " pin " + std::string(pin) + " " + std::string(edge_name(e));
    };
    if (!std::isfinite(a.mu_ps) || a.mu_ps <= 0.0) {
        throw LibraryError("arc " + where() + ": mu_ps must be positive");
    }
    if (!std::isfinite(a.sigma_ps) || a.sigma_ps < 0.0) {
        throw LibraryError("arc " + where() + ": sigma_ps must be non-negative");
    }
    if (a.sigma_ps > 0.5 * a.mu_ps) {
        throw LibraryError("arc " + where() + ": sigma_ps/mu_ps exceeds 0.5");
    }
}

// Cells in alphabetical order for canonical output.
std::vector<CellKind> cells_by_name() {
    std::vector<CellKind> kinds(kAllCellKinds.begin(), kAllCellKinds.end());
    std::sort(kinds.begin(), kinds.end(),
              [](CellKind a, CellKind b) { return cell_info(a).name < cell_info(b).name; });
    return kinds;
}

// Arcs of a cell ordered by (pin, edge name).
template <class F>
void for_each_arc_canonical(CellKind kind, F&& f) {
    const auto& info = cell_info(kind);
    std::vector<std::uint8_t> pins(info.arity);
    for (std::uint8_t p = 0; p < info.arity; ++p) pins[p] = p;
    std::sort(pins.begin(), pins.end(), [&](auto a, auto b) { return info.pins[a] < info.pins[b]; });
    for (auto p : pins) {
        f(p, Edge::Fall);  // "fall" < "rise"
        f(p, Edge::Rise);
    }
}

Edge parse_edge(const std::string& s) {
    if (s == "rise") return Edge::Rise;
    if (s == "fall") return Edge::Fall;
    throw LibraryError("unknown edge '" + s + "'");
}

}  // namespace

VariationLibrary::VariationLibrary(std::string name, double rho_default, const ArcTable<ArcStats>& arcs)
    : name_(std::move(name)), rho_default_(rho_default), arcs_(arcs) {
    if (!(rho_default >= 0.0 && rho_default <= 1.0)) throw LibraryError("rho_default must be in [0, 1]");
    for (auto kind : kAllCellKinds) {
        const auto& info = cell_info(kind);
        for (std::size_t p = 0; p < info.arity; ++p) {
            for (auto e : {Edge::Rise, Edge::Fall}) validate_arc(info.name, info.pins[p], e, arc(kind, p, e));
        }
    }
}

std::vector<TimingArc> VariationLibrary::arcs(CellKind kind) const {
    std::vector<TimingArc> out;
    for_each_arc_canonical(kind, [&](std::uint8_t p, Edge e) {
        const auto& a = arc(kind, p, e);
        out.push_back({p, e, a.mu_ps, a.sigma_ps});
    });
    return out;
}

VariationLibrary VariationLibrary::scaled(double factor) const {
    auto t = arcs_;
    for (auto& cell : t)
        for (auto& pin : cell)
            for (auto& a : pin) {
                a.mu_ps *= factor;
                a.sigma_ps *= factor;
            }
    return VariationLibrary(name_, rho_default_, t);
}

VariationLibrary VariationLibrary::with_sigma_ratio(double ratio) const {
    auto t = arcs_;
    for (auto& cell : t)
        for (auto& pin : cell)
            for (auto& a : pin) a.sigma_ps = ratio * a.mu_ps;
    return VariationLibrary(name_, rho_default_, t);
}

VariationLibrary default_variation_library() {
    // Synthetic values in ps: {rise, fall} per pin.
    struct Row {
        CellKind kind;
        std::array<std::array<double, 2>, kMaxPins> mu;
    };
    const std::array<Row, kCellKindCount> rows{{
        {CellKind::INV, {{{10, 12}}}},
        {CellKind::BUF, {{{17, 18}}}},
        {CellKind::AND2, {{{19, 20}, {20, 21}}}},
        {CellKind::OR2, {{{21, 19}, {22, 20}}}},
        {CellKind::NAND2, {{{14, 16}, {15, 17}}}},
        {CellKind::NOR2, {{{18, 14}, {19, 15}}}},
        {CellKind::XOR2, {{{25, 27}, {26, 28}}}},
        {CellKind::XNOR2, {{{26, 27}, {27, 28}}}},
        {CellKind::MUX2, {{{24, 25}, {24, 25}, {27, 29}}}},
    }};
    constexpr double kSigmaRatio = 0.08;
    ArcTable<ArcStats> t{};
    for (const auto& row : rows) {
        auto& cell = t[static_cast<std::size_t>(row.kind)];
        for (std::size_t p = 0; p < cell_info(row.kind).arity; ++p) {
            for (std::size_t e = 0; e < 2; ++e) cell[p][e] = {row.mu[p][e], kSigmaRatio * row.mu[p][e]};
        }
    }
    return VariationLibrary("synthetic-default", 0.5, t);
}

VariationLibrary parse_variation_library(std::string_view json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw LibraryError(std::string("malformed library file: ") + e.what());
    }
    try {
        const auto name = j.at("name").get<std::string>();
        const double rho = j.at("rho_default").get<double>();
        const auto& cells = j.at("cells");
        if (!cells.is_object()) throw LibraryError("malformed library file: 'cells' must be an object");

        ArcTable<ArcStats> t{};
        ArcTable<bool> present{};
        for (const auto& [cell_name, arcs] : cells.items()) {
            auto kind = parse_cell_kind(cell_name);
            if (!kind) throw LibraryError("unknown cell '" + cell_name + "'");
            for (const auto& a : arcs) {
                const auto pin_name = a.at("pin").get<std::string>();
                auto pin = pin_index(*kind, pin_name);
                if (!pin) throw LibraryError("cell " + cell_name + " has no pin '" + pin_name + "'");
                const Edge e = parse_edge(a.at("edge").get<std::string>());
                auto& slot = present[static_cast<std::size_t>(*kind)][*pin][static_cast<std::size_t>(e)];
                if (slot) {
                    throw LibraryError("duplicate arc " + cell_name + " pin " + pin_name + " " +
                                       std::string(edge_name(e)));
                }
                slot = true;
                t[static_cast<std::size_t>(*kind)][*pin][static_cast<std::size_t>(e)] = {
                    a.at("mu_ps").get<double>(), a.at("sigma_ps").get<double>()};
            }
        }
        for (auto kind : kAllCellKinds) {
            const auto& info = cell_info(kind);
            for (std::size_t p = 0; p < info.arity; ++p) {
                for (auto e : {Edge::Rise, Edge::Fall}) {
                    if (!present[static_cast<std::size_t>(kind)][p][static_cast<std::size_t>(e)]) {
                        throw LibraryError("missing arc " + std::string(info.name) + " pin " +
                                           std::string(info.pins[p]) + " " + std::string(edge_name(e)));
                    }
                }
            }
        }
        return VariationLibrary(name, rho, t);
    } catch (const nlohmann::json::exception& e) {
        throw LibraryError(std::string("malformed library file: ") + e.what());
    }
}

std::string serialize_variation_library(const VariationLibrary& lib) {
    ordered_json j;
    j["name"] = lib.name();
    j["rho_default"] = lib.rho_default();
    ordered_json cells = ordered_json::object();
    for (auto kind : cells_by_name()) {
        ordered_json arcs = ordered_json::array();
        for (const auto& a : lib.arcs(kind)) {
            ordered_json arc;
            arc["pin"] = cell_info(kind).pins[a.pin];
            arc["edge"] = edge_name(a.out_edge);
            arc["mu_ps"] = a.mu_ps;
            arc["sigma_ps"] = a.sigma_ps;
            arcs.push_back(std::move(arc));
        }
        cells[std::string(cell_info(kind).name)] = std::move(arcs);
    }
    j["cells"] = std::move(cells);
    return j.dump(2) + "\n";
}

VariationLibrary load_variation_library(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LibraryError("cannot open library file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_variation_library(ss.str());
}

void save_variation_library(const VariationLibrary& lib, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw LibraryError("cannot write library file " + path.string());
    out << serialize_variation_library(lib);
}

SampledLibrary sample_library(const VariationLibrary& lib, std::uint64_t seed, double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw LibraryError("rho must be in [0, 1]");
    auto rng = make_engine(seed, {0x11b});
    std::normal_distribution<double> normal(0.0, 1.0);
    const double global = normal(rng);
    const double wg = std::sqrt(rho);
    const double wl = std::sqrt(1.0 - rho);

    SampledLibrary s;
    s.seed = seed;
    for (auto kind : kAllCellKinds) {
        for (std::size_t p = 0; p < cell_info(kind).arity; ++p) {
            for (auto e : {Edge::Rise, Edge::Fall}) {
                const auto& a = lib.arc(kind, p, e);
                const double z = normal(rng);
                s.delay_ps[static_cast<std::size_t>(kind)][p][static_cast<std::size_t>(e)] =
                    std::max(kClampFraction * a.mu_ps, a.mu_ps + a.sigma_ps * (wg * global + wl * z));
            }
        }
    }
    return s;
}

SampledLibrary nominal_library(const VariationLibrary& lib) {
    SampledLibrary s;
    s.seed = 0;
    for (auto kind : kAllCellKinds) {
        for (std::size_t p = 0; p < cell_info(kind).arity; ++p) {
            for (auto e : {Edge::Rise, Edge::Fall}) {
                s.delay_ps[static_cast<std::size_t>(kind)][p][static_cast<std::size_t>(e)] =
                    lib.arc(kind, p, e).mu_ps;
            }
        }
    }
    return s;
}

std::string serialize_sampled_library(const SampledLibrary& lib, double rho) {
    ordered_json j;
    j["seed"] = lib.seed;
    j["rho"] = rho;
    ordered_json cells = ordered_json::object();
    for (auto kind : cells_by_name()) {
        ordered_json arcs = ordered_json::array();
        for_each_arc_canonical(kind, [&](std::uint8_t p, Edge e) {
            ordered_json arc;
            arc["pin"] = cell_info(kind).pins[p];
            arc["edge"] = edge_name(e);
            arc["delay_ps"] = lib.delay(kind, p, e);
            arcs.push_back(std::move(arc));
        });
        cells[std::string(cell_info(kind).name)] = std::move(arcs);
    }
    j["cells"] = std::move(cells);
    return j.dump(2) + "\n";
}

SampledLibrary parse_sampled_library(std::string_view json_text) {
    try {
        auto j = ordered_json::parse(json_text);
        SampledLibrary s;
        s.seed = j.at("seed").get<std::uint64_t>();
        ArcTable<bool> present{};
        for (const auto& [cell_name, arcs] : j.at("cells").items()) {
            auto kind = parse_cell_kind(cell_name);
            if (!kind) throw LibraryError("unknown cell '" + cell_name + "'");
            for (const auto& a : arcs) {
                auto pin = pin_index(*kind, a.at("pin").get<std::string>());
                if (!pin) throw LibraryError("bad pin in sampled library cell " + cell_name);
                const Edge e = parse_edge(a.at("edge").get<std::string>());
                const double d = a.at("delay_ps").get<double>();
                if (!(d > 0.0)) throw LibraryError("sampled delay must be positive");
                s.delay_ps[static_cast<std::size_t>(*kind)][*pin][static_cast<std::size_t>(e)] = d;
                present[static_cast<std::size_t>(*kind)][*pin][static_cast<std::size_t>(e)] = true;
            }
        }
        for (auto kind : kAllCellKinds) {
            for (std::size_t p = 0; p < cell_info(kind).arity; ++p) {
                for (std::size_t e = 0; e < 2; ++e) {
                    if (!present[static_cast<std::size_t>(kind)][p][e]) {
                        throw LibraryError("sampled library missing arc of " + std::string(cell_info(kind).name));
                    }
                }
            }
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw LibraryError(std::string("malformed sampled library: ") + e.what());
    }
}

}  // namespace vax
