#include "vax/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "vax/approx.hpp"
#include "vax/rng.hpp"
#include "vax/timing.hpp"

namespace vax {

namespace fs = std::filesystem;

std::string_view family_name(BenchmarkFamily f) {
    switch (f) {
    case BenchmarkFamily::RcaAdder: return "rca_adder";
    case BenchmarkFamily::ClaAdder: return "cla_adder";
    case BenchmarkFamily::ArrayMultiplier: return "array_multiplier";
    case BenchmarkFamily::MacFir: return "mac_fir";
    }
    return "?";
}

std::optional<BenchmarkFamily> parse_family(std::string_view s) {
    for (auto f : {BenchmarkFamily::RcaAdder, BenchmarkFamily::ClaAdder, BenchmarkFamily::ArrayMultiplier,
                   BenchmarkFamily::MacFir}) {
        if (family_name(f) == s) return f;
    }
    return std::nullopt;
}

namespace {

int fir_output_width(int width, int taps) {
    // taps * (2^w - 1)^2 < 2^(2w) * taps
    const auto t = static_cast<unsigned>(taps);
    return 2 * width + static_cast<int>(std::bit_width(t - 1));
}

}  // namespace

void BenchmarkSpec::validate() const {
    if (width != 4 && width != 8 && width != 16 && width != 32) {
        throw std::invalid_argument("unsupported width " + std::to_string(width) + " (expected 4, 8, 16 or 32)");
    }
    if (taps < 1) throw std::invalid_argument("taps must be at least 1");
    const bool arith = family == BenchmarkFamily::ArrayMultiplier || family == BenchmarkFamily::MacFir;
    if (arith && signedness == Signedness::TwosComplement) {
        throw std::invalid_argument(std::string(family_name(family)) + " is generated unsigned only");
    }
    int out_bits = width + 1;
    if (family == BenchmarkFamily::ArrayMultiplier) out_bits = 2 * width;
    if (family == BenchmarkFamily::MacFir) out_bits = fir_output_width(width, taps);
    if (out_bits > static_cast<int>(kMaxOutputBits)) {
        throw std::invalid_argument("output width " + std::to_string(out_bits) + " exceeds 64 bits");
    }
}

std::string BenchmarkSpec::circuit_name() const {
    std::string base;
    switch (family) {
    case BenchmarkFamily::RcaAdder: base = "rca"; break;
    case BenchmarkFamily::ClaAdder: base = "cla"; break;
    case BenchmarkFamily::ArrayMultiplier: base = "mult"; break;
    case BenchmarkFamily::MacFir: base = "fir" + std::to_string(taps) + "x"; break;
    }
    base += std::to_string(width);
    if (signedness == Signedness::TwosComplement) base += "s";
    return base;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

class Builder {
public:
    Builder() : names_{"GND", "VDD"} {}

    NetId net(const std::string& name) {
        names_.push_back(name);
        return static_cast<NetId>(names_.size() - 1);
    }
    NetId input(const std::string& name) {
        const NetId id = net(name);
        inputs_.push_back(id);
        return id;
    }
    NetId gate(CellKind kind, std::initializer_list<NetId> in, const std::string& out) {
        Gate g;
        g.kind = kind;
        g.name = "g_" + out;
        std::size_t i = 0;
        for (NetId n : in) g.fanin[i++] = n;
        g.out = net(out);
        gates_.push_back(g);
        return g.out;
    }
    /// Declares `id` as the next output, renaming it when it is a gate output.
    void output(NetId id, const std::string& name) {
        const bool driven = std::any_of(gates_.begin(), gates_.end(), [&](const Gate& g) { return g.out == id; });
        const bool taken = std::find(outputs_.begin(), outputs_.end(), id) != outputs_.end();
        if (driven && !taken) {
            for (auto& g : gates_) {
                if (g.out == id) g.name = "g_" + name;
            }
            names_[id] = name;
        }
        outputs_.push_back(id);
    }
    Netlist build(const std::string& name) { return Netlist(name, names_, inputs_, outputs_, gates_); }

private:
    std::vector<std::string> names_;
    std::vector<NetId> inputs_, outputs_;
    std::vector<Gate> gates_;
};

using Bits = std::vector<std::optional<NetId>>;

struct Sum {
    std::vector<NetId> bits;  // out_width entries; GND where nothing arrives
    std::vector<std::optional<NetId>> props;  // XOR of the two operands per bit
};

// Ripple addition of two sparse bit vectors truncated to out_width bits. Full
// adders use the five-gate XOR/NAND slice; a carry that cannot reach bit
// out_width is not generated.
Sum ripple_add(Builder& b, const std::string& pre, const Bits& x, const Bits& y, std::optional<NetId> cin,
               int out_width) {
    Sum r;
    std::optional<NetId> carry = cin;
    for (int i = 0; i < out_width; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const std::string tag = pre + std::to_string(i);
        std::vector<NetId> in;
        if (ui < x.size() && x[ui]) in.push_back(*x[ui]);
        if (ui < y.size() && y[ui]) in.push_back(*y[ui]);
        std::optional<NetId> prop;
        const bool need_carry = i + 1 < out_width;
        if (in.size() == 2) prop = b.gate(CellKind::XOR2, {in[0], in[1]}, tag + "_p");
        r.props.push_back(prop);
        if (carry) in.push_back(*carry);
        std::optional<NetId> next;
        if (in.empty()) {
            r.bits.push_back(kGnd);
        } else if (in.size() == 1) {
            r.bits.push_back(in[0]);
        } else if (in.size() == 2) {
            const NetId s = prop ? *prop : b.gate(CellKind::XOR2, {in[0], in[1]}, tag + "_s");
            r.bits.push_back(s);
            if (need_carry) next = b.gate(CellKind::AND2, {in[0], in[1]}, tag + "_c");
        } else {
            const NetId p = prop ? *prop : b.gate(CellKind::XOR2, {in[0], in[1]}, tag + "_p");
            r.bits.push_back(b.gate(CellKind::XOR2, {p, in[2]}, tag + "_s"));
            if (need_carry) {
                const NetId gn = b.gate(CellKind::NAND2, {in[0], in[1]}, tag + "_gn");
                const NetId tn = b.gate(CellKind::NAND2, {p, in[2]}, tag + "_tn");
                next = b.gate(CellKind::NAND2, {gn, tn}, tag + "_c");
            }
        }
        carry = next;
    }
    return r;
}

Bits to_bits(const std::vector<NetId>& v) { return Bits(v.begin(), v.end()); }

Netlist make_rca(const BenchmarkSpec& spec) {
    Builder b;
    const int w = spec.width;
    Bits a, bb;
    for (int i = 0; i < w; ++i) a.push_back(b.input("a" + std::to_string(i)));
    for (int i = 0; i < w; ++i) bb.push_back(b.input("b" + std::to_string(i)));
    const NetId cin = b.input("cin");
    const auto sum = ripple_add(b, "fa", a, bb, cin, w + 1);
    for (int i = 0; i < w; ++i) b.output(sum.bits[static_cast<std::size_t>(i)], "s" + std::to_string(i));
    const NetId cout = sum.bits.back();
    if (spec.signedness == Signedness::TwosComplement) {
        const NetId top = *sum.props[static_cast<std::size_t>(w - 1)];
        b.output(b.gate(CellKind::XOR2, {top, cout}, "sign_x"), "s" + std::to_string(w));
    } else {
        b.output(cout, "cout");
    }
    return b.build(spec.circuit_name());
}

NetId reduce_tree(Builder& b, CellKind kind, std::vector<NetId> in, const std::string& tag) {
    int k = 0;
    while (in.size() > 1) {
        std::vector<NetId> next;
        for (std::size_t i = 0; i + 1 < in.size(); i += 2) {
            next.push_back(b.gate(kind, {in[i], in[i + 1]}, tag + "_" + std::to_string(k++)));
        }
        if (in.size() % 2 == 1) next.push_back(in.back());
        in = std::move(next);
    }
    return in.front();
}

Netlist make_cla(const BenchmarkSpec& spec) {
    Builder b;
    const int w = spec.width;
    std::vector<NetId> a, bb, p, g;
    for (int i = 0; i < w; ++i) a.push_back(b.input("a" + std::to_string(i)));
    for (int i = 0; i < w; ++i) bb.push_back(b.input("b" + std::to_string(i)));
    NetId carry = b.input("cin");
    for (int i = 0; i < w; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        p.push_back(b.gate(CellKind::XOR2, {a[ui], bb[ui]}, "p" + std::to_string(i)));
        g.push_back(b.gate(CellKind::AND2, {a[ui], bb[ui]}, "g" + std::to_string(i)));
    }
    std::vector<NetId> c(static_cast<std::size_t>(w + 1));
    c[0] = carry;
    for (int base = 0; base < w; base += 4) {
        const NetId c0 = c[static_cast<std::size_t>(base)];
        for (int k = 1; k <= 4; ++k) {
            // c[base+k] = OR over j < k of (p[base+k-1] .. p[base+j+1]) & g[base+j], plus all p's & c0.
            const std::string tag = "c" + std::to_string(base + k);
            std::vector<NetId> terms;
            for (int j = k - 1; j >= -1; --j) {
                std::vector<NetId> factors;
                for (int m = k - 1; m > j; --m) factors.push_back(p[static_cast<std::size_t>(base + m)]);
                factors.push_back(j >= 0 ? g[static_cast<std::size_t>(base + j)] : c0);
                const std::string ttag = tag + "_t" + std::to_string(j + 1);
                terms.push_back(factors.size() == 1 ? factors[0] : reduce_tree(b, CellKind::AND2, factors, ttag));
            }
            c[static_cast<std::size_t>(base + k)] = reduce_tree(b, CellKind::OR2, terms, tag + "_or");
        }
    }
    for (int i = 0; i < w; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        b.output(b.gate(CellKind::XOR2, {p[ui], c[ui]}, "sum" + std::to_string(i)), "s" + std::to_string(i));
    }
    const NetId cout = c[static_cast<std::size_t>(w)];
    if (spec.signedness == Signedness::TwosComplement) {
        b.output(b.gate(CellKind::XOR2, {p[static_cast<std::size_t>(w - 1)], cout}, "sign_x"),
                 "s" + std::to_string(w));
    } else {
        b.output(cout, "cout");
    }
    return b.build(spec.circuit_name());
}

// Unsigned product of two w-bit operands, `2w` bits.
std::vector<NetId> build_multiplier(Builder& b, const std::string& pre, const std::vector<NetId>& a,
                                    const std::vector<NetId>& x) {
    const int w = static_cast<int>(a.size());
    auto pp = [&](int i, int j) {
        return b.gate(CellKind::AND2, {a[static_cast<std::size_t>(j)], x[static_cast<std::size_t>(i)]},
                      pre + "pp" + std::to_string(i) + "_" + std::to_string(j));
    };
    Bits acc;
    for (int j = 0; j < w; ++j) acc.push_back(pp(0, j));
    for (int i = 1; i < w; ++i) {
        Bits row(static_cast<std::size_t>(i), std::nullopt);
        for (int j = 0; j < w; ++j) row.push_back(pp(i, j));
        // (2^w - 1)(2^(i+1) - 1) fits in w + i + 1 bits.
        acc = to_bits(ripple_add(b, pre + "r" + std::to_string(i) + "_", acc, row, std::nullopt, w + i + 1).bits);
    }
    std::vector<NetId> out;
    for (int k = 0; k < 2 * w; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        out.push_back(uk < acc.size() && acc[uk] ? *acc[uk] : kGnd);
    }
    return out;
}

Netlist make_multiplier(const BenchmarkSpec& spec) {
    Builder b;
    const int w = spec.width;
    std::vector<NetId> a, x;
    for (int i = 0; i < w; ++i) a.push_back(b.input("a" + std::to_string(i)));
    for (int i = 0; i < w; ++i) x.push_back(b.input("b" + std::to_string(i)));
    const auto prod = build_multiplier(b, "m_", a, x);
    for (std::size_t k = 0; k < prod.size(); ++k) b.output(prod[k], "p" + std::to_string(k));
    return b.build(spec.circuit_name());
}

Netlist make_fir(const BenchmarkSpec& spec) {
    Builder b;
    const int w = spec.width;
    std::vector<std::vector<NetId>> xs, hs;
    for (int t = 0; t < spec.taps; ++t) {
        std::vector<NetId> x;
        for (int i = 0; i < w; ++i) x.push_back(b.input("x" + std::to_string(t) + "_" + std::to_string(i)));
        xs.push_back(std::move(x));
    }
    for (int t = 0; t < spec.taps; ++t) {
        std::vector<NetId> h;
        for (int i = 0; i < w; ++i) h.push_back(b.input("h" + std::to_string(t) + "_" + std::to_string(i)));
        hs.push_back(std::move(h));
    }
    Bits acc;
    for (int t = 0; t < spec.taps; ++t) {
        const auto ut = static_cast<std::size_t>(t);
        const auto prod = build_multiplier(b, "t" + std::to_string(t) + "_", xs[ut], hs[ut]);
        if (t == 0) {
            acc = to_bits(prod);
            continue;
        }
        const int width = fir_output_width(w, t + 1);
        acc = to_bits(ripple_add(b, "acc" + std::to_string(t) + "_", acc, to_bits(prod), std::nullopt, width).bits);
    }
    const int out_w = fir_output_width(w, spec.taps);
    for (int k = 0; k < out_w; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        b.output(uk < acc.size() && acc[uk] ? *acc[uk] : kGnd, "y" + std::to_string(k));
    }
    return b.build(spec.circuit_name());
}

}  // namespace

Netlist generate_benchmark(const BenchmarkSpec& spec) {
    spec.validate();
    switch (spec.family) {
    case BenchmarkFamily::RcaAdder: return make_rca(spec);
    case BenchmarkFamily::ClaAdder: return make_cla(spec);
    case BenchmarkFamily::ArrayMultiplier: return make_multiplier(spec);
    case BenchmarkFamily::MacFir: return make_fir(spec);
    }
    throw std::invalid_argument("unknown benchmark family");
}

// ---------------------------------------------------------------------------
// Monte-Carlo evaluation

namespace {

struct LibraryTiming {
    double cpd = 0.0;
    std::vector<double> po_arrival;
};

McEvaluation finish_evaluation(const Netlist& exact, const Netlist& n, const VariationLibrary& vlib,
                               const McSettings& mc, const SimulationDataset& ds, std::string id,
                               const std::vector<LibraryTiming>& timing) {
    McEvaluation e;
    e.id = std::move(id);
    e.k = mc.k;
    e.seed = mc.seed;
    e.nominal_cpd_ps = sta_cpd(n, nominal_library(vlib));
    const auto ref = Evaluator(exact).simulate(ds);
    const auto out = Evaluator(n).simulate(ds);
    e.nmed = compare_outputs(ref, out, ds.signedness()).nmed;

    double sum = 0.0;
    e.worst_cpd_ps = -std::numeric_limits<double>::infinity();
    for (const auto& t : timing) {
        e.cpds.push_back(t.cpd);
        e.worst_cpd_ps = std::max(e.worst_cpd_ps, t.cpd);
        sum += t.cpd;
        if (t.cpd > mc.baseline_clock_ps) ++e.violations;
    }
    e.mean_cpd_ps = sum / static_cast<double>(mc.k);
    double sq = 0.0;
    for (double c : e.cpds) sq += (c - e.mean_cpd_ps) * (c - e.mean_cpd_ps);
    e.std_cpd_ps = std::sqrt(sq / static_cast<double>(mc.k));

    // Libraries that make the same outputs late give the same error.
    std::unordered_map<std::uint64_t, double> by_mask;
    e.worst_case_nmed = e.nmed;
    for (const auto& t : timing) {
        std::uint64_t mask = 0;
        for (std::size_t o = 0; o < t.po_arrival.size(); ++o) {
            if (t.po_arrival[o] > mc.baseline_clock_ps) mask |= 1ULL << o;
        }
        auto it = by_mask.find(mask);
        if (it == by_mask.end()) {
            const double v = mask == 0 ? e.nmed
                                       : stale_value_metrics(ref, out, t.po_arrival, mc.baseline_clock_ps,
                                                             ds.signedness())
                                             .nmed;
            it = by_mask.emplace(mask, v).first;
        }
        e.worst_case_nmed = std::max(e.worst_case_nmed, it->second);
    }
    return e;
}

void check_settings(const McSettings& mc) {
    if (mc.k == 0) throw std::invalid_argument("Monte-Carlo needs at least one library");
    if (!(mc.baseline_clock_ps > 0.0)) throw std::invalid_argument("baseline clock must be positive");
}

LibraryTiming time_library(const Netlist& n, const VariationLibrary& vlib, std::uint64_t seed, double rho) {
    const auto sta = sta_arrivals(n, sample_library(vlib, seed, rho));
    return {sta.cpd, sta.po_arrival};
}

}  // namespace

McEvaluation monte_carlo_evaluate(const Netlist& exact, const Netlist& n, const VariationLibrary& vlib,
                                  const McSettings& mc, const SimulationDataset& ds, std::string id) {
    check_settings(mc);
    std::vector<LibraryTiming> timing(mc.k);
    const auto k = static_cast<std::int64_t>(mc.k);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < k; ++i) {
        timing[static_cast<std::size_t>(i)] = time_library(n, vlib, mc.seed + static_cast<std::uint64_t>(i), mc.rho);
    }
    return finish_evaluation(exact, n, vlib, mc, ds, std::move(id), timing);
}

McEvaluation monte_carlo_evaluate_serial(const Netlist& exact, const Netlist& n, const VariationLibrary& vlib,
                                         const McSettings& mc, const SimulationDataset& ds, std::string id) {
    check_settings(mc);
    std::vector<LibraryTiming> timing;
    for (std::size_t i = 0; i < mc.k; ++i) timing.push_back(time_library(n, vlib, mc.seed + i, mc.rho));
    return finish_evaluation(exact, n, vlib, mc, ds, std::move(id), timing);
}

std::vector<McEvaluation> pareto_filter(std::span<const McEvaluation> designs, const McEvaluation& baseline,
                                        double baseline_worstcase_nmed) {
    std::vector<const McEvaluation*> ok;
    for (const auto& d : designs) {
        if (d.violations == 0 && d.worst_cpd_ps < baseline.nominal_cpd_ps && d.nmed < baseline_worstcase_nmed) {
            ok.push_back(&d);
        }
    }
    std::vector<McEvaluation> out;
    for (const auto* d : ok) {
        const double mine[2] = {d->nmed, d->worst_cpd_ps};
        const bool dominated = std::any_of(ok.begin(), ok.end(), [&](const McEvaluation* o) {
            const double theirs[2] = {o->nmed, o->worst_cpd_ps};
            return pareto_dominates(theirs, mine);
        });
        if (!dominated) out.push_back(*d);
    }
    return out;
}

double reduction_pct(double value, double baseline) {
    if (baseline == 0.0) return 0.0;
    return 100.0 * (1.0 - value / baseline);
}

double baseline_worstcase_nmed(const Netlist& n, const VariationLibrary& vlib, const McSettings& mc,
                               const SimulationDataset& ds) {
    McSettings s = mc;
    s.baseline_clock_ps = sta_cpd(n, nominal_library(vlib));
    return monte_carlo_evaluate(n, n, vlib, s, ds, "baseline").worst_case_nmed;
}

// ---------------------------------------------------------------------------
// Files and config

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw RunError("cannot read " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, std::string_view text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw RunError("cannot write " + p.string());
    out << text;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string format_run_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "netlist = " << quote(cfg.netlist.string()) << '\n';
    os << "library = " << quote(cfg.library.string()) << '\n';
    os << "cpb-threshold = " << num(cfg.cpb_threshold) << '\n';
    os << "pop = " << cfg.ga.population << '\n';
    os << "gens = " << cfg.ga.generations << '\n';
    os << "seed = " << cfg.ga.seed << '\n';
    os << "error-bound = " << num(cfg.error_bound) << '\n';
    os << "lambda = " << num(cfg.ga.lambda) << '\n';
    os << "crossover-prob = " << num(cfg.ga.crossover_prob) << '\n';
    os << "mutation-rate = " << (cfg.ga.base_mutation_rate ? num(*cfg.ga.base_mutation_rate) : "auto") << '\n';
    os << "init-exact-prob = " << num(cfg.ga.init_exact_prob) << '\n';
    os << "eval-vectors = " << cfg.ga.eval_vectors << '\n';
    os << "report-vectors = " << cfg.report_vectors << '\n';
    os << "mc-k = " << cfg.mc_k << '\n';
    os << "mc-seed = " << cfg.mc_seed << '\n';
    os << "greedy = " << (cfg.greedy ? "true" : "false") << '\n';
    os << "signed = " << (cfg.signedness == Signedness::TwosComplement ? "true" : "false") << '\n';
    return os.str();
}

RunConfig parse_run_config(std::string_view text) {
    RunConfig cfg;
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string t = trim(line);
        if (t.empty() || t.front() == '[') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw RunError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"') val = val.substr(1, val.size() - 2);
        auto as_bool = [&] { return val == "true" || val == "1"; };
        try {
            if (key == "netlist") cfg.netlist = val;
            else if (key == "library") cfg.library = val;
            else if (key == "cpb-threshold") cfg.cpb_threshold = std::stod(val);
            else if (key == "pop") cfg.ga.population = std::stoull(val);
            else if (key == "gens") cfg.ga.generations = std::stoull(val);
            else if (key == "seed") cfg.ga.seed = std::stoull(val);
            else if (key == "error-bound") cfg.error_bound = std::stod(val);
            else if (key == "lambda") cfg.ga.lambda = std::stod(val);
            else if (key == "crossover-prob") cfg.ga.crossover_prob = std::stod(val);
            else if (key == "mutation-rate") {
                if (val == "auto") cfg.ga.base_mutation_rate.reset();
                else cfg.ga.base_mutation_rate = std::stod(val);
            }
            else if (key == "init-exact-prob") cfg.ga.init_exact_prob = std::stod(val);
            else if (key == "eval-vectors") cfg.ga.eval_vectors = std::stoull(val);
            else if (key == "report-vectors") cfg.report_vectors = std::stoull(val);
            else if (key == "mc-k") cfg.mc_k = std::stoull(val);
            else if (key == "mc-seed") cfg.mc_seed = std::stoull(val);
            else if (key == "greedy") cfg.greedy = as_bool();
            else if (key == "signed") cfg.signedness = as_bool() ? Signedness::TwosComplement : Signedness::Unsigned;
            // Unknown keys belong to other subcommands.
        } catch (const std::logic_error&) {
            throw RunError("config line " + std::to_string(lineno) + ": bad value for " + key);
        }
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Run pipeline

namespace {

constexpr std::uint64_t kSearchDataStream = 0x5ea4c4;
constexpr std::uint64_t kReportDataStream = 0x4e9047;

SimulationDataset search_dataset(const Netlist& n, const RunConfig& cfg) {
    return generate_dataset(n, cfg.ga.eval_vectors, splitmix64(cfg.ga.seed ^ kSearchDataStream), false,
                            cfg.signedness);
}

SimulationDataset report_dataset(const Netlist& n, const RunConfig& cfg) {
    return generate_dataset(n, cfg.report_vectors, splitmix64(cfg.ga.seed ^ kReportDataStream), false,
                            cfg.signedness);
}

VariationLibrary load_library(const RunConfig& cfg) {
    return cfg.library.empty() ? default_variation_library() : load_variation_library(cfg.library);
}

std::string design_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "design_%03zu", i);
    return buf;
}

std::string front_csv(std::span<const EvaluatedDesign> front) {
    std::ostringstream os;
    os << "index,nmed,mu_cpd_eff_ps,sigma_cpd_ps,mu_cpd_ps,confidence,feasible\n";
    for (std::size_t i = 0; i < front.size(); ++i) {
        const auto& d = front[i];
        os << i << ',' << num(d.nmed()) << ',' << num(d.mu_cpd_eff()) << ',' << num(d.sigma_cpd()) << ','
           << num(d.mu_cpd) << ',' << num(d.confidence) << ',' << (d.feasible ? 1 : 0) << '\n';
    }
    return os.str();
}

std::vector<Chromosome> chromosomes_of(std::span<const EvaluatedDesign> designs) {
    std::vector<Chromosome> out;
    for (const auto& d : designs) out.push_back(d.chromosome);
    return out;
}

const char* kSummaryHeader =
    "id,source,nominal_cpd_ps,mean_cpd_ps,std_cpd_ps,worst_cpd_ps,nmed,worst_case_nmed,violations,k,seed\n";

std::string summary_row(const McEvaluation& e, std::string_view source) {
    std::ostringstream os;
    os << e.id << ',' << source << ',' << num(e.nominal_cpd_ps) << ',' << num(e.mean_cpd_ps) << ','
       << num(e.std_cpd_ps) << ',' << num(e.worst_cpd_ps) << ',' << num(e.nmed) << ',' << num(e.worst_case_nmed)
       << ',' << e.violations << ',' << e.k << ',' << e.seed << '\n';
    return os.str();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

struct SummaryRow {
    McEvaluation eval;
    std::string source;
};

std::vector<SummaryRow> read_summary(const fs::path& p) {
    std::istringstream is(read_file(p));
    std::string line;
    if (!std::getline(is, line)) throw RunError("empty " + p.string());
    std::vector<SummaryRow> rows;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 11) throw RunError("malformed row in " + p.string());
        SummaryRow r;
        r.eval.id = f[0];
        r.source = f[1];
        r.eval.nominal_cpd_ps = std::stod(f[2]);
        r.eval.mean_cpd_ps = std::stod(f[3]);
        r.eval.std_cpd_ps = std::stod(f[4]);
        r.eval.worst_cpd_ps = std::stod(f[5]);
        r.eval.nmed = std::stod(f[6]);
        r.eval.worst_case_nmed = std::stod(f[7]);
        r.eval.violations = std::stoull(f[8]);
        r.eval.k = std::stoull(f[9]);
        r.eval.seed = std::stoull(f[10]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void require(const fs::path& p) {
    if (!fs::exists(p)) throw RunError("missing " + p.string());
}

}  // namespace

OptimizeSummary optimize_run(const RunConfig& cfg, const fs::path& dir) {
    cfg.ga.validate();
    for (const char* sub : {"netlists", "libs", "fronts", "mc", "report"}) fs::create_directories(dir / sub);
    const Netlist baseline = parse_netlist(read_file(cfg.netlist));
    const VariationLibrary vlib = load_library(cfg);
    write_file(dir / "netlists" / "baseline.net", write_netlist(baseline));
    save_variation_library(vlib, dir / "libs" / "variation.json");
    write_file(dir / "report" / "config", format_run_config(cfg));

    const auto tmap = annotate_edge_transitions(baseline, vlib, cfg.mc_k, cfg.mc_seed);
    write_file(dir / "libs" / "tmap.json", tmap.to_json());
    const auto ssta = ssta_traverse(baseline, vlib, tmap);
    const auto cs = build_candidates(baseline, ssta, cfg.cpb_threshold);
    write_file(dir / "fronts" / "candidates.txt", format_candidates(cs));

    GaConfig ga = cfg.ga;
    ga.error_bound = cfg.error_bound;
    if (ga.error_bound < 0.0) {
        McSettings mc{cfg.mc_k, cfg.mc_seed, vlib.rho_default(), 0.0};
        ga.error_bound = baseline_worstcase_nmed(baseline, vlib, mc, report_dataset(baseline, cfg));
    }

    const auto ds = search_dataset(baseline, cfg);
    const auto result = nsga2_run(baseline, cs, vlib, tmap, ds, ga, [&](std::size_t gen, auto front) {
        char name[32];
        std::snprintf(name, sizeof name, "gen_%04zu.chrom", gen);
        write_file(dir / "fronts" / name, format_chromosomes(cs, chromosomes_of(front)));
    });

    write_file(dir / "fronts" / "final.chrom", format_chromosomes(cs, chromosomes_of(result.front)));
    write_file(dir / "fronts" / "final.csv", front_csv(result.front));
    for (std::size_t i = 0; i < result.front.size(); ++i) {
        write_file(dir / "netlists" / (design_id(i) + ".net"),
                   write_netlist(apply_chromosome(baseline, cs, result.front[i].chromosome)));
    }

    OptimizeSummary s;
    s.candidates = cs.size();
    s.nets = baseline.net_count() - 2;
    s.error_bound = ga.error_bound;
    s.front_size = result.front.size();
    s.no_feasible = result.no_feasible;
    std::ostringstream os;
    os << "candidates = " << s.candidates << '\n'
       << "nets = " << s.nets << '\n'
       << "error_bound = " << num(s.error_bound) << '\n'
       << "front_size = " << s.front_size << '\n'
       << "no_feasible = " << (s.no_feasible ? "true" : "false") << '\n';
    write_file(dir / "fronts" / "summary.txt", os.str());
    return s;
}

void evaluate_run(const fs::path& dir) {
    for (const char* f : {"report/config", "netlists/baseline.net", "libs/variation.json", "fronts/candidates.txt",
                          "fronts/final.chrom"}) {
        require(dir / f);
    }
    const RunConfig cfg = parse_run_config(read_file(dir / "report" / "config"));
    const Netlist baseline = parse_netlist(read_file(dir / "netlists" / "baseline.net"));
    const VariationLibrary vlib = load_variation_library(dir / "libs" / "variation.json");
    const CandidateSet cs = parse_candidates(read_file(dir / "fronts" / "candidates.txt"));
    if (cs.source_fingerprint != fingerprint(baseline)) {
        throw RunError("candidate set does not belong to netlists/baseline.net");
    }
    const auto front = parse_chromosomes(read_file(dir / "fronts" / "final.chrom"), cs);
    const auto ds = report_dataset(baseline, cfg);

    const double clock = sta_cpd(baseline, nominal_library(vlib));
    const McSettings mc{cfg.mc_k, cfg.mc_seed, vlib.rho_default(), clock};
    std::ostringstream summary, cpds;
    summary << kSummaryHeader;
    cpds << "id,library_seed,cpd_ps\n";
    auto record = [&](const McEvaluation& e, std::string_view source) {
        summary << summary_row(e, source);
        for (std::size_t i = 0; i < e.cpds.size(); ++i) {
            cpds << e.id << ',' << (e.seed + i) << ',' << num(e.cpds[i]) << '\n';
        }
    };

    const auto base = monte_carlo_evaluate(baseline, baseline, vlib, mc, ds, "baseline");
    record(base, "baseline");
    for (std::size_t i = 0; i < front.size(); ++i) {
        const Netlist approx = apply_chromosome(baseline, cs, front[i]);
        record(monte_carlo_evaluate(baseline, approx, vlib, mc, ds, design_id(i)), "ga");
    }
    if (cfg.greedy) {
        // Nominal target that leaves the baseline's variation guardband inside the clock.
        const double target = clock * clock / base.worst_cpd_ps;
        const auto greedy = greedy_glp(baseline, nominal_library(vlib), search_dataset(baseline, cfg), target);
        write_file(dir / "netlists" / "greedy.net", write_netlist(greedy.netlist));
        std::ostringstream info;
        info << "target_cpd_ps = " << num(target) << '\n'
             << "final_cpd_ps = " << num(greedy.final_cpd) << '\n'
             << "reached = " << (greedy.reached ? "true" : "false") << '\n'
             << "pruned =";
        for (const auto& g : greedy.pruned) info << ' ' << g;
        info << '\n';
        write_file(dir / "mc" / "greedy.txt", info.str());
        record(monte_carlo_evaluate(baseline, greedy.netlist, vlib, mc, ds, "greedy"), "greedy");
    }
    write_file(dir / "mc" / "summary.csv", summary.str());
    write_file(dir / "mc" / "cpds.csv", cpds.str());
}

void report_run(const fs::path& dir) {
    require(dir / "mc" / "summary.csv");
    const auto rows = read_summary(dir / "mc" / "summary.csv");
    const auto base_it =
        std::find_if(rows.begin(), rows.end(), [](const SummaryRow& r) { return r.source == "baseline"; });
    if (base_it == rows.end()) throw RunError("mc/summary.csv has no baseline row");
    const McEvaluation& base = base_it->eval;
    const std::string circuit = [&] {
        try {
            return parse_netlist(read_file(dir / "netlists" / "baseline.net")).name();
        } catch (const std::exception&) {
            return std::string("baseline");
        }
    }();

    std::vector<McEvaluation> ga;
    const McEvaluation* greedy = nullptr;
    for (const auto& r : rows) {
        if (r.source == "ga") ga.push_back(r.eval);
        if (r.source == "greedy") greedy = &r.eval;
    }
    const auto filtered = pareto_filter(ga, base, base.worst_case_nmed);
    auto in_filtered = [&](const std::string& id) {
        return std::any_of(filtered.begin(), filtered.end(), [&](const McEvaluation& e) { return e.id == id; });
    };

    std::ostringstream designs;
    designs << "id,source,nmed,worst_case_nmed,nominal_cpd_ps,mean_cpd_ps,std_cpd_ps,worst_cpd_ps,violations,"
               "cpd_reduction_pct,std_reduction_pct,worst_cpd_reduction_pct,pareto\n";
    for (const auto& r : rows) {
        const auto& e = r.eval;
        designs << e.id << ',' << r.source << ',' << short_num(e.nmed) << ',' << short_num(e.worst_case_nmed) << ','
                << short_num(e.nominal_cpd_ps) << ',' << short_num(e.mean_cpd_ps) << ',' << short_num(e.std_cpd_ps)
                << ',' << short_num(e.worst_cpd_ps) << ',' << e.violations << ','
                << short_num(reduction_pct(e.mean_cpd_ps, base.mean_cpd_ps)) << ','
                << short_num(reduction_pct(e.std_cpd_ps, base.std_cpd_ps)) << ','
                << short_num(reduction_pct(e.worst_cpd_ps, base.worst_cpd_ps)) << ','
                << (r.source == "ga" && in_filtered(e.id) ? 1 : 0) << '\n';
    }
    write_file(dir / "report" / "designs.csv", designs.str());

    std::ostringstream pareto;
    pareto << "id,nmed,worst_cpd_ps,filtered\n";
    for (const auto& e : ga) {
        pareto << e.id << ',' << short_num(e.nmed) << ',' << short_num(e.worst_cpd_ps) << ','
               << (in_filtered(e.id) ? 1 : 0) << '\n';
    }
    write_file(dir / "report" / "pareto.csv", pareto.str());

    // Minimum-NMED member of the filtered front.
    const McEvaluation* pick = nullptr;
    for (const auto& e : filtered) {
        if (!pick || e.nmed < pick->nmed || (e.nmed == pick->nmed && e.worst_cpd_ps < pick->worst_cpd_ps)) pick = &e;
    }
    std::ostringstream table;
    table << "circuit,design,functional_nmed,cpd_reduction_pct,std_reduction_pct\n";
    if (pick) {
        table << circuit << ',' << pick->id << ',' << short_num(pick->nmed) << ','
              << short_num(reduction_pct(pick->mean_cpd_ps, base.mean_cpd_ps)) << ','
              << short_num(reduction_pct(pick->std_cpd_ps, base.std_cpd_ps)) << '\n';
    }
    write_file(dir / "report" / "selected.csv", table.str());

    auto ratio = [](double num_v, double den) {
        if (den == 0.0) return num_v == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
        return num_v / den;
    };
    std::ostringstream nr;
    nr << "design,source,worst_case_nmed,baseline_worst_case_nmed,reduction_ratio\n";
    for (const auto& e : filtered) {
        nr << e.id << ",ga," << short_num(e.worst_case_nmed) << ',' << short_num(base.worst_case_nmed) << ','
           << short_num(ratio(base.worst_case_nmed, e.worst_case_nmed)) << '\n';
    }
    if (greedy) {
        nr << greedy->id << ",greedy," << short_num(greedy->worst_case_nmed) << ','
           << short_num(base.worst_case_nmed) << ',' << short_num(ratio(base.worst_case_nmed, greedy->worst_case_nmed))
           << '\n';
    }
    write_file(dir / "report" / "nmed_ratio.csv", nr.str());

    std::ostringstream gc;
    gc << "greedy_id,greedy_nmed,greedy_worst_case_nmed,greedy_worst_cpd_ps,ga_id,ga_nmed,ga_worst_case_nmed,"
          "ga_worst_cpd_ps,worst_case_nmed_ratio,ga_not_slower\n";
    if (greedy) {
        // Fastest GA design at equal or lower functional NMED.
        const McEvaluation* best = nullptr;
        for (const auto& e : ga) {
            if (e.nmed > greedy->nmed) continue;
            if (!best || e.worst_cpd_ps < best->worst_cpd_ps) best = &e;
        }
        gc << greedy->id << ',' << short_num(greedy->nmed) << ',' << short_num(greedy->worst_case_nmed) << ','
           << short_num(greedy->worst_cpd_ps) << ',';
        if (best) {
            gc << best->id << ',' << short_num(best->nmed) << ',' << short_num(best->worst_case_nmed) << ','
               << short_num(best->worst_cpd_ps) << ','
               << short_num(ratio(greedy->worst_case_nmed, best->worst_case_nmed)) << ','
               << (best->worst_cpd_ps <= greedy->worst_cpd_ps ? 1 : 0) << '\n';
        } else {
            gc << ",,,,,0\n";
        }
    }
    write_file(dir / "report" / "greedy.csv", gc.str());
}

}  // namespace vax
