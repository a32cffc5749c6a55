#include "vax/errsim.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "vax/rng.hpp"
#include "vax/timing.hpp"

namespace vax {

namespace {

__extension__ using u128 = unsigned __int128;
__extension__ using i128 = __int128;

std::uint64_t tail_mask(std::size_t count) {
    const auto rem = count % 64;
    return rem == 0 ? ~0ULL : (1ULL << rem) - 1;
}

}  // namespace

SimulationDataset::SimulationDataset(std::vector<std::string> pi_names, std::size_t count, std::uint64_t seed,
                                     Signedness signedness, std::vector<std::vector<std::uint64_t>> words)
    : pi_names_(std::move(pi_names)), count_(count), seed_(seed), signedness_(signedness), words_(std::move(words)) {
    if (count_ == 0) throw std::invalid_argument("dataset needs at least one vector");
    if (pi_names_.size() != words_.size()) throw std::invalid_argument("dataset input names/words mismatch");
    for (auto& w : words_) {
        if (w.size() != word_count()) throw std::invalid_argument("dataset word count mismatch");
        w.back() &= tail_mask(count_);
    }
}

SimulationDataset SimulationDataset::concat(const SimulationDataset& a, const SimulationDataset& b) {
    if (a.input_count() != b.input_count()) throw std::invalid_argument("cannot concatenate datasets");
    const std::size_t total = a.size() + b.size();
    std::vector<std::vector<std::uint64_t>> words(a.input_count(),
                                                  std::vector<std::uint64_t>((total + 63) / 64, 0));
    for (std::size_t pi = 0; pi < a.input_count(); ++pi) {
        for (std::size_t v = 0; v < total; ++v) {
            const bool bit = v < a.size() ? a.bit(v, pi) : b.bit(v - a.size(), pi);
            if (bit) words[pi][v / 64] |= 1ULL << (v % 64);
        }
    }
    return SimulationDataset(a.pi_names(), total, a.seed(), a.signedness(), std::move(words));
}

SimulationDataset generate_dataset(const Netlist& n, std::size_t count, std::uint64_t seed, bool exhaustive,
                                   Signedness signedness) {
    const std::size_t pis = n.inputs().size();
    std::vector<std::string> names;
    for (NetId in : n.inputs()) names.push_back(n.net_name(in));
    if (exhaustive) {
        if (pis > kMaxExhaustiveInputs) {
            throw std::invalid_argument("exhaustive dataset needs at most " + std::to_string(kMaxExhaustiveInputs) +
                                        " primary inputs");
        }
        count = std::size_t{1} << pis;
    }
    if (count == 0) throw std::invalid_argument("dataset needs at least one vector");
    const std::size_t words = (count + 63) / 64;
    std::vector<std::vector<std::uint64_t>> data(pis, std::vector<std::uint64_t>(words, 0));
    for (std::size_t pi = 0; pi < pis; ++pi) {
        if (exhaustive) {
            for (std::size_t v = 0; v < count; ++v) {
                if ((v >> pi) & 1U) data[pi][v / 64] |= 1ULL << (v % 64);
            }
        } else {
            auto rng = make_engine(seed, {0xda7a, pi});
            for (auto& w : data[pi]) w = rng();
        }
    }
    return SimulationDataset(std::move(names), count, seed, signedness, std::move(data));
}

std::string format_dataset(const SimulationDataset& ds) {
    std::ostringstream os;
    os << "# dataset n " << ds.size() << " seed " << ds.seed() << " signed "
       << (ds.signedness() == Signedness::TwosComplement ? 1 : 0) << '\n';
    os << "# pis";
    for (const auto& name : ds.pi_names()) os << ' ' << name;
    os << '\n';
    const std::size_t digits = std::max<std::size_t>(1, (ds.input_count() + 3) / 4);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string line(digits, '0');
    for (std::size_t v = 0; v < ds.size(); ++v) {
        for (std::size_t d = 0; d < digits; ++d) {
            unsigned nibble = 0;
            for (std::size_t b = 0; b < 4; ++b) {
                const std::size_t pi = d * 4 + b;
                if (pi < ds.input_count() && ds.bit(v, pi)) nibble |= 1U << b;
            }
            line[digits - 1 - d] = kHex[nibble];
        }
        os << line << '\n';
    }
    return os.str();
}

SimulationDataset parse_dataset(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string line, hash, kw;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    int is_signed = 0;
    if (!std::getline(is, line)) throw std::invalid_argument("empty dataset file");
    {
        std::istringstream h(line);
        std::string k1, k2, k3;
        if (!(h >> hash >> kw >> k1 >> count >> k2 >> seed >> k3 >> is_signed) || hash != "#" || kw != "dataset") {
            throw std::invalid_argument("malformed dataset header");
        }
    }
    std::vector<std::string> names;
    if (!std::getline(is, line)) throw std::invalid_argument("dataset missing '# pis' line");
    {
        std::istringstream h(line);
        if (!(h >> hash >> kw) || hash != "#" || kw != "pis") throw std::invalid_argument("malformed '# pis' line");
        std::string name;
        while (h >> name) names.push_back(name);
    }
    std::vector<std::vector<std::uint64_t>> words(names.size(), std::vector<std::uint64_t>((count + 63) / 64, 0));
    std::size_t v = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (v >= count) throw std::invalid_argument("dataset has more vectors than declared");
        const std::size_t digits = line.size();
        for (std::size_t d = 0; d < digits; ++d) {
            const char c = line[digits - 1 - d];
            unsigned nibble = 0;
            if (c >= '0' && c <= '9') nibble = static_cast<unsigned>(c - '0');
            else if (c >= 'a' && c <= 'f') nibble = static_cast<unsigned>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') nibble = static_cast<unsigned>(c - 'A' + 10);
            else throw std::invalid_argument("bad hex digit in dataset");
            for (std::size_t b = 0; b < 4; ++b) {
                const std::size_t pi = d * 4 + b;
                if (!((nibble >> b) & 1U)) continue;
                if (pi >= names.size()) throw std::invalid_argument("dataset vector wider than input list");
                words[pi][v / 64] |= 1ULL << (v % 64);
            }
        }
        ++v;
    }
    if (v != count) throw std::invalid_argument("dataset has fewer vectors than declared");
    return SimulationDataset(std::move(names), count, seed,
                             is_signed ? Signedness::TwosComplement : Signedness::Unsigned, std::move(words));
}

// ---------------------------------------------------------------------------
// Evaluator

Evaluator::Evaluator(const Netlist& n)
    : slot_count_(n.net_count()), inputs_(n.inputs().begin(), n.inputs().end()),
      outputs_(n.outputs().begin(), n.outputs().end()) {
    program_.reserve(n.gate_count());
    for (const Gate& g : topological_order(n)) program_.push_back({g.kind, g.fanin, g.out});
}

Evaluator compile_evaluator(const Netlist& n) { return Evaluator(n); }

std::vector<std::uint8_t> Evaluator::evaluate(std::span<const std::uint8_t> inputs) const {
    std::vector<std::uint8_t> v(slot_count_, 0);
    v[kVdd] = 1;
    for (std::size_t i = 0; i < inputs_.size(); ++i) v[inputs_[i]] = inputs[i] ? 1 : 0;
    for (const Op& op : program_) {
        v[op.out] = eval_cell<bool>(op.kind, v[op.in[0]] != 0, v[op.in[1]] != 0, v[op.in[2]] != 0) ? 1 : 0;
    }
    std::vector<std::uint8_t> out(outputs_.size());
    for (std::size_t i = 0; i < outputs_.size(); ++i) out[i] = v[outputs_[i]];
    return out;
}

void Evaluator::evaluate_word(std::span<const std::uint64_t> pi_words, std::span<std::uint64_t> po_words,
                              std::vector<std::uint64_t>& slots) const {
    slots.resize(slot_count_);
    slots[kGnd] = 0;
    slots[kVdd] = ~0ULL;
    for (std::size_t i = 0; i < inputs_.size(); ++i) slots[inputs_[i]] = pi_words[i];
    for (const Op& op : program_) {
        slots[op.out] = eval_cell<std::uint64_t>(op.kind, slots[op.in[0]], slots[op.in[1]], slots[op.in[2]]);
    }
    for (std::size_t i = 0; i < outputs_.size(); ++i) po_words[i] = slots[outputs_[i]];
}

OutputWords Evaluator::simulate(const SimulationDataset& ds) const {
    if (ds.input_count() != inputs_.size()) throw InterfaceMismatch("dataset input count differs from netlist");
    const std::size_t words = ds.word_count();
    OutputWords out;
    out.count = ds.size();
    out.po.assign(outputs_.size(), std::vector<std::uint64_t>(words, 0));
    const auto mask = tail_mask(ds.size());
    const auto nwords = static_cast<std::int64_t>(words);
#pragma omp parallel
    {
        std::vector<std::uint64_t> slots;
        std::vector<std::uint64_t> in(inputs_.size());
        std::vector<std::uint64_t> res(outputs_.size());
#pragma omp for schedule(static)
        for (std::int64_t w = 0; w < nwords; ++w) {
            const auto wi = static_cast<std::size_t>(w);
            for (std::size_t i = 0; i < in.size(); ++i) in[i] = ds.words(i)[wi];
            evaluate_word(in, res, slots);
            const auto m = wi + 1 == words ? mask : ~0ULL;
            for (std::size_t o = 0; o < res.size(); ++o) out.po[o][wi] = res[o] & m;
        }
    }
    return out;
}

OutputWords Evaluator::simulate_serial(const SimulationDataset& ds) const {
    if (ds.input_count() != inputs_.size()) throw InterfaceMismatch("dataset input count differs from netlist");
    OutputWords out;
    out.count = ds.size();
    out.po.assign(outputs_.size(), std::vector<std::uint64_t>(ds.word_count(), 0));
    std::vector<std::uint8_t> in(inputs_.size());
    for (std::size_t v = 0; v < ds.size(); ++v) {
        for (std::size_t i = 0; i < in.size(); ++i) in[i] = ds.bit(v, i) ? 1 : 0;
        const auto res = evaluate(in);
        for (std::size_t o = 0; o < res.size(); ++o) {
            if (res[o]) out.po[o][v / 64] |= 1ULL << (v % 64);
        }
    }
    return out;
}

std::vector<std::vector<std::uint64_t>> Evaluator::simulate_nets(const SimulationDataset& ds) const {
    if (ds.input_count() != inputs_.size()) throw InterfaceMismatch("dataset input count differs from netlist");
    const std::size_t words = ds.word_count();
    std::vector<std::vector<std::uint64_t>> nets(slot_count_, std::vector<std::uint64_t>(words, 0));
    const auto mask = tail_mask(ds.size());
    std::vector<std::uint64_t> slots;
    std::vector<std::uint64_t> in(inputs_.size());
    std::vector<std::uint64_t> res(outputs_.size());
    for (std::size_t w = 0; w < words; ++w) {
        for (std::size_t i = 0; i < in.size(); ++i) in[i] = ds.words(i)[w];
        evaluate_word(in, res, slots);
        const auto m = w + 1 == words ? mask : ~0ULL;
        for (std::size_t s = 0; s < slot_count_; ++s) nets[s][w] = slots[s] & m;
    }
    return nets;
}

// ---------------------------------------------------------------------------
// Metrics

std::int64_t output_value(const OutputWords& out, std::size_t v, Signedness signedness) {
    const std::size_t m = out.po.size();
    std::uint64_t raw = 0;
    for (std::size_t o = 0; o < m; ++o) raw |= static_cast<std::uint64_t>(out.bit(v, o)) << o;
    if (signedness == Signedness::TwosComplement && m > 0 && m < 64 && ((raw >> (m - 1)) & 1U)) {
        raw |= ~0ULL << m;  // sign-extend
    }
    return static_cast<std::int64_t>(raw);
}

namespace {

struct Partial {
    u128 sum_ed = 0;
    double sum_red = 0.0;
    std::size_t errors = 0;
    std::uint64_t max_ed = 0;
};

void check_compatible(const OutputWords& exact, const OutputWords& approx) {
    if (exact.po.size() != approx.po.size() || exact.count != approx.count) {
        throw InterfaceMismatch("output interfaces differ");
    }
    if (exact.po.size() > kMaxOutputBits) {
        throw InterfaceMismatch("more than " + std::to_string(kMaxOutputBits) + " outputs are not supported");
    }
}

// ED over vectors [begin, end).
Partial accumulate(const OutputWords& exact, const OutputWords& approx, Signedness signedness, std::size_t begin,
                   std::size_t end) {
    Partial p;
    const std::size_t m = exact.po.size();
    for (std::size_t v = begin; v < end; ++v) {
        std::uint64_t ey = 0, ay = 0;
        for (std::size_t o = 0; o < m; ++o) {
            ey |= static_cast<std::uint64_t>(exact.bit(v, o)) << o;
            ay |= static_cast<std::uint64_t>(approx.bit(v, o)) << o;
        }
        if (ey == ay) continue;
        ++p.errors;
        std::uint64_t ed = 0;
        std::uint64_t mag = 0;
        if (signedness == Signedness::TwosComplement && m > 0) {
            auto sext = [&](std::uint64_t raw) -> i128 {
                if (m < 64 && ((raw >> (m - 1)) & 1U)) raw |= ~0ULL << m;
                return static_cast<std::int64_t>(raw);
            };
            const i128 y = sext(ey);
            const i128 d = y - sext(ay);
            ed = static_cast<std::uint64_t>(d < 0 ? -d : d);
            mag = static_cast<std::uint64_t>(y < 0 ? -y : y);
        } else {
            ed = ey > ay ? ey - ay : ay - ey;
            mag = ey;
        }
        p.sum_ed += ed;
        p.sum_red += static_cast<double>(ed) / static_cast<double>(std::max<std::uint64_t>(1, mag));
        p.max_ed = std::max(p.max_ed, ed);
    }
    return p;
}

ErrorMetrics finish(const Partial& p, std::size_t count, std::size_t outputs) {
    ErrorMetrics m;
    m.count = count;
    const double max_value = outputs >= 64 ? 18446744073709551615.0 : static_cast<double>((1ULL << outputs) - 1);
    m.sum_ed = static_cast<double>(p.sum_ed);
    m.nmed = max_value > 0 ? m.sum_ed / static_cast<double>(count) / max_value : 0.0;
    m.mred = p.sum_red / static_cast<double>(count);
    m.error_rate = static_cast<double>(p.errors) / static_cast<double>(count);
    m.max_ed = p.max_ed;
    return m;
}

}  // namespace

ErrorMetrics compare_outputs(const OutputWords& exact, const OutputWords& approx, Signedness signedness) {
    check_compatible(exact, approx);
    const std::size_t words = (exact.count + 63) / 64;
    std::vector<Partial> parts(words);
    const auto nwords = static_cast<std::int64_t>(words);
#pragma omp parallel for schedule(static)
    for (std::int64_t w = 0; w < nwords; ++w) {
        const auto begin = static_cast<std::size_t>(w) * 64;
        parts[static_cast<std::size_t>(w)] =
            accumulate(exact, approx, signedness, begin, std::min(begin + 64, exact.count));
    }
    // Word-ordered reduction keeps the floating-point sum schedule-independent.
    Partial total;
    for (const auto& p : parts) {
        total.sum_ed += p.sum_ed;
        total.sum_red += p.sum_red;
        total.errors += p.errors;
        total.max_ed = std::max(total.max_ed, p.max_ed);
    }
    return finish(total, exact.count, exact.po.size());
}

ErrorMetrics compare_outputs_serial(const OutputWords& exact, const OutputWords& approx, Signedness signedness) {
    check_compatible(exact, approx);
    Partial total;
    for (std::size_t v = 0; v < exact.count; ++v) {
        const std::int64_t y = output_value(exact, v, signedness);
        const std::int64_t a = output_value(approx, v, signedness);
        if (y == a) continue;
        ++total.errors;
        const i128 d = static_cast<i128>(y) - a;
        std::uint64_t ed = static_cast<std::uint64_t>(d < 0 ? -d : d);
        if (signedness == Signedness::Unsigned) {
            const auto uy = static_cast<std::uint64_t>(y), ua = static_cast<std::uint64_t>(a);
            ed = uy > ua ? uy - ua : ua - uy;
        }
        const std::uint64_t mag = signedness == Signedness::Unsigned
                                      ? static_cast<std::uint64_t>(y)
                                      : static_cast<std::uint64_t>(y < 0 ? -static_cast<i128>(y) : y);
        total.sum_ed += ed;
        total.sum_red += static_cast<double>(ed) / static_cast<double>(std::max<std::uint64_t>(1, mag));
        total.max_ed = std::max(total.max_ed, ed);
    }
    return finish(total, exact.count, exact.po.size());
}

ErrorMetrics simulate_metrics(const Netlist& exact, const Netlist& approx, const SimulationDataset& ds) {
    if (exact.inputs().size() != approx.inputs().size() || exact.outputs().size() != approx.outputs().size()) {
        throw InterfaceMismatch("exact and approximate netlists have different interfaces");
    }
    return compare_outputs(Evaluator(exact).simulate(ds), Evaluator(approx).simulate(ds), ds.signedness());
}

ErrorMetrics stale_value_metrics(const OutputWords& reference, const OutputWords& observed,
                                 std::span<const double> po_arrival, double clock_ps, Signedness signedness) {
    if (!(clock_ps > 0.0)) throw std::invalid_argument("clock period must be positive");
    if (po_arrival.size() != observed.po.size()) throw InterfaceMismatch("one arrival per output expected");
    OutputWords seen = observed;
    for (std::size_t o = 0; o < observed.po.size(); ++o) {
        if (!(po_arrival[o] > clock_ps)) continue;
        auto& w = seen.po[o];
        const auto& src = observed.po[o];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const std::uint64_t carry = i == 0 ? (src[0] & 1U) : (src[i - 1] >> 63);
            w[i] = (src[i] << 1) | carry;
        }
        if (!w.empty()) w.back() &= tail_mask(observed.count);
    }
    return compare_outputs(reference, seen, signedness);
}

ErrorMetrics stale_value_metrics(const OutputWords& exact, std::span<const double> po_arrival, double clock_ps,
                                 Signedness signedness) {
    return stale_value_metrics(exact, exact, po_arrival, clock_ps, signedness);
}

ErrorMetrics timing_error_metrics(const Netlist& n, const SampledLibrary& lib, double clock_ps,
                                  const SimulationDataset& ds) {
    const auto sta = sta_arrivals(n, lib);
    return stale_value_metrics(Evaluator(n).simulate(ds), sta.po_arrival, clock_ps, ds.signedness());
}

}  // namespace vax
