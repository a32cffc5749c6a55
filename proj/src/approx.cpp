#include "vax/approx.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace vax {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

CandidateSet build_candidates(const Netlist& n, const SstaResult& ssta, double cpb_t) {
    if (!(cpb_t > 0.0 && cpb_t <= 1.0)) throw std::invalid_argument("CPB threshold must be in (0, 1]");
    std::vector<NetId> picked;
    for (NetId id = 2; id < n.net_count(); ++id) {
        if (ssta.cpb[id] >= cpb_t) picked.push_back(id);
    }
    std::sort(picked.begin(), picked.end(), [&](NetId a, NetId b) {
        if (ssta.cpb[a] != ssta.cpb[b]) return ssta.cpb[a] > ssta.cpb[b];
        return n.net_name(a) < n.net_name(b);
    });
    CandidateSet cs;
    cs.threshold = cpb_t;
    cs.source_fingerprint = fingerprint(n);
    for (NetId id : picked) {
        cs.nets.push_back(n.net_name(id));
        cs.cpb.push_back(ssta.cpb[id]);
    }
    return cs;
}

bool Chromosome::is_exact() const {
    return std::all_of(genes.begin(), genes.end(), [](Gene g) { return g == kExact; });
}

void validate(const Chromosome& c, const CandidateSet& cs) {
    if (c.size() != cs.size()) {
        throw ChromosomeError("chromosome has " + std::to_string(c.size()) + " genes, candidate set has " +
                              std::to_string(cs.size()));
    }
    for (Gene g : c.genes) {
        if (g < -1 || g > 1) throw ChromosomeError("gene value " + std::to_string(g) + " outside {-1, 0, 1}");
    }
}

Netlist apply_chromosome(const Netlist& n, const CandidateSet& cs, const Chromosome& c) {
    validate(c, cs);
    std::vector<std::pair<NetId, bool>> ties;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.genes[i] == kExact) continue;
        if (auto id = n.find_net(cs.nets[i])) ties.emplace_back(*id, c.genes[i] == 1);
    }
    if (ties.empty()) return n;
    return simplify_constants(tie_nets(n, ties));
}

std::size_t chromosome_distance(const Chromosome& a, const Chromosome& b) {
    if (a.size() != b.size()) throw ChromosomeError("chromosome length mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a.genes[i] != b.genes[i];
    return d;
}

std::string format_chromosomes(const CandidateSet& cs, std::span<const Chromosome> chromosomes) {
    std::ostringstream os;
    os << "fingerprint " << hex64(cs.source_fingerprint) << " genes " << cs.size() << '\n';
    for (const auto& c : chromosomes) {
        for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << static_cast<int>(c.genes[i]);
        os << '\n';
    }
    return os.str();
}

namespace {

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.push_back(line);
        pos = nl + 1;
    }
    return out;
}

}  // namespace

std::vector<Chromosome> parse_chromosomes(std::string_view text, const CandidateSet& cs) {
    auto lines = lines_of(text);
    if (lines.empty()) throw ChromosomeError("empty chromosome file");
    std::istringstream header{std::string(lines[0])};
    std::string kw1, fp, kw2;
    std::size_t count = 0;
    if (!(header >> kw1 >> fp >> kw2 >> count) || kw1 != "fingerprint" || kw2 != "genes") {
        throw ChromosomeError("malformed chromosome header");
    }
    if (fp != hex64(cs.source_fingerprint)) {
        throw ChromosomeError("fingerprint mismatch: file " + fp + ", candidate set " +
                              hex64(cs.source_fingerprint));
    }
    if (count != cs.size()) throw ChromosomeError("gene count mismatch");
    std::vector<Chromosome> out;
    for (std::size_t l = 1; l < lines.size(); ++l) {
        auto line = lines[l];
        if (line.empty()) continue;
        Chromosome c;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            auto comma = line.find(',', pos);
            if (comma == std::string_view::npos) comma = line.size();
            int v = 0;
            auto tok = line.substr(pos, comma - pos);
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
                throw ChromosomeError("bad gene '" + std::string(tok) + "' on line " + std::to_string(l + 1));
            }
            c.genes.push_back(static_cast<Gene>(v));
            pos = comma + 1;
        }
        validate(c, cs);
        out.push_back(std::move(c));
    }
    return out;
}

std::string format_candidates(const CandidateSet& cs) {
    std::ostringstream os;
    os.precision(17);
    os << "fingerprint " << hex64(cs.source_fingerprint) << " threshold " << cs.threshold << '\n';
    for (std::size_t i = 0; i < cs.size(); ++i) os << cs.nets[i] << ' ' << cs.cpb[i] << '\n';
    return os.str();
}

CandidateSet parse_candidates(std::string_view text) {
    auto lines = lines_of(text);
    if (lines.empty()) throw ChromosomeError("empty candidate file");
    std::istringstream header{std::string(lines[0])};
    std::string kw1, fp, kw2;
    CandidateSet cs;
    if (!(header >> kw1 >> fp >> kw2 >> cs.threshold) || kw1 != "fingerprint" || kw2 != "threshold") {
        throw ChromosomeError("malformed candidate header");
    }
    cs.source_fingerprint = std::stoull(fp, nullptr, 16);
    for (std::size_t l = 1; l < lines.size(); ++l) {
        if (lines[l].empty()) continue;
        std::istringstream is{std::string(lines[l])};
        std::string net;
        double p = 0.0;
        if (!(is >> net >> p)) throw ChromosomeError("malformed candidate line " + std::to_string(l + 1));
        cs.nets.push_back(net);
        cs.cpb.push_back(p);
    }
    return cs;
}

}  // namespace vax
