#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vax/netlist.hpp"

namespace vax {

enum class Edge : std::uint8_t { Rise = 0, Fall = 1 };

inline constexpr Edge opposite(Edge e) { return e == Edge::Rise ? Edge::Fall : Edge::Rise; }
std::string_view edge_name(Edge e);

struct ArcStats {
    double mu_ps = 0.0;
    double sigma_ps = 0.0;
};

struct TimingArc {
    std::uint8_t pin = 0;
    Edge out_edge = Edge::Rise;
    double mu_ps = 0.0;
    double sigma_ps = 0.0;
};

class LibraryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-arc delay indexed by [cell][pin][output edge]. Unused pins stay zero.
template <class T>
using ArcTable = std::array<std::array<std::array<T, 2>, kMaxPins>, kCellKindCount>;

/// Gaussian delay model for every arc of every cell kind.
class VariationLibrary {
public:
    VariationLibrary() = default;
    VariationLibrary(std::string name, double rho_default, const ArcTable<ArcStats>& arcs);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] double rho_default() const { return rho_default_; }
    [[nodiscard]] const ArcStats& arc(CellKind kind, std::size_t pin, Edge e) const {
        return arcs_[static_cast<std::size_t>(kind)][pin][static_cast<std::size_t>(e)];
    }
    [[nodiscard]] std::vector<TimingArc> arcs(CellKind kind) const;
    [[nodiscard]] const ArcTable<ArcStats>& table() const { return arcs_; }

    /// Every mu and sigma multiplied by `factor`.
    [[nodiscard]] VariationLibrary scaled(double factor) const;
    /// Same means, every sigma set to `ratio * mu`.
    [[nodiscard]] VariationLibrary with_sigma_ratio(double ratio) const;

private:
    std::string name_;
    double rho_default_ = 0.5;
    ArcTable<ArcStats> arcs_{};
};

/// One deterministic draw of every arc delay (one Monte-Carlo point).
struct SampledLibrary {
    std::uint64_t seed = 0;
    ArcTable<double> delay_ps{};

    [[nodiscard]] double delay(CellKind kind, std::size_t pin, Edge e) const {
        return delay_ps[static_cast<std::size_t>(kind)][pin][static_cast<std::size_t>(e)];
    }
    friend bool operator==(const SampledLibrary&, const SampledLibrary&) = default;
};

/// Synthetic default library: INV fastest, XOR2/XNOR2/MUX2 slowest,
/// sigma/mu = 0.08 on every arc, rho_default = 0.5.
VariationLibrary default_variation_library();

VariationLibrary parse_variation_library(std::string_view json_text);
std::string serialize_variation_library(const VariationLibrary& lib);
VariationLibrary load_variation_library(const std::filesystem::path& path);
void save_variation_library(const VariationLibrary& lib, const std::filesystem::path& path);

/// delay = max(0.05 mu, mu + sigma (sqrt(rho) g + sqrt(1 - rho) z_arc)), with
/// g shared by the whole library and z_arc drawn per arc.
SampledLibrary sample_library(const VariationLibrary& lib, std::uint64_t seed, double rho);
SampledLibrary nominal_library(const VariationLibrary& lib);

std::string serialize_sampled_library(const SampledLibrary& lib, double rho);
SampledLibrary parse_sampled_library(std::string_view json_text);

inline constexpr double kClampFraction = 0.05;

}  // namespace vax
