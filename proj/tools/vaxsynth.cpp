// vaxsynth: variability-aware approximate circuit synthesis driver.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "vax/approx.hpp"
#include "vax/celllib.hpp"
#include "vax/errsim.hpp"
#include "vax/harness.hpp"
#include "vax/netlist.hpp"
#include "vax/optimize.hpp"
#include "vax/parallel.hpp"
#include "vax/timing.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Globals {
    std::uint64_t seed = 1;
    int threads = 0;
    std::string config;
};

vax::VariationLibrary library_or_default(const std::string& path) {
    return path.empty() ? vax::default_variation_library() : vax::load_variation_library(path);
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        vax::write_file(out, text);
    }
}

json path_json(const vax::Netlist& n, const std::vector<vax::PathStep>& path) {
    json arr = json::array();
    for (const auto& s : path) {
        const auto& g = n.gates()[s.gate];
        arr.push_back({{"gate", g.name},
                       {"cell", std::string(vax::cell_info(g.kind).name)},
                       {"pin", std::string(vax::cell_info(g.kind).pins[s.pin])},
                       {"in_edge", std::string(vax::edge_name(s.in_edge))},
                       {"out_edge", std::string(vax::edge_name(s.out_edge))}});
    }
    return arr;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variability-aware approximate circuit synthesis"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (0 = all)")->capture_default_str();
    app.add_option("--config", g.config, "key = value file with run defaults (e.g. a run's report/config)");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a benchmark netlist");
    std::string family = "rca_adder", gen_out;
    int width = 8, taps = 8;
    bool gen_signed = false;
    gen->add_option("--family", family, "rca_adder | cla_adder | array_multiplier | mac_fir")->capture_default_str();
    gen->add_option("--width", width, "Operand width: 4, 8, 16 or 32")->capture_default_str();
    gen->add_option("--taps", taps, "FIR taps")->capture_default_str();
    gen->add_flag("--signed", gen_signed, "Two's-complement adder");
    gen->add_option("--out", gen_out, "Output netlist file (default stdout)");

    // sample-libs
    auto* sl = app.add_subcommand("sample-libs", "Draw sampled libraries");
    std::string sl_lib, sl_out = "libs";
    std::size_t sl_count = 10;
    std::optional<double> sl_rho;
    sl->add_option("--library", sl_lib, "Variation library JSON (default: built-in)");
    sl->add_option("--count", sl_count, "Number of libraries")->capture_default_str();
    sl->add_option("--rho", sl_rho, "Global correlation (default: library rho_default)");
    sl->add_option("--out", sl_out, "Output directory")->capture_default_str();
    bool sl_write_default = false;
    sl->add_flag("--write-variation", sl_write_default, "Also write the variation library as variation.json");

    // sta
    auto* sta = app.add_subcommand("sta", "Deterministic STA on one library");
    std::string sta_net, sta_lib, sta_sampled, sta_out;
    std::optional<std::uint64_t> sta_sample_seed;
    sta->add_option("--netlist", sta_net, "Netlist file")->required();
    sta->add_option("--library", sta_lib, "Variation library JSON (nominal delays unless sampled)");
    sta->add_option("--sampled", sta_sampled, "Sampled library JSON");
    sta->add_option("--sample-seed", sta_sample_seed, "Sample the variation library with this seed");
    sta->add_option("--out", sta_out, "Report file (default stdout)");

    // ssta
    auto* ssta = app.add_subcommand("ssta", "Statistical traversal and CPB");
    std::string ssta_net, ssta_lib, ssta_tmap, ssta_out;
    std::size_t ssta_k = 1000;
    double ssta_cpb = vax::kDefaultCpbThreshold;
    ssta->add_option("--netlist", ssta_net, "Netlist file")->required();
    ssta->add_option("--library", ssta_lib, "Variation library JSON");
    ssta->add_option("--tmap", ssta_tmap, "Edge-transition map JSON (default: annotate by Monte-Carlo)");
    ssta->add_option("--mc-k", ssta_k, "Libraries used for edge annotation")->capture_default_str();
    ssta->add_option("--cpb-threshold", ssta_cpb, "Candidate threshold")->capture_default_str();
    ssta->add_option("--out", ssta_out, "Report file (default stdout)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Functional error metrics");
    std::string sim_net, sim_approx, sim_ds, sim_write_ds, sim_lib, sim_out;
    std::size_t sim_n = 100000;
    bool sim_exhaustive = false, sim_signed = false;
    std::optional<double> sim_clock;
    std::optional<std::uint64_t> sim_sample_seed;
    sim->add_option("--netlist", sim_net, "Exact netlist")->required();
    sim->add_option("--approx", sim_approx, "Approximate netlist (default: the exact one)");
    sim->add_option("--dataset", sim_ds, "Dataset file to read");
    sim->add_option("--vectors", sim_n, "Random vectors when no dataset is given")->capture_default_str();
    sim->add_flag("--exhaustive", sim_exhaustive, "All input patterns (at most 20 inputs)");
    sim->add_flag("--signed", sim_signed, "Two's-complement output interpretation");
    sim->add_option("--write-dataset", sim_write_ds, "Save the dataset used");
    sim->add_option("--clock", sim_clock, "Clock period for stale-value timing errors");
    sim->add_option("--library", sim_lib, "Variation library for timing errors");
    sim->add_option("--sample-seed", sim_sample_seed, "Sampled library seed for timing errors (default nominal)");
    sim->add_option("--out", sim_out, "Report file (default stdout)");

    // optimize
    auto* opt = app.add_subcommand("optimize", "NSGA-II search over approximation candidates");
    vax::RunConfig rc;
    std::string opt_net, opt_lib, opt_out;
    opt->add_option("--netlist", opt_net, "Baseline netlist");
    opt->add_option("--library", opt_lib, "Variation library JSON (default: built-in)");
    auto* o_cpb = opt->add_option("--cpb-threshold", rc.cpb_threshold, "CPB threshold")->capture_default_str();
    auto* o_pop = opt->add_option("--pop", rc.ga.population, "Population size")->capture_default_str();
    auto* o_gens = opt->add_option("--gens", rc.ga.generations, "Generations")->capture_default_str();
    std::uint64_t opt_seed = 1;
    auto* o_seed = opt->add_option("--seed", opt_seed, "GA seed (default: global --seed)");
    auto* o_eb =
        opt->add_option("--error-bound", rc.error_bound, "NMED bound; negative = baseline worst-case NMED")
            ->capture_default_str();
    auto* o_lambda = opt->add_option("--lambda", rc.ga.lambda, "Confidence penalty")->capture_default_str();
    auto* o_mck = opt->add_option("--mc-k", rc.mc_k, "Monte-Carlo libraries")->capture_default_str();
    std::uint64_t mc_seed = 1;
    auto* o_mcs = opt->add_option("--mc-seed", mc_seed, "First Monte-Carlo library seed (default: --seed)");
    auto* o_ev = opt->add_option("--eval-vectors", rc.ga.eval_vectors, "Search dataset size")->capture_default_str();
    auto* o_rv =
        opt->add_option("--report-vectors", rc.report_vectors, "Evaluation dataset size")->capture_default_str();
    bool no_greedy = false;
    auto* o_ng = opt->add_flag("--no-greedy", no_greedy, "Skip the GreedyGLP comparison during evaluate");
    bool opt_signed = false;
    auto* o_signed = opt->add_flag("--signed", opt_signed, "Two's-complement output interpretation");
    bool opt_full = false;
    opt->add_flag("--full", opt_full, "Also run evaluate and report");
    opt->add_option("--out", opt_out, "Run directory")->required();

    // evaluate / report
    auto* ev = app.add_subcommand("evaluate", "Monte-Carlo evaluation of a run's front");
    std::string ev_run;
    ev->add_option("--run", ev_run, "Run directory")->required();
    auto* rep = app.add_subcommand("report", "CSV reports for an evaluated run");
    std::string rep_run;
    rep->add_option("--run", rep_run, "Run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        vax::set_threads(g.threads);

        if (gen->parsed()) {
            auto fam = vax::parse_family(family);
            if (!fam) throw std::invalid_argument("unknown family " + family);
            vax::BenchmarkSpec spec{*fam, width, taps,
                                    gen_signed ? vax::Signedness::TwosComplement : vax::Signedness::Unsigned};
            emit(gen_out, vax::write_netlist(vax::generate_benchmark(spec)));
        } else if (sl->parsed()) {
            const auto lib = library_or_default(sl_lib);
            const double rho = sl_rho.value_or(lib.rho_default());
            fs::create_directories(sl_out);
            if (sl_write_default) vax::save_variation_library(lib, fs::path(sl_out) / "variation.json");
            for (std::size_t i = 0; i < sl_count; ++i) {
                const auto seed = g.seed + i;
                vax::write_file(fs::path(sl_out) / ("sample_" + std::to_string(seed) + ".json"),
                                vax::serialize_sampled_library(vax::sample_library(lib, seed, rho), rho));
            }
        } else if (sta->parsed()) {
            const auto n = vax::parse_netlist(vax::read_file(sta_net));
            vax::SampledLibrary lib;
            if (!sta_sampled.empty()) {
                lib = vax::parse_sampled_library(vax::read_file(sta_sampled));
            } else {
                const auto vlib = library_or_default(sta_lib);
                lib = sta_sample_seed ? vax::sample_library(vlib, *sta_sample_seed, vlib.rho_default())
                                      : vax::nominal_library(vlib);
            }
            const auto r = vax::sta_arrivals(n, lib);
            json j;
            j["circuit"] = n.name();
            j["cpd_ps"] = r.cpd;
            if (r.endpoint) {
                j["endpoint"] = n.net_name(n.outputs()[*r.endpoint]);
                j["endpoint_edge"] = std::string(vax::edge_name(r.endpoint_edge));
            }
            json po = json::object();
            for (std::size_t i = 0; i < r.po_arrival.size(); ++i) {
                po[n.net_name(n.outputs()[i])] = std::isfinite(r.po_arrival[i]) ? json(r.po_arrival[i]) : json();
            }
            j["po_arrival_ps"] = po;
            j["critical_path"] = path_json(n, vax::extract_critical_path(n, r));
            emit(sta_out, j.dump(2) + "\n");
        } else if (ssta->parsed()) {
            const auto n = vax::parse_netlist(vax::read_file(ssta_net));
            const auto vlib = library_or_default(ssta_lib);
            const auto tmap = ssta_tmap.empty() ? vax::annotate_edge_transitions(n, vlib, ssta_k, g.seed)
                                                : vax::EdgeTransitionMap::from_json(vax::read_file(ssta_tmap));
            const auto r = vax::ssta_traverse(n, vlib, tmap);
            const auto cs = vax::build_candidates(n, r, ssta_cpb);
            json j;
            j["circuit"] = n.name();
            if (r.endpoint) j["endpoint"] = n.net_name(n.outputs()[*r.endpoint]);
            j["mu_ps"] = r.cpd.mu;
            j["sigma_ps"] = r.cpd.sigma();
            j["confidence"] = r.confidence;
            json ep = json::object();
            for (std::size_t i = 0; i < r.endpoint_prob.size(); ++i) {
                ep[n.net_name(n.outputs()[i])] = r.endpoint_prob[i];
            }
            j["endpoint_probability"] = ep;
            json cpb = json::object();
            for (vax::NetId id = 2; id < n.net_count(); ++id) cpb[n.net_name(id)] = r.cpb[id];
            j["cpb"] = cpb;
            j["candidates"] = cs.nets;
            j["candidate_ratio"] = static_cast<double>(cs.size()) / static_cast<double>(n.net_count() - 2);
            emit(ssta_out, j.dump(2) + "\n");
        } else if (sim->parsed()) {
            const auto exact = vax::parse_netlist(vax::read_file(sim_net));
            const auto approx = sim_approx.empty() ? exact : vax::parse_netlist(vax::read_file(sim_approx));
            const auto sign = sim_signed ? vax::Signedness::TwosComplement : vax::Signedness::Unsigned;
            const auto ds = sim_ds.empty() ? vax::generate_dataset(exact, sim_n, g.seed, sim_exhaustive, sign)
                                           : vax::parse_dataset(vax::read_file(sim_ds));
            if (!sim_write_ds.empty()) vax::write_file(sim_write_ds, vax::format_dataset(ds));
            auto to_json = [](const vax::ErrorMetrics& m) {
                return json{{"nmed", m.nmed}, {"mred", m.mred}, {"error_rate", m.error_rate},
                            {"max_ed", m.max_ed}, {"vectors", m.count}};
            };
            json j;
            j["functional"] = to_json(vax::simulate_metrics(exact, approx, ds));
            if (sim_clock) {
                const auto vlib = library_or_default(sim_lib);
                const auto lib = sim_sample_seed ? vax::sample_library(vlib, *sim_sample_seed, vlib.rho_default())
                                                 : vax::nominal_library(vlib);
                const auto sta_r = vax::sta_arrivals(approx, lib);
                const auto ref = vax::Evaluator(exact).simulate(ds);
                const auto out = vax::Evaluator(approx).simulate(ds);
                j["timing"] = to_json(vax::stale_value_metrics(ref, out, sta_r.po_arrival, *sim_clock, ds.signedness()));
                j["timing"]["clock_ps"] = *sim_clock;
            }
            emit(sim_out, j.dump(2) + "\n");
        } else if (opt->parsed()) {
            vax::RunConfig cfg = g.config.empty() ? vax::RunConfig{} : vax::parse_run_config(vax::read_file(g.config));
            if (g.config.empty()) {
                cfg.ga.seed = g.seed;
                cfg.mc_seed = g.seed;
            }
            if (!opt_net.empty()) cfg.netlist = opt_net;
            if (!opt_lib.empty()) cfg.library = opt_lib;
            if (cfg.netlist.empty()) throw std::invalid_argument("optimize needs --netlist (or a config naming one)");
            auto take = [](CLI::Option* o, auto& dst, const auto& src) {
                if (o->count() > 0) dst = src;
            };
            take(o_cpb, cfg.cpb_threshold, rc.cpb_threshold);
            take(o_pop, cfg.ga.population, rc.ga.population);
            take(o_gens, cfg.ga.generations, rc.ga.generations);
            take(o_eb, cfg.error_bound, rc.error_bound);
            take(o_lambda, cfg.ga.lambda, rc.ga.lambda);
            take(o_mck, cfg.mc_k, rc.mc_k);
            take(o_ev, cfg.ga.eval_vectors, rc.ga.eval_vectors);
            take(o_rv, cfg.report_vectors, rc.report_vectors);
            if (o_seed->count() > 0) {
                cfg.ga.seed = opt_seed;
                if (o_mcs->count() == 0) cfg.mc_seed = opt_seed;
            } else if (app.get_option("--seed")->count() > 0) {
                cfg.ga.seed = g.seed;
                if (o_mcs->count() == 0) cfg.mc_seed = g.seed;
            }
            take(o_mcs, cfg.mc_seed, mc_seed);
            if (o_ng->count() > 0) cfg.greedy = !no_greedy;
            if (o_signed->count() > 0) cfg.signedness = vax::Signedness::TwosComplement;

            const auto s = vax::optimize_run(cfg, opt_out);
            std::printf("candidates %zu of %zu nets, error bound %.6g, front %zu%s\n", s.candidates, s.nets,
                        s.error_bound, s.front_size, s.no_feasible ? " (no feasible design; warning)" : "");
            if (opt_full) {
                vax::evaluate_run(opt_out);
                vax::report_run(opt_out);
            }
        } else if (ev->parsed()) {
            vax::evaluate_run(ev_run);
        } else if (rep->parsed()) {
            vax::report_run(rep_run);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
