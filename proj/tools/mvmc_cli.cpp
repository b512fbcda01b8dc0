// Command-line front end: run experiment batches, fit query-count scaling
// exponents from CSVs, render plots, and generate fixture instances.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "mvmc/harness.hpp"
#include "mvmc/json_io.hpp"

namespace {

int guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const mvmc::ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const mvmc::InsufficientPoints& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

void write_text(const std::string& path, const std::string& body) {
    if (path.empty() || path == "-") {
        std::cout << body;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mvmc::OutputUnwritable("cannot open '" + path + "'");
    out << body;
    if (!out) throw mvmc::OutputUnwritable("short write to '" + path + "'");
}

std::vector<mvmc::TrialRecord> load_all(const std::vector<std::string>& csvs) {
    std::vector<mvmc::TrialRecord> records;
    for (const std::string& path : csvs) {
        auto part = mvmc::records_from_csv(path);
        records.insert(records.end(), part.begin(), part.end());
    }
    return records;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum multivariate Monte Carlo estimator harness"};
    app.require_subcommand(1);

    // --- run ---------------------------------------------------------------
    auto* run = app.add_subcommand("run", "Run an experiment config");
    std::string config_path;
    run->add_option("config", config_path, "JSON experiment config")->required();

    // --- fit ---------------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "Fit a log-log scaling exponent");
    std::string axis = "d", counter = "reward";
    std::vector<std::string> fit_csvs;
    fit->add_option("--axis", axis, "d | eps | T")->required();
    fit->add_option("--counter", counter,
                    "reward | transition | q_reward | q_transition | q_lattice")
        ->required();
    fit->add_option("csv", fit_csvs, "input CSV file(s)")->required();

    // --- plot --------------------------------------------------------------
    auto* plot = app.add_subcommand("plot", "Render an SVG plot from CSVs");
    std::string plot_spec, plot_out = "-";
    std::vector<std::string> plot_csvs;
    plot->add_option("spec", plot_spec, "success | scaling:<axis>:<counter>")
        ->required();
    plot->add_option("csv", plot_csvs, "input CSV file(s)")->required();
    plot->add_option("-o,--out", plot_out, "output file (default stdout)");

    // --- gen-fixture -------------------------------------------------------
    auto* gen = app.add_subcommand("gen-fixture",
                                   "Generate a fixture instance as JSON");
    std::string family = "single_loop_phase", gen_out = "-";
    int gd = 1, gk = 1;
    double geps = 0.1, ggamma = 1.0, gq = 2.0, grmax = 1.0;
    long long gT = -1;  // -1 = infinite horizon
    std::uint64_t gseed = 1;
    gen->add_option("family", family,
                    "single_loop_phase | single_loop_probability | "
                    "single_loop_distribution | majority_parity")
        ->required();
    gen->add_option("--d", gd, "reward dimension");
    gen->add_option("--eps", geps, "family accuracy parameter");
    gen->add_option("--T", gT, "horizon (-1 = infinite)");
    gen->add_option("--gamma", ggamma, "discount");
    gen->add_option("--q", gq, "reward norm index (0 = inf)");
    gen->add_option("--r-max", grmax, "reward norm bound");
    gen->add_option("--k", gk, "majority-parity block count");
    gen->add_option("--seed", gseed, "hidden-bit seed");
    gen->add_option("-o,--out", gen_out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        return guarded([&] {
            const mvmc::ExperimentConfig cfg =
                mvmc::load_experiment_config(config_path);
            const mvmc::ExperimentResult result = mvmc::run_experiment(cfg);
            mvmc::write_csv(cfg, result);
            std::cerr << mvmc::summarize(cfg, result);
        });
    }
    if (fit->parsed()) {
        return guarded([&] {
            const auto records = load_all(fit_csvs);
            const mvmc::FitResult f = mvmc::fit_scaling(records, axis, counter);
            std::cout << "axis=" << axis << " counter=" << counter
                      << " slope=" << mvmc::format_double(f.slope)
                      << " stderr=" << mvmc::format_double(f.stderr_slope)
                      << " points=" << f.points << "\n";
        });
    }
    if (plot->parsed()) {
        return guarded([&] {
            const auto records = load_all(plot_csvs);
            write_text(plot_out, mvmc::render_plot(records, plot_spec));
        });
    }
    if (gen->parsed()) {
        return guarded([&] {
            mvmc::HardInstanceDescriptor desc;
            desc.family = mvmc::fixture_family_from_string(family);
            desc.d = gd;
            desc.eps = geps;
            desc.T = gT < 0 ? mvmc::Depth::infinite() : mvmc::Depth::finite(gT);
            desc.gamma = ggamma;
            desc.q = gq == 0.0 ? mvmc::kInf : gq;
            desc.r_max = grmax;
            desc.k = gk;
            if (desc.family == mvmc::FixtureFamily::MajorityParity) {
                desc.t_prime = mvmc::majority_parity_t_prime(desc.T, desc.gamma);
                desc.bits = mvmc::random_majority_parity_bits(desc.d, desc.k,
                                                              desc.t_prime, gseed);
            } else {
                mvmc::CounterRng rng(gseed, 0x62697473ULL);
                desc.bits.resize(desc.d);
                for (int& b : desc.bits) b = static_cast<int>(rng.below(2));
            }
            const mvmc::MrpInstance inst = mvmc::fixture_instance(desc);
            mvmc::json j;
            j["descriptor"] = mvmc::descriptor_to_json(desc);
            j["instance"] = mvmc::instance_to_json(inst);
            j["value"] = mvmc::json::array();
            const Eigen::VectorXd v = mvmc::fixture_value(desc);
            for (Eigen::Index i = 0; i < v.size(); ++i) j["value"].push_back(v[i]);
            write_text(gen_out, j.dump(2) + "\n");
        });
    }
    return 0;
}
