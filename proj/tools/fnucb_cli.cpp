#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fnucb/analysis.hpp"
#include "fnucb/config.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, int workers,
            const std::string& log_level) {
    const fnucb::FlatConfig cfg = fnucb::FlatConfig::parse_file(config_path);
    const fnucb::GridResult res =
        fnucb::run_grid(cfg, out_dir, workers, log_level != "quiet");
    if (res.failures > 0) {
        std::cerr << res.failures << "/" << res.cells << " cells failed:\n";
        for (const auto& f : res.failed_cells) std::cerr << "  " << f << "\n";
        return 1;
    }
    if (log_level != "quiet")
        std::cerr << res.cells << " cells finished, summary at " << out_dir << "/summary.csv\n";
    return 0;
}

int cmd_plot(const std::string& summary_path, const std::string& out_path) {
    const auto rows = fnucb::read_summary_csv(summary_path);
    std::ofstream os(out_path);
    if (!os) {
        std::cerr << "cannot write " << out_path << "\n";
        return 1;
    }
    fnucb::emit_plot(rows, os);
    return 0;
}

// Desk-scale theory report: samples contexts from the configured
// environment, computes the tangent-kernel effective dimensions and the
// closed-form exploration scales, and folds in epoch diagnostics when a
// ledger with log-det snapshots is supplied.
int cmd_analyze(const std::string& config_path, const std::string& out_path, int samples,
                double delta, double reward_bound, double noise_scale,
                const std::string& ledger_path) {
    const fnucb::FlatConfig flat = fnucb::FlatConfig::parse_file(config_path);
    const fnucb::RunConfig cfg = fnucb::run_config_from(flat);

    auto env = fnucb::make_environment(cfg.env, cfg.seed);
    std::vector<std::vector<std::vector<double>>> per_agent(
        static_cast<std::size_t>(cfg.agents));
    std::vector<std::vector<double>> pooled;
    std::vector<double> pooled_h;
    long t = 1;
    while (static_cast<int>(per_agent.front().size()) < samples) {
        for (int i = 0; i < cfg.agents; ++i) {
            const fnucb::ContextSet set = env->draw_contexts(t, i);
            for (std::size_t k = 0; k < set.contexts.size(); ++k) {
                if (static_cast<int>(per_agent[static_cast<std::size_t>(i)].size()) >= samples)
                    break;
                per_agent[static_cast<std::size_t>(i)].push_back(set.contexts[k]);
                pooled.push_back(set.contexts[k]);
                pooled_h.push_back(set.true_h[k]);
            }
        }
        ++t;
    }

    const auto dims = fnucb::effective_dimension_by_agent(per_agent, cfg.depth, cfg.lambda,
                                                          cfg.iterations, env->arms());
    const auto theory =
        fnucb::theory_params(reward_bound, noise_scale, delta, dims.d_tilde, dims.d_max,
                             cfg.iterations, env->arms(), cfg.agents, cfg.lambda);
    double b_estimate = 0.0;
    try {
        b_estimate = fnucb::estimate_reward_norm_bound(pooled, pooled_h, cfg.depth);
    } catch (const std::exception& e) {
        std::cerr << "reward-norm estimate skipped: " << e.what() << "\n";
    }

    nlohmann::json j{{"contexts_sampled_per_agent", samples},
                     {"d_tilde", dims.d_tilde},
                     {"d_tilde_per_agent", dims.per_agent},
                     {"d_tilde_max", dims.d_max},
                     {"nu_tkn_suggested", theory.nu_tkn},
                     {"nu_tk_suggested", theory.nu_tk},
                     {"sync_threshold_suggested", theory.d_suggested},
                     {"delta", delta},
                     {"reward_bound_B", reward_bound},
                     {"noise_scale_R", noise_scale},
                     {"reward_norm_bound_estimate", b_estimate},
                     {"reward_norm_bound_is_estimate", true}};

    if (!ledger_path.empty()) {
        std::ifstream lf(ledger_path);
        if (!lf) {
            std::cerr << "cannot open ledger " << ledger_path << "\n";
            return 1;
        }
        nlohmann::json ledger;
        lf >> ledger;
        if (ledger.contains("epoch_logdets")) {
            const auto snaps = ledger.at("epoch_logdets").get<std::vector<double>>();
            const auto diag = fnucb::epoch_diagnostics(snaps);
            nlohmann::json epochs = nlohmann::json::array();
            for (const auto& e : diag.epochs)
                epochs.push_back({{"epoch", e.index}, {"log_ratio", e.log_ratio}, {"good", e.good}});
            j["epochs"] = std::move(epochs);
            j["bad_epochs"] = diag.bad_epochs;
            j["total_log_det_ratio"] = diag.total_log_ratio;
            j["telescope_error"] = diag.telescope_error;
        } else {
            std::cerr << "ledger has no epoch_logdets (run with record_snapshots = true)\n";
        }
    }

    std::ofstream os(out_path);
    if (!os) {
        std::cerr << "cannot write " << out_path << "\n";
        return 1;
    }
    os << j.dump(2) << "\n";
    return 0;
}

int cmd_validate(const std::string& config_path) {
    try {
        const fnucb::FlatConfig flat = fnucb::FlatConfig::parse_file(config_path);
        const auto cells = fnucb::expand_grid(flat);
        std::cout << "OK: " << config_path << " (" << cells.size() << " grid cell"
                  << (cells.size() == 1 ? "" : "s") << ")\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "INVALID: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated neural-UCB simulation harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir, out_path, summary_path, ledger_path, log_level = "info";
    int workers = 0;
    int samples = 32;
    double delta = 0.1, reward_bound = 1.0, noise_scale = 0.01;

    auto* run_cmd = app.add_subcommand("run", "execute an experiment grid");
    run_cmd->add_option("--config", config_path, "flat key=value config")->required();
    run_cmd->add_option("--out-dir", out_dir, "output directory")->required();
    run_cmd->add_option("--workers", workers, "worker threads for grid cells (0 = default)");
    run_cmd->add_option("--log-level", log_level, "info|quiet");

    auto* plot_cmd = app.add_subcommand("plot", "render regret curves from a summary CSV");
    plot_cmd->add_option("--summary", summary_path, "summary.csv from a run")->required();
    plot_cmd->add_option("--out", out_path, "output SVG path")->required();

    auto* analyze_cmd = app.add_subcommand("analyze", "tangent-kernel and epoch diagnostics");
    analyze_cmd->add_option("--config", config_path, "flat key=value config")->required();
    analyze_cmd->add_option("--out", out_path, "output JSON path")->required();
    analyze_cmd->add_option("--contexts", samples, "contexts sampled per agent");
    analyze_cmd->add_option("--delta", delta, "failure probability");
    analyze_cmd->add_option("--reward-bound", reward_bound, "reward-norm constant B");
    analyze_cmd->add_option("--noise", noise_scale, "sub-Gaussian noise scale R");
    analyze_cmd->add_option("--ledger", ledger_path, "ledger JSON with log-det snapshots");

    auto* validate_cmd = app.add_subcommand("validate-config", "parse and check a config");
    validate_cmd->add_option("--config", config_path, "flat key=value config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, out_dir, workers, log_level);
        if (plot_cmd->parsed()) return cmd_plot(summary_path, out_path);
        if (analyze_cmd->parsed())
            return cmd_analyze(config_path, out_path, samples, delta, reward_bound, noise_scale,
                               ledger_path);
        if (validate_cmd->parsed()) return cmd_validate(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
