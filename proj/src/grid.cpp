#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fnucb/config.hpp"

namespace fnucb {

namespace {

std::string threshold_token(double d) {
    if (std::isinf(d)) return "inf";
    std::ostringstream ss;
    ss << d;
    return ss.str();
}

struct CellOutcome {
    bool ok = false;
    std::string error;
    RegretTrace trace;
};

}  // namespace

GridResult run_grid(const FlatConfig& base, const std::string& out_dir, int workers,
                    bool verbose) {
    namespace fs = std::filesystem;
    const std::vector<GridCell> cells = expand_grid(base);
    fs::create_directories(out_dir);

    std::vector<CellOutcome> outcomes(cells.size());

#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif

#pragma omp parallel for schedule(dynamic)
    for (long long ci = 0; ci < static_cast<long long>(cells.size()); ++ci) {
        const GridCell& cell = cells[static_cast<std::size_t>(ci)];
        CellOutcome& out = outcomes[static_cast<std::size_t>(ci)];
        try {
            out.trace = run(cell.cfg);
            const fs::path trace_path = fs::path(out_dir) / (cell.name + "_trace.csv");
            const fs::path ledger_path = fs::path(out_dir) / (cell.name + "_ledger.json");
            std::ofstream tf(trace_path);
            write_trace_csv(out.trace, tf, policy_name(cell.cfg.policy),
                            static_cast<long>(cell.cfg.seed));
            std::ofstream lf(ledger_path);
            write_ledger_json(out.trace, cell.cfg, lf);
            out.ok = true;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    }

    // Aggregate over the seed axis: group = (policy, N, D, env).
    std::map<std::string, std::vector<std::size_t>> groups;
    std::vector<std::string> group_order;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        if (!outcomes[ci].ok) continue;
        const RunConfig& cfg = cells[ci].cfg;
        const std::string key = std::string(policy_name(cfg.policy)) + "|" +
                                std::to_string(cfg.agents) + "|" +
                                threshold_token(cfg.sync_threshold) + "|" +
                                (cfg.env.kind == EnvConfig::Kind::cosine   ? "cosine"
                                 : cfg.env.kind == EnvConfig::Kind::square ? "square"
                                                                           : "dataset");
        if (!groups.count(key)) group_order.push_back(key);
        groups[key].push_back(ci);
    }

    std::vector<SummaryRow> rows;
    for (const std::string& key : group_order) {
        const auto& members = groups.at(key);
        const RunConfig& cfg = cells[members.front()].cfg;
        const long T = cfg.iterations;
        for (long t = 1; t <= T; ++t) {
            double mean = 0.0;
            for (const std::size_t ci : members) mean += outcomes[ci].trace.mean_cum_regret(t);
            mean /= static_cast<double>(members.size());
            double var = 0.0;
            for (const std::size_t ci : members) {
                const double d = outcomes[ci].trace.mean_cum_regret(t) - mean;
                var += d * d;
            }
            double se = 0.0;
            if (members.size() > 1) {
                var /= static_cast<double>(members.size() - 1);
                se = std::sqrt(var / static_cast<double>(members.size()));
            }
            SummaryRow row;
            row.policy = policy_name(cfg.policy);
            row.agents = cfg.agents;
            row.sync_threshold = cfg.sync_threshold;
            row.env = key.substr(key.rfind('|') + 1);
            row.t = t;
            row.mean_cum_regret = mean;
            row.stderr_cum_regret = se;
            row.seeds = static_cast<int>(members.size());
            rows.push_back(row);
        }
    }
    {
        std::ofstream sf(std::filesystem::path(out_dir) / "summary.csv");
        write_summary_csv(rows, sf);
    }

    GridResult res;
    res.cells = static_cast<int>(cells.size());
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        if (!outcomes[ci].ok) {
            ++res.failures;
            res.failed_cells.push_back(cells[ci].name + ": " + outcomes[ci].error);
        }
    }
    if (verbose) {
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            if (outcomes[ci].ok) {
                std::cerr << "[grid] " << cells[ci].name << " ok, mean cum regret "
                          << outcomes[ci].trace.mean_cum_regret(cells[ci].cfg.iterations) << "\n";
            } else {
                std::cerr << "[grid] " << cells[ci].name << " FAILED: " << outcomes[ci].error
                          << "\n";
            }
        }
    }
    return res;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os) {
    os << "policy,agents,sync_threshold,env,t,mean_cum_regret,stderr,seeds\n";
    char buf[64];
    for (const SummaryRow& r : rows) {
        os << r.policy << ',' << r.agents << ',' << threshold_token(r.sync_threshold) << ','
           << r.env << ',' << r.t << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", r.mean_cum_regret);
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", r.stderr_cum_regret);
        os << buf << ',' << r.seeds << '\n';
    }
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open summary: " + path);
    std::vector<SummaryRow> rows;
    std::string line;
    bool header = true;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> f;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != 8)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 8 columns");
        SummaryRow r;
        r.policy = f[0];
        r.agents = std::stoi(f[1]);
        r.sync_threshold = f[2] == "inf" ? std::numeric_limits<double>::infinity() : std::stod(f[2]);
        r.env = f[3];
        r.t = std::stol(f[4]);
        r.mean_cum_regret = std::stod(f[5]);
        r.stderr_cum_regret = std::stod(f[6]);
        r.seeds = std::stoi(f[7]);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace fnucb
