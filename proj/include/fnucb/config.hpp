#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fnucb/harness.hpp"

namespace fnucb {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` document. Lines starting with '#' (or after an inline
/// ' #') are comments. Keys are validated against the frozen schema;
/// unknown keys are errors so hyperparameter typos cannot pass silently.
class FlatConfig {
public:
    static FlatConfig parse_file(const std::string& path);
    static FlatConfig parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    long get_long(const std::string& key, long fallback) const;
    double get_double(const std::string& key, double fallback) const;  // accepts "inf"
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;  // comma separated

    const std::map<std::string, std::string>& entries() const { return entries_; }
    long line_of(const std::string& key) const;
    const std::string& origin() const { return origin_; }

private:
    std::string origin_;
    std::map<std::string, std::string> entries_;
    std::map<std::string, long> lines_;
    [[noreturn]] void fail(const std::string& key, const std::string& msg) const;
};

/// Builds the base RunConfig, enforcing schema_version and rejecting
/// unknown keys. `${DATA_ROOT}` in dataset paths expands to the
/// FNUCB_DATA_ROOT environment variable.
RunConfig run_config_from(const FlatConfig&);

struct GridCell {
    RunConfig cfg;
    std::string name;  ///< deterministic: <policy>_N<agents>_D<threshold>_s<seed>
};

/// Expands the sweep axes (agents, sync_threshold, policy, seed) into the
/// full cross product; empty axes leave the base value as a single cell.
std::vector<GridCell> expand_grid(const FlatConfig&);

struct SummaryRow {
    std::string policy;
    int agents = 0;
    double sync_threshold = 0.0;
    std::string env;
    long t = 0;
    double mean_cum_regret = 0.0;  ///< across seeds, of the per-agent mean
    double stderr_cum_regret = 0.0;
    int seeds = 0;
};

struct GridResult {
    int cells = 0;
    int failures = 0;
    std::vector<std::string> failed_cells;
};

/// Runs every cell, writing <name>_trace.csv and <name>_ledger.json plus a
/// summary.csv aggregated over the seed axis. Cell failures are isolated;
/// the grid keeps going.
GridResult run_grid(const FlatConfig& base, const std::string& out_dir, int workers = 0,
                    bool verbose = true);

std::vector<SummaryRow> read_summary_csv(const std::string& path);
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os);

/// Cumulative-regret curves with stderr bands as a standalone SVG. Output
/// is byte-identical for identical input.
void emit_plot(const std::vector<SummaryRow>& rows, std::ostream& os);

}  // namespace fnucb
