#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "fnucb/agent.hpp"
#include "fnucb/baselines.hpp"
#include "fnucb/environments.hpp"
#include "fnucb/neural.hpp"

namespace fnucb {

enum class PolicyKind { fnucb, neural_ucb, neural_ts, linear_ucb, linear_ts };

const char* policy_name(PolicyKind);
PolicyKind policy_from_name(const std::string&);

struct EnvConfig {
    enum class Kind { cosine, square, dataset } kind = Kind::cosine;
    int dim = 10;             ///< synthetic context dimension
    int arms = 4;             ///< synthetic arm count; datasets use their class count
    double noise_sd = 0.01;   ///< synthetic observation noise
    std::string dataset_path;
    std::string schema_path;
    bool duplicate_contexts = false;  ///< emit duplicated-half contexts (synthetic only)
};

std::unique_ptr<Environment> make_environment(const EnvConfig&, std::uint64_t seed);

struct RunConfig {
    long iterations = 2000;       ///< T
    int agents = 1;               ///< N
    double sync_threshold = 0.0;  ///< D; +inf disables communication

    double lambda = 0.1;
    double nu_tkn = 0.1;
    double nu_tk = 0.1;
    CovMode mode = CovMode::full;
    bool sync_check_diagonal = true;
    RescaleMode rescale = RescaleMode::automatic;

    bool simplified_alpha = false;
    bool no_param_aggregation = false;
    bool alpha_sigma_at_epoch_start = false;
    bool warm_start_from_aggregate = true;
    AlphaSchedule alpha_schedule;
    int alpha_reference_samples = 256;

    int width = 20;
    int depth = 2;
    TrainConfig train;

    EnvConfig env;

    PolicyKind policy = PolicyKind::fnucb;
    double baseline_nu = 0.1;
    bool baseline_raw_features = false;

    std::uint64_t seed = 1;
    bool record_snapshots = false;

    void validate() const;
    AgentConfig agent_config() const;
};

struct RoundRecord {
    long round_index = 0;    ///< 1-based
    long iteration = 0;      ///< t at which the round fired
    int trigger_agent = 0;   ///< lowest agent id whose criterion fired
    std::size_t upload_params = 0;     ///< per-agent upload, exchanged parameters
    std::size_t broadcast_params = 0;  ///< server broadcast, exchanged parameters
    std::size_t total_params = 0;      ///< N uploads + broadcast
};

/// Per-(t, agent) instantaneous regret plus the communication-round ledger.
/// Rows are stored flat at (t-1)*agents + agent.
struct RegretTrace {
    long iterations = 0;
    int agents = 0;
    std::vector<double> regret;
    std::vector<double> cum_regret;  ///< per-agent running total
    std::vector<double> alpha;
    std::vector<int> chosen;
    std::vector<double> chosen_score;        ///< combined score of the pulled arm
    std::vector<double> chosen_true_reward;  ///< exact h at the pulled arm
    std::vector<std::uint8_t> round_flag;  ///< per iteration
    std::vector<RoundRecord> rounds;
    std::vector<double> epoch_logdets;  ///< V_0, V_1..V_P log-dets when snapshots are on

    std::size_t idx(long t, int agent) const {
        return static_cast<std::size_t>(t - 1) * static_cast<std::size_t>(agents) +
               static_cast<std::size_t>(agent);
    }
    /// Mean over agents of the per-agent cumulative regret at iteration t.
    double mean_cum_regret(long t) const;
    double total_regret() const;
};

/// Runs the synchronous loop: context delivery, arm selection, observation,
/// any-agent sync trigger, training + aggregation rounds, metric collection.
/// Identical configs (including the seed) produce bitwise-identical traces
/// for any worker count.
RegretTrace run(const RunConfig& cfg);

struct LedgerSummary {
    long total_rounds = 0;
    std::size_t total_params = 0;
    std::size_t upload_params_per_agent = 0;  ///< 0 when no rounds happened
};
LedgerSummary communication_ledger(const RegretTrace&);

/// CSV columns: t,agent,regret,cum_regret,alpha,round_flag and, when a
/// policy name is given, policy,seed appended in that frozen order.
void write_trace_csv(const RegretTrace&, std::ostream&, const std::string& policy = "",
                     long seed = -1);
void write_ledger_json(const RegretTrace&, const RunConfig&, std::ostream&);
/// One JSON object per communication round (round, iteration, trigger
/// agent, payload bytes).
void write_round_ledger_jsonl(const RegretTrace&, std::ostream&);

}  // namespace fnucb
