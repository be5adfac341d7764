#include <cinttypes>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "fnucb/harness.hpp"

namespace fnucb {

namespace {
// Shortest round-trippable decimal; keeps traces bit-faithful on re-read.
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

void write_trace_csv(const RegretTrace& trace, std::ostream& os, const std::string& policy,
                     long seed) {
    const bool tagged = !policy.empty();
    os << "t,agent,regret,cum_regret,alpha,round_flag";
    if (tagged) os << ",policy,seed";
    os << '\n';
    for (long t = 1; t <= trace.iterations; ++t) {
        for (int i = 0; i < trace.agents; ++i) {
            const std::size_t at = trace.idx(t, i);
            os << t << ',' << i << ',' << fmt(trace.regret[at]) << ',' << fmt(trace.cum_regret[at])
               << ',' << fmt(trace.alpha[at]) << ','
               << static_cast<int>(trace.round_flag[static_cast<std::size_t>(t - 1)]);
            if (tagged) os << ',' << policy << ',' << seed;
            os << '\n';
        }
    }
}

void write_ledger_json(const RegretTrace& trace, const RunConfig& cfg, std::ostream& os) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const RoundRecord& r : trace.rounds) {
        rounds.push_back({{"round", r.round_index},
                          {"iteration", r.iteration},
                          {"trigger_agent", r.trigger_agent},
                          {"upload_params", r.upload_params},
                          {"broadcast_params", r.broadcast_params},
                          {"total_params", r.total_params},
                          {"payload_bytes", r.total_params * sizeof(double)}});
    }
    const LedgerSummary s = communication_ledger(trace);
    nlohmann::json j{{"iterations", trace.iterations},
                     {"agents", trace.agents},
                     {"policy", policy_name(cfg.policy)},
                     {"seed", cfg.seed},
                     {"sync_threshold", std::isinf(cfg.sync_threshold)
                                            ? nlohmann::json("inf")
                                            : nlohmann::json(cfg.sync_threshold)},
                     {"total_rounds", s.total_rounds},
                     {"total_params", s.total_params},
                     {"upload_params_per_agent", s.upload_params_per_agent},
                     {"total_regret", trace.total_regret()},
                     {"mean_cum_regret", trace.iterations > 0
                                             ? trace.mean_cum_regret(trace.iterations)
                                             : 0.0},
                     {"rounds", std::move(rounds)}};
    if (!trace.epoch_logdets.empty()) j["epoch_logdets"] = trace.epoch_logdets;
    os << j.dump(2) << '\n';
}

void write_round_ledger_jsonl(const RegretTrace& trace, std::ostream& os) {
    for (const RoundRecord& r : trace.rounds) {
        const nlohmann::json j{{"round", r.round_index},
                               {"iteration", r.iteration},
                               {"trigger_agent", r.trigger_agent},
                               {"payload_bytes", r.total_params * sizeof(double)}};
        os << j.dump() << '\n';
    }
}

}  // namespace fnucb
