#include "fnucb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "fnucb/coordinator.hpp"
#include "fnucb/kernels.hpp"

namespace fnucb {

const char* policy_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::fnucb: return "fnucb";
        case PolicyKind::neural_ucb: return "neural-ucb";
        case PolicyKind::neural_ts: return "neural-ts";
        case PolicyKind::linear_ucb: return "linear-ucb";
        case PolicyKind::linear_ts: return "linear-ts";
    }
    return "?";
}

PolicyKind policy_from_name(const std::string& s) {
    if (s == "fnucb") return PolicyKind::fnucb;
    if (s == "neural-ucb") return PolicyKind::neural_ucb;
    if (s == "neural-ts") return PolicyKind::neural_ts;
    if (s == "linear-ucb") return PolicyKind::linear_ucb;
    if (s == "linear-ts") return PolicyKind::linear_ts;
    throw std::invalid_argument("unknown policy: " + s);
}

std::unique_ptr<Environment> make_environment(const EnvConfig& e, std::uint64_t seed) {
    switch (e.kind) {
        case EnvConfig::Kind::cosine:
            return std::make_unique<SyntheticEnv>(SyntheticKind::cosine, e.dim, e.arms, e.noise_sd,
                                                  seed, e.duplicate_contexts);
        case EnvConfig::Kind::square:
            return std::make_unique<SyntheticEnv>(SyntheticKind::square, e.dim, e.arms, e.noise_sd,
                                                  seed, e.duplicate_contexts);
        case EnvConfig::Kind::dataset: {
            if (e.duplicate_contexts)
                throw std::invalid_argument("EnvConfig: duplicate_contexts applies to synthetic environments");
            const DatasetSchema schema = DatasetSchema::load(e.schema_path);
            auto env = ClassificationBanditEnv::from_csv(e.dataset_path, schema, seed);
            return std::make_unique<ClassificationBanditEnv>(std::move(env));
        }
    }
    throw std::logic_error("make_environment: bad kind");
}

void RunConfig::validate() const {
    if (iterations <= 0) throw std::invalid_argument("RunConfig: iterations must be positive");
    if (agents <= 0) throw std::invalid_argument("RunConfig: agents must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("RunConfig: lambda must be positive");
    if (width <= 0 || depth < 2) throw std::invalid_argument("RunConfig: bad network shape");
    if (alpha_reference_samples < 0)
        throw std::invalid_argument("RunConfig: alpha_reference_samples must be >= 0");
    agent_config().train.validate();
}

AgentConfig RunConfig::agent_config() const {
    AgentConfig a;
    a.lambda = lambda;
    a.nu_tkn = nu_tkn;
    a.nu_tk = nu_tk;
    a.sync_threshold = sync_threshold;
    a.ucb_mode = mode;
    a.sync_check_diagonal = sync_check_diagonal;
    a.rescale = rescale;
    a.simplified_alpha = simplified_alpha;
    a.no_param_aggregation = no_param_aggregation;
    a.alpha_sigma_at_epoch_start = alpha_sigma_at_epoch_start;
    a.warm_start_from_aggregate = warm_start_from_aggregate;
    a.alpha_schedule = alpha_schedule;
    a.train = train;
    a.train.lambda = lambda;  // Eq-style loss shares the ridge regularizer
    return a;
}

double RegretTrace::mean_cum_regret(long t) const {
    double acc = 0.0;
    for (int i = 0; i < agents; ++i) acc += cum_regret[idx(t, i)];
    return acc / static_cast<double>(agents);
}

double RegretTrace::total_regret() const {
    if (iterations == 0) return 0.0;
    double acc = 0.0;
    for (int i = 0; i < agents; ++i) acc += cum_regret[idx(iterations, i)];
    return acc;
}

namespace {

// Zero-pads each context with one trailing coordinate when the environment
// dimension is odd; the block initialization needs an even input width and
// padding preserves norms and inner products.
std::vector<double> pad_context(const std::vector<double>& x, int target) {
    std::vector<double> out(static_cast<std::size_t>(target), 0.0);
    std::copy(x.begin(), x.end(), out.begin());
    return out;
}

struct IterationOutcome {
    double regret = 0.0;
    double alpha = 0.0;
    int chosen = 0;
    double score = 0.0;
    double true_reward = 0.0;
};

std::vector<std::vector<double>> sample_reference_set(const Environment& env, int count,
                                                      int agents, int pad_to) {
    std::vector<std::vector<double>> ref;
    if (count <= 0) return ref;
    ref.reserve(static_cast<std::size_t>(count));
    // A dedicated stream index one past the real agents keeps the sample
    // disjoint from every agent's context stream.
    long t = 1;
    while (static_cast<int>(ref.size()) < count) {
        ContextSet set = env.draw_contexts(t, agents);
        for (auto& x : set.contexts) {
            if (static_cast<int>(ref.size()) >= count) break;
            ref.push_back(pad_to > 0 ? pad_context(x, pad_to) : std::move(x));
        }
        ++t;
    }
    return ref;
}

RegretTrace run_fnucb(const RunConfig& cfg, const Environment& env) {
    const int n = cfg.agents;
    const long T = cfg.iterations;
    const int ctx_dim = env.context_dim();
    const int input_dim = ctx_dim % 2 == 0 ? ctx_dim : ctx_dim + 1;
    const bool pad = input_dim != ctx_dim;

    NetworkShape shape{input_dim, cfg.width, cfg.depth};
    shape.validate();
    auto theta0 = std::make_shared<const ParamVector>(init_params(shape, cfg.seed));

    auto reference = std::make_shared<const std::vector<std::vector<double>>>(
        sample_reference_set(env, cfg.alpha_reference_samples, n, pad ? input_dim : 0));

    std::vector<FnAgent> agents;
    agents.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        agents.emplace_back(i, shape, theta0, cfg.agent_config(),
                            Rng(cfg.seed).fork(stream::kTrain, static_cast<std::uint64_t>(i)));
        agents.back().set_reference_set(reference);
    }
    Coordinator server(n, cfg.mode, shape.param_count());

    RegretTrace trace;
    trace.iterations = T;
    trace.agents = n;
    const std::size_t cells = static_cast<std::size_t>(T) * static_cast<std::size_t>(n);
    trace.regret.assign(cells, 0.0);
    trace.cum_regret.assign(cells, 0.0);
    trace.alpha.assign(cells, 0.0);
    trace.chosen.assign(cells, 0);
    trace.chosen_score.assign(cells, 0.0);
    trace.chosen_true_reward.assign(cells, 0.0);
    trace.round_flag.assign(static_cast<std::size_t>(T), 0);
    if (cfg.record_snapshots)
        trace.epoch_logdets.push_back(agents[0].vbar().log_det());  // V_0 = λI

    std::vector<double> cum(static_cast<std::size_t>(n), 0.0);
    std::vector<AgentUpload> uploads(static_cast<std::size_t>(n));
    std::vector<IterationOutcome> outcome(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));

    for (long t = 1; t <= T; ++t) {
        // Selection and observation; agents are independent within an
        // iteration, results land in preassigned slots.
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            try {
                ContextSet set = env.draw_contexts(t, i);
                std::vector<std::vector<double>> contexts = set.contexts;
                if (pad)
                    for (auto& x : contexts) x = pad_context(x, input_dim);
                const ArmChoice choice = agents[static_cast<std::size_t>(i)].select_arm(contexts, t);
                const double y = env.observe(set, choice.index, t, i);
                agents[static_cast<std::size_t>(i)].observe(contexts[static_cast<std::size_t>(choice.index)], y);

                const double best = *std::max_element(set.true_h.begin(), set.true_h.end());
                IterationOutcome& out = outcome[static_cast<std::size_t>(i)];
                out.regret = best - set.true_h[static_cast<std::size_t>(choice.index)];
                out.alpha = choice.alpha_used;
                out.chosen = choice.index;
                out.score = choice.combined[static_cast<std::size_t>(choice.index)];
                out.true_reward = set.true_h[static_cast<std::size_t>(choice.index)];
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
        for (int i = 0; i < n; ++i) {
            if (errors[static_cast<std::size_t>(i)]) {
                try {
                    std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
                } catch (const std::exception& e) {
                    throw std::runtime_error("iteration " + std::to_string(t) + ", agent " +
                                             std::to_string(i) + ": " + e.what());
                }
            }
            const std::size_t at = trace.idx(t, i);
            cum[static_cast<std::size_t>(i)] += outcome[static_cast<std::size_t>(i)].regret;
            trace.regret[at] = outcome[static_cast<std::size_t>(i)].regret;
            trace.cum_regret[at] = cum[static_cast<std::size_t>(i)];
            trace.alpha[at] = outcome[static_cast<std::size_t>(i)].alpha;
            trace.chosen[at] = outcome[static_cast<std::size_t>(i)].chosen;
            trace.chosen_score[at] = outcome[static_cast<std::size_t>(i)].score;
            trace.chosen_true_reward[at] = outcome[static_cast<std::size_t>(i)].true_reward;
        }

        // Any-agent trigger, lowest id recorded.
        int trigger = -1;
        for (int i = 0; i < n && trigger < 0; ++i)
            if (agents[static_cast<std::size_t>(i)].sync_check(t)) trigger = i;
        if (trigger < 0) continue;

#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            try {
                uploads[static_cast<std::size_t>(i)] = agents[static_cast<std::size_t>(i)].build_upload(t);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
        for (int i = 0; i < n; ++i) {
            if (errors[static_cast<std::size_t>(i)]) {
                try {
                    std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
                } catch (const std::exception& e) {
                    throw std::runtime_error("round at iteration " + std::to_string(t) + ", agent " +
                                             std::to_string(i) + ": " + e.what());
                }
            }
        }
        const ServerBroadcast pkt = server.aggregate(uploads, t);
        for (int i = 0; i < n; ++i) agents[static_cast<std::size_t>(i)].apply_broadcast(pkt, t);

        trace.round_flag[static_cast<std::size_t>(t - 1)] = 1;
        RoundRecord rec;
        rec.round_index = server.rounds();
        rec.iteration = t;
        rec.trigger_agent = trigger;
        rec.upload_params = uploads[0].param_count();
        rec.broadcast_params = pkt.param_count();
        rec.total_params = static_cast<std::size_t>(n) * rec.upload_params + rec.broadcast_params;
        trace.rounds.push_back(rec);
        if (cfg.record_snapshots)
            trace.epoch_logdets.push_back(agents[0].vbar().log_det());  // V_p = λI + W_sync
    }

    if (cfg.record_snapshots) {
        // V_P covers every selected input: fold the not-yet-synced W_new of
        // all agents into W_sync and take a dense log-det.
        std::vector<double> w(agents[0].w_sync_raw().begin(), agents[0].w_sync_raw().end());
        for (int i = 0; i < n; ++i) {
            std::span<const double> wn = agents[static_cast<std::size_t>(i)].w_new_raw();
            for (std::size_t j = 0; j < w.size(); ++j) w[j] += wn[j];
        }
        CovarianceState final_state(cfg.mode, shape.param_count(), cfg.lambda);
        final_state.reset_from_accumulator(w);
        trace.epoch_logdets.push_back(final_state.log_det());
    }
    return trace;
}

RegretTrace run_baseline(const RunConfig& cfg, const Environment& env) {
    const int n = cfg.agents;
    const long T = cfg.iterations;
    const int ctx_dim = env.context_dim();
    const int input_dim = ctx_dim % 2 == 0 ? ctx_dim : ctx_dim + 1;
    const bool pad = input_dim != ctx_dim;

    BaselineConfig bc;
    switch (cfg.policy) {
        case PolicyKind::neural_ucb: bc.kind = BaselineKind::neural_ucb; break;
        case PolicyKind::neural_ts: bc.kind = BaselineKind::neural_ts; break;
        case PolicyKind::linear_ucb: bc.kind = BaselineKind::linear_ucb; break;
        case PolicyKind::linear_ts: bc.kind = BaselineKind::linear_ts; break;
        default: throw std::logic_error("run_baseline: not a baseline policy");
    }
    bc.nu = cfg.baseline_nu;
    bc.lambda = cfg.lambda;
    bc.mode = cfg.mode;
    bc.raw_features = cfg.baseline_raw_features;
    bc.shape = NetworkShape{input_dim, cfg.width, cfg.depth};
    bc.train = cfg.train;
    bc.train.lambda = cfg.lambda;

    std::shared_ptr<const ParamVector> theta0;
    const bool needs_net = !(bc.raw_features && (bc.kind == BaselineKind::linear_ucb ||
                                                 bc.kind == BaselineKind::linear_ts));
    if (needs_net) {
        bc.shape.validate();
        theta0 = std::make_shared<const ParamVector>(init_params(bc.shape, cfg.seed));
    }

    std::vector<BaselinePolicy> policies;
    policies.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        policies.emplace_back(bc, theta0,
                              Rng(cfg.seed).fork(stream::kPolicy, static_cast<std::uint64_t>(i)));

    RegretTrace trace;
    trace.iterations = T;
    trace.agents = n;
    const std::size_t cells = static_cast<std::size_t>(T) * static_cast<std::size_t>(n);
    trace.regret.assign(cells, 0.0);
    trace.cum_regret.assign(cells, 0.0);
    trace.alpha.assign(cells, 0.0);
    trace.chosen.assign(cells, 0);
    trace.chosen_score.assign(cells, 0.0);
    trace.chosen_true_reward.assign(cells, 0.0);
    trace.round_flag.assign(static_cast<std::size_t>(T), 0);

    std::vector<double> cum(static_cast<std::size_t>(n), 0.0);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::vector<IterationOutcome> outcome(static_cast<std::size_t>(n));

    for (long t = 1; t <= T; ++t) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            try {
                ContextSet set = env.draw_contexts(t, i);
                std::vector<std::vector<double>> contexts = set.contexts;
                if (pad)
                    for (auto& x : contexts) x = pad_context(x, input_dim);
                const ArmChoice choice = policies[static_cast<std::size_t>(i)].select(contexts, t);
                const double y = env.observe(set, choice.index, t, i);
                policies[static_cast<std::size_t>(i)].observe(
                    contexts[static_cast<std::size_t>(choice.index)], y, t);
                const double best = *std::max_element(set.true_h.begin(), set.true_h.end());
                IterationOutcome& out = outcome[static_cast<std::size_t>(i)];
                out.regret = best - set.true_h[static_cast<std::size_t>(choice.index)];
                out.alpha = 0.0;
                out.chosen = choice.index;
                out.score = choice.combined[static_cast<std::size_t>(choice.index)];
                out.true_reward = set.true_h[static_cast<std::size_t>(choice.index)];
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
        for (int i = 0; i < n; ++i) {
            if (errors[static_cast<std::size_t>(i)]) {
                try {
                    std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
                } catch (const std::exception& e) {
                    throw std::runtime_error("iteration " + std::to_string(t) + ", agent " +
                                             std::to_string(i) + ": " + e.what());
                }
            }
            const std::size_t at = trace.idx(t, i);
            cum[static_cast<std::size_t>(i)] += outcome[static_cast<std::size_t>(i)].regret;
            trace.regret[at] = outcome[static_cast<std::size_t>(i)].regret;
            trace.cum_regret[at] = cum[static_cast<std::size_t>(i)];
            trace.alpha[at] = 0.0;
            trace.chosen[at] = outcome[static_cast<std::size_t>(i)].chosen;
            trace.chosen_score[at] = outcome[static_cast<std::size_t>(i)].score;
            trace.chosen_true_reward[at] = outcome[static_cast<std::size_t>(i)].true_reward;
        }
    }
    return trace;
}

}  // namespace

RegretTrace run(const RunConfig& cfg) {
    cfg.validate();
    auto env = make_environment(cfg.env, cfg.seed);
    if (cfg.policy == PolicyKind::fnucb) return run_fnucb(cfg, *env);
    return run_baseline(cfg, *env);
}

LedgerSummary communication_ledger(const RegretTrace& trace) {
    LedgerSummary s;
    s.total_rounds = static_cast<long>(trace.rounds.size());
    for (const RoundRecord& r : trace.rounds) s.total_params += r.total_params;
    if (!trace.rounds.empty()) s.upload_params_per_agent = trace.rounds.front().upload_params;
    return s;
}

}  // namespace fnucb
