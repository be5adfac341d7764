#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fnucb/neural.hpp"
#include "fnucb/packets.hpp"
#include "fnucb/rng.hpp"
#include "fnucb/stats.hpp"

namespace fnucb {

/// Deterministic override for the server-computed weight between the two
/// confidence bounds. `linear_ramp` grows t/horizon capped at 1.
struct AlphaSchedule {
    enum class Kind { none, linear_ramp, constant };
    Kind kind = Kind::none;
    double horizon = 0.0;  // linear_ramp
    double value = 0.0;    // constant

    bool active() const { return kind != Kind::none; }
    double value_at(long t) const {
        switch (kind) {
            case Kind::linear_ramp:
                return horizon <= 0.0 ? 1.0 : std::min(1.0, static_cast<double>(t) / horizon);
            case Kind::constant:
                return value;
            default:
                return 0.0;
        }
    }
};

enum class RescaleMode { automatic, on, off };

struct AgentConfig {
    double lambda = 1.0;
    double nu_tkn = 0.1;
    double nu_tk = 0.1;
    double sync_threshold = 0.0;  ///< D; +inf disables communication entirely

    CovMode ucb_mode = CovMode::full;
    /// Track the sync criterion's log-determinants on diagonalized matrices
    /// (always the case when ucb_mode is already diagonal).
    bool sync_check_diagonal = true;
    /// Min-max rescaling of the UCB-a prediction term across an iteration's
    /// contexts; `automatic` enables it exactly in diagonal mode.
    RescaleMode rescale = RescaleMode::automatic;

    /// Compute the combined weight only on the first iteration after each
    /// communication round, zero elsewhere.
    bool simplified_alpha = false;
    /// Ablation: evaluate UCB-b with the agent's own trained parameters and
    /// local inverse instead of the aggregated ones.
    bool no_param_aggregation = false;
    /// Uncertainty ratio conditioned on observations up to the epoch start
    /// rather than the current iteration.
    bool alpha_sigma_at_epoch_start = false;
    /// Warm-start round training from the aggregated parameters instead of
    /// the agent's own previous ones. Keeps the N local networks in a common
    /// basin so their average stays meaningful; identical for N = 1. Ignored
    /// when no_param_aggregation is set (own parameters are the point there).
    bool warm_start_from_aggregate = true;

    AlphaSchedule alpha_schedule;
    TrainConfig train;

    bool rescale_active() const {
        return rescale == RescaleMode::on ||
               (rescale == RescaleMode::automatic && ucb_mode == CovMode::diagonal);
    }
    void validate() const;
};

struct ArmChoice {
    int index = 0;
    std::vector<double> context;
    std::vector<double> ucb_a;     ///< per-arm values entering the combination
    std::vector<double> ucb_b;     ///< empty when the weight was zero
    std::vector<double> combined;
    double alpha_used = 0.0;
};

class NotReadyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// One federated agent: weighted-UCB arm selection, local statistics,
/// sync-criterion checking and packet construction. Single writer; distinct
/// agents are independent and may run on parallel workers.
class FnAgent {
public:
    FnAgent(int id, const NetworkShape& shape, std::shared_ptr<const ParamVector> theta0,
            AgentConfig cfg, Rng train_stream);

    int id() const { return id_; }

    /// ⟨φ(x), θ̄⟩ + ν_TKN √λ ‖φ(x)‖_{V̄⁻¹} with V̄ = λI + W_sync + W_new.
    double ucb_a(std::span<const double> x);

    /// f(x;θ_sync,NN) + ν_TK √λ ‖φ(x)‖ under the averaged inverse. Throws
    /// NotReadyError before the first communication round.
    double ucb_b(std::span<const double> x);

    ArmChoice select_arm(std::span<const std::vector<double>> contexts, long t);

    /// Record the chosen context's observation: W_new += φφᵀ, B_new += yφ,
    /// V_local += φφᵀ, history appended.
    void observe(std::span<const double> x, double y);

    /// (t - t_last) · log det(λI+W_sync+W_new)/det(V_last) > D.
    bool sync_check(long t) const;

    /// min σ̃ / max σ̃ over the reference contexts, σ̃(x) = √λ‖φ(x)‖ under
    /// the local covariance inverse.
    double compute_alpha_local(std::span<const std::vector<double>> reference) const;

    /// Trains on the full local history (warm-started, anchored at θ₀) and
    /// assembles the five-field upload.
    AgentUpload build_upload(long t);

    /// Installs the aggregated statistics, resets V_last and the fresh
    /// accumulators, and marks t_last = t.
    void apply_broadcast(const ServerBroadcast& pkt, long t);

    /// Fixed reference sample shared by all agents for the uncertainty-ratio
    /// computation; the current iteration's contexts are unioned in.
    void set_reference_set(std::shared_ptr<const std::vector<std::vector<double>>> ref) {
        reference_set_ = std::move(ref);
    }

    // Introspection (tests, diagnostics).
    const NetworkShape& shape() const { return shape_; }
    const AgentConfig& config() const { return cfg_; }
    const CovarianceState& vbar() const { return vbar_; }
    const CovarianceState& vlocal() const { return vlocal_; }
    const CovarianceState& sync_state() const { return synccheck_ ? *synccheck_ : vbar_; }
    double sync_reference_logdet() const { return synccheck_ref_logdet_; }
    std::span<const double> w_sync_raw() const { return wsync_; }
    std::span<const double> b_sync_raw() const { return bsync_; }
    std::span<const double> w_new_raw() const { return wnew_; }
    std::span<const double> b_new_raw() const { return bnew_.values(); }
    std::span<const double> vsync_inverse() const { return vsync_inv_; }
    const ParamVector& theta_trained() const { return theta_trained_; }
    const ParamVector& theta_sync_nn() const { return theta_sync_nn_; }
    double alpha() const { return alpha_; }
    long t_last() const { return t_last_; }
    bool synced_once() const { return synced_once_; }
    std::size_t history_size() const { return history_x_.size(); }
    double effective_alpha(long t) const;

private:
    void feature(std::span<const double> x, std::span<double> phi);
    void compute_theta_bar(std::vector<double>& out) const;
    double exploration_b(std::span<const double> phi) const;

    int id_;
    NetworkShape shape_;
    std::shared_ptr<const ParamVector> theta0_;
    AgentConfig cfg_;
    int p_;

    CovarianceState vbar_;
    CovarianceState vlocal_;
    std::optional<CovarianceState> vlocal_epoch_;  // when alpha_sigma_at_epoch_start
    std::optional<CovarianceState> synccheck_;     // diagonal shadow in full mode
    double synccheck_ref_logdet_;

    std::vector<double> wsync_;
    std::vector<double> bsync_;
    std::vector<double> wnew_;
    RewardAccumulator bnew_;

    ParamVector theta_sync_nn_;
    std::vector<double> vsync_inv_;
    double alpha_ = 0.0;
    long t_last_ = 0;
    bool synced_once_ = false;
    bool fresh_sync_ = false;

    std::vector<std::vector<double>> history_x_;
    std::vector<double> history_y_;
    ParamVector theta_trained_;
    Rng train_rng_;
    std::shared_ptr<const std::vector<std::vector<double>>> reference_set_;
    std::vector<std::vector<double>> last_contexts_;
    NetWorkspace ws_;
};

}  // namespace fnucb
