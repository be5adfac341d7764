#include "fnucb/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fnucb/kernels.hpp"

namespace fnucb {

namespace {
std::vector<double> diagonal_of(CovMode mode, std::span<const double> w, int dim) {
    const std::size_t n = static_cast<std::size_t>(dim);
    if (mode == CovMode::diagonal) return std::vector<double>(w.begin(), w.end());
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = w[i * n + i];
    return d;
}
}  // namespace

void AgentConfig::validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("AgentConfig: lambda must be > 0");
    if (nu_tkn < 0.0 || nu_tk < 0.0) throw std::invalid_argument("AgentConfig: negative exploration scale");
    if (std::isnan(sync_threshold) || sync_threshold < 0.0)
        throw std::invalid_argument("AgentConfig: sync threshold must be >= 0");
    train.validate();
}

FnAgent::FnAgent(int id, const NetworkShape& shape, std::shared_ptr<const ParamVector> theta0,
                 AgentConfig cfg, Rng train_stream)
    : id_(id),
      shape_(shape),
      theta0_(std::move(theta0)),
      cfg_(cfg),
      p_(shape.param_count()),
      vbar_(cfg.ucb_mode, shape.param_count(), cfg.lambda),
      vlocal_(cfg.ucb_mode, shape.param_count(), cfg.lambda),
      bnew_(shape.param_count()),
      train_rng_(train_stream) {
    shape_.validate();
    cfg_.validate();
    if (static_cast<int>(theta0_->size()) != p_)
        throw std::invalid_argument("FnAgent: theta0 does not match the network shape");

    const std::size_t acc = accumulator_elements(cfg_.ucb_mode, static_cast<std::size_t>(p_));
    wsync_.assign(acc, 0.0);
    wnew_.assign(acc, 0.0);
    bsync_.assign(static_cast<std::size_t>(p_), 0.0);

    // Diagonal sync tracker only when the UCB statistics are full; in
    // diagonal mode the main state is already what the criterion needs.
    if (cfg_.sync_check_diagonal && cfg_.ucb_mode == CovMode::full)
        synccheck_.emplace(CovMode::diagonal, p_, cfg_.lambda);
    synccheck_ref_logdet_ = sync_state().log_det();

    if (cfg_.alpha_sigma_at_epoch_start) vlocal_epoch_.emplace(vlocal_);

    theta_sync_nn_ = *theta0_;
    vsync_inv_.assign(acc, 0.0);  // (1/λ)I until the first broadcast
    if (cfg_.ucb_mode == CovMode::full) {
        for (int i = 0; i < p_; ++i)
            vsync_inv_[static_cast<std::size_t>(i) * p_ + i] = 1.0 / cfg_.lambda;
    } else {
        std::fill(vsync_inv_.begin(), vsync_inv_.end(), 1.0 / cfg_.lambda);
    }
    theta_trained_ = *theta0_;
    ws_.resize(shape_);
}

void FnAgent::feature(std::span<const double> x, std::span<double> phi) {
    tangent_feature(shape_, *theta0_, x, phi, ws_);
}

void FnAgent::compute_theta_bar(std::vector<double>& out) const {
    std::vector<double> b(static_cast<std::size_t>(p_));
    std::span<const double> bn = bnew_.values();
    for (int j = 0; j < p_; ++j) b[j] = bsync_[j] + bn[j];
    out.resize(static_cast<std::size_t>(p_));
    vbar_.solve(b, out);
}

double FnAgent::ucb_a(std::span<const double> x) {
    std::vector<double> phi(static_cast<std::size_t>(p_));
    feature(x, phi);
    std::vector<double> theta_bar;
    compute_theta_bar(theta_bar);
    return kern::dot(phi.data(), theta_bar.data(), phi.size()) +
           cfg_.nu_tkn * std::sqrt(cfg_.lambda) * vbar_.mahalanobis(phi);
}

double FnAgent::exploration_b(std::span<const double> phi) const {
    const std::span<const double> inv =
        cfg_.no_param_aggregation ? vlocal_.inverse() : std::span<const double>(vsync_inv_);
    const double q = CovarianceState::quad_with_inverse(cfg_.ucb_mode, inv, phi);
    return cfg_.nu_tk * std::sqrt(cfg_.lambda) * std::sqrt(std::max(q, 0.0));
}

double FnAgent::ucb_b(std::span<const double> x) {
    if (!synced_once_)
        throw NotReadyError("ucb_b: no communication round has completed yet");
    std::vector<double> phi(static_cast<std::size_t>(p_));
    feature(x, phi);
    const ParamVector& th = cfg_.no_param_aggregation ? theta_trained_ : theta_sync_nn_;
    return forward(shape_, th, x, ws_) + exploration_b(phi);
}

double FnAgent::effective_alpha(long t) const {
    if (!synced_once_) return 0.0;  // the aggregated network is not ready
    if (cfg_.alpha_schedule.active()) return cfg_.alpha_schedule.value_at(t);
    if (cfg_.simplified_alpha && !fresh_sync_) return 0.0;
    return alpha_;
}

ArmChoice FnAgent::select_arm(std::span<const std::vector<double>> contexts, long t) {
    if (contexts.empty()) throw std::invalid_argument("select_arm: empty context set");
    const std::size_t k = contexts.size();

    std::vector<double> theta_bar;
    compute_theta_bar(theta_bar);

    std::vector<double> pred(k), expl(k);
    std::vector<double> phi(static_cast<std::size_t>(p_));
    const double root_lambda = std::sqrt(cfg_.lambda);
    for (std::size_t a = 0; a < k; ++a) {
        feature(contexts[a], phi);
        pred[a] = kern::dot(phi.data(), theta_bar.data(), phi.size());
        expl[a] = cfg_.nu_tkn * root_lambda * vbar_.mahalanobis(phi);
    }

    if (cfg_.rescale_active() && k > 1) {
        const auto [mn, mx] = std::minmax_element(pred.begin(), pred.end());
        const double lo = *mn, hi = *mx;
        if (hi > lo) {
            for (double& v : pred) v = (v - lo) / (hi - lo);
        } else {
            std::fill(pred.begin(), pred.end(), 0.0);
        }
    }

    ArmChoice choice;
    choice.alpha_used = effective_alpha(t);
    choice.ucb_a.resize(k);
    choice.combined.resize(k);
    const bool use_b = choice.alpha_used > 0.0;
    if (use_b) choice.ucb_b.resize(k);

    const ParamVector& th_b = cfg_.no_param_aggregation ? theta_trained_ : theta_sync_nn_;
    for (std::size_t a = 0; a < k; ++a) {
        choice.ucb_a[a] = pred[a] + expl[a];
        if (use_b) {
            feature(contexts[a], phi);
            choice.ucb_b[a] = forward(shape_, th_b, contexts[a], ws_) + exploration_b(phi);
            choice.combined[a] = (1.0 - choice.alpha_used) * choice.ucb_a[a] +
                                 choice.alpha_used * choice.ucb_b[a];
        } else {
            choice.combined[a] = choice.ucb_a[a];
        }
    }

    // argmax, ties to the lowest index
    std::size_t best = 0;
    for (std::size_t a = 1; a < k; ++a)
        if (choice.combined[a] > choice.combined[best]) best = a;
    choice.index = static_cast<int>(best);
    choice.context = contexts[best];

    last_contexts_.assign(contexts.begin(), contexts.end());
    fresh_sync_ = false;
    return choice;
}

void FnAgent::observe(std::span<const double> x, double y) {
    if (!std::isfinite(y)) throw std::invalid_argument("observe: non-finite reward");
    std::vector<double> phi(static_cast<std::size_t>(p_));
    feature(x, phi);

    const std::size_t n = static_cast<std::size_t>(p_);
    if (cfg_.ucb_mode == CovMode::full) {
        kern::sym_rank1_update(wnew_.data(), n, phi.data());
    } else {
        for (std::size_t j = 0; j < n; ++j) wnew_[j] += phi[j] * phi[j];
    }
    bnew_.add(phi, y);
    vbar_.rank1_update(phi);
    vlocal_.rank1_update(phi);
    if (synccheck_) synccheck_->rank1_update(phi);

    history_x_.emplace_back(x.begin(), x.end());
    history_y_.push_back(y);
}

bool FnAgent::sync_check(long t) const {
    if (t < t_last_) throw std::invalid_argument("sync_check: t precedes the last round");
    const double ratio = logdet_ratio(sync_state().log_det(), synccheck_ref_logdet_);
    return static_cast<double>(t - t_last_) * ratio > cfg_.sync_threshold;
}

double FnAgent::compute_alpha_local(std::span<const std::vector<double>> reference) const {
    if (reference.empty())
        throw std::invalid_argument("compute_alpha_local: empty reference set");
    const CovarianceState& state =
        (cfg_.alpha_sigma_at_epoch_start && vlocal_epoch_) ? *vlocal_epoch_ : vlocal_;

    NetWorkspace ws;
    ws.resize(shape_);
    std::vector<double> phi(static_cast<std::size_t>(p_));
    const double root_lambda = std::sqrt(cfg_.lambda);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& x : reference) {
        tangent_feature(shape_, *theta0_, x, phi, ws);
        const double sigma = root_lambda * state.mahalanobis(phi);
        lo = std::min(lo, sigma);
        hi = std::max(hi, sigma);
    }
    if (!(hi > 0.0))
        throw std::domain_error("compute_alpha_local: maximal uncertainty is zero");
    return lo / hi;
}

AgentUpload FnAgent::build_upload(long t) {
    if (!history_x_.empty() && cfg_.train.steps > 0) {
        const bool from_aggregate =
            cfg_.warm_start_from_aggregate && !cfg_.no_param_aggregation && synced_once_;
        const ParamVector& warm = from_aggregate ? theta_sync_nn_ : theta_trained_;
        theta_trained_ = train_local(shape_, *theta0_, history_x_, history_y_, cfg_.train,
                                     &warm, train_rng_.fork(static_cast<std::uint64_t>(t)));
    }

    double alpha_i;
    if (cfg_.alpha_schedule.active()) {
        // The schedule replaces the computed weight wholesale; skip the
        // reference scan and ship a neutral value.
        alpha_i = 0.0;
    } else {
        std::vector<std::vector<double>> ref;
        if (reference_set_) ref.insert(ref.end(), reference_set_->begin(), reference_set_->end());
        ref.insert(ref.end(), last_contexts_.begin(), last_contexts_.end());
        if (ref.empty()) ref.insert(ref.end(), history_x_.begin(), history_x_.end());
        // No reference material at all: min and max coincide by convention.
        alpha_i = ref.empty() ? 1.0 : compute_alpha_local(ref);
    }

    AgentUpload up;
    up.agent_id = id_;
    up.iteration = t;
    up.mode = cfg_.ucb_mode;
    up.dim = p_;
    up.w_new = wnew_;
    up.b_new.assign(bnew_.values().begin(), bnew_.values().end());
    up.theta = theta_trained_;
    up.vlocal_inv.assign(vlocal_.inverse().begin(), vlocal_.inverse().end());
    up.alpha = alpha_i;
    up.validate();
    return up;
}

void FnAgent::apply_broadcast(const ServerBroadcast& pkt, long t) {
    pkt.validate();
    if (pkt.mode != cfg_.ucb_mode || pkt.dim != p_)
        throw std::invalid_argument("apply_broadcast: packet shape mismatch");

    wsync_ = pkt.w_sync;
    bsync_ = pkt.b_sync;
    theta_sync_nn_ = pkt.theta_sync;
    vsync_inv_ = pkt.vsync_inv;
    alpha_ = pkt.alpha;

    vbar_.reset_from_accumulator(wsync_);  // V̄ = λI + W_sync, fresh stats zeroed
    if (synccheck_) {
        synccheck_->reset_from_accumulator(diagonal_of(cfg_.ucb_mode, wsync_, p_));
    }
    synccheck_ref_logdet_ = sync_state().log_det();  // V_last = λI + W_sync

    std::fill(wnew_.begin(), wnew_.end(), 0.0);
    bnew_.reset();
    t_last_ = t;
    synced_once_ = true;
    fresh_sync_ = true;
    if (cfg_.alpha_sigma_at_epoch_start) vlocal_epoch_.emplace(vlocal_);
}

}  // namespace fnucb
