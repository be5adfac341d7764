#include "fnucb/baselines.hpp"

#include <cmath>

#include "fnucb/kernels.hpp"

namespace fnucb {

BaselinePolicy::BaselinePolicy(BaselineConfig cfg, std::shared_ptr<const ParamVector> theta0,
                               Rng stream)
    : cfg_(cfg),
      theta0_(std::move(theta0)),
      fdim_(cfg.raw_features && !(cfg.kind == BaselineKind::neural_ucb ||
                                  cfg.kind == BaselineKind::neural_ts)
                ? cfg.shape.input_dim
                : cfg.shape.param_count()),
      v_(cfg.mode, fdim_, cfg.lambda),
      b_(fdim_),
      rng_(stream) {
    if (tangent()) {
        cfg_.shape.validate();
        if (!theta0_) throw std::invalid_argument("BaselinePolicy: tangent features need theta0");
        if (static_cast<int>(theta0_->size()) != cfg_.shape.param_count())
            throw std::invalid_argument("BaselinePolicy: theta0 does not match the network shape");
    }
    theta_trained_ = theta0_ ? *theta0_ : ParamVector{};
    ws_.resize(cfg_.shape);
}

void BaselinePolicy::feature(std::span<const double> x, std::vector<double>& phi) {
    if (tangent()) {
        phi.resize(static_cast<std::size_t>(cfg_.shape.param_count()));
        tangent_feature(cfg_.shape, *theta0_, x, phi, ws_);
    } else {
        phi.assign(x.begin(), x.end());
    }
}

ArmChoice BaselinePolicy::select(std::span<const std::vector<double>> contexts, long t) {
    if (contexts.empty()) throw std::invalid_argument("baseline_select: empty context set");
    const std::size_t k = contexts.size();

    std::vector<double> theta_hat(static_cast<std::size_t>(fdim_));
    if (!neural()) v_.solve(b_.values(), theta_hat);

    ArmChoice choice;
    choice.ucb_a.resize(k);
    choice.combined.resize(k);
    std::vector<double> phi;
    const double root_lambda = std::sqrt(cfg_.lambda);

    for (std::size_t a = 0; a < k; ++a) {
        feature(contexts[a], phi);
        const double pred = neural() ? forward(cfg_.shape, theta_trained_, contexts[a], ws_)
                                     : kern::dot(phi.data(), theta_hat.data(), phi.size());
        const double width = cfg_.nu * root_lambda * v_.mahalanobis(phi);
        double score;
        if (thompson()) {
            Rng arm_rng = rng_.fork(stream::kPolicy, static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(a));
            score = pred + width * arm_rng.next_gaussian();
        } else {
            score = pred + width;
        }
        choice.ucb_a[a] = score;
        choice.combined[a] = score;
    }

    std::size_t best = 0;
    for (std::size_t a = 1; a < k; ++a)
        if (choice.combined[a] > choice.combined[best]) best = a;
    choice.index = static_cast<int>(best);
    choice.context = contexts[best];
    return choice;
}

void BaselinePolicy::observe(std::span<const double> x, double y, long t) {
    std::vector<double> phi;
    feature(x, phi);
    v_.rank1_update(phi);
    b_.add(phi, y);
    history_x_.emplace_back(x.begin(), x.end());
    history_y_.push_back(y);

    if (neural() && cfg_.train.steps > 0) {
        theta_trained_ = train_local(cfg_.shape, *theta0_, history_x_, history_y_, cfg_.train,
                                     &theta_trained_, rng_.fork(stream::kTrain,
                                                                static_cast<std::uint64_t>(t)));
    }
}

}  // namespace fnucb
