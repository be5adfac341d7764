#pragma once

#include <memory>
#include <span>
#include <vector>

#include "fnucb/agent.hpp"
#include "fnucb/neural.hpp"
#include "fnucb/rng.hpp"
#include "fnucb/stats.hpp"

namespace fnucb {

enum class BaselineKind { neural_ucb, neural_ts, linear_ucb, linear_ts };

struct BaselineConfig {
    BaselineKind kind = BaselineKind::neural_ucb;
    double nu = 0.1;
    double lambda = 1.0;
    CovMode mode = CovMode::full;
    /// Linear kinds only: score on the raw context instead of the tangent
    /// feature. Neural kinds always use tangent features.
    bool raw_features = false;
    NetworkShape shape;
    TrainConfig train;
};

/// Single-agent comparison policies. They share the covariance machinery
/// and the network evaluation with the federated agent but never
/// communicate; each instance owns its statistics, trained parameters and
/// RNG stream.
class BaselinePolicy {
public:
    BaselinePolicy(BaselineConfig cfg, std::shared_ptr<const ParamVector> theta0, Rng stream);

    ArmChoice select(std::span<const std::vector<double>> contexts, long t);

    /// Folds the observation into the statistics; neural kinds retrain on
    /// the full history (warm-started, same cadence as the federated agent).
    void observe(std::span<const double> x, double y, long t);

    const CovarianceState& state() const { return v_; }
    const ParamVector& theta_trained() const { return theta_trained_; }
    int feature_dim() const { return fdim_; }

private:
    bool neural() const {
        return cfg_.kind == BaselineKind::neural_ucb || cfg_.kind == BaselineKind::neural_ts;
    }
    bool thompson() const {
        return cfg_.kind == BaselineKind::neural_ts || cfg_.kind == BaselineKind::linear_ts;
    }
    bool tangent() const { return neural() || !cfg_.raw_features; }
    void feature(std::span<const double> x, std::vector<double>& phi);

    BaselineConfig cfg_;
    std::shared_ptr<const ParamVector> theta0_;
    int fdim_;
    CovarianceState v_;
    RewardAccumulator b_;
    ParamVector theta_trained_;
    std::vector<std::vector<double>> history_x_;
    std::vector<double> history_y_;
    Rng rng_;
    NetWorkspace ws_;
};

}  // namespace fnucb
