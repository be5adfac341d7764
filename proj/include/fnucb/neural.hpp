#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fnucb/rng.hpp"

namespace fnucb {

/// Fully connected ReLU network: f1 = W1 x, fl = Wl ReLU(f_{l-1}) for
/// l = 2..L, output f = sqrt(m) * fL. Parameters are kept as one flat
/// vector, layer by layer, each layer row-major.
struct NetworkShape {
    int input_dim = 0;  ///< d; must be even (block initialization)
    int width = 0;      ///< m; must be even
    int depth = 2;      ///< L >= 2

    int param_count() const {
        return width * input_dim + width * width * (depth - 2) + width;
    }

    /// Offset of layer l (1-based) in the flat parameter vector.
    int layer_offset(int l) const {
        if (l <= 1) return 0;
        int off = width * input_dim;
        off += width * width * (std::min(l, depth) - 2);
        return off;
    }

    int layer_rows(int l) const { return l == depth ? 1 : width; }
    int layer_cols(int l) const { return l == 1 ? input_dim : width; }

    void validate() const;
    bool operator==(const NetworkShape&) const = default;
};

using ParamVector = std::vector<double>;

/// Shared initial parameters: hidden layers are block-diagonal diag(W, W)
/// with W entries ~ N(0, 4/m); the output layer is (wᵀ, -wᵀ) with w
/// entries ~ N(0, 2/m). Pure function of (shape, seed).
ParamVector init_params(const NetworkShape& shape, std::uint64_t seed);

/// Reusable forward/backward scratch. One per thread in parallel sections.
struct NetWorkspace {
    std::vector<double> pre;    // pre-activations f_1..f_{L-1}, width each
    std::vector<double> act;    // ReLU(f_l)
    std::vector<double> delta;  // backprop buffer
    void resize(const NetworkShape& shape);
};

double forward(const NetworkShape& shape, std::span<const double> theta,
               std::span<const double> x, NetWorkspace& ws);
double forward(const NetworkShape& shape, std::span<const double> theta,
               std::span<const double> x);

/// df/dθ at (x, θ) into `grad` (param_count entries); returns f(x;θ).
/// ReLU subgradient at exactly zero is taken as zero.
double gradient(const NetworkShape& shape, std::span<const double> theta,
                std::span<const double> x, std::span<double> grad, NetWorkspace& ws);
double gradient(const NetworkShape& shape, std::span<const double> theta,
                std::span<const double> x, std::span<double> grad);

/// φ(x) = g(x;θ₀)/√m, evaluated at the shared initialization.
void tangent_feature(const NetworkShape& shape, std::span<const double> theta0,
                     std::span<const double> x, std::span<double> phi, NetWorkspace& ws);
std::vector<double> tangent_feature(const NetworkShape& shape, std::span<const double> theta0,
                                    std::span<const double> x);

struct TrainConfig {
    double learning_rate = 0.01;
    int steps = 30;          ///< J; 0 means return the warm start unchanged
    double lambda = 1.0;     ///< regularizer weight; loss term is mλ‖θ-θ₀‖²/2
    int batch_size = 0;      ///< 0 = full-batch gradient descent
    bool warm_start = true;  ///< start from previous trained parameters
    long cutoff = 2000;      ///< skip training once history exceeds this; <0 disables

    void validate() const;
};

class TrainingDivergence : public std::runtime_error {
public:
    TrainingDivergence(int step, const std::string& what)
        : std::runtime_error(what), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

/// J gradient (or minibatch stochastic-gradient) steps on
///   L(θ) = Σ (f(x;θ)-y)²/2 + mλ‖θ-θ₀‖²/2.
/// The regularizer is anchored at θ₀ even when warm-started. The stochastic
/// estimate rescales the batch sum by n/batch so it stays unbiased for the
/// full-data sum. Throws TrainingDivergence naming the failing step when the
/// loss turns non-finite.
ParamVector train_local(const NetworkShape& shape, const ParamVector& theta0,
                        std::span<const std::vector<double>> xs, std::span<const double> ys,
                        const TrainConfig& cfg, const ParamVector* warm, Rng rng);

/// Stable step size for large λ: c / (mλ + mTL), the scaling under which
/// heavier regularization pulls the trained parameters back toward θ₀.
double theory_learning_rate(const NetworkShape& shape, double lambda, long horizon, double c = 1.0);

}  // namespace fnucb
