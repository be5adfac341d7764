#include "fnucb/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace fnucb {

void NetworkShape::validate() const {
    if (input_dim <= 0 || input_dim % 2 != 0)
        throw std::invalid_argument("NetworkShape: input_dim must be positive and even, got " +
                                    std::to_string(input_dim));
    if (width <= 0 || width % 2 != 0)
        throw std::invalid_argument("NetworkShape: width must be positive and even, got " +
                                    std::to_string(width));
    if (depth < 2)
        throw std::invalid_argument("NetworkShape: depth must be at least 2, got " +
                                    std::to_string(depth));
}

ParamVector init_params(const NetworkShape& shape, std::uint64_t seed) {
    shape.validate();
    Rng rng = Rng(seed).fork(stream::kInit);
    ParamVector theta(static_cast<std::size_t>(shape.param_count()), 0.0);

    const int m = shape.width;
    const int mh = m / 2;
    const double hidden_sd = 2.0 / std::sqrt(static_cast<double>(m));  // N(0, 4/m)
    const double out_sd = std::sqrt(2.0 / static_cast<double>(m));     // N(0, 2/m)

    // Hidden layers: diag(W, W) with one shared block sampled row-major.
    for (int l = 1; l <= shape.depth - 1; ++l) {
        const int cols = shape.layer_cols(l);
        const int ch = cols / 2;
        double* layer = theta.data() + shape.layer_offset(l);
        for (int i = 0; i < mh; ++i) {
            for (int j = 0; j < ch; ++j) {
                const double w = hidden_sd * rng.next_gaussian();
                layer[i * cols + j] = w;
                layer[(i + mh) * cols + (j + ch)] = w;
            }
        }
    }
    // Output layer: (wᵀ, -wᵀ).
    double* out = theta.data() + shape.layer_offset(shape.depth);
    for (int k = 0; k < mh; ++k) {
        const double w = out_sd * rng.next_gaussian();
        out[k] = w;
        out[k + mh] = -w;
    }
    return theta;
}

void NetWorkspace::resize(const NetworkShape& shape) {
    const std::size_t need = static_cast<std::size_t>(shape.width) * (shape.depth - 1);
    pre.assign(need, 0.0);
    act.assign(need, 0.0);
    delta.assign(static_cast<std::size_t>(shape.width) * 2, 0.0);
}

namespace {

inline void check_dims(const NetworkShape& shape, std::span<const double> theta,
                       std::span<const double> x) {
    if (static_cast<int>(x.size()) != shape.input_dim)
        throw std::invalid_argument("forward: context has dimension " + std::to_string(x.size()) +
                                    ", network expects " + std::to_string(shape.input_dim));
    if (static_cast<int>(theta.size()) != shape.param_count())
        throw std::invalid_argument("forward: parameter vector has " + std::to_string(theta.size()) +
                                    " entries, expected " + std::to_string(shape.param_count()));
}

// Fills ws.pre/ws.act for layers 1..L-1 and returns fL (pre-sqrt(m) output).
double forward_pass(const NetworkShape& shape, std::span<const double> theta,
                    std::span<const double> x, NetWorkspace& ws) {
    const int m = shape.width;
    const int L = shape.depth;

    // Layer 1: f1 = W1 x.
    {
        const double* w1 = theta.data() + shape.layer_offset(1);
        double* f1 = ws.pre.data();
        double* z1 = ws.act.data();
        const int d = shape.input_dim;
        for (int i = 0; i < m; ++i) {
            const double* row = w1 + i * d;
            double acc = 0.0;
            for (int j = 0; j < d; ++j) acc += row[j] * x[j];
            f1[i] = acc;
            z1[i] = acc > 0.0 ? acc : 0.0;
        }
    }
    // Hidden layers 2..L-1.
    for (int l = 2; l <= L - 1; ++l) {
        const double* wl = theta.data() + shape.layer_offset(l);
        const double* zin = ws.act.data() + static_cast<std::size_t>(m) * (l - 2);
        double* fl = ws.pre.data() + static_cast<std::size_t>(m) * (l - 1);
        double* zl = ws.act.data() + static_cast<std::size_t>(m) * (l - 1);
        for (int i = 0; i < m; ++i) {
            const double* row = wl + i * m;
            double acc = 0.0;
            for (int j = 0; j < m; ++j) acc += row[j] * zin[j];
            fl[i] = acc;
            zl[i] = acc > 0.0 ? acc : 0.0;
        }
    }
    // Output layer.
    const double* wL = theta.data() + shape.layer_offset(L);
    const double* zlast = ws.act.data() + static_cast<std::size_t>(m) * (L - 2);
    double acc = 0.0;
    for (int j = 0; j < m; ++j) acc += wL[j] * zlast[j];
    return acc;
}

}  // namespace

double forward(const NetworkShape& shape, std::span<const double> theta,
               std::span<const double> x, NetWorkspace& ws) {
    check_dims(shape, theta, x);
    if (ws.pre.size() < static_cast<std::size_t>(shape.width) * (shape.depth - 1)) ws.resize(shape);
    const double fl = forward_pass(shape, theta, x, ws);
    return std::sqrt(static_cast<double>(shape.width)) * fl;
}

double forward(const NetworkShape& shape, std::span<const double> theta,
               std::span<const double> x) {
    NetWorkspace ws;
    ws.resize(shape);
    return forward(shape, theta, x, ws);
}

double gradient(const NetworkShape& shape, std::span<const double> theta,
                std::span<const double> x, std::span<double> grad, NetWorkspace& ws) {
    check_dims(shape, theta, x);
    if (static_cast<int>(grad.size()) != shape.param_count())
        throw std::invalid_argument("gradient: output buffer has wrong size");
    if (ws.pre.size() < static_cast<std::size_t>(shape.width) * (shape.depth - 1)) ws.resize(shape);

    const int m = shape.width;
    const int L = shape.depth;
    const double scale = std::sqrt(static_cast<double>(m));
    const double fl = forward_pass(shape, theta, x, ws);

    // d f / d W_L = scale * z_{L-1}.
    {
        double* gout = grad.data() + shape.layer_offset(L);
        const double* zlast = ws.act.data() + static_cast<std::size_t>(m) * (L - 2);
        for (int j = 0; j < m; ++j) gout[j] = scale * zlast[j];
    }

    // delta_l = d f / d f_l, starting from the output layer.
    double* delta = ws.delta.data();
    double* delta_next = ws.delta.data() + m;
    {
        const double* wL = theta.data() + shape.layer_offset(L);
        const double* flast = ws.pre.data() + static_cast<std::size_t>(m) * (L - 2);
        for (int j = 0; j < m; ++j) delta[j] = flast[j] > 0.0 ? scale * wL[j] : 0.0;
    }
    for (int l = L - 1; l >= 2; --l) {
        // grad W_l = delta_l z_{l-1}ᵀ
        double* gl = grad.data() + shape.layer_offset(l);
        const double* zin = ws.act.data() + static_cast<std::size_t>(m) * (l - 2);
        for (int i = 0; i < m; ++i) {
            double* row = gl + i * m;
            const double di = delta[i];
            if (di == 0.0) {
                std::memset(row, 0, sizeof(double) * m);
            } else {
                for (int j = 0; j < m; ++j) row[j] = di * zin[j];
            }
        }
        // delta_{l-1} = (W_lᵀ delta_l) ⊙ 1(f_{l-1} > 0)
        const double* wl = theta.data() + shape.layer_offset(l);
        const double* fprev = ws.pre.data() + static_cast<std::size_t>(m) * (l - 2);
        for (int j = 0; j < m; ++j) {
            if (fprev[j] <= 0.0) {
                delta_next[j] = 0.0;
                continue;
            }
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += wl[i * m + j] * delta[i];
            delta_next[j] = acc;
        }
        std::swap(delta, delta_next);
    }
    // grad W_1 = delta_1 xᵀ.
    {
        double* g1 = grad.data() + shape.layer_offset(1);
        const int d = shape.input_dim;
        for (int i = 0; i < m; ++i) {
            double* row = g1 + i * d;
            const double di = delta[i];
            if (di == 0.0) {
                std::memset(row, 0, sizeof(double) * d);
            } else {
                for (int j = 0; j < d; ++j) row[j] = di * x[j];
            }
        }
    }
    return scale * fl;
}

double gradient(const NetworkShape& shape, std::span<const double> theta,
                std::span<const double> x, std::span<double> grad) {
    NetWorkspace ws;
    ws.resize(shape);
    return gradient(shape, theta, x, grad, ws);
}

void tangent_feature(const NetworkShape& shape, std::span<const double> theta0,
                     std::span<const double> x, std::span<double> phi, NetWorkspace& ws) {
    gradient(shape, theta0, x, phi, ws);
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(shape.width));
    for (double& v : phi) v *= inv_sqrt_m;
}

std::vector<double> tangent_feature(const NetworkShape& shape, std::span<const double> theta0,
                                    std::span<const double> x) {
    std::vector<double> phi(static_cast<std::size_t>(shape.param_count()));
    NetWorkspace ws;
    ws.resize(shape);
    tangent_feature(shape, theta0, x, phi, ws);
    return phi;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (steps < 0) throw std::invalid_argument("TrainConfig: steps must be >= 0");
    if (!(lambda > 0.0)) throw std::invalid_argument("TrainConfig: lambda must be > 0");
    if (batch_size < 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 0");
}

namespace {

// Deterministic blocked accumulation: the data range is cut into a fixed
// number of blocks combined in ascending order, so the sum is identical for
// any thread count.
constexpr int kGradBlocks = 32;

struct BatchGradient {
    double loss = 0.0;  // data term only
};

BatchGradient accumulate_data_gradient(const NetworkShape& shape, std::span<const double> theta,
                                       std::span<const std::vector<double>> xs,
                                       std::span<const double> ys,
                                       std::span<const std::size_t> indices, double sum_scale,
                                       std::vector<double>& out) {
    const std::size_t p = out.size();
    const std::size_t count = indices.size();
    const int blocks = static_cast<int>(std::min<std::size_t>(kGradBlocks, std::max<std::size_t>(count, 1)));
    std::vector<std::vector<double>> block_grad(blocks, std::vector<double>(p, 0.0));
    std::vector<double> block_loss(blocks, 0.0);

#pragma omp parallel
    {
        NetWorkspace ws;
        ws.resize(shape);
        std::vector<double> g(p);
#pragma omp for schedule(static)
        for (int b = 0; b < blocks; ++b) {
            const std::size_t lo = count * b / blocks;
            const std::size_t hi = count * (b + 1) / blocks;
            for (std::size_t k = lo; k < hi; ++k) {
                const std::size_t idx = indices[k];
                const double f = gradient(shape, theta, xs[idx], g, ws);
                const double r = f - ys[idx];
                block_loss[b] += 0.5 * r * r;
                double* dst = block_grad[b].data();
                for (std::size_t j = 0; j < p; ++j) dst[j] += r * g[j];
            }
        }
    }

    BatchGradient res;
    std::fill(out.begin(), out.end(), 0.0);
    for (int b = 0; b < blocks; ++b) {
        res.loss += block_loss[b];
        const double* src = block_grad[b].data();
        for (std::size_t j = 0; j < p; ++j) out[j] += src[j];
    }
    if (sum_scale != 1.0) {
        res.loss *= sum_scale;
        for (double& v : out) v *= sum_scale;
    }
    return res;
}

}  // namespace

ParamVector train_local(const NetworkShape& shape, const ParamVector& theta0,
                        std::span<const std::vector<double>> xs, std::span<const double> ys,
                        const TrainConfig& cfg, const ParamVector* warm, Rng rng) {
    shape.validate();
    cfg.validate();
    if (xs.size() != ys.size()) throw std::invalid_argument("train_local: xs/ys size mismatch");
    if (xs.empty()) throw std::invalid_argument("train_local: empty training set");

    ParamVector theta = (cfg.warm_start && warm != nullptr) ? *warm : theta0;
    if (cfg.steps == 0) return theta;
    if (cfg.cutoff >= 0 && static_cast<long>(xs.size()) > cfg.cutoff) return theta;

    const std::size_t p = theta.size();
    const std::size_t n = xs.size();
    const double m = static_cast<double>(shape.width);
    const double reg = m * cfg.lambda;

    std::vector<double> grad(p);
    std::vector<std::size_t> all_indices(n);
    for (std::size_t i = 0; i < n; ++i) all_indices[i] = i;
    std::vector<std::size_t> batch;

    for (int step = 0; step < cfg.steps; ++step) {
        std::span<const std::size_t> idx;
        double sum_scale = 1.0;
        if (cfg.batch_size > 0 && static_cast<std::size_t>(cfg.batch_size) < n) {
            batch.resize(static_cast<std::size_t>(cfg.batch_size));
            for (auto& b : batch) b = rng.next_below(n);
            idx = batch;
            sum_scale = static_cast<double>(n) / static_cast<double>(cfg.batch_size);
        } else {
            idx = all_indices;
        }

        const BatchGradient bg = accumulate_data_gradient(shape, theta, xs, ys, idx, sum_scale, grad);

        double reg_norm2 = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double dj = theta[j] - theta0[j];
            reg_norm2 += dj * dj;
            grad[j] += reg * dj;
        }
        const double loss = bg.loss + 0.5 * reg * reg_norm2;
        if (!std::isfinite(loss))
            throw TrainingDivergence(step, "train_local: non-finite loss at step " +
                                               std::to_string(step));

        // Step size normalized by the dataset size: the configured rate then
        // stays stable as the history grows (a step on L with rate η/n is a
        // step on the mean-scaled objective with rate η).
        const double eta = cfg.learning_rate / static_cast<double>(n);
        for (std::size_t j = 0; j < p; ++j) theta[j] -= eta * grad[j];
    }

    for (const double v : theta)
        if (!std::isfinite(v))
            throw TrainingDivergence(cfg.steps, "train_local: non-finite parameters after step " +
                                                    std::to_string(cfg.steps));
    return theta;
}

double theory_learning_rate(const NetworkShape& shape, double lambda, long horizon, double c) {
    const double m = static_cast<double>(shape.width);
    const double L = static_cast<double>(shape.depth);
    return c / (m * lambda + m * static_cast<double>(horizon) * L);
}

}  // namespace fnucb
