#include "fnucb/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fnucb/kernels.hpp"

namespace fnucb {

namespace {
void check_finite(std::span<const double> phi) {
    for (const double v : phi)
        if (!std::isfinite(v)) throw std::invalid_argument("CovarianceState: non-finite feature entry");
}
}  // namespace

CovarianceState::CovarianceState(CovMode mode, int dim, double lambda, int refresh_interval)
    : mode_(mode), dim_(dim), lambda_(lambda), refresh_interval_(refresh_interval) {
    if (dim <= 0) throw std::invalid_argument("CovarianceState: dim must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("CovarianceState: lambda must be positive");
    w_.assign(storage(), 0.0);
    const std::size_t n = static_cast<std::size_t>(dim_);
    if (mode_ == CovMode::full) {
        inv_.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) inv_[i * n + i] = 1.0 / lambda_;
    } else {
        inv_.assign(n, 1.0 / lambda_);
    }
    logdet_ = static_cast<double>(dim_) * std::log(lambda_);
}

std::size_t CovarianceState::storage() const {
    const std::size_t n = static_cast<std::size_t>(dim_);
    return mode_ == CovMode::full ? n * n : n;
}

void CovarianceState::rank1_update(std::span<const double> phi) {
    if (static_cast<int>(phi.size()) != dim_)
        throw std::invalid_argument("CovarianceState: feature dimension mismatch");
    check_finite(phi);
    const std::size_t n = static_cast<std::size_t>(dim_);
    if (mode_ == CovMode::full) {
        kern::sym_rank1_update(w_.data(), n, phi.data());
        std::vector<double> work(n);
        const double q = kern::sherman_morrison_update(inv_.data(), n, phi.data(), work.data());
        logdet_ += std::log1p(q);
        ++update_count_;
        if (++since_refresh_ >= refresh_interval_) refresh();
    } else {
        // Diagonal update is diag(φ²), not rank one: every coordinate is
        // exact, no refresh needed.
        for (std::size_t k = 0; k < n; ++k) {
            const double p2 = phi[k] * phi[k];
            const double before = lambda_ + w_[k];
            w_[k] += p2;
            logdet_ += std::log1p(p2 / before);
            inv_[k] = 1.0 / (lambda_ + w_[k]);
        }
        ++update_count_;
    }
}

double CovarianceState::mahalanobis(std::span<const double> phi) const {
    if (static_cast<int>(phi.size()) != dim_)
        throw std::invalid_argument("CovarianceState: feature dimension mismatch");
    const std::size_t n = static_cast<std::size_t>(dim_);
    double q;
    if (mode_ == CovMode::full) {
        std::vector<double> work(n);
        q = kern::quadform(inv_.data(), n, phi.data(), work.data());
    } else {
        q = 0.0;
        for (std::size_t k = 0; k < n; ++k) q += phi[k] * phi[k] * inv_[k];
    }
    return std::sqrt(std::max(q, 0.0));
}

double CovarianceState::log_det() const { return logdet_; }

void CovarianceState::solve(std::span<const double> b, std::span<double> out) const {
    if (static_cast<int>(b.size()) != dim_ || static_cast<int>(out.size()) != dim_)
        throw std::invalid_argument("CovarianceState: solve dimension mismatch");
    const std::size_t n = static_cast<std::size_t>(dim_);
    if (mode_ == CovMode::full) {
        kern::sym_matvec(inv_.data(), n, b.data(), out.data());
    } else {
        for (std::size_t k = 0; k < n; ++k) out[k] = inv_[k] * b[k];
    }
}

double CovarianceState::quad_with_inverse(CovMode mode, std::span<const double> inv,
                                          std::span<const double> phi) {
    const std::size_t n = phi.size();
    if (mode == CovMode::full) {
        if (inv.size() != n * n) throw std::invalid_argument("quad_with_inverse: size mismatch");
        std::vector<double> work(n);
        return kern::quadform(inv.data(), n, phi.data(), work.data());
    }
    if (inv.size() != n) throw std::invalid_argument("quad_with_inverse: size mismatch");
    double q = 0.0;
    for (std::size_t k = 0; k < n; ++k) q += phi[k] * phi[k] * inv[k];
    return q;
}

void CovarianceState::reset_from_accumulator(std::span<const double> w) {
    if (w.size() != storage())
        throw std::invalid_argument("CovarianceState: accumulator size mismatch");
    std::copy(w.begin(), w.end(), w_.begin());
    rebuild();
}

void CovarianceState::merge_from(const CovarianceState& other) {
    if (other.mode_ != mode_ || other.dim_ != dim_ || other.lambda_ != lambda_)
        throw std::invalid_argument("CovarianceState: merge mode/dim/lambda mismatch");
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] += other.w_[i];
    update_count_ += other.update_count_;
    rebuild();
}

std::vector<double> CovarianceState::mean_inverse(std::span<const CovarianceState* const> states) {
    if (states.empty()) throw std::invalid_argument("mean_inverse: empty state list");
    const CovarianceState& first = *states.front();
    for (const CovarianceState* s : states)
        if (s->mode_ != first.mode_ || s->dim_ != first.dim_ || s->lambda_ != first.lambda_)
            throw std::invalid_argument("mean_inverse: mode/dim/lambda mismatch");
    std::vector<double> out(first.inv_.size(), 0.0);
    for (const CovarianceState* s : states)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += s->inv_[i];
    const double scale = 1.0 / static_cast<double>(states.size());
    for (double& v : out) v *= scale;
    return out;
}

void CovarianceState::refresh() {
    rebuild();
}

void CovarianceState::rebuild() {
    const std::size_t n = static_cast<std::size_t>(dim_);
    since_refresh_ = 0;
    if (mode_ == CovMode::diagonal) {
        logdet_ = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            inv_[k] = 1.0 / (lambda_ + w_[k]);
            logdet_ += std::log(lambda_ + w_[k]);
        }
        return;
    }
    std::vector<double> reg(w_);
    for (std::size_t i = 0; i < n; ++i) reg[i * n + i] += lambda_;
    if (!kern::spd_inverse(reg.data(), n, inv_.data(), &logdet_))
        throw std::runtime_error("CovarianceState: regularized accumulator lost positive definiteness");
}

double logdet_ratio(double current_logdet, double reference_logdet) {
    const double r = current_logdet - reference_logdet;
    if (r < -1e-9)
        throw std::logic_error("logdet_ratio: negative ratio " + std::to_string(r) +
                               " (log-det must be nondecreasing)");
    return std::max(r, 0.0);
}

double logdet_ratio(const CovarianceState& current, const CovarianceState& reference) {
    return logdet_ratio(current.log_det(), reference.log_det());
}

void RewardAccumulator::add(std::span<const double> phi, double y) {
    if (phi.size() != b_.size()) throw std::invalid_argument("RewardAccumulator: dimension mismatch");
    if (!std::isfinite(y)) throw std::invalid_argument("RewardAccumulator: non-finite reward");
    for (std::size_t i = 0; i < b_.size(); ++i) b_[i] += y * phi[i];
}

void RewardAccumulator::merge_from(const RewardAccumulator& other) {
    if (other.b_.size() != b_.size())
        throw std::invalid_argument("RewardAccumulator: dimension mismatch");
    for (std::size_t i = 0; i < b_.size(); ++i) b_[i] += other.b_[i];
}

}  // namespace fnucb
