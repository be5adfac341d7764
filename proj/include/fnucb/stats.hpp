#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace fnucb {

enum class CovMode { full, diagonal };

/// Regularized Gram accumulator over tangent features: maintains W, the
/// inverse of (λI + W) and log det(λI + W) under rank-1 updates.
///
/// Full mode keeps the dense p×p matrix with a Sherman-Morrison inverse and
/// the matrix-determinant-lemma log-det, refreshed densely every
/// `refresh_interval` updates to bound drift. Diagonal mode keeps only the
/// diagonal; its inverse and log-det are exact elementwise quantities.
///
/// Single writer; concurrent readers are safe between updates.
class CovarianceState {
public:
    CovarianceState(CovMode mode, int dim, double lambda, int refresh_interval = 512);

    CovMode mode() const { return mode_; }
    int dim() const { return dim_; }
    double lambda() const { return lambda_; }
    long update_count() const { return update_count_; }

    /// W += φφᵀ (full) or W_k += φ_k² (diagonal).
    void rank1_update(std::span<const double> phi);

    /// sqrt(φᵀ (λI+W)⁻¹ φ).
    double mahalanobis(std::span<const double> phi) const;

    /// log det(λI + W).
    double log_det() const;

    /// out = (λI+W)⁻¹ b using the maintained inverse.
    void solve(std::span<const double> b, std::span<double> out) const;

    /// φᵀ M φ for an externally supplied inverse (full matrix or diagonal,
    /// matching `mode`). Used with averaged inverses, which are not the
    /// inverse of any maintained accumulator.
    static double quad_with_inverse(CovMode mode, std::span<const double> inv,
                                    std::span<const double> phi);

    /// Replace W by the given accumulator and rebuild inverse/log-det densely.
    void reset_from_accumulator(std::span<const double> w);

    /// W += other.W (same mode/dim/λ); inverse and log-det recomputed.
    void merge_from(const CovarianceState& other);

    /// Entrywise mean of the maintained inverses. This is NOT the inverse of
    /// the mean accumulator.
    static std::vector<double> mean_inverse(std::span<const CovarianceState* const> states);

    std::span<const double> accumulator() const { return w_; }
    std::span<const double> inverse() const { return inv_; }

    /// Dense recompute of inverse and log-det from the accumulator.
    void refresh();

private:
    void rebuild();
    std::size_t storage() const;

    CovMode mode_;
    int dim_;
    double lambda_;
    int refresh_interval_;
    long update_count_ = 0;
    int since_refresh_ = 0;
    double logdet_ = 0.0;
    std::vector<double> w_;    // dim² (row-major) or dim
    std::vector<double> inv_;  // inverse of (λI + W), same layout
};

/// log det(current) - log det(reference_logdet), guarded: values below
/// -1e-9 indicate an internal inconsistency and throw; small negative
/// round-off is clamped to zero.
double logdet_ratio(const CovarianceState& current, const CovarianceState& reference);
double logdet_ratio(double current_logdet, double reference_logdet);

/// B = Σ y φ accumulator.
class RewardAccumulator {
public:
    explicit RewardAccumulator(int dim) : b_(static_cast<std::size_t>(dim), 0.0) {}

    void add(std::span<const double> phi, double y);
    void merge_from(const RewardAccumulator& other);
    void reset() { std::fill(b_.begin(), b_.end(), 0.0); }

    int dim() const { return static_cast<int>(b_.size()); }
    std::span<const double> values() const { return b_; }
    std::vector<double>& mutable_values() { return b_; }

private:
    std::vector<double> b_;
};

}  // namespace fnucb
