#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fnucb/rng.hpp"

namespace fnucb {

/// Contexts for one (iteration, agent) pair plus the exact reward value of
/// each arm. Environments are immutable after construction; draws are pure
/// functions of (seed, t, agent), so parallel agents are safe and changing
/// algorithm hyperparameters can never change the contexts.
struct ContextSet {
    std::vector<std::vector<double>> contexts;
    std::vector<double> true_h;
};

class Environment {
public:
    virtual ~Environment() = default;

    virtual int context_dim() const = 0;
    virtual int arms() const = 0;

    virtual ContextSet draw_contexts(long t, int agent) const = 0;

    /// Noisy observation for pulling `arm` of the set drawn at (t, agent).
    virtual double observe(const ContextSet& set, int arm, long t, int agent) const = 0;

    /// (y, h_true) for an arbitrary context vector belonging to this
    /// environment's domain; rejects foreign contexts.
    virtual double reward_at(std::span<const double> x, long t, int agent,
                             double* h_true) const = 0;
};

/// (x/√2, x/√2): unit norm in, unit norm out, halves identical.
std::vector<double> duplicate_transform(std::span<const double> x);

enum class SyntheticKind { cosine, square };

/// h(x) = cos(3⟨a,x⟩) or 10⟨a,x⟩², contexts uniform on the unit sphere,
/// Gaussian observation noise. The hidden parameter a is itself a unit
/// vector drawn from the environment seed.
class SyntheticEnv : public Environment {
public:
    SyntheticEnv(SyntheticKind kind, int dim, int arms, double noise_sd, std::uint64_t seed,
                 bool duplicated_contexts = false);

    int context_dim() const override { return duplicated_ ? 2 * dim_ : dim_; }
    int arms() const override { return arms_; }
    ContextSet draw_contexts(long t, int agent) const override;
    double observe(const ContextSet& set, int arm, long t, int agent) const override;
    double reward_at(std::span<const double> x, long t, int agent, double* h_true) const override;

    double true_reward(std::span<const double> x) const;
    std::span<const double> hidden_parameter() const { return a_; }

private:
    std::vector<double> sample_unit(Rng& rng, int dim) const;

    SyntheticKind kind_;
    int dim_;
    int arms_;
    double noise_sd_;
    std::uint64_t seed_;
    bool duplicated_;
    std::vector<double> a_;  // lives in the (possibly transformed) context space
};

/// Column roles for a delimited numeric dataset.
struct DatasetSchema {
    std::vector<int> feature_cols;
    int label_col = -1;
    int label_base = 0;   ///< smallest label value
    int classes = 0;      ///< K
    bool normalize = true;
    bool has_header = false;

    static DatasetSchema load(const std::string& path);
    void validate() const;
};

/// K-class rows turned into a K-armed bandit: arm k carries the feature
/// vector embedded in block k of a K·d context, reward 1 iff k is the row's
/// class. Rows are sampled uniformly with replacement per (t, agent).
class ClassificationBanditEnv : public Environment {
public:
    static ClassificationBanditEnv from_csv(const std::string& path, const DatasetSchema& schema,
                                            std::uint64_t seed);
    ClassificationBanditEnv(std::vector<std::vector<double>> rows, std::vector<int> labels,
                            int classes, std::uint64_t seed);

    int context_dim() const override { return feature_dim_ * classes_; }
    int arms() const override { return classes_; }
    int feature_dim() const { return feature_dim_; }
    std::size_t rows() const { return rows_.size(); }

    ContextSet draw_contexts(long t, int agent) const override;
    double observe(const ContextSet& set, int arm, long t, int agent) const override;
    double reward_at(std::span<const double> x, long t, int agent, double* h_true) const override;

    int label_at(long t, int agent) const;

private:
    std::size_t row_index(long t, int agent) const;

    std::vector<std::vector<double>> rows_;  // unit-normalized feature vectors
    std::vector<int> labels_;                // 0-based
    int classes_;
    int feature_dim_;
    std::uint64_t seed_;
};

}  // namespace fnucb
