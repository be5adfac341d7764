#pragma once

#include <span>
#include <vector>

namespace fnucb {

/// Infinite-width tangent kernel matrix over a context list, built from the
/// layer recursion with closed-form arc-cosine expectations.
///
/// The recursion keeps two sequences: sigma (the covariance propagated
/// through the ReLU layers) and h_tilde (the accumulated kernel,
/// h_tilde^{l+1} = 2 h_tilde^l E[1(u>0)1(v>0)] + sigma^{l+1}). The reported
/// matrix is h = (h_tilde + sigma)/2 at the final layer; h_tilde itself is
/// the large-width limit of the empirical tangent Gram ⟨φ(x),φ(x')⟩ and is
/// exposed for convergence checks.
struct NTKMatrix {
    int n = 0;
    int depth = 0;
    std::vector<double> h;        // (h_tilde + sigma)/2, row-major n×n
    std::vector<double> h_tilde;  // final-layer accumulated kernel
    std::vector<double> sigma;    // final-layer covariance
    double psd_shift = 0.0;       // diagonal shift applied to repair PSD, if any

    double at(int i, int j) const { return h[static_cast<std::size_t>(i) * n + j]; }
    double gram_limit(int i, int j) const {
        return h_tilde[static_cast<std::size_t>(i) * n + j];
    }
};

/// E[max(u,0)max(v,0)] for (u,v) ~ N(0, [[a,c],[c,b]]).
double relu_pair_expectation(double a, double b, double c);
/// E[1(u>0)1(v>0)] for unit-variance correlation rho.
double indicator_pair_expectation(double rho);

/// Contexts must be unit-norm; correlations beyond [-1,1] by more than 1e-9
/// are an error, smaller excursions are clamped.
NTKMatrix ntk_matrix(std::span<const std::vector<double>> contexts, int depth);

/// log det(I + H/λ) / log(1 + horizon/λ).
double effective_dimension(std::span<const double> h, int n, double lambda, double horizon);

struct EffectiveDimensionReport {
    double d_tilde = 0.0;              ///< pooled contexts, horizon TKN
    std::vector<double> per_agent;     ///< per-agent subsets, horizon TK
    double d_max = 0.0;
};
EffectiveDimensionReport effective_dimension_by_agent(
    std::span<const std::vector<std::vector<double>>> agent_contexts, int depth, double lambda,
    long T, int K);

struct TheoryParams {
    double nu_tkn = 0.0;
    double nu_tk = 0.0;
    double d_suggested = 0.0;  ///< T / (N·d̃)
};
/// Evaluates the closed-form exploration scales and the communication
/// threshold suggestion from problem constants.
TheoryParams theory_params(double reward_bound, double noise_scale, double delta, double d_tilde,
                           double d_max, long T, int K, int N, double lambda);

/// The ridge regularizer the regret analysis assumes: 1 + 2/T.
inline double theory_lambda(long horizon) { return 1.0 + 2.0 / static_cast<double>(horizon); }

struct EpochDiagnostics {
    struct Epoch {
        int index = 0;        ///< 1-based
        double log_ratio = 0.0;
        bool good = false;    ///< determinant ratio within [1, e]
    };
    std::vector<Epoch> epochs;
    double total_log_ratio = 0.0;   ///< log det(V_P)/det(V_0)
    double telescope_error = 0.0;   ///< |sum of per-epoch ratios - total|
    int bad_epochs = 0;
};
/// Consumes the log-det snapshots V_0, V_1, ..., V_P recorded by a harness
/// run with snapshots enabled.
EpochDiagnostics epoch_diagnostics(std::span<const double> epoch_logdets);

/// Post-hoc estimate of the reward-norm constant sqrt(2 hᵀH⁻¹h) over a
/// sampled context set. An estimate only: the exact constant needs the full
/// context stream in advance.
double estimate_reward_norm_bound(std::span<const std::vector<double>> contexts,
                                  std::span<const double> h_values, int depth,
                                  double jitter = 1e-8);

}  // namespace fnucb
