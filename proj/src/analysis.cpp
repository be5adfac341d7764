#include "fnucb/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fnucb/kernels.hpp"

namespace fnucb {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kCorrelationSlack = 1e-9;

double clamp_correlation(double rho) {
    if (rho > 1.0 + kCorrelationSlack || rho < -1.0 - kCorrelationSlack)
        throw std::domain_error("ntk_matrix: correlation " + std::to_string(rho) +
                                " outside [-1,1]");
    return std::clamp(rho, -1.0, 1.0);
}
}  // namespace

double relu_pair_expectation(double a, double b, double c) {
    const double s = std::sqrt(a * b);
    if (!(s > 0.0)) return 0.0;
    const double rho = clamp_correlation(c / s);
    const double theta = std::acos(rho);
    return s / (2.0 * kPi) * (std::sqrt(std::max(0.0, 1.0 - rho * rho)) + (kPi - theta) * rho);
}

double indicator_pair_expectation(double rho) {
    const double r = clamp_correlation(rho);
    return (kPi - std::acos(r)) / (2.0 * kPi);
}

NTKMatrix ntk_matrix(std::span<const std::vector<double>> contexts, int depth) {
    if (contexts.empty()) throw std::invalid_argument("ntk_matrix: no contexts");
    if (depth < 2) throw std::invalid_argument("ntk_matrix: depth must be at least 2");
    const int n = static_cast<int>(contexts.size());
    const std::size_t dim = contexts.front().size();
    for (const auto& x : contexts) {
        if (x.size() != dim) throw std::invalid_argument("ntk_matrix: ragged contexts");
        double norm2 = 0.0;
        for (const double v : x) norm2 += v * v;
        if (std::abs(norm2 - 1.0) > 1e-6)
            throw std::invalid_argument("ntk_matrix: contexts must be unit-norm");
    }

    const std::size_t nn = static_cast<std::size_t>(n) * n;
    std::vector<double> sigma(nn), htilde(nn);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double ip = 0.0;
            for (std::size_t k = 0; k < dim; ++k) ip += contexts[i][k] * contexts[j][k];
            sigma[static_cast<std::size_t>(i) * n + j] = ip;
            sigma[static_cast<std::size_t>(j) * n + i] = ip;
        }
    }
    htilde = sigma;

    std::vector<double> next_sigma(nn), next_htilde(nn);
    for (int level = 1; level < depth; ++level) {
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                const double a = sigma[static_cast<std::size_t>(i) * n + i];
                const double b = sigma[static_cast<std::size_t>(j) * n + j];
                const double c = sigma[static_cast<std::size_t>(i) * n + j];
                const double s = std::sqrt(a * b);
                const double rho = s > 0.0 ? clamp_correlation(c / s) : 0.0;
                const double e_relu = relu_pair_expectation(a, b, c);
                const double e_ind = indicator_pair_expectation(rho);
                const double ns = 2.0 * e_relu;
                const double nh = 2.0 * htilde[static_cast<std::size_t>(i) * n + j] * e_ind + ns;
                next_sigma[static_cast<std::size_t>(i) * n + j] = ns;
                next_sigma[static_cast<std::size_t>(j) * n + i] = ns;
                next_htilde[static_cast<std::size_t>(i) * n + j] = nh;
                next_htilde[static_cast<std::size_t>(j) * n + i] = nh;
            }
        }
        sigma.swap(next_sigma);
        htilde.swap(next_htilde);
    }

    NTKMatrix out;
    out.n = n;
    out.depth = depth;
    out.sigma = sigma;
    out.h_tilde = htilde;
    out.h.resize(nn);
    for (std::size_t k = 0; k < nn; ++k) out.h[k] = 0.5 * (htilde[k] + sigma[k]);

    // PSD repair: tolerate eigenvalues down to -1e-8 by shifting, reject
    // anything worse as an internal error.
    std::vector<double> work(out.h);
    std::vector<double> evals(static_cast<std::size_t>(n));
    kern::sym_eigenvalues_jacobi(work.data(), static_cast<std::size_t>(n), evals.data());
    const double min_eig = evals.front();
    if (min_eig < -1e-8)
        throw std::runtime_error("ntk_matrix: matrix is not PSD (min eigenvalue " +
                                 std::to_string(min_eig) + ")");
    if (min_eig < 0.0) {
        out.psd_shift = -min_eig;
        for (int i = 0; i < n; ++i) out.h[static_cast<std::size_t>(i) * n + i] += out.psd_shift;
    }
    return out;
}

double effective_dimension(std::span<const double> h, int n, double lambda, double horizon) {
    if (n <= 0) return 0.0;
    if (h.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("effective_dimension: matrix size mismatch");
    if (!(lambda > 0.0)) throw std::invalid_argument("effective_dimension: lambda must be > 0");

    std::vector<double> a(h.begin(), h.end());
    for (std::size_t k = 0; k < a.size(); ++k) a[k] /= lambda;
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + i] += 1.0;

    double logdet;
    std::vector<double> chol(a);
    if (kern::cholesky(chol.data(), static_cast<std::size_t>(n))) {
        logdet = kern::logdet_from_cholesky(chol.data(), static_cast<std::size_t>(n));
    } else {
        // Borderline PSD input: fall back to an eigenvalue sum with the
        // negative dust clamped away.
        std::vector<double> evals(static_cast<std::size_t>(n));
        kern::sym_eigenvalues_jacobi(a.data(), static_cast<std::size_t>(n), evals.data());
        logdet = 0.0;
        for (const double e : evals) logdet += std::log(std::max(e, 1.0));
    }
    return logdet / std::log(1.0 + horizon / lambda);
}

EffectiveDimensionReport effective_dimension_by_agent(
    std::span<const std::vector<std::vector<double>>> agent_contexts, int depth, double lambda,
    long T, int K) {
    if (agent_contexts.empty())
        throw std::invalid_argument("effective_dimension_by_agent: no agents");
    const int N = static_cast<int>(agent_contexts.size());

    std::vector<std::vector<double>> pooled;
    for (const auto& a : agent_contexts) pooled.insert(pooled.end(), a.begin(), a.end());

    EffectiveDimensionReport rep;
    const NTKMatrix pooled_ntk = ntk_matrix(pooled, depth);
    rep.d_tilde = effective_dimension(pooled_ntk.h, pooled_ntk.n, lambda,
                                      static_cast<double>(T) * K * N);
    rep.per_agent.reserve(agent_contexts.size());
    for (const auto& a : agent_contexts) {
        const NTKMatrix hi = ntk_matrix(a, depth);
        rep.per_agent.push_back(
            effective_dimension(hi.h, hi.n, lambda, static_cast<double>(T) * K));
    }
    rep.d_max = *std::max_element(rep.per_agent.begin(), rep.per_agent.end());
    return rep;
}

TheoryParams theory_params(double reward_bound, double noise_scale, double delta, double d_tilde,
                           double d_max, long T, int K, int N, double lambda) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("theory_params: delta in (0,1)");
    if (!(lambda > 0.0)) throw std::invalid_argument("theory_params: lambda must be > 0");
    const double tkn = static_cast<double>(T) * K * N;
    const double tk = static_cast<double>(T) * K;
    TheoryParams p;
    p.nu_tkn = reward_bound +
               noise_scale * std::sqrt(2.0 * (std::log(3.0 / delta) + 1.0) +
                                       d_tilde * std::log(1.0 + tkn / lambda));
    p.nu_tk = reward_bound +
              noise_scale * std::sqrt(2.0 * (std::log(3.0 * N / delta) + 1.0) +
                                      d_max * std::log(1.0 + tk / lambda));
    p.d_suggested = d_tilde > 0.0 ? static_cast<double>(T) / (static_cast<double>(N) * d_tilde)
                                  : std::numeric_limits<double>::infinity();
    return p;
}

EpochDiagnostics epoch_diagnostics(std::span<const double> epoch_logdets) {
    if (epoch_logdets.size() < 2)
        throw std::invalid_argument("epoch_diagnostics: need at least V_0 and V_P");
    EpochDiagnostics d;
    double sum = 0.0;
    for (std::size_t p = 1; p < epoch_logdets.size(); ++p) {
        EpochDiagnostics::Epoch e;
        e.index = static_cast<int>(p);
        e.log_ratio = epoch_logdets[p] - epoch_logdets[p - 1];
        e.good = e.log_ratio >= -1e-9 && e.log_ratio <= 1.0 + 1e-9;
        if (!e.good) ++d.bad_epochs;
        sum += e.log_ratio;
        d.epochs.push_back(e);
    }
    d.total_log_ratio = epoch_logdets.back() - epoch_logdets.front();
    d.telescope_error = std::abs(sum - d.total_log_ratio);
    return d;
}

double estimate_reward_norm_bound(std::span<const std::vector<double>> contexts,
                                  std::span<const double> h_values, int depth, double jitter) {
    if (contexts.size() != h_values.size())
        throw std::invalid_argument("estimate_reward_norm_bound: size mismatch");
    const NTKMatrix ntk = ntk_matrix(contexts, depth);
    const std::size_t n = static_cast<std::size_t>(ntk.n);
    std::vector<double> a(ntk.h);
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] += jitter;
    if (!kern::cholesky(a.data(), n))
        throw std::runtime_error("estimate_reward_norm_bound: kernel matrix not PD");
    // Solve L z = h, then quad = zᵀz = hᵀ (L Lᵀ)⁻¹ h.
    std::vector<double> z(n);
    for (std::size_t r = 0; r < n; ++r) {
        double s = h_values[r];
        for (std::size_t k = 0; k < r; ++k) s -= a[r * n + k] * z[k];
        z[r] = s / a[r * n + r];
    }
    double quad = 0.0;
    for (const double v : z) quad += v * v;
    return std::sqrt(2.0 * quad);
}

}  // namespace fnucb
