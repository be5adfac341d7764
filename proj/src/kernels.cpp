#include "fnucb/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fnucb::kern {

namespace {
// Below this dimension the parallel variants fall through to the serial
// loops; spawning a team costs more than the row work saves.
constexpr std::size_t kParallelCutoff = 256;

inline long long sll(std::size_t n) { return static_cast<long long>(n); }
}  // namespace

void sym_rank1_update_serial(double* a, std::size_t n, const double* x, double scale) {
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = scale * x[i];
        double* row = a + i * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += xi * x[j];
    }
}

void sym_rank1_update(double* a, std::size_t n, const double* x, double scale) {
    if (n < kParallelCutoff) {
        sym_rank1_update_serial(a, n, x, scale);
        return;
    }
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < sll(n); ++i) {
        const double xi = scale * x[i];
        double* row = a + static_cast<std::size_t>(i) * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += xi * x[j];
    }
}

void sym_matvec_serial(const double* a, std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = a + i * n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

void sym_matvec(const double* a, std::size_t n, const double* x, double* y) {
    if (n < kParallelCutoff) {
        sym_matvec_serial(a, n, x, y);
        return;
    }
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < sll(n); ++i) {
        const double* row = a + static_cast<std::size_t>(i) * n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

double dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double quadform_serial(const double* a, std::size_t n, const double* x, double* work) {
    sym_matvec_serial(a, n, x, work);
    return dot(x, work, n);
}

double quadform(const double* a, std::size_t n, const double* x, double* work) {
    sym_matvec(a, n, x, work);
    return dot(x, work, n);
}

double sherman_morrison_update_serial(double* ainv, std::size_t n, const double* x, double* work,
                                      double scale) {
    sym_matvec_serial(ainv, n, x, work);  // work = A⁻¹x
    const double q = dot(x, work, n);
    const double factor = scale / (1.0 + scale * q);
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = factor * work[i];
        double* row = ainv + i * n;
        for (std::size_t j = 0; j < n; ++j) row[j] -= ui * work[j];
    }
    return q;
}

double sherman_morrison_update(double* ainv, std::size_t n, const double* x, double* work,
                               double scale) {
    if (n < kParallelCutoff) return sherman_morrison_update_serial(ainv, n, x, work, scale);
    sym_matvec(ainv, n, x, work);
    const double q = dot(x, work, n);
    const double factor = scale / (1.0 + scale * q);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < sll(n); ++i) {
        const double ui = factor * work[i];
        double* row = ainv + static_cast<std::size_t>(i) * n;
        for (std::size_t j = 0; j < n; ++j) row[j] -= ui * work[j];
    }
    return q;
}

bool cholesky_serial(double* a, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0)) return false;
        const double dj = std::sqrt(d);
        a[j * n + j] = dj;
        const double inv_dj = 1.0 / dj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s * inv_dj;
        }
    }
    return true;
}

bool cholesky(double* a, std::size_t n) {
    // Column factorization carries a per-column barrier, so the team only
    // pays off on larger matrices than the elementwise kernels need.
    if (n < 4 * kParallelCutoff) return cholesky_serial(a, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0)) return false;
        const double dj = std::sqrt(d);
        a[j * n + j] = dj;
        const double inv_dj = 1.0 / dj;
#pragma omp parallel for schedule(static)
        for (long long i = sll(j) + 1; i < sll(n); ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s * inv_dj;
        }
    }
    return true;
}

double logdet_from_cholesky(const double* chol, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::log(chol[i * n + i]);
    return 2.0 * acc;
}

namespace {
// Column i of (L Lᵀ)⁻¹: solve L z = e_i, then Lᵀ w = z.
inline void spd_inverse_column(const double* chol, std::size_t n, std::size_t i, double* col) {
    for (std::size_t r = 0; r < i; ++r) col[r] = 0.0;
    for (std::size_t r = i; r < n; ++r) {
        double s = (r == i) ? 1.0 : 0.0;
        for (std::size_t k = i; k < r; ++k) s -= chol[r * n + k] * col[k];
        col[r] = s / chol[r * n + r];
    }
    for (std::size_t rr = n; rr-- > 0;) {
        double s = col[rr];
        for (std::size_t k = rr + 1; k < n; ++k) s -= chol[k * n + rr] * col[k];
        col[rr] = s / chol[rr * n + rr];
    }
}
}  // namespace

void spd_inverse_from_cholesky_serial(const double* chol, std::size_t n, double* inv) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) {
        spd_inverse_column(chol, n, i, col.data());
        for (std::size_t r = 0; r < n; ++r) inv[r * n + i] = col[r];
    }
}

void spd_inverse_from_cholesky(const double* chol, std::size_t n, double* inv) {
    if (n < kParallelCutoff) {
        spd_inverse_from_cholesky_serial(chol, n, inv);
        return;
    }
#pragma omp parallel
    {
        std::vector<double> col(n);
#pragma omp for schedule(static)
        for (long long i = 0; i < sll(n); ++i) {
            spd_inverse_column(chol, n, static_cast<std::size_t>(i), col.data());
            for (std::size_t r = 0; r < n; ++r) inv[r * n + static_cast<std::size_t>(i)] = col[r];
        }
    }
}

bool spd_inverse(const double* a, std::size_t n, double* inv, double* logdet) {
    std::vector<double> chol(a, a + n * n);
    if (!cholesky(chol.data(), n)) return false;
    if (logdet) *logdet = logdet_from_cholesky(chol.data(), n);
    spd_inverse_from_cholesky(chol.data(), n, inv);
    return true;
}

void sym_eigenvalues_jacobi(double* a, std::size_t n, double* evals) {
    constexpr int kMaxSweeps = 64;
    constexpr double kTol = 1e-14;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
        double diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) diag += a[i * n + i] * a[i * n + i];
        if (off <= kTol * std::max(1.0, diag)) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                              : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) evals[i] = a[i * n + i];
    std::sort(evals, evals + n);
}

}  // namespace fnucb::kern
