#pragma once

#include <cstddef>

namespace fnucb::kern {

// Dense symmetric kernels over row-major storage.
//
// Each kernel comes in two flavors: a *_serial reference implementation and
// an OpenMP variant without the suffix. The OpenMP variants only split work
// across independent output elements and keep the serial inner-loop order
// within each element, so the two flavors produce bitwise-identical results
// for any thread count. Tests assert that equality; the bench target
// measures the speedup.

/// a += scale * x xᵀ  (full n×n update, both triangles).
void sym_rank1_update_serial(double* a, std::size_t n, const double* x, double scale = 1.0);
void sym_rank1_update(double* a, std::size_t n, const double* x, double scale = 1.0);

/// y = A x for symmetric A.
void sym_matvec_serial(const double* a, std::size_t n, const double* x, double* y);
void sym_matvec(const double* a, std::size_t n, const double* x, double* y);

double dot(const double* x, const double* y, std::size_t n);

/// xᵀ A x. `work` must hold n doubles.
double quadform_serial(const double* a, std::size_t n, const double* x, double* work);
double quadform(const double* a, std::size_t n, const double* x, double* work);

/// Sherman-Morrison: given ainv = A⁻¹, rewrite ainv as (A + scale·xxᵀ)⁻¹.
/// Returns q = xᵀ A⁻¹ x (the caller folds log1p(scale·q) into its log-det).
/// `work` must hold n doubles.
double sherman_morrison_update_serial(double* ainv, std::size_t n, const double* x, double* work,
                                      double scale = 1.0);
double sherman_morrison_update(double* ainv, std::size_t n, const double* x, double* work,
                               double scale = 1.0);

/// In-place Cholesky A = L Lᵀ (lower triangle; upper left untouched).
/// Returns false if A is not positive definite.
bool cholesky_serial(double* a, std::size_t n);
bool cholesky(double* a, std::size_t n);

/// 2·Σ log L_ii from a Cholesky factor.
double logdet_from_cholesky(const double* chol, std::size_t n);

/// inv = (L Lᵀ)⁻¹ from a Cholesky factor (full symmetric output).
void spd_inverse_from_cholesky_serial(const double* chol, std::size_t n, double* inv);
void spd_inverse_from_cholesky(const double* chol, std::size_t n, double* inv);

/// Convenience: inverse and log-det of a symmetric positive definite matrix.
/// `a` is left untouched. Returns false if the factorization fails.
bool spd_inverse(const double* a, std::size_t n, double* inv, double* logdet);

/// Eigenvalues (ascending) of a symmetric matrix by cyclic Jacobi sweeps.
/// `a` is destroyed. Intended for desk-scale matrices.
void sym_eigenvalues_jacobi(double* a, std::size_t n, double* evals);

}  // namespace fnucb::kern
