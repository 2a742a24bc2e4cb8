#pragma once

#include <cstddef>
#include <utility>

#include "sparsedisc/types.hpp"

namespace sparsedisc {

struct BandedProfile {
    Index s = 0;         // bandwidth
    double alpha = 0.0;  // ||A tau||_max
    Index n = 0;
};

// Upper bounds (or measured values) of ||Delta||_2, ||Delta||_inf and ||Delta||_1.
struct DeltaBounds {
    double rho = 0.0;
    double eps = 0.0;
    double nu  = 0.0;
};

// Smallest s with |M_ij| <= zero_tol whenever |i - j| >= s + 1.
[[nodiscard]] Index bandwidth(const Matrix& m, double zero_tol = 0.0);

// Keeps entries with |i - j| <= s.
[[nodiscard]] Matrix band_extract(const Matrix& m, Index s);

[[nodiscard]] BandedProfile banded_profile(const Matrix& a_hat, double tau, double zero_tol = 0.0);

// (||A||_2^2 tau^2 / 2) / (1 - tau ||A||_2 / 3). Throws BoundInapplicable when tau ||A||_2 >= 3.
[[nodiscard]] double truncation_bound(double norm2_a_hat, double tau);

// Entry bound for e^{A tau} at distance r = |i - j| > s from the diagonal:
//   (alpha s / r)^(r/s) * [e^(r/s) - sum_{m=0}^{r-1} (r/s)^m / m!]
// The power is evaluated in log space and the bracket as the forward series tail
// sum_{m>=r} (r/s)^m / m!, which avoids cancellation. Throws DomainError if s == 0 or r <= s.
[[nodiscard]] double iserles_entry_bound(std::size_t i, std::size_t j, double alpha, std::size_t s);

// Scalar-only bounds on the off-band remainder of an n x n exponential with bandwidth s:
// rho = sum over |i-j| > s, eps = max row sum, nu = max column sum of the entry bounds.
[[nodiscard]] DeltaBounds delta_norm_bounds(std::size_t n, double alpha, std::size_t s);

struct EmpiricalDelta {
    Matrix delta;       // A_dense - A_sparse
    DeltaBounds norms;  // (||.||_2, ||.||_inf, ||.||_1)
};

[[nodiscard]] EmpiricalDelta empirical_delta(const Matrix& a_dense, const Matrix& a_sparse);

}  // namespace sparsedisc
