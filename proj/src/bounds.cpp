#include "sparsedisc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sparsedisc/matexp.hpp"

namespace sparsedisc {

Index bandwidth(const Matrix& m, double zero_tol) {
    if (m.rows() != m.cols()) {
        throw InvalidInput("bandwidth: matrix must be square");
    }
    require_finite(m, "bandwidth");
    Index s = 0;
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            if (std::abs(m(i, j)) > zero_tol) {
                s = std::max(s, std::abs(i - j));
            }
        }
    }
    return s;
}

Matrix band_extract(const Matrix& m, Index s) {
    if (m.rows() != m.cols()) {
        throw InvalidInput("band_extract: matrix must be square");
    }
    if (s < 0 || (m.rows() > 0 && s > m.rows() - 1)) {
        throw InvalidInput("band_extract: s must lie in [0, n-1]");
    }
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    for (Index j = 0; j < m.cols(); ++j) {
        const Index lo = std::max<Index>(0, j - s);
        const Index hi = std::min<Index>(m.rows() - 1, j + s);
        out.col(j).segment(lo, hi - lo + 1) = m.col(j).segment(lo, hi - lo + 1);
    }
    return out;
}

BandedProfile banded_profile(const Matrix& a_hat, double tau, double zero_tol) {
    return {bandwidth(a_hat, zero_tol), matrix_norm(a_hat * tau, NormKind::Max), a_hat.rows()};
}

double truncation_bound(double norm2_a_hat, double tau) {
    if (!(norm2_a_hat >= 0.0) || !(tau > 0.0) || !std::isfinite(norm2_a_hat) || !std::isfinite(tau)) {
        throw InvalidInput("truncation_bound: need ||A||_2 >= 0 and tau > 0");
    }
    const double scaled = tau * norm2_a_hat;
    if (scaled >= 3.0) {
        throw BoundInapplicable("truncation_bound: tau * ||A||_2 >= 3, bound undefined");
    }
    return 0.5 * scaled * scaled / (1.0 - scaled / 3.0);
}

namespace {

// B(r) for r > s >= 1, alpha > 0.
double entry_bound_at_distance(std::size_t r, double alpha, std::size_t s) {
    const double x = static_cast<double>(r) / static_cast<double>(s);
    const double log_power = x * std::log(alpha * static_cast<double>(s) / static_cast<double>(r));

    // tail = sum_{m >= r} x^m / m!, written as first * sum_t prod (x / (m+1)).
    // x < r + 1 so the ratio is below one from the first term on.
    const double log_first = static_cast<double>(r) * std::log(x) - std::lgamma(static_cast<double>(r) + 1.0);
    double term = 1.0;
    double sum  = 1.0;
    for (std::size_t m = r;; ++m) {
        term *= x / static_cast<double>(m + 1);
        sum += term;
        if (term < 1e-18 * sum) {
            break;
        }
    }
    return std::exp(log_power + log_first + std::log(sum));
}

}  // namespace

double iserles_entry_bound(std::size_t i, std::size_t j, double alpha, std::size_t s) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw InvalidInput("iserles_entry_bound: alpha must be finite and nonnegative");
    }
    if (s == 0) {
        throw DomainError("iserles_entry_bound: bandwidth s must be at least 1");
    }
    const std::size_t r = i > j ? i - j : j - i;
    if (r <= s) {
        throw DomainError("iserles_entry_bound: |i - j| must exceed the bandwidth");
    }
    if (alpha == 0.0) {
        return 0.0;
    }
    return entry_bound_at_distance(r, alpha, s);
}

DeltaBounds delta_norm_bounds(std::size_t n, double alpha, std::size_t s) {
    if (n < 2) {
        throw InvalidInput("delta_norm_bounds: n must be at least 2");
    }
    if (s == 0) {
        throw DomainError("delta_norm_bounds: bandwidth s must be at least 1");
    }
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw InvalidInput("delta_norm_bounds: alpha must be finite and nonnegative");
    }

    // Entry bounds depend on (i, j) only through |i - j|.
    std::vector<double> by_distance(n, 0.0);
    for (std::size_t r = s + 1; r < n; ++r) {
        by_distance[r] = iserles_entry_bound(0, r, alpha, s);
    }

    DeltaBounds out;
    std::vector<double> col_sums(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t r = i > j ? i - j : j - i;
            if (r > s) {
                row += by_distance[r];
                col_sums[j] += by_distance[r];
            }
        }
        out.rho += row;
        out.eps = std::max(out.eps, row);
    }
    out.nu = *std::max_element(col_sums.begin(), col_sums.end());
    return out;
}

EmpiricalDelta empirical_delta(const Matrix& a_dense, const Matrix& a_sparse) {
    if (a_dense.rows() != a_sparse.rows() || a_dense.cols() != a_sparse.cols()) {
        throw InvalidInput("empirical_delta: shape mismatch");
    }
    EmpiricalDelta out;
    out.delta = a_dense - a_sparse;
    out.norms = {matrix_norm(out.delta, NormKind::Two), matrix_norm(out.delta, NormKind::Infinity),
                 matrix_norm(out.delta, NormKind::One)};
    return out;
}

}  // namespace sparsedisc
