#pragma once

// Independent reference computations used by the unit tests and the acceptance binary.
// None of these call into the library code they check.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = dist(rng);
        }
    }
    return m;
}

// Largest singular value from the symmetric eigenproblem of M^T M.
inline double norm2(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m.transpose() * m, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

// Random matrix rescaled to a prescribed 2-norm.
inline Matrix random_with_norm2(Eigen::Index n, double target, std::mt19937_64& rng) {
    Matrix m = random_matrix(n, n, rng);
    return m * (target / norm2(m));
}

// Truncated Taylor series sum_{k=0}^{terms-1} M^k / k! in long double.
inline Matrix taylor_expm(const Matrix& m, int terms = 60) {
    using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const LMatrix ml = m.cast<long double>();
    LMatrix term = LMatrix::Identity(m.rows(), m.cols());
    LMatrix sum = term;
    for (int k = 1; k < terms; ++k) {
        term = (term * ml) / static_cast<long double>(k);
        sum += term;
    }
    return sum.cast<double>();
}

// A^{-1} (e^{A tau} - I) B for nonsingular A, with e^{A tau} from the Taylor oracle.
inline Matrix zoh_closed_form(const Matrix& a_hat, const Matrix& b_hat, double tau) {
    const Matrix e = taylor_expm(a_hat * tau);
    return a_hat.fullPivLu().solve((e - Matrix::Identity(a_hat.rows(), a_hat.cols())) * b_hat);
}

// Entry bound by direct evaluation: (alpha s / r)^(r/s) * (e^(r/s) - sum_{m<r} (r/s)^m / m!), long double.
inline double entry_bound_direct(int r, double alpha, int s) {
    const long double x = static_cast<long double>(r) / s;
    long double partial = 0.0L;
    long double term = 1.0L;
    for (int m = 0; m < r; ++m) {
        partial += term;
        term *= x / (m + 1);
    }
    const long double tail = std::exp(x) - partial;
    return static_cast<double>(std::pow(static_cast<long double>(alpha) * s / r, x) * tail);
}

// All-pairs shortest hop counts by Floyd-Warshall; -1 when unreachable.
inline Eigen::MatrixXi floyd_hops(const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& adj) {
    const Eigen::Index n = adj.rows();
    const int inf = std::numeric_limits<int>::max() / 4;
    Eigen::MatrixXi d = Eigen::MatrixXi::Constant(n, n, inf);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) {
                d(i, j) = 0;
            } else if (adj(i, j)) {
                d(i, j) = 1;
            }
        }
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
            }
        }
    }
    return d.unaryExpr([inf](int v) { return v >= inf ? -1 : v; });
}

// Keeps |i - j| <= s by explicit double loop.
inline Matrix band_by_loops(const Matrix& m, int s) {
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (std::abs(static_cast<long>(i - j)) <= s) {
                out(i, j) = m(i, j);
            }
        }
    }
    return out;
}

// Minimizes a scalar function on a uniform grid.
template <class F>
std::pair<double, double> grid_minimum(F&& f, double lo, double hi, double step) {
    double best_x = lo;
    double best_f = f(lo);
    const long count = std::lround((hi - lo) / step);
    for (long i = 1; i <= count; ++i) {
        const double x = lo + static_cast<double>(i) * step;
        const double v = f(x);
        if (v < best_f) {
            best_f = v;
            best_x = x;
        }
    }
    return {best_x, best_f};
}

// Impulse response of x = Phi_x (I + Delta)^{-1} delta by convolution:
//   e[1] = delta, e[k] = -sum_{j>=1} Delta[j] e[k-j];  x[k] = sum_{t>=1} Phi_x[t] e[k-t+1].
// phi_x[t-1] and delta_taps[j-1] hold the 1-based components. Returns x[1..steps].
inline std::vector<Vector> convolution_response(const std::vector<Matrix>& phi_x, const std::vector<Matrix>& delta_taps,
                                                const Vector& impulse, int steps) {
    std::vector<Vector> e(static_cast<std::size_t>(steps + 1), Vector::Zero(impulse.size()));
    e[1] = impulse;
    for (int k = 2; k <= steps; ++k) {
        for (std::size_t j = 1; j <= delta_taps.size() && static_cast<int>(j) < k; ++j) {
            e[static_cast<std::size_t>(k)] -= delta_taps[j - 1] * e[static_cast<std::size_t>(k) - j];
        }
    }
    std::vector<Vector> x(static_cast<std::size_t>(steps + 1), Vector::Zero(phi_x.front().rows()));
    for (int k = 1; k <= steps; ++k) {
        for (std::size_t t = 1; t <= phi_x.size() && static_cast<int>(t) <= k; ++t) {
            x[static_cast<std::size_t>(k)] += phi_x[t - 1] * e[static_cast<std::size_t>(k) - t + 1];
        }
    }
    return x;
}

// Largest eigenvalue modulus by the dense nonsymmetric eigensolver.
inline double dense_spectral_radius(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<Matrix> eig(m, false);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

// Random matrix with induced infinity-norm exactly `budget` (rows rescaled to a common abs-sum).
inline Matrix random_inf_ball(Eigen::Index rows, Eigen::Index cols, double budget, std::mt19937_64& rng) {
    Matrix m = random_matrix(rows, cols, rng);
    std::uniform_real_distribution<double> shrink(0.0, 1.0);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double sum = m.row(i).cwiseAbs().sum();
        if (sum > 0.0) {
            m.row(i) *= budget * (i == 0 ? 1.0 : shrink(rng)) / sum;
        }
    }
    return m;
}

}  // namespace oracle
