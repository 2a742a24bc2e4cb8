#include "sparsedisc/matexp.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace sparsedisc {

void require_finite(const Matrix& m, std::string_view what) {
    if (!m.allFinite()) {
        throw InvalidInput(std::string(what) + ": matrix contains non-finite entries");
    }
}

namespace {

constexpr double kUnitRoundoff = 0x1p-53;
constexpr int kMaxPadeDegree = 13;

// Backward-error bound of the [q/q] Pade approximant for ||X|| <= 1/2.
double pade_error_bound(int q) {
    double log_bound = (3.0 - 2.0 * q) * std::log(2.0) + 2.0 * std::lgamma(q + 1.0) - std::lgamma(2.0 * q + 1.0) -
                       std::lgamma(2.0 * q + 2.0);
    return std::exp(log_bound);
}

int pade_degree_for(double accuracy) {
    const double target = std::max(accuracy * 1e-3, kUnitRoundoff);
    for (int q = 1; q < kMaxPadeDegree; ++q) {
        if (pade_error_bound(q) <= target) {
            return q;
        }
    }
    return kMaxPadeDegree;
}

// c_k = (2q-k)! q! / ((2q)! k! (q-k)!)
std::vector<double> pade_coefficients(int q) {
    std::vector<double> c(static_cast<std::size_t>(q) + 1);
    c[0] = 1.0;
    for (int k = 0; k < q; ++k) {
        c[k + 1] = c[k] * static_cast<double>(q - k) / static_cast<double>((2 * q - k) * (k + 1));
    }
    return c;
}

}  // namespace

Matrix expm(const Matrix& m, double accuracy) {
    if (m.rows() != m.cols()) {
        throw InvalidInput("expm: matrix must be square");
    }
    require_finite(m, "expm");
    if (!(accuracy > 0.0 && accuracy <= 1e-3)) {
        throw InvalidInput("expm: accuracy must lie in (0, 1e-3]");
    }
    const Index n = m.rows();
    if (n == 0) {
        return Matrix(0, 0);
    }

    const double norm1 = matrix_norm(m, NormKind::One);
    int squarings = 0;
    if (norm1 > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
    }
    const Matrix x = m * std::ldexp(1.0, -squarings);

    const int q = pade_degree_for(accuracy);
    const auto c = pade_coefficients(q);

    const Matrix identity = Matrix::Identity(n, n);
    Matrix numerator   = c[0] * identity;
    Matrix denominator = c[0] * identity;
    Matrix power = identity;
    for (int k = 1; k <= q; ++k) {
        power = power * x;
        numerator += c[k] * power;
        denominator += ((k % 2 == 0) ? c[k] : -c[k]) * power;
    }

    Matrix result = denominator.partialPivLu().solve(numerator);
    for (int i = 0; i < squarings; ++i) {
        result = result * result;
    }
    if (!result.allFinite()) {
        throw NumericalError("expm: result overflowed");
    }
    return result;
}

double matrix_norm(const Matrix& m, NormKind kind) {
    require_finite(m, "matrix_norm");
    if (m.size() == 0) {
        return 0.0;
    }
    switch (kind) {
        case NormKind::One:
            return m.cwiseAbs().colwise().sum().maxCoeff();
        case NormKind::Infinity:
            return m.cwiseAbs().rowwise().sum().maxCoeff();
        case NormKind::Max:
            return m.cwiseAbs().maxCoeff();
        case NormKind::Two: {
            Eigen::BDCSVD<Matrix> svd(m);
            return svd.singularValues()(0);
        }
    }
    return 0.0;
}

ZohPair zoh_pair(const Matrix& a_hat, const Matrix& b_hat, double tau) {
    if (a_hat.rows() != a_hat.cols()) {
        throw InvalidInput("zoh_pair: A must be square");
    }
    if (b_hat.rows() != a_hat.rows()) {
        throw InvalidInput("zoh_pair: B row count must match A");
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw InvalidInput("zoh_pair: tau must be positive and finite");
    }
    require_finite(a_hat, "zoh_pair A");
    require_finite(b_hat, "zoh_pair B");

    const Index n = a_hat.rows();
    const Index m = b_hat.cols();
    Matrix augmented = Matrix::Zero(n + m, n + m);
    augmented.topLeftCorner(n, n)  = a_hat * tau;
    augmented.topRightCorner(n, m) = b_hat * tau;

    const Matrix e = expm(augmented);
    return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

}  // namespace sparsedisc
