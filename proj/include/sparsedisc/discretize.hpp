#pragma once

#include "sparsedisc/support_mask.hpp"
#include "sparsedisc/types.hpp"

namespace sparsedisc {

// x'(t) = A x + B1 w + B2 u
struct ContinuousPlant {
    Matrix a_hat;
    Matrix b1_hat;
    Matrix b2_hat;

    [[nodiscard]] Index states() const { return a_hat.rows(); }
    void validate() const;
};

// x[k+1] = A x[k] + B1 w[k] + B2 u[k],  z[k] = C1 x[k] + D11 w[k] + D12 u[k]
struct DiscretePlant {
    Matrix a;
    Matrix b1;
    Matrix b2;
    Matrix c1;
    Matrix d11;
    Matrix d12;
    double tau = 0.0;

    [[nodiscard]] Index states() const { return a.rows(); }
    [[nodiscard]] Index inputs() const { return b2.cols(); }
    [[nodiscard]] Index disturbances() const { return b1.cols(); }
    void validate() const;
};

enum class DiscretizationMethod { ZohExact, Truncated, Projected, Tustin };

// Bit (i,j) is set iff |M_ij| > zero_tol.
[[nodiscard]] SupportMask support(const Matrix& m, double zero_tol = 0.0);

// supp(|A| + I): the pattern of A with the diagonal always kept.
[[nodiscard]] SupportMask projection_mask_a(const Matrix& a_hat, double zero_tol = 0.0);

// supp((|A| + I) |B|) evaluated structurally (boolean OR/AND).
[[nodiscard]] SupportMask projection_mask_b(const Matrix& a_hat, const Matrix& b_hat, double zero_tol = 0.0);

// I + A tau
[[nodiscard]] Matrix truncate_first_order(const Matrix& a_hat, double tau);

// supp(|A| + I) o e^{A tau}
[[nodiscard]] Matrix project_a(const Matrix& a_hat, double tau, double zero_tol = 0.0);

// supp((|A| + I)|B|) o (int_0^tau e^{A s} ds B)
[[nodiscard]] Matrix project_b(const Matrix& a_hat, const Matrix& b_hat, double tau, double zero_tol = 0.0);

struct TustinPair {
    Matrix a;
    Matrix b;
};

// Bilinear transform. Throws SingularPencil when I - (tau/2) A has a pivot below 1e-12.
[[nodiscard]] TustinPair tustin(const Matrix& a_hat, const Matrix& b_hat, double tau);

// Discretizes (A, B1, B2) with the chosen method and attaches the output map.
// Truncated uses B_i = tau * B_i_hat. Projected masks A and each B_i.
[[nodiscard]] DiscretePlant discretize_all(const ContinuousPlant& plant, const Matrix& c1, const Matrix& d11,
                                           const Matrix& d12, double tau, DiscretizationMethod method,
                                           double zero_tol = 0.0);

}  // namespace sparsedisc
