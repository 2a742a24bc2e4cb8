#include "sparsedisc/discretize.hpp"

#include <cmath>

#include "sparsedisc/matexp.hpp"

namespace sparsedisc {

namespace {

void require_square(const Matrix& a, const char* what) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw InvalidInput(std::string(what) + ": A must be square and non-empty");
    }
}

void require_tau(double tau, const char* what) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw InvalidInput(std::string(what) + ": tau must be positive and finite");
    }
}

}  // namespace

void ContinuousPlant::validate() const {
    require_square(a_hat, "ContinuousPlant");
    if (b1_hat.rows() != a_hat.rows() || b2_hat.rows() != a_hat.rows()) {
        throw InvalidInput("ContinuousPlant: B1/B2 row counts must match A");
    }
    require_finite(a_hat, "ContinuousPlant A");
    require_finite(b1_hat, "ContinuousPlant B1");
    require_finite(b2_hat, "ContinuousPlant B2");
}

void DiscretePlant::validate() const {
    require_square(a, "DiscretePlant");
    const Index n = a.rows();
    if (b1.rows() != n || b2.rows() != n) {
        throw InvalidInput("DiscretePlant: B1/B2 row counts must match A");
    }
    if (c1.cols() != n || d11.rows() != c1.rows() || d12.rows() != c1.rows()) {
        throw InvalidInput("DiscretePlant: C1/D11/D12 shapes disagree");
    }
    if (d11.cols() != b1.cols() || d12.cols() != b2.cols()) {
        throw InvalidInput("DiscretePlant: D11/D12 column counts must match B1/B2");
    }
    require_tau(tau, "DiscretePlant");
    for (const Matrix* m : {&a, &b1, &b2, &c1, &d11, &d12}) {
        require_finite(*m, "DiscretePlant");
    }
}

SupportMask support(const Matrix& m, double zero_tol) {
    require_finite(m, "support");
    if (!(zero_tol >= 0.0)) {
        throw InvalidInput("support: zero_tol must be nonnegative");
    }
    return SupportMask(SupportMask::Bits(m.cwiseAbs().array() > zero_tol));
}

SupportMask projection_mask_a(const Matrix& a_hat, double zero_tol) {
    require_square(a_hat, "projection_mask_a");
    return support(a_hat, zero_tol) | SupportMask::identity(a_hat.rows());
}

SupportMask projection_mask_b(const Matrix& a_hat, const Matrix& b_hat, double zero_tol) {
    if (b_hat.rows() != a_hat.rows()) {
        throw InvalidInput("projection_mask_b: B row count must match A");
    }
    return projection_mask_a(a_hat, zero_tol).product(support(b_hat, zero_tol));
}

Matrix truncate_first_order(const Matrix& a_hat, double tau) {
    require_square(a_hat, "truncate_first_order");
    require_tau(tau, "truncate_first_order");
    require_finite(a_hat, "truncate_first_order");
    return Matrix::Identity(a_hat.rows(), a_hat.cols()) + a_hat * tau;
}

Matrix project_a(const Matrix& a_hat, double tau, double zero_tol) {
    require_square(a_hat, "project_a");
    require_tau(tau, "project_a");
    return projection_mask_a(a_hat, zero_tol).apply(expm(a_hat * tau));
}

Matrix project_b(const Matrix& a_hat, const Matrix& b_hat, double tau, double zero_tol) {
    require_square(a_hat, "project_b");
    const SupportMask mask = projection_mask_b(a_hat, b_hat, zero_tol);
    return mask.apply(zoh_pair(a_hat, b_hat, tau).b);
}

TustinPair tustin(const Matrix& a_hat, const Matrix& b_hat, double tau) {
    require_square(a_hat, "tustin");
    require_tau(tau, "tustin");
    if (b_hat.rows() != a_hat.rows()) {
        throw InvalidInput("tustin: B row count must match A");
    }
    require_finite(a_hat, "tustin A");
    require_finite(b_hat, "tustin B");

    const Index n = a_hat.rows();
    const Matrix identity = Matrix::Identity(n, n);
    const Matrix pencil = identity - 0.5 * tau * a_hat;
    Eigen::FullPivLU<Matrix> lu(pencil);
    const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(min_pivot > 1e-12)) {
        throw SingularPencil("tustin: I - (tau/2) A is singular (smallest pivot " + std::to_string(min_pivot) + ")");
    }
    return {lu.solve(identity + 0.5 * tau * a_hat), lu.solve(0.5 * tau * b_hat)};
}

DiscretePlant discretize_all(const ContinuousPlant& plant, const Matrix& c1, const Matrix& d11, const Matrix& d12,
                             double tau, DiscretizationMethod method, double zero_tol) {
    plant.validate();
    require_tau(tau, "discretize_all");

    DiscretePlant out;
    out.c1  = c1;
    out.d11 = d11;
    out.d12 = d12;
    out.tau = tau;

    switch (method) {
        case DiscretizationMethod::ZohExact: {
            out.a  = expm(plant.a_hat * tau);
            out.b1 = zoh_pair(plant.a_hat, plant.b1_hat, tau).b;
            out.b2 = zoh_pair(plant.a_hat, plant.b2_hat, tau).b;
            break;
        }
        case DiscretizationMethod::Truncated: {
            out.a  = truncate_first_order(plant.a_hat, tau);
            out.b1 = plant.b1_hat * tau;
            out.b2 = plant.b2_hat * tau;
            break;
        }
        case DiscretizationMethod::Projected: {
            out.a  = project_a(plant.a_hat, tau, zero_tol);
            out.b1 = project_b(plant.a_hat, plant.b1_hat, tau, zero_tol);
            out.b2 = project_b(plant.a_hat, plant.b2_hat, tau, zero_tol);
            break;
        }
        case DiscretizationMethod::Tustin: {
            const auto p1 = tustin(plant.a_hat, plant.b1_hat, tau);
            out.a  = p1.a;
            out.b1 = p1.b;
            out.b2 = tustin(plant.a_hat, plant.b2_hat, tau).b;
            break;
        }
    }
    out.validate();
    return out;
}

}  // namespace sparsedisc
