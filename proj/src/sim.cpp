#include "sparsedisc/sim.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace sparsedisc {

SlsController::SlsController(FirTransfer phi_x, FirTransfer phi_u) : phi_x_(std::move(phi_x)), phi_u_(std::move(phi_u)) {
    if (phi_x_.rows() != phi_x_.cols() || phi_u_.cols() != phi_x_.cols() || phi_x_.horizon() != phi_u_.horizon() ||
        phi_x_.horizon() < 1) {
        throw InvalidInput("SlsController: Phi_x must be n x n, Phi_u n_u x n, same horizon");
    }
    reset();
}

void SlsController::reset() {
    w_hat_.assign(static_cast<std::size_t>(phi_x_.horizon()), Vector::Zero(states()));
    x_hat_ = Vector::Zero(states());
}

Vector SlsController::step(const Vector& x) {
    if (x.size() != states()) {
        throw InvalidInput("SlsController::step: state dimension mismatch");
    }
    w_hat_.pop_back();
    w_hat_.push_front(x - x_hat_);

    const Index horizon = phi_x_.horizon();
    Vector u = Vector::Zero(inputs());
    for (Index t = 1; t <= horizon; ++t) {
        u.noalias() += phi_u_[t] * w_hat_[static_cast<std::size_t>(t - 1)];
    }
    x_hat_.setZero();
    for (Index t = 2; t <= horizon; ++t) {
        x_hat_.noalias() += phi_x_[t] * w_hat_[static_cast<std::size_t>(t - 2)];
    }
    return u;
}

Trajectory closed_loop(const DiscretePlant& plant, SlsController controller, const std::vector<Vector>& w,
                       Index steps) {
    plant.validate();
    if (steps < 1) {
        throw InvalidInput("closed_loop: need at least one step");
    }
    if (controller.states() != plant.states() || controller.inputs() != plant.inputs()) {
        throw InvalidInput("closed_loop: controller and plant dimensions differ");
    }
    controller.reset();
    Trajectory out;
    out.x.push_back(Vector::Zero(plant.states()));
    for (Index k = 0; k < steps; ++k) {
        Vector wk = static_cast<std::size_t>(k) < w.size() ? w[static_cast<std::size_t>(k)]
                                                          : Vector::Zero(plant.disturbances());
        if (wk.size() != plant.disturbances()) {
            throw InvalidInput("closed_loop: disturbance dimension mismatch");
        }
        Vector uk = controller.step(out.x.back());
        out.x.push_back(plant.a * out.x.back() + plant.b1 * wk + plant.b2 * uk);
        out.u.push_back(std::move(uk));
        out.w.push_back(std::move(wk));
    }
    return out;
}

std::vector<Vector> impulse(Index disturbances, Index channel) {
    if (channel < 0 || channel >= disturbances) {
        throw InvalidInput("impulse: channel out of range");
    }
    return {Vector::Unit(disturbances, channel)};
}

Matrix companion_matrix(const FirTransfer& delta) {
    const Index n = delta.rows();
    if (delta.cols() != n) {
        throw InvalidInput("companion_matrix: Delta must be square");
    }
    const Index horizon = delta.horizon();
    Matrix c = Matrix::Zero(n * horizon, n * horizon);
    for (Index j = 1; j <= horizon; ++j) {
        c.block(0, (j - 1) * n, n, n) = -delta[j];
    }
    if (horizon > 1) {
        c.bottomLeftCorner(n * (horizon - 1), n * (horizon - 1)).setIdentity();
    }
    return c;
}

double spectral_radius_power(const Matrix& c, int iterations) {
    if (c.rows() != c.cols()) {
        throw InvalidInput("spectral_radius_power: matrix must be square");
    }
    if (c.rows() == 0) {
        return 0.0;
    }
    Vector v(c.rows());
    for (Index i = 0; i < v.size(); ++i) {
        v(i) = 1.0 + 0.1 * std::sin(static_cast<double>(i + 1));
    }
    v.normalize();
    const int half = iterations / 2;
    double log_growth = 0.0;
    double log_at_half = 0.0;
    for (int k = 1; k <= iterations; ++k) {
        v = c * v;
        const double norm = v.norm();
        if (norm == 0.0) {
            return 0.0;
        }
        v /= norm;
        log_growth += std::log(norm);
        if (k == half) {
            log_at_half = log_growth;
        }
    }
    return std::exp((log_growth - log_at_half) / static_cast<double>(iterations - half));
}

StabilityReport check_robust_stability(const FirTransfer& delta, RadiusMethod method) {
    const Matrix c = companion_matrix(delta);
    const bool dense = method == RadiusMethod::Dense || (method == RadiusMethod::Auto && c.rows() <= 400);
    StabilityReport out;
    if (c.rows() == 0) {
        return out;
    }
    if (dense) {
        Eigen::EigenSolver<Matrix> eig(c, false);
        if (eig.info() != Eigen::Success) {
            throw NumericalError("check_robust_stability: eigenvalue computation failed");
        }
        out.spectral_radius = eig.eigenvalues().cwiseAbs().maxCoeff();
    } else {
        out.spectral_radius = spectral_radius_power(c);
    }
    out.stable = out.spectral_radius < 1.0 - 1e-9;
    return out;
}

}  // namespace sparsedisc
