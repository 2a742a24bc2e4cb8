#pragma once

#include <deque>
#include <vector>

#include "sparsedisc/discretize.hpp"
#include "sparsedisc/fir.hpp"

namespace sparsedisc {

// State-feedback realization of K = Phi_u Phi_x^{-1}:
//   w_hat[k] = x[k] - x_hat[k]
//   u[k]     = sum_{t=1}^{T} Phi_u[t] w_hat[k-t+1]
//   x_hat[k+1] = sum_{t=2}^{T} Phi_x[t] w_hat[k-t+2]
class SlsController {
public:
    SlsController(FirTransfer phi_x, FirTransfer phi_u);

    // One control step from the measured state. Advances the internal buffer.
    [[nodiscard]] Vector step(const Vector& x);
    void reset();

    [[nodiscard]] Index states() const { return phi_x_.rows(); }
    [[nodiscard]] Index inputs() const { return phi_u_.rows(); }

private:
    FirTransfer phi_x_;
    FirTransfer phi_u_;
    std::deque<Vector> w_hat_;  // newest first, exactly T entries
    Vector x_hat_;
};

struct Trajectory {
    std::vector<Vector> x;  // x[0..N]
    std::vector<Vector> u;  // u[0..N-1]
    std::vector<Vector> w;  // w[0..N-1]
};

// x[0] = 0, x[k+1] = A x[k] + B1 w[k] + B2 u[k]. w may be shorter than steps (zero-padded).
[[nodiscard]] Trajectory closed_loop(const DiscretePlant& plant, SlsController controller,
                                     const std::vector<Vector>& w, Index steps);

// Unit impulse on disturbance channel `channel` at k = 0.
[[nodiscard]] std::vector<Vector> impulse(Index disturbances, Index channel);

enum class RadiusMethod { Auto, Dense, Power };

struct StabilityReport {
    bool stable = true;
    double spectral_radius = 0.0;
};

// Block companion matrix of e[k] = -sum_{j=1}^{T} Delta[j] e[k-j], size nT x nT.
[[nodiscard]] Matrix companion_matrix(const FirTransfer& delta);

// Power-iteration estimate of the spectral radius (growth rate of ||C^k v||).
[[nodiscard]] double spectral_radius_power(const Matrix& c, int iterations = 4000);

// Stable iff the companion spectral radius is below 1 - 1e-9. Auto uses dense
// eigenvalues when nT <= 400 and power iteration otherwise.
[[nodiscard]] StabilityReport check_robust_stability(const FirTransfer& delta,
                                                     RadiusMethod method = RadiusMethod::Auto);

}  // namespace sparsedisc
