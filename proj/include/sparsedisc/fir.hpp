#pragma once

#include <complex>
#include <vector>

#include "sparsedisc/types.hpp"

namespace sparsedisc {

// Strictly proper FIR transfer matrix G(z) = sum_{k=1}^{T} G[k] z^{-k}.
// taps()[t] holds G[t+1]; every tap has the same shape. Zero-row or zero-column taps are allowed.
class FirTransfer {
public:
    FirTransfer() = default;
    explicit FirTransfer(std::vector<Matrix> taps);
    static FirTransfer zeros(Index rows, Index cols, Index horizon);

    [[nodiscard]] Index horizon() const { return static_cast<Index>(taps_.size()); }
    [[nodiscard]] Index rows() const { return taps_.empty() ? 0 : taps_.front().rows(); }
    [[nodiscard]] Index cols() const { return taps_.empty() ? 0 : taps_.front().cols(); }

    // 1-based spectral component G[k], k = 1..T.
    [[nodiscard]] const Matrix& operator[](Index k) const { return taps_.at(static_cast<std::size_t>(k - 1)); }
    [[nodiscard]] Matrix& operator[](Index k) { return taps_.at(static_cast<std::size_t>(k - 1)); }

    [[nodiscard]] const std::vector<Matrix>& taps() const { return taps_; }

    [[nodiscard]] FirTransfer transpose() const;
    [[nodiscard]] FirTransfer scaled(double factor) const;
    // Sub-transfer made of one row of every tap.
    [[nodiscard]] FirTransfer row(Index i) const;
    [[nodiscard]] FirTransfer col(Index j) const;

    // sum_k G[k] e^{-i k theta}
    [[nodiscard]] Eigen::MatrixXcd frequency_response(double theta) const;

private:
    std::vector<Matrix> taps_;
};

// [top; bottom] stacked tap by tap. Horizons and column counts must agree.
[[nodiscard]] FirTransfer stack(const FirTransfer& top, const FirTransfer& bottom);

// Induced l_inf -> l_inf norm: max_i sum_j sum_k |G_ij[k]|.
[[nodiscard]] double l1_norm(const FirTransfer& g);

// l1_norm of the transpose: max_j sum_i sum_k |G_ij[k]|.
[[nodiscard]] double e1_norm(const FirTransfer& g);

// Frobenius norm of the impulse response.
[[nodiscard]] double h2_norm(const FirTransfer& g);

// max over theta_m = 2 pi m / grid_points of sigma_max(G(e^{i theta_m})).
// A lower estimate of the H-infinity norm; nested grids give nondecreasing values.
[[nodiscard]] double hinf_norm_sampled(const FirTransfer& g, int grid_points);

}  // namespace sparsedisc
