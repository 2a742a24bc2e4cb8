#include "sparsedisc/fir.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sparsedisc {

FirTransfer::FirTransfer(std::vector<Matrix> taps) : taps_(std::move(taps)) {
    if (taps_.empty()) {
        throw InvalidInput("FirTransfer: horizon must be at least 1");
    }
    for (const auto& tap : taps_) {
        if (tap.rows() != taps_.front().rows() || tap.cols() != taps_.front().cols()) {
            throw InvalidInput("FirTransfer: all taps must share one shape");
        }
        require_finite(tap, "FirTransfer");
    }
}

FirTransfer FirTransfer::zeros(Index rows, Index cols, Index horizon) {
    if (horizon < 1) {
        throw InvalidInput("FirTransfer::zeros: horizon must be at least 1");
    }
    return FirTransfer(std::vector<Matrix>(static_cast<std::size_t>(horizon), Matrix::Zero(rows, cols)));
}

FirTransfer FirTransfer::transpose() const {
    std::vector<Matrix> out;
    out.reserve(taps_.size());
    for (const auto& tap : taps_) {
        out.emplace_back(tap.transpose());
    }
    return FirTransfer(std::move(out));
}

FirTransfer FirTransfer::scaled(double factor) const {
    std::vector<Matrix> out;
    out.reserve(taps_.size());
    for (const auto& tap : taps_) {
        out.emplace_back(factor * tap);
    }
    return FirTransfer(std::move(out));
}

FirTransfer FirTransfer::row(Index i) const {
    std::vector<Matrix> out;
    for (const auto& tap : taps_) {
        out.emplace_back(tap.row(i));
    }
    return FirTransfer(std::move(out));
}

FirTransfer FirTransfer::col(Index j) const {
    std::vector<Matrix> out;
    for (const auto& tap : taps_) {
        out.emplace_back(tap.col(j));
    }
    return FirTransfer(std::move(out));
}

Eigen::MatrixXcd FirTransfer::frequency_response(double theta) const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rows(), cols());
    for (std::size_t t = 0; t < taps_.size(); ++t) {
        const double phase = -static_cast<double>(t + 1) * theta;
        out += std::complex<double>(std::cos(phase), std::sin(phase)) * taps_[t].cast<std::complex<double>>();
    }
    return out;
}

FirTransfer stack(const FirTransfer& top, const FirTransfer& bottom) {
    if (top.horizon() != bottom.horizon() || top.cols() != bottom.cols()) {
        throw InvalidInput("stack: horizons and column counts must agree");
    }
    std::vector<Matrix> out;
    for (Index k = 1; k <= top.horizon(); ++k) {
        Matrix tap(top.rows() + bottom.rows(), top.cols());
        tap << top[k], bottom[k];
        out.push_back(std::move(tap));
    }
    return FirTransfer(std::move(out));
}

double l1_norm(const FirTransfer& g) {
    if (g.rows() == 0 || g.cols() == 0) {
        return 0.0;
    }
    Vector row_sums = Vector::Zero(g.rows());
    for (const auto& tap : g.taps()) {
        row_sums += tap.cwiseAbs().rowwise().sum();
    }
    return row_sums.maxCoeff();
}

double e1_norm(const FirTransfer& g) {
    if (g.rows() == 0 || g.cols() == 0) {
        return 0.0;
    }
    Eigen::RowVectorXd col_sums = Eigen::RowVectorXd::Zero(g.cols());
    for (const auto& tap : g.taps()) {
        col_sums += tap.cwiseAbs().colwise().sum();
    }
    return col_sums.maxCoeff();
}

double h2_norm(const FirTransfer& g) {
    double sum = 0.0;
    for (const auto& tap : g.taps()) {
        sum += tap.squaredNorm();
    }
    return std::sqrt(sum);
}

double hinf_norm_sampled(const FirTransfer& g, int grid_points) {
    if (grid_points < 64) {
        throw InvalidInput("hinf_norm_sampled: grid_points must be at least 64");
    }
    if (g.rows() == 0 || g.cols() == 0) {
        return 0.0;
    }
    double best = 0.0;
    for (int m = 0; m < grid_points; ++m) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(grid_points);
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(g.frequency_response(theta));
        best = std::max(best, svd.singularValues()(0));
    }
    return best;
}

}  // namespace sparsedisc
