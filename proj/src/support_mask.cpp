#include "sparsedisc/support_mask.hpp"

namespace sparsedisc {

SupportMask::SupportMask(Index rows, Index cols, bool value) : bits_(Bits::Constant(rows, cols, value)) {}

SupportMask SupportMask::identity(Index n) {
    SupportMask mask(n, n, false);
    for (Index i = 0; i < n; ++i) {
        mask.set(i, i);
    }
    return mask;
}

bool SupportMask::subset_of(const SupportMask& other) const {
    if (rows() != other.rows() || cols() != other.cols()) {
        throw InvalidInput("SupportMask::subset_of: shape mismatch");
    }
    return (!bits_ || other.bits_).all();
}

SupportMask SupportMask::product(const SupportMask& rhs) const {
    if (cols() != rhs.rows()) {
        throw InvalidInput("SupportMask::product: inner dimensions differ");
    }
    SupportMask out(rows(), rhs.cols(), false);
    for (Index j = 0; j < rhs.cols(); ++j) {
        for (Index k = 0; k < cols(); ++k) {
            if (!rhs.bits_(k, j)) {
                continue;
            }
            out.bits_.col(j) = out.bits_.col(j) || bits_.col(k);
        }
    }
    return out;
}

Matrix SupportMask::apply(const Matrix& m) const {
    if (m.rows() != rows() || m.cols() != cols()) {
        throw InvalidInput("SupportMask::apply: shape mismatch");
    }
    return bits_.select(m, Matrix::Zero(m.rows(), m.cols()));
}

SupportMask& SupportMask::operator|=(const SupportMask& rhs) {
    if (rows() != rhs.rows() || cols() != rhs.cols()) {
        throw InvalidInput("SupportMask::operator|: shape mismatch");
    }
    bits_ = bits_ || rhs.bits_;
    return *this;
}

}  // namespace sparsedisc
