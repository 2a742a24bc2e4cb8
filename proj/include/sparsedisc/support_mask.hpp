#pragma once

#include "sparsedisc/types.hpp"

namespace sparsedisc {

// Boolean sparsity pattern of an n x m matrix.
class SupportMask {
public:
    using Bits = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

    SupportMask() = default;
    SupportMask(Index rows, Index cols, bool value = false);
    explicit SupportMask(Bits bits) : bits_(std::move(bits)) {}

    static SupportMask identity(Index n);
    static SupportMask full(Index rows, Index cols) { return SupportMask(rows, cols, true); }

    [[nodiscard]] Index rows() const { return bits_.rows(); }
    [[nodiscard]] Index cols() const { return bits_.cols(); }
    [[nodiscard]] bool operator()(Index i, Index j) const { return bits_(i, j); }
    void set(Index i, Index j, bool value = true) { bits_(i, j) = value; }

    [[nodiscard]] Index count() const { return bits_.count(); }
    [[nodiscard]] bool subset_of(const SupportMask& other) const;
    [[nodiscard]] SupportMask transpose() const { return SupportMask(Bits(bits_.transpose())); }

    // Boolean matrix product: (P*Q)(i,j) = OR_k P(i,k) AND Q(k,j).
    [[nodiscard]] SupportMask product(const SupportMask& rhs) const;

    // Hadamard product with a real matrix of the same shape.
    [[nodiscard]] Matrix apply(const Matrix& m) const;

    [[nodiscard]] const Bits& bits() const { return bits_; }

    SupportMask& operator|=(const SupportMask& rhs);
    friend SupportMask operator|(SupportMask lhs, const SupportMask& rhs) { return lhs |= rhs; }
    friend bool operator==(const SupportMask& a, const SupportMask& b) {
        return a.rows() == b.rows() && a.cols() == b.cols() && (a.bits_ == b.bits_).all();
    }

private:
    Bits bits_;
};

}  // namespace sparsedisc
