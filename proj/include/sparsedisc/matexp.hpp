#pragma once

#include "sparsedisc/types.hpp"

namespace sparsedisc {

enum class NormKind { One, Two, Infinity, Max };

// Matrix exponential by scaling and squaring with a diagonal Pade approximant.
//
// The argument is scaled by 2^-s so that ||M/2^s||_1 <= 1/2, the Pade degree q is the
// smallest whose backward-error bound 2^(3-2q) (q!)^2 / ((2q)! (2q+1)!) meets
// max(accuracy * 1e-3, 2^-53), and the result is squared s times.
// accuracy must lie in (0, 1e-3].
[[nodiscard]] Matrix expm(const Matrix& m, double accuracy = 1e-12);

// One: max column abs-sum. Infinity: max row abs-sum. Max: max |entry|.
// Two: largest singular value. Empty matrices have norm 0.
[[nodiscard]] double matrix_norm(const Matrix& m, NormKind kind);

struct ZohPair {
    Matrix a;  // e^{A tau}
    Matrix b;  // int_0^tau e^{A s} ds * B
};

// Zero-order-hold sampling via the exponential of the augmented block [[A, B], [0, 0]] * tau.
[[nodiscard]] ZohPair zoh_pair(const Matrix& a_hat, const Matrix& b_hat, double tau);

}  // namespace sparsedisc
