#pragma once

#include "wlg/types.hpp"

namespace wlg {

// diag(-1, 1, ..., 1) of size n+4. Throws std::domain_error for n < 1.
rmat minkowski_form(int n);

// True iff ||X^t I + I X||_inf <= tol.
bool is_in_algebra(const cmat& X, const rmat& form, double tol = 1e-10);

enum class GroupMembership { complex_group, real_plus, real_other, none };

// complex_group: M^t I M = I and det M = 1 (to tol).
// real_plus: additionally real with M(0,0) >= 1 (identity component).
// real_other: real group element outside the identity component.
GroupMembership is_in_group(const cmat& M, const rmat& form, double tol = 1e-10);

const char* to_string(GroupMembership m);

struct CartanSplit {
  cmat k_part;  // block-diagonal 4x4 (+) nxn
  cmat p_part;  // off-diagonal blocks
};

// Splits an algebra element along the symmetric-space decomposition.
// Throws std::domain_error when X fails is_in_algebra.
CartanSplit cartan_split(const cmat& X, int n, double tol = 1e-8);

// Scaling-and-squaring matrix exponential.
cmat matrix_exp(const cmat& X);

// Principal matrix square root (Schur based).
cmat matrix_sqrt(const cmat& X);

// Random element of so(1, n+3, C), entries O(scale). Even parity -> block
// diagonal, odd -> off-diagonal; parity < 0 fills both.
cmat random_algebra_element(int n, double scale, int parity, std::uint64_t seed);

}  // namespace wlg
