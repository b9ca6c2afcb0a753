#pragma once

#include <Eigen/Dense>

namespace toxattn {

/// Numerically stabilized softmax. Accepts any dense Eigen vector
/// expression and returns its plain evaluated type. Input must be
/// non-empty with finite entries.
template <typename Derived>
typename Derived::PlainObject softmax(const Eigen::MatrixBase<Derived>& x) {
  typename Derived::PlainObject v = x.derived();
  const typename Derived::Scalar shift = v.maxCoeff();
  v = (v.array() - shift).exp().matrix();
  v /= v.sum();
  return v;
}

/// Uniform probability vector of length n (n >= 1).
inline Eigen::VectorXd uniform_distribution(Eigen::Index n) {
  return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

}  // namespace toxattn
