#pragma once

#include <gcsit/linalg.hpp>

namespace gcsit::test {

// Independent projector-distance oracle: ||X X^H - Y Y^H||_F / sqrt(2).
inline double projector_distance(const CMatrix& x, const CMatrix& y) {
  return (x * x.adjoint() - y * y.adjoint()).norm() / std::sqrt(2.0);
}

inline double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace gcsit::test
