#pragma once

#include <complex>
#include <initializer_list>
#include <vector>

#include "matconc/chain.hpp"

namespace mt {

using matconc::CMatrix;
using matconc::HermitianMatrix;

inline HermitianMatrix real_matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  CMatrix m(n, n);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return HermitianMatrix(m);
}

inline HermitianMatrix diag(std::initializer_list<double> values) {
  std::vector<double> v(values);
  return HermitianMatrix::diagonal(v);
}

inline double dist(const HermitianMatrix& a, const HermitianMatrix& b) { return (a - b).op_norm(); }

inline matconc::Generator two_state_generator(double a = 1.0, double b = 1.0) {
  matconc::RMatrix q(2, 2);
  q << -a, a, b, -b;
  return matconc::Generator(matconc::StateSpace::indexed(2), q);
}

inline matconc::FiniteMeasure uniform(int n) {
  return matconc::FiniteMeasure::uniform(matconc::StateSpace::indexed(n));
}

}  // namespace mt
