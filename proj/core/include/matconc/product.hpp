#pragma once

// Product measures mu_1 x ... x mu_n with the coordinate-resampling process:
// generator, subset-sum semigroup, closed-form Gamma and Efron-Stein.

#include <vector>

#include "matconc/dirichlet.hpp"

namespace matconc {

/// Largest n accepted by the exponential subset-sum routines.
inline constexpr int kMaxProductFactors = 12;

class ProductSpace {
 public:
  explicit ProductSpace(std::vector<FiniteMeasure> factors);

  int n() const { return static_cast<int>(factors_.size()); }
  const FiniteMeasure& factor(int i) const { return factors_.at(static_cast<std::size_t>(i)); }
  const std::vector<FiniteMeasure>& factors() const { return factors_; }
  /// Joint states enumerated lexicographically, first coordinate most significant.
  int joint_size() const { return joint_size_; }
  std::vector<int> decode(int state) const;
  int encode(const std::vector<int>& coords) const;
  /// Joint state with coordinate i replaced by z.
  int replace(int state, int i, int z) const;

  StateSpace joint_space() const;
  FiniteMeasure joint_measure() const;

 private:
  std::vector<FiniteMeasure> factors_;
  std::vector<int> strides_;
  int joint_size_ = 1;
};

/// Q(x,y) = mu_i(y_i) when x, y differ exactly in coordinate i.
Generator product_generator(const ProductSpace& space);

/// P_t f(x) = sum_I (1-e^{-t})^{|I|} e^{-t(n-|I|)} int f(x_{I^c}, z_I) prod_{i in I} dmu_i(z_i).
/// Throws ValidationError for n > kMaxProductFactors or t < 0.
HermitianMatrix product_semigroup_closed_form(const ProductSpace& space, double t,
                                              const MatrixFunction& f, int x);
MatrixFunction product_semigroup_closed_form(const ProductSpace& space, double t,
                                             const MatrixFunction& f);

/// Gamma(f)(x) = 1/2 sum_i int (f(x) - f(x with x_i = z))^2 dmu_i(z).
HermitianMatrix product_gamma(const ProductSpace& space, const MatrixFunction& f, int x);
MatrixFunction product_gamma(const ProductSpace& space, const MatrixFunction& f);

/// sum_i int Var_{mu_i}(f) dmu: the coordinatewise variance decomposition of E(f).
HermitianMatrix efron_stein_sum(const ProductSpace& space, const MatrixFunction& f);

/// Var(f) <= E(f) with constant 1. Witness carries the norm of the
/// discrepancy between E(f) and the coordinatewise decomposition.
CheckResult efron_stein_check(const ProductSpace& space, const MatrixFunction& f,
                              Tolerance tol = {});

/// v_f = sup_x || sum_i int (f(x) - f(x with x_i = z))^2 dmu_i(z) || = 2 sup ||Gamma(f)||.
double product_vf(const ProductSpace& space, const MatrixFunction& f);

/// n factors with sizes in [2, max_factor_size] and random positive weights.
ProductSpace random_product_space(int n, int max_factor_size, Rng& rng);

}  // namespace matconc
