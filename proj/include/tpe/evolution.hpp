#pragma once

#include <cmath>
#include <vector>

#include "tpe/model.hpp"

namespace tpe {

// Max absolute row sum; bounds the spectral radius of L.
inline double gershgorin_bound(const SparseMatrix& m) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(m.rows());
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) rows(it.row()) += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

// Classical RK4 on dv/dt = L v. The step h must satisfy h * |L| < 2.78 for stability.
inline void rk4_step(const SparseMatrix& l, ComplexVector& v, double h) {
  const ComplexVector k1 = l * v;
  const ComplexVector k2 = l * (v + 0.5 * h * k1);
  const ComplexVector k3 = l * (v + 0.5 * h * k2);
  const ComplexVector k4 = l * (v + h * k3);
  v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Largest step h <= dt_max that divides interval evenly and keeps h |L| below 1.
inline int substeps_for(const SparseMatrix& l, double interval, double dt_max) {
  const double bound = gershgorin_bound(l);
  double h = dt_max;
  if (bound > 0.0) h = std::min(h, 1.0 / bound);
  return std::max(1, static_cast<int>(std::ceil(interval / h - 1e-12)));
}

// Master-equation stepping of vec(X) on a uniform grid of `count` points spaced by dt_sample,
// calling visit(k, v) at each grid point (k = 0 is the initial value).
template <class Visit>
void evolve_on_grid(const Liouvillian& liou, ComplexVector v, double dt_sample, std::size_t count,
                    double dt_max, Visit&& visit) {
  if (v.size() != liou.matrix().rows()) fail(ErrorClass::dimension_mismatch, "evolve: vector size mismatch");
  if (!(dt_sample > 0.0) || !(dt_max > 0.0)) fail(ErrorClass::invalid_parameter, "evolve: steps must be positive");
  const int sub = substeps_for(liou.matrix(), dt_sample, dt_max);
  const double h = dt_sample / sub;
  for (std::size_t k = 0; k < count; ++k) {
    if (k > 0)
      for (int s = 0; s < sub; ++s) rk4_step(liou.matrix(), v, h);
    visit(k, static_cast<const ComplexVector&>(v));
  }
}

struct ExpectationSeries {
  std::vector<double> time;
  std::vector<std::vector<double>> values;  // values[op][k]
};

// Real parts of Tr[op rho(t)] on a uniform grid, starting from rho0.
inline ExpectationSeries evolve_expectations(const Liouvillian& liou, const DensityOperator& rho0,
                                             const std::vector<Operator>& ops, double dt_sample,
                                             std::size_t count, double dt_max = 0.05) {
  ExpectationSeries out;
  out.values.assign(ops.size(), {});
  const Index d = liou.dim();
  evolve_on_grid(liou, vectorize(rho0.entries()), dt_sample, count, dt_max,
                 [&](std::size_t k, const ComplexVector& v) {
                   out.time.push_back(static_cast<double>(k) * dt_sample);
                   const DensityOperator rho(unvectorize(v, d));
                   for (std::size_t j = 0; j < ops.size(); ++j)
                     out.values[j].push_back(expectation(ops[j], rho).real());
                 });
  return out;
}

}  // namespace tpe
