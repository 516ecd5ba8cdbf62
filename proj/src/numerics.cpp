#include "stflow/numerics.hpp"

#include <cmath>

namespace stflow {

namespace {
double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}
}  // namespace

CGResult cg_solve(const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply,
                  const std::vector<double>& b, std::vector<double>& x,
                  const std::vector<double>& diag, double rel_tol, int max_iter) {
  const size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), Ap(n);
  apply(x, Ap);
  for (size_t k = 0; k < n; ++k) r[k] = b[k] - Ap[k];
  double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) bnorm = 1.0;
  for (size_t k = 0; k < n; ++k) z[k] = r[k] / diag[k];
  p = z;
  double rz = dot(r, z);
  CGResult res;
  for (int it = 0; it < max_iter; ++it) {
    double rnorm = std::sqrt(dot(r, r));
    res.residual = rnorm / bnorm;
    res.iterations = it;
    if (res.residual <= rel_tol) {
      res.converged = true;
      return res;
    }
    apply(p, Ap);
    double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) break;  // loss of positive definiteness: give up
    double alpha = rz / pAp;
    for (size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * Ap[k];
    }
    for (size_t k = 0; k < n; ++k) z[k] = r[k] / diag[k];
    double rz_new = dot(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  res.residual = std::sqrt(dot(r, r)) / bnorm;
  res.converged = res.residual <= rel_tol;
  return res;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace stflow
