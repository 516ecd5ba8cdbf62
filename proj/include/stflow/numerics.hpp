#pragma once

#include <functional>
#include <vector>

namespace stflow {

struct CGResult {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // final |r|_2 / |b|_2
};

// Preconditioned conjugate gradients for a symmetric positive definite
// operator given as a matrix-vector product. diag holds the Jacobi
// preconditioner (the operator's diagonal). Solves in place: x is the initial
// guess on entry and the solution on exit.
CGResult cg_solve(const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply,
                  const std::vector<double>& b, std::vector<double>& x,
                  const std::vector<double>& diag, double rel_tol, int max_iter);

double max_abs(const std::vector<double>& v);

}  // namespace stflow
