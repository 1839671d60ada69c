#include "fluctuo/weighted_poisson.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fluctuo/errors.hpp"

namespace fluctuo {

void apply_weighted_laplacian(const VectorField& w, const std::vector<double>& x, std::vector<double>& out) {
  const Grid& g = w.grid;
  const double inv_h2 = 1.0 / (g.h() * g.h());
  out.assign(g.size(), 0.0);
  for (int k = 0; k < g.d; ++k) {
    const auto& wk = w[k];
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::size_t j = g.neighbor(i, k, +1);
      const double f = wk[i] * (x[j] - x[i]) * inv_h2;
      out[i] -= f;
      out[j] += f;
    }
  }
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void remove_mean(std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double& x : v) x -= m;
}

}  // namespace

PoissonResult solve_weighted_poisson(const VectorField& w, const std::vector<double>& rhs, const PoissonOptions& opt) {
  const Grid& g = w.grid;
  const std::size_t n = g.size();
  if (rhs.size() != n) throw GridMismatch("weighted Poisson: rhs size does not match grid");
  double abs_sum = 0.0, sum = 0.0;
  for (double v : rhs) {
    abs_sum += std::abs(v);
    sum += v;
  }
  if (std::abs(sum) > opt.compatibility_tol * abs_sum + 1e-300) {
    throw DomainError(fmt::format("target not mass-conserving: sum of source = {:.3e} (sum |source| = {:.3e})", sum,
                                  abs_sum));
  }
  std::vector<double> b = rhs;
  remove_mean(b);

  std::vector<double> diag(n, 0.0);
  const double inv_h2 = 1.0 / (g.h() * g.h());
  for (int k = 0; k < g.d; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double c = w[k][i] * inv_h2;
      if (!(c > 0.0)) throw SolverError("weighted Poisson: face weight must be positive");
      diag[i] += c;
      diag[g.neighbor(i, k, +1)] += c;
    }
  }

  PoissonResult res;
  res.phi.assign(n, 0.0);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  const std::size_t max_iter = opt.max_iter ? opt.max_iter : 10 * n;
  std::vector<double> r = b, z(n), p(n), Ap(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  remove_mean(z);
  p = z;
  double rz = dot(r, z);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    apply_weighted_laplacian(w, p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) break;
    const double a = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      res.phi[i] += a * p[i];
      r[i] -= a * Ap[i];
    }
    res.iterations = it;
    res.relative_residual = std::sqrt(dot(r, r)) / bnorm;
    res.history.push_back(res.relative_residual);
    if (res.relative_residual <= opt.rel_tol) {
      res.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    remove_mean(z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  remove_mean(res.phi);
  if (!res.converged && opt.throw_on_failure) {
    throw SolverError(fmt::format("weighted Poisson CG did not converge: relative residual {:.3e} after {} iterations "
                                  "(degenerate weight?)",
                                  res.relative_residual, res.iterations));
  }
  return res;
}

}  // namespace fluctuo
