#pragma once

// Dense symmetric eigensolvers.
//
// Two independent algorithms: cyclic Jacobi rotations (robust, O(n^3) per
// sweep, used for small matrices and as a cross-check) and Householder
// tridiagonalization followed by implicit QL with Wilkinson-type shifts
// (used for the large dense oracle).  Both return eigenvalues in ascending
// order with the matching orthonormal eigenvectors stored as matrix columns.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavity/matrix.hpp"

namespace cavity {

struct EigenDecomposition {
  std::vector<double> values;
  Matrix vectors;  // column j belongs to values[j]
};

class EigenSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_square_symmetric(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eigensolver requires a square matrix");
}

/// Sort eigenpairs ascending. `vectors_by_row` holds eigenvector j in row j.
inline EigenDecomposition sorted_decomposition(std::vector<double> values,
                                               const Matrix& vectors_by_row) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = values[order[j]];
    auto src = vectors_by_row.row(order[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = src[i];
  }
  return out;
}

}  // namespace detail

/// Cyclic Jacobi. Converges when the off-diagonal norm drops below
/// eps * Frobenius norm.
inline EigenDecomposition jacobi_eigen(Matrix a, int max_sweeps = 100) {
  detail::require_square_symmetric(a);
  const std::size_t n = a.rows();
  Matrix v = Matrix::identity(n);  // eigenvectors stored by row

  double frob = 0.0;
  for (double x : a.data()) frob += x * x;
  frob = std::sqrt(frob);
  const double tol = std::numeric_limits<double>::epsilon() * frob;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(2.0 * off) <= tol) {
      std::vector<double> d(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
      return detail::sorted_decomposition(std::move(d), v);
    }

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;

        // A <- J^T A J, touching rows/cols p and q only.
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        auto rp = a.row(p);
        auto rq = a.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = rp[k];
          const double aqk = rq[k];
          rp[k] = c * apk - s * aqk;
          rq[k] = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;

        auto vp = v.row(p);
        auto vq = v.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k];
          const double y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
  }
  throw EigenSolverError("Jacobi eigensolver did not converge in " + std::to_string(max_sweeps) +
                         " sweeps");
}

/// Householder reduction to tridiagonal form followed by implicit QL.
inline EigenDecomposition tridiagonal_ql_eigen(Matrix z, int max_iterations_per_value = 60) {
  detail::require_square_symmetric(z);
  const std::size_t n = z.rows();
  if (n == 0) return {};
  std::vector<double> d(n, 0.0);
  std::vector<double> e(n, 0.0);

  // Householder reduction. The full symmetric leading block is kept up to date
  // so every inner loop runs along a row.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t l = i - 1;
    double h = 0.0;
    if (l > 0) {
      auto zi = z.row(i);
      double scale = 0.0;
      for (std::size_t k = 0; k < i; ++k) scale += std::abs(zi[k]);
      if (scale == 0.0) {
        e[i] = zi[l];
      } else {
        for (std::size_t k = 0; k < i; ++k) {
          zi[k] /= scale;
          h += zi[k] * zi[k];
        }
        double f = zi[l];
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        zi[l] = f - g;
        f = 0.0;
        for (std::size_t j = 0; j < i; ++j) {
          z(j, i) = zi[j] / h;
          auto zj = z.row(j);
          double acc = 0.0;
          for (std::size_t k = 0; k < i; ++k) acc += zj[k] * zi[k];
          e[j] = acc / h;
          f += e[j] * zi[j];
        }
        const double hh = f / (h + h);
        for (std::size_t j = 0; j < i; ++j) e[j] -= hh * zi[j];
        for (std::size_t j = 0; j < i; ++j) {
          const double fj = zi[j];
          const double gj = e[j];
          auto zj = z.row(j);
          for (std::size_t k = 0; k < i; ++k) zj[k] -= fj * e[k] + gj * zi[k];
        }
      }
    } else {
      e[i] = z(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;

  // Accumulate the transformations.
  std::vector<double> gvec(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] != 0.0) {
      std::fill(gvec.begin(), gvec.begin() + static_cast<std::ptrdiff_t>(i), 0.0);
      auto zi = z.row(i);
      for (std::size_t k = 0; k < i; ++k) {
        const double zik = zi[k];
        auto zk = z.row(k);
        for (std::size_t j = 0; j < i; ++j) gvec[j] += zik * zk[j];
      }
      for (std::size_t k = 0; k < i; ++k) {
        auto zk = z.row(k);
        const double zki = zk[i];
        for (std::size_t j = 0; j < i; ++j) zk[j] -= gvec[j] * zki;
      }
    }
    d[i] = z(i, i);
    z(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) z(j, i) = z(i, j) = 0.0;
  }

  // Eigenvector j of the tridiagonal problem maps to column j of z; work on the
  // transpose so each Givens rotation updates two contiguous rows.
  Matrix zt = z.transpose();

  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();

  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == max_iterations_per_value) {
          throw EigenSolverError("QL eigensolver did not converge for eigenvalue " +
                                 std::to_string(l));
        }
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        bool underflow = false;
        for (std::size_t ii = m; ii-- > l;) {
          double f = s * e[ii];
          const double b = c * e[ii];
          r = std::hypot(f, g);
          e[ii + 1] = r;
          if (r == 0.0) {
            d[ii + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[ii + 1] - p;
          r = (d[ii] - g) * s + 2.0 * c * b;
          p = s * r;
          d[ii + 1] = g + p;
          g = c * r - b;

          auto za = zt.row(ii);
          auto zb = zt.row(ii + 1);
          for (std::size_t k = 0; k < n; ++k) {
            f = zb[k];
            zb[k] = s * za[k] + c * f;
            za[k] = c * za[k] - s * f;
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  return detail::sorted_decomposition(std::move(d), zt);
}

enum class EigenMethod { Jacobi, HouseholderQL };

inline EigenDecomposition symmetric_eigen(const Matrix& a, EigenMethod method) {
  return method == EigenMethod::Jacobi ? jacobi_eigen(a) : tridiagonal_ql_eigen(a);
}

}  // namespace cavity
