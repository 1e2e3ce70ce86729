#include <string>

#include "srtg/tensor/ops.hpp"

namespace srtg::tensor {
namespace {

void require_matrix(const char* op, const char* name, Var v) {
  if (v.shape().size() != 2) {
    throw ShapeError(std::string(op) + ": " + name + " must be a matrix, got " +
                     shape_string(v.shape()));
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  require_matrix("matmul", "lhs", a);
  require_matrix("matmul", "rhs", b);
  const std::size_t m = a.dim(0);
  const std::size_t k = a.dim(1);
  const std::size_t n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimension mismatch (lhs dim 1 = " + std::to_string(k) +
                     ", rhs dim 0 = " + std::to_string(b.dim(0)) + ")");
  }
  auto av = a.value();
  auto bv = b.value();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = bv.data() + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return a.graph().record(
      "matmul", {m, n}, std::move(out), {a, b},
      [a, b, m, k, n](Graph& g, std::span<const double> go, std::span<const double>) {
        auto av = g.value(a);
        auto bv = g.value(b);
        if (g.needs_grad(a)) {
          auto ga = g.grad(a);  // go·bᵀ
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              double s = 0.0;
              for (std::size_t j = 0; j < n; ++j) s += go[i * n + j] * bv[p * n + j];
              ga[i * k + p] += s;
            }
          }
        }
        if (g.needs_grad(b)) {
          auto gb = g.grad(b);  // aᵀ·go
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              const double aip = av[i * k + p];
              for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * go[i * n + j];
            }
          }
        }
      });
}

Var matmul_transposed(Var a, Var b) {
  require_matrix("matmul_transposed", "lhs", a);
  require_matrix("matmul_transposed", "rhs", b);
  const std::size_t m = a.dim(0);
  const std::size_t k = a.dim(1);
  const std::size_t n = b.dim(0);
  if (b.dim(1) != k) {
    throw ShapeError("matmul_transposed: inner dimension mismatch (lhs dim 1 = " +
                     std::to_string(k) + ", rhs dim 1 = " + std::to_string(b.dim(1)) + ")");
  }
  auto av = a.value();
  auto bv = b.value();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += av[i * k + p] * bv[j * k + p];
      out[i * n + j] = s;
    }
  }
  return a.graph().record(
      "matmul_transposed", {m, n}, std::move(out), {a, b},
      [a, b, m, k, n](Graph& g, std::span<const double> go, std::span<const double>) {
        auto av = g.value(a);
        auto bv = g.value(b);
        if (g.needs_grad(a)) {
          auto ga = g.grad(a);  // go·b
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              const double gij = go[i * n + j];
              for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gij * bv[j * k + p];
            }
          }
        }
        if (g.needs_grad(b)) {
          auto gb = g.grad(b);  // goᵀ·a
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              const double gij = go[i * n + j];
              for (std::size_t p = 0; p < k; ++p) gb[j * k + p] += gij * av[i * k + p];
            }
          }
        }
      });
}

Var concat_columns(Var a, Var b) {
  require_matrix("concat_columns", "lhs", a);
  require_matrix("concat_columns", "rhs", b);
  const std::size_t rows = a.dim(0);
  if (b.dim(0) != rows) {
    throw ShapeError("concat_columns: row count mismatch (" + std::to_string(rows) + " vs " +
                     std::to_string(b.dim(0)) + ")");
  }
  const std::size_t ca = a.dim(1);
  const std::size_t cb = b.dim(1);
  auto av = a.value();
  auto bv = b.value();
  std::vector<double> out(rows * (ca + cb));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < ca; ++j) out[r * (ca + cb) + j] = av[r * ca + j];
    for (std::size_t j = 0; j < cb; ++j) out[r * (ca + cb) + ca + j] = bv[r * cb + j];
  }
  return a.graph().record(
      "concat_columns", {rows, ca + cb}, std::move(out), {a, b},
      [a, b, rows, ca, cb](Graph& g, std::span<const double> go, std::span<const double>) {
        if (g.needs_grad(a)) {
          auto ga = g.grad(a);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < ca; ++j) ga[r * ca + j] += go[r * (ca + cb) + j];
          }
        }
        if (g.needs_grad(b)) {
          auto gb = g.grad(b);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < cb; ++j) gb[r * cb + j] += go[r * (ca + cb) + ca + j];
          }
        }
      });
}

}  // namespace srtg::tensor
