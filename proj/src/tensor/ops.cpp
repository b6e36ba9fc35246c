#include "gaga/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gaga/common/error.hpp"
#include "gaga/kernels/kernels.hpp"

namespace gaga::tensor::ops {

namespace {

template <typename T>
kernels::MatView<T> grad_view(const BasicTensor<T>& t) {
  return {t.grad().data(), t.rows(), t.cols()};
}

template <typename T>
kernels::MutMatView<T> mut_grad_view(const BasicTensor<T>& t) {
  return {t.mutable_grad().data(), t.rows(), t.cols()};
}

template <typename T>
bool wants_grad(const BasicTensor<T>& t) {
  return t.requires_grad();
}

void require_2d(const Shape& s, const char* op) {
  if (s.size() != 2) throw ShapeError(std::string(op) + " needs a 2-D tensor, got " + shape_str(s));
}

enum class Binary { add, sub, mul };

template <typename T>
BasicTensor<T> binary(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b, Binary kind,
                      const char* name) {
  const bool a_scalar = a.numel() == 1 && b.numel() != 1;
  const bool b_scalar = b.numel() == 1 && a.numel() != 1;
  const bool both_single = a.numel() == 1 && b.numel() == 1;
  if (!a_scalar && !b_scalar && !both_single && a.shape() != b.shape())
    throw ShapeError(std::string(name) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const Shape shape = a_scalar ? b.shape() : a.shape();
  const std::size_t n = numel_of(shape);
  auto out = BasicTensor<T>::zeros(shape);
  auto od = out.mutable_data();
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    const T x = ad[a_scalar ? 0 : i];
    const T y = bd[b_scalar ? 0 : i];
    switch (kind) {
      case Binary::add: od[i] = x + y; break;
      case Binary::sub: od[i] = x - y; break;
      case Binary::mul: od[i] = x * y; break;
    }
  }
  tape.record(name, {a, b}, out, [a, b, out, kind, a_scalar, b_scalar, n]() mutable {
    const auto g = out.grad();
    if (wants_grad(a)) {
      auto ga = a.mutable_grad();
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = kind == Binary::mul ? static_cast<double>(g[i]) * b.data()[b_scalar ? 0 : i] : g[i];
        if (a_scalar) acc += d;
        else ga[i] += static_cast<T>(d);
      }
      if (a_scalar) ga[0] += static_cast<T>(acc);
    }
    if (wants_grad(b)) {
      auto gb = b.mutable_grad();
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double d = g[i];
        if (kind == Binary::sub) d = -d;
        if (kind == Binary::mul) d *= a.data()[a_scalar ? 0 : i];
        if (b_scalar) acc += d;
        else gb[i] += static_cast<T>(d);
      }
      if (b_scalar) gb[0] += static_cast<T>(acc);
    }
  });
  return out;
}

}  // namespace

template <typename T>
BasicTensor<T> matmul(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b, bool trans_a,
                      bool trans_b) {
  require_2d(a.shape(), "matmul");
  require_2d(b.shape(), "matmul");
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t ka = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  if (ka != kb)
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + (trans_a ? "^T" : "") + " x " +
                     shape_str(b.shape()) + (trans_b ? "^T" : ""));
  auto out = BasicTensor<T>::zeros({m, n});
  kernels::gemm(a.view(), trans_a, b.view(), trans_b, out.mut_view(), false);
  tape.record("matmul", {a, b}, out, [a, b, out, trans_a, trans_b]() mutable {
    const auto g = grad_view(out);
    if (wants_grad(a)) {
      if (!trans_a) kernels::gemm(g, false, b.view(), !trans_b, mut_grad_view(a), true);
      else kernels::gemm(b.view(), trans_b, g, true, mut_grad_view(a), true);
    }
    if (wants_grad(b)) {
      if (!trans_b) kernels::gemm(a.view(), !trans_a, g, false, mut_grad_view(b), true);
      else kernels::gemm(g, true, a.view(), trans_a, mut_grad_view(b), true);
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> add(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(tape, a, b, Binary::add, "add");
}
template <typename T>
BasicTensor<T> sub(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(tape, a, b, Binary::sub, "sub");
}
template <typename T>
BasicTensor<T> mul(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(tape, a, b, Binary::mul, "mul");
}

template <typename T>
BasicTensor<T> scale(BasicTape<T>& tape, const BasicTensor<T>& a, double s) {
  auto out = BasicTensor<T>::zeros(a.shape());
  auto od = out.mutable_data();
  for (std::size_t i = 0; i < a.numel(); ++i) od[i] = static_cast<T>(s * a.data()[i]);
  tape.record("scale", {a}, out, [a, out, s]() mutable {
    auto ga = a.mutable_grad();
    const auto g = out.grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += static_cast<T>(s * g[i]);
  });
  return out;
}

template <typename T>
BasicTensor<T> relu(BasicTape<T>& tape, const BasicTensor<T>& a) {
  auto out = BasicTensor<T>::zeros(a.shape());
  auto od = out.mutable_data();
  for (std::size_t i = 0; i < a.numel(); ++i) od[i] = a.data()[i] > T{0} ? a.data()[i] : T{0};
  tape.record("relu", {a}, out, [a, out]() mutable {
    auto ga = a.mutable_grad();
    const auto g = out.grad();
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (a.data()[i] > T{0}) ga[i] += g[i];
  });
  return out;
}

template <typename T>
BasicTensor<T> sigmoid(BasicTape<T>& tape, const BasicTensor<T>& a) {
  auto out = BasicTensor<T>::zeros(a.shape());
  auto od = out.mutable_data();
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double x = a.data()[i];
    od[i] = static_cast<T>(x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)));
  }
  tape.record("sigmoid", {a}, out, [a, out]() mutable {
    auto ga = a.mutable_grad();
    const auto g = out.grad();
    const auto y = out.data();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * y[i] * (T{1} - y[i]);
  });
  return out;
}

template <typename T>
BasicTensor<T> sum(BasicTape<T>& tape, const BasicTensor<T>& a) {
  double acc = 0.0;
  for (T v : a.data()) acc += v;
  auto out = BasicTensor<T>::scalar(static_cast<T>(acc));
  tape.record("sum", {a}, out, [a, out]() mutable {
    auto ga = a.mutable_grad();
    const T g = out.grad()[0];
    for (auto& v : ga) v += g;
  });
  return out;
}

template <typename T>
BasicTensor<T> mean(BasicTape<T>& tape, const BasicTensor<T>& a) {
  return scale(tape, sum(tape, a), 1.0 / static_cast<double>(a.numel()));
}

template <typename T>
BasicTensor<T> row_sum(BasicTape<T>& tape, const BasicTensor<T>& a) {
  require_2d(a.shape(), "row_sum");
  const std::size_t m = a.rows(), n = a.cols();
  auto out = BasicTensor<T>::zeros({m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += a.at(i, j);
    out.mutable_data()[i] = static_cast<T>(acc);
  }
  tape.record("row_sum", {a}, out, [a, out, m, n]() mutable {
    auto ga = a.mutable_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += out.grad()[i];
  });
  return out;
}

template <typename T>
BasicTensor<T> sq_norm_rows(BasicTape<T>& tape, const BasicTensor<T>& a) {
  require_2d(a.shape(), "sq_norm_rows");
  const std::size_t m = a.rows(), n = a.cols();
  auto out = BasicTensor<T>::zeros({m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += static_cast<double>(a.at(i, j)) * a.at(i, j);
    out.mutable_data()[i] = static_cast<T>(acc);
  }
  tape.record("sq_norm_rows", {a}, out, [a, out, m, n]() mutable {
    auto ga = a.mutable_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += T{2} * a.at(i, j) * out.grad()[i];
  });
  return out;
}

template <typename T>
BasicTensor<T> l2_normalize_rows(BasicTape<T>& tape, const BasicTensor<T>& a) {
  require_2d(a.shape(), "l2_normalize_rows");
  const std::size_t m = a.rows(), n = a.cols();
  auto out = BasicTensor<T>::zeros({m, n});
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += static_cast<double>(a.at(i, j)) * a.at(i, j);
    norms[i] = std::sqrt(acc);
    if (norms[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) out.mutable_data()[i * n + j] = static_cast<T>(a.at(i, j) / norms[i]);
  }
  tape.record("l2_normalize_rows", {a}, out, [a, out, m, n, norms]() mutable {
    auto ga = a.mutable_grad();
    const auto g = out.grad();
    const auto y = out.data();
    for (std::size_t i = 0; i < m; ++i) {
      if (norms[i] == 0.0) continue;
      double gy = 0.0;
      for (std::size_t j = 0; j < n; ++j) gy += static_cast<double>(g[i * n + j]) * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j)
        ga[i * n + j] += static_cast<T>((g[i * n + j] - y[i * n + j] * gy) / norms[i]);
    }
  });
  return out;
}

namespace {

template <typename T>
void softmax_row(const T* x, T* y, std::size_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, static_cast<double>(x[j]));
  double z = 0.0;
  for (std::size_t j = 0; j < n; ++j) z += std::exp(x[j] - mx);
  for (std::size_t j = 0; j < n; ++j) y[j] = static_cast<T>(std::exp(x[j] - mx) / z);
}

template <typename T>
double log_sum_exp(const T* x, std::size_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, static_cast<double>(x[j]));
  double z = 0.0;
  for (std::size_t j = 0; j < n; ++j) z += std::exp(x[j] - mx);
  return mx + std::log(z);
}

}  // namespace

template <typename T>
BasicTensor<T> softmax_rows(BasicTape<T>& tape, const BasicTensor<T>& a) {
  require_2d(a.shape(), "softmax_rows");
  const std::size_t m = a.rows(), n = a.cols();
  auto out = BasicTensor<T>::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) softmax_row(a.data().data() + i * n, out.mutable_data().data() + i * n, n);
  tape.record("softmax_rows", {a}, out, [a, out, m, n]() mutable {
    auto ga = a.mutable_grad();
    const auto g = out.grad();
    const auto y = out.data();
    for (std::size_t i = 0; i < m; ++i) {
      double gy = 0.0;
      for (std::size_t j = 0; j < n; ++j) gy += static_cast<double>(g[i * n + j]) * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += static_cast<T>(y[i * n + j] * (g[i * n + j] - gy));
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> log_softmax_rows(BasicTape<T>& tape, const BasicTensor<T>& a) {
  require_2d(a.shape(), "log_softmax_rows");
  const std::size_t m = a.rows(), n = a.cols();
  auto out = BasicTensor<T>::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const T* x = a.data().data() + i * n;
    const double lse = log_sum_exp(x, n);
    for (std::size_t j = 0; j < n; ++j) out.mutable_data()[i * n + j] = static_cast<T>(x[j] - lse);
  }
  tape.record("log_softmax_rows", {a}, out, [a, out, m, n]() mutable {
    auto ga = a.mutable_grad();
    const auto g = out.grad();
    const auto y = out.data();
    for (std::size_t i = 0; i < m; ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < n; ++j) gs += g[i * n + j];
      for (std::size_t j = 0; j < n; ++j)
        ga[i * n + j] += static_cast<T>(g[i * n + j] - std::exp(static_cast<double>(y[i * n + j])) * gs);
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> spmm(BasicTape<T>& tape, const SparseMatrix<T>& s, const BasicTensor<T>& x) {
  require_2d(x.shape(), "spmm");
  if (s.cols() != x.rows())
    throw ShapeError("spmm: sparse [" + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) + "] x " +
                     shape_str(x.shape()));
  auto out = BasicTensor<T>::zeros({s.rows(), x.cols()});
  kernels::spmm(s.view(), x.view(), out.mut_view(), false);
  tape.record("spmm", {x}, out, [s, x, out]() mutable {
    kernels::spmm(s.transposed_view(), grad_view(out), mut_grad_view(x), true);
  });
  return out;
}

template <typename T>
BasicTensor<T> gather_rows(BasicTape<T>& tape, const BasicTensor<T>& x, std::span<const std::int32_t> rows) {
  require_2d(x.shape(), "gather_rows");
  const std::size_t n = x.cols();
  if (rows.empty()) throw ShapeError("gather_rows: empty index list");
  auto out = BasicTensor<T>::zeros({rows.size(), n});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= x.rows())
      throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " + shape_str(x.shape()));
    std::copy_n(x.data().begin() + rows[i] * static_cast<std::ptrdiff_t>(n), n, out.mutable_data().begin() + i * n);
  }
  std::vector<std::int32_t> idx(rows.begin(), rows.end());
  tape.record("gather_rows", {x}, out, [x, out, idx, n]() mutable {
    auto gx = x.mutable_grad();
    const auto g = out.grad();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < n; ++j) gx[static_cast<std::size_t>(idx[i]) * n + j] += g[i * n + j];
  });
  return out;
}

template <typename T>
BasicTensor<T> pairwise_sq_dist(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_2d(a.shape(), "pairwise_sq_dist");
  require_2d(b.shape(), "pairwise_sq_dist");
  if (a.cols() != b.cols())
    throw ShapeError("pairwise_sq_dist: dims disagree, " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const std::size_t m = a.rows(), k = b.rows(), d = a.cols();
  auto out = BasicTensor<T>::zeros({m, k});
  kernels::pairwise_sq_dist(a.view(), b.view(), out.mut_view());
  tape.record("pairwise_sq_dist", {a, b}, out, [a, b, out, m, k, d]() mutable {
    const auto g = out.grad();
    // d/da_i = 2 sum_j g_ij (a_i - b_j), d/db_j = -2 sum_i g_ij (a_i - b_j)
    if (wants_grad(a)) {
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < d; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < k; ++j)
            acc += static_cast<double>(g[i * k + j]) * (static_cast<double>(a.at(i, c)) - b.at(j, c));
          ga[i * d + c] += static_cast<T>(2.0 * acc);
        }
    }
    if (wants_grad(b)) {
      auto gb = b.mutable_grad();
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t c = 0; c < d; ++c) {
          double acc = 0.0;
          for (std::size_t i = 0; i < m; ++i)
            acc += static_cast<double>(g[i * k + j]) * (static_cast<double>(a.at(i, c)) - b.at(j, c));
          gb[j * d + c] -= static_cast<T>(2.0 * acc);
        }
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> straight_through(BasicTape<T>& tape, const BasicTensor<T>& input, const BasicTensor<T>& quantized) {
  if (input.shape() != quantized.shape())
    throw ShapeError("straight_through: shape mismatch " + shape_str(input.shape()) + " vs " +
                     shape_str(quantized.shape()));
  BasicTensor<T> out(quantized.shape(), std::vector<T>(quantized.data().begin(), quantized.data().end()));
  tape.record("straight_through", {input}, out, [input, out]() mutable {
    auto gi = input.mutable_grad();
    const auto g = out.grad();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i];
  });
  return out;
}

template <typename T>
BasicTensor<T> cross_entropy(BasicTape<T>& tape, const BasicTensor<T>& logits, std::span<const std::int32_t> labels) {
  require_2d(logits.shape(), "cross_entropy");
  const std::size_t m = logits.rows(), c = logits.cols();
  if (labels.size() != m)
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + shape_str(logits.shape()));
  if (m == 0) throw ContractError("cross_entropy: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
      throw ShapeError("cross_entropy: label " + std::to_string(labels[i]) + " out of range");
    const T* x = logits.data().data() + i * c;
    total += log_sum_exp(x, c) - x[labels[i]];
  }
  auto out = BasicTensor<T>::scalar(static_cast<T>(total / static_cast<double>(m)));
  std::vector<std::int32_t> y(labels.begin(), labels.end());
  tape.record("cross_entropy", {logits}, out, [logits, out, y, m, c]() mutable {
    auto gl = logits.mutable_grad();
    const double g = static_cast<double>(out.grad()[0]) / static_cast<double>(m);
    std::vector<T> p(c);
    for (std::size_t i = 0; i < m; ++i) {
      softmax_row(logits.data().data() + i * c, p.data(), c);
      for (std::size_t j = 0; j < c; ++j) {
        const double target = static_cast<std::int32_t>(j) == y[i] ? 1.0 : 0.0;
        gl[i * c + j] += static_cast<T>(g * (p[j] - target));
      }
    }
  });
  return out;
}

template <typename T>
BasicTensor<T> bce_with_logits(BasicTape<T>& tape, const BasicTensor<T>& logits, std::span<const T> targets) {
  const std::size_t n = logits.numel();
  if (targets.size() != n)
    throw ShapeError("bce_with_logits: " + std::to_string(targets.size()) + " targets for " +
                     shape_str(logits.shape()));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = logits.data()[i];
    total += std::max(z, 0.0) - z * targets[i] + std::log1p(std::exp(-std::abs(z)));
  }
  auto out = BasicTensor<T>::scalar(static_cast<T>(total / static_cast<double>(n)));
  std::vector<T> t(targets.begin(), targets.end());
  tape.record("bce_with_logits", {logits}, out, [logits, out, t, n]() mutable {
    auto gl = logits.mutable_grad();
    const double g = static_cast<double>(out.grad()[0]) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double z = logits.data()[i];
      const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      gl[i] += static_cast<T>(g * (s - t[i]));
    }
  });
  return out;
}

#define GAGA_INSTANTIATE(T)                                                                                   \
  template BasicTensor<T> matmul(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&, bool, bool);   \
  template BasicTensor<T> add(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> sub(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> mul(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> scale(BasicTape<T>&, const BasicTensor<T>&, double);                               \
  template BasicTensor<T> relu(BasicTape<T>&, const BasicTensor<T>&);                                        \
  template BasicTensor<T> sigmoid(BasicTape<T>&, const BasicTensor<T>&);                                     \
  template BasicTensor<T> sum(BasicTape<T>&, const BasicTensor<T>&);                                         \
  template BasicTensor<T> mean(BasicTape<T>&, const BasicTensor<T>&);                                        \
  template BasicTensor<T> row_sum(BasicTape<T>&, const BasicTensor<T>&);                                     \
  template BasicTensor<T> sq_norm_rows(BasicTape<T>&, const BasicTensor<T>&);                                \
  template BasicTensor<T> l2_normalize_rows(BasicTape<T>&, const BasicTensor<T>&);                           \
  template BasicTensor<T> softmax_rows(BasicTape<T>&, const BasicTensor<T>&);                                \
  template BasicTensor<T> log_softmax_rows(BasicTape<T>&, const BasicTensor<T>&);                            \
  template BasicTensor<T> spmm(BasicTape<T>&, const SparseMatrix<T>&, const BasicTensor<T>&);                \
  template BasicTensor<T> gather_rows(BasicTape<T>&, const BasicTensor<T>&, std::span<const std::int32_t>);  \
  template BasicTensor<T> pairwise_sq_dist(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);     \
  template BasicTensor<T> straight_through(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);     \
  template BasicTensor<T> cross_entropy(BasicTape<T>&, const BasicTensor<T>&, std::span<const std::int32_t>); \
  template BasicTensor<T> bce_with_logits(BasicTape<T>&, const BasicTensor<T>&, std::span<const T>);

GAGA_INSTANTIATE(float)
GAGA_INSTANTIATE(double)

}  // namespace gaga::tensor::ops
