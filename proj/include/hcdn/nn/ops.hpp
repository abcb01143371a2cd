#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "hcdn/nn/tensor.hpp"

namespace hcdn::nn {

template <typename T>
using EigenMap =
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstEigenMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

namespace detail {

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

template <typename T>
void require_same_shape(const TensorPtr<T>& a, const TensorPtr<T>& b, const char* op) {
  if (a->shape != b->shape)
    raise(ErrorCode::ShapeMismatch, std::string(op) + ": " + shape_str(a->shape) + " vs " +
                                        shape_str(b->shape));
}

template <typename T>
void require_rank(const TensorPtr<T>& a, std::size_t rank, const char* op) {
  if (a->shape.size() != rank)
    raise(ErrorCode::ShapeMismatch,
          std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
              shape_str(a->shape));
}

}  // namespace detail

// ---------------------------------------------------------------- pointwise

template <typename T>
TensorPtr<T> add(const TensorPtr<T>& a, const TensorPtr<T>& b) {
  detail::require_same_shape(a, b, "add");
  auto out = make_op<T>(
      a->shape, {a, b}, [a, b](Node<T>& n) {
        accumulate_grad(a, n.grad);
        accumulate_grad(b, n.grad);
      });
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = a->value[i] + b->value[i];
  return out;
}

template <typename T>
TensorPtr<T> sub(const TensorPtr<T>& a, const TensorPtr<T>& b) {
  detail::require_same_shape(a, b, "sub");
  auto out = make_op<T>(
      a->shape, {a, b}, [a, b](Node<T>& n) {
        accumulate_grad(a, n.grad);
        if (b->requires_grad)
          for (std::size_t i = 0; i < n.grad.size(); ++i) b->grad[i] -= n.grad[i];
      });
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = a->value[i] - b->value[i];
  return out;
}

template <typename T>
TensorPtr<T> mul(const TensorPtr<T>& a, const TensorPtr<T>& b) {
  detail::require_same_shape(a, b, "mul");
  auto out = make_op<T>(
      a->shape, {a, b}, [a, b](Node<T>& n) {
        if (a->requires_grad)
          for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad[i] += n.grad[i] * b->value[i];
        if (b->requires_grad)
          for (std::size_t i = 0; i < n.grad.size(); ++i) b->grad[i] += n.grad[i] * a->value[i];
      });
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = a->value[i] * b->value[i];
  return out;
}

template <typename T>
TensorPtr<T> scale(const TensorPtr<T>& a, T s) {
  auto out = make_op<T>(
      a->shape, {a}, [a, s](Node<T>& n) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad[i] += n.grad[i] * s;
      });
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = a->value[i] * s;
  return out;
}

template <typename T>
TensorPtr<T> abs_op(const TensorPtr<T>& a) {
  auto out = make_op<T>(
      a->shape, {a}, [a](Node<T>& n) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          const T v = a->value[i];
          a->grad[i] += n.grad[i] * (v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)));
        }
      });
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = std::abs(a->value[i]);
  return out;
}

template <typename T>
TensorPtr<T> gelu(const TensorPtr<T>& a) {
  auto out = make_op<T>(
      a->shape, {a}, [a](Node<T>& n) {
        if (!a->requires_grad) return;
        constexpr T inv_sqrt2 = T(0.70710678118654752440);
        constexpr T inv_sqrt2pi = T(0.39894228040143267794);
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          const T x = a->value[i];
          const T cdf = T(0.5) * (T(1) + std::erf(x * inv_sqrt2));
          const T pdf = inv_sqrt2pi * std::exp(T(-0.5) * x * x);
          a->grad[i] += n.grad[i] * (cdf + x * pdf);
        }
      });
  constexpr T inv_sqrt2 = T(0.70710678118654752440);
  for (std::size_t i = 0; i < out->value.size(); ++i) {
    const T x = a->value[i];
    out->value[i] = T(0.5) * x * (T(1) + std::erf(x * inv_sqrt2));
  }
  return out;
}

template <typename T>
TensorPtr<T> sigmoid(const TensorPtr<T>& a) {
  auto out = make_op<T>(
      a->shape, {a}, [a](Node<T>& n) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          const T y = n.value[i];
          a->grad[i] += n.grad[i] * y * (T(1) - y);
        }
      });
  for (std::size_t i = 0; i < out->value.size(); ++i) {
    const T x = a->value[i];
    out->value[i] = x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                              : std::exp(x) / (T(1) + std::exp(x));
  }
  return out;
}

/// Clamp with a literal derivative: gradient flows only strictly inside the
/// bounds, so saturated pixels contribute exactly zero.
template <typename T>
TensorPtr<T> clamp(const TensorPtr<T>& a, T lo, T hi) {
  auto out = make_op<T>(
      a->shape, {a}, [a, lo, hi](Node<T>& n) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          if (a->value[i] > lo && a->value[i] < hi) a->grad[i] += n.grad[i];
      });
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = std::min(hi, std::max(lo, a->value[i]));
  return out;
}

template <typename T>
TensorPtr<T> log_op(const TensorPtr<T>& a) {
  auto out = make_op<T>(
      a->shape, {a}, [a](Node<T>& n) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad[i] += n.grad[i] / a->value[i];
      });
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = std::log(a->value[i]);
  return out;
}

// --------------------------------------------------------------- reductions

template <typename T>
TensorPtr<T> mean_all(const TensorPtr<T>& a) {
  const T inv = T(1) / static_cast<T>(a->numel());
  auto out = make_op<T>(
      {1}, {a}, [a, inv](Node<T>& n) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += n.grad[0] * inv;
      });
  T sum = T(0);
  for (const T v : a->value) sum += v;
  out->value[0] = sum * inv;
  return out;
}

template <typename T>
TensorPtr<T> sum_all(const TensorPtr<T>& a) {
  auto out = make_op<T>(
      {1}, {a}, [a](Node<T>& n) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += n.grad[0];
      });
  T sum = T(0);
  for (const T v : a->value) sum += v;
  out->value[0] = sum;
  return out;
}

// ------------------------------------------------------------ shape movers

template <typename T>
TensorPtr<T> reshape(const TensorPtr<T>& a, std::vector<int> new_shape) {
  std::size_t n = 1;
  for (int d : new_shape) n *= static_cast<std::size_t>(d);
  if (n != a->numel()) raise(ErrorCode::ShapeMismatch, "reshape: element count mismatch");
  auto out = make_op<T>(
      std::move(new_shape), {a}, [a](Node<T>& n_) { accumulate_grad(a, n_.grad); });
  out->value = a->value;
  return out;
}

template <typename T>
TensorPtr<T> transpose2d(const TensorPtr<T>& a) {
  detail::require_rank(a, 2, "transpose2d");
  const int r = a->shape[0], c = a->shape[1];
  auto out = make_op<T>(
      {c, r}, {a}, [a, r, c](Node<T>& n) {
        if (!a->requires_grad) return;
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j)
            a->grad[static_cast<std::size_t>(i) * c + j] +=
                n.grad[static_cast<std::size_t>(j) * r + i];
      });
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out->value[static_cast<std::size_t>(j) * r + i] = a->value[static_cast<std::size_t>(i) * c + j];
  return out;
}

/// (HW, C) token matrix -> (C, H, W) feature map.
template <typename T>
TensorPtr<T> tokens_to_chw(const TensorPtr<T>& a, int h, int w) {
  detail::require_rank(a, 2, "tokens_to_chw");
  if (a->shape[0] != h * w) raise(ErrorCode::ShapeMismatch, "tokens_to_chw: token count != h*w");
  const int c = a->shape[1];
  auto out = make_op<T>(
      {c, h, w}, {a}, [a, h, w, c](Node<T>& n) {
        if (!a->requires_grad) return;
        for (int ch = 0; ch < c; ++ch)
          for (int t = 0; t < h * w; ++t)
            a->grad[static_cast<std::size_t>(t) * c + ch] +=
                n.grad[static_cast<std::size_t>(ch) * h * w + t];
      });
  for (int ch = 0; ch < c; ++ch)
    for (int t = 0; t < h * w; ++t)
      out->value[static_cast<std::size_t>(ch) * h * w + t] =
          a->value[static_cast<std::size_t>(t) * c + ch];
  return out;
}

/// (C, H, W) feature map -> (HW, C) token matrix.
template <typename T>
TensorPtr<T> chw_to_tokens(const TensorPtr<T>& a) {
  detail::require_rank(a, 3, "chw_to_tokens");
  const int c = a->shape[0], h = a->shape[1], w = a->shape[2];
  auto out = make_op<T>(
      {h * w, c}, {a}, [a, h, w, c](Node<T>& n) {
        if (!a->requires_grad) return;
        for (int t = 0; t < h * w; ++t)
          for (int ch = 0; ch < c; ++ch)
            a->grad[static_cast<std::size_t>(ch) * h * w + t] +=
                n.grad[static_cast<std::size_t>(t) * c + ch];
      });
  for (int t = 0; t < h * w; ++t)
    for (int ch = 0; ch < c; ++ch)
      out->value[static_cast<std::size_t>(t) * c + ch] =
          a->value[static_cast<std::size_t>(ch) * h * w + t];
  return out;
}

template <typename T>
TensorPtr<T> slice_cols(const TensorPtr<T>& a, int start, int len) {
  detail::require_rank(a, 2, "slice_cols");
  const int r = a->shape[0], c = a->shape[1];
  if (start < 0 || start + len > c) raise(ErrorCode::ShapeMismatch, "slice_cols out of range");
  auto out = make_op<T>(
      {r, len}, {a}, [a, r, c, start, len](Node<T>& n) {
        if (!a->requires_grad) return;
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < len; ++j)
            a->grad[static_cast<std::size_t>(i) * c + start + j] +=
                n.grad[static_cast<std::size_t>(i) * len + j];
      });
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < len; ++j)
      out->value[static_cast<std::size_t>(i) * len + j] =
          a->value[static_cast<std::size_t>(i) * c + start + j];
  return out;
}

template <typename T>
TensorPtr<T> concat_cols(const TensorPtr<T>& a, const TensorPtr<T>& b) {
  detail::require_rank(a, 2, "concat_cols");
  detail::require_rank(b, 2, "concat_cols");
  if (a->shape[0] != b->shape[0]) raise(ErrorCode::ShapeMismatch, "concat_cols: row mismatch");
  const int r = a->shape[0], ca = a->shape[1], cb = b->shape[1];
  auto out = make_op<T>(
      {r, ca + cb}, {a, b}, [a, b, r, ca, cb](Node<T>& n) {
        for (int i = 0; i < r; ++i) {
          if (a->requires_grad)
            for (int j = 0; j < ca; ++j)
              a->grad[static_cast<std::size_t>(i) * ca + j] +=
                  n.grad[static_cast<std::size_t>(i) * (ca + cb) + j];
          if (b->requires_grad)
            for (int j = 0; j < cb; ++j)
              b->grad[static_cast<std::size_t>(i) * cb + j] +=
                  n.grad[static_cast<std::size_t>(i) * (ca + cb) + ca + j];
        }
      });
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < ca; ++j)
      out->value[static_cast<std::size_t>(i) * (ca + cb) + j] =
          a->value[static_cast<std::size_t>(i) * ca + j];
    for (int j = 0; j < cb; ++j)
      out->value[static_cast<std::size_t>(i) * (ca + cb) + ca + j] =
          b->value[static_cast<std::size_t>(i) * cb + j];
  }
  return out;
}

// ------------------------------------------------------------------ linear

template <typename T>
TensorPtr<T> matmul(const TensorPtr<T>& a, const TensorPtr<T>& b) {
  detail::require_rank(a, 2, "matmul");
  detail::require_rank(b, 2, "matmul");
  if (a->shape[1] != b->shape[0])
    raise(ErrorCode::ShapeMismatch, "matmul: " + detail::shape_str(a->shape) + " x " +
                                        detail::shape_str(b->shape));
  const int n = a->shape[0], k = a->shape[1], m = b->shape[1];
  auto out = make_op<T>(
      {n, m}, {a, b}, [a, b, n, k, m](Node<T>& nd) {
        ConstEigenMap<T> A(a->value.data(), n, k), B(b->value.data(), k, m),
            G(nd.grad.data(), n, m);
        if (a->requires_grad) {
          EigenMap<T> dA(a->grad.data(), n, k);
          dA.noalias() += G * B.transpose();
        }
        if (b->requires_grad) {
          EigenMap<T> dB(b->grad.data(), k, m);
          dB.noalias() += A.transpose() * G;
        }
      });
  ConstEigenMap<T> A(a->value.data(), n, k), B(b->value.data(), k, m);
  EigenMap<T> C(out->value.data(), n, m);
  C.noalias() = A * B;
  return out;
}

/// x:(N,Din) W:(Din,Dout) b:(Dout) -> (N,Dout)
template <typename T>
TensorPtr<T> linear(const TensorPtr<T>& x, const TensorPtr<T>& w, const TensorPtr<T>& b) {
  auto y = matmul(x, w);
  const int n = y->shape[0], m = y->shape[1];
  if (b->shape != std::vector<int>{m}) raise(ErrorCode::ShapeMismatch, "linear: bias width");
  auto out = make_op<T>(
      y->shape, {y, b}, [y, b, n, m](Node<T>& nd) {
        accumulate_grad(y, nd.grad);
        if (b->requires_grad)
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
              b->grad[static_cast<std::size_t>(j)] += nd.grad[static_cast<std::size_t>(i) * m + j];
      });
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      out->value[static_cast<std::size_t>(i) * m + j] =
          y->value[static_cast<std::size_t>(i) * m + j] + b->value[static_cast<std::size_t>(j)];
  return out;
}

// ----------------------------------------------------------- normalization

/// Layer normalization over the last dimension of an (N, D) matrix.
template <typename T>
TensorPtr<T> layernorm(const TensorPtr<T>& x, const TensorPtr<T>& gamma, const TensorPtr<T>& beta,
                       T eps = T(1e-5)) {
  detail::require_rank(x, 2, "layernorm");
  const int n = x->shape[0], d = x->shape[1];
  if (gamma->shape != std::vector<int>{d} || beta->shape != std::vector<int>{d})
    raise(ErrorCode::ShapeMismatch, "layernorm: affine width");

  auto xhat = std::make_shared<std::vector<T>>(x->numel());
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(n));
  auto out = make_op<T>(
      x->shape, {x, gamma, beta}, [x, gamma, beta, xhat, inv_std, n, d](Node<T>& nd) {
        for (int i = 0; i < n; ++i) {
          const std::size_t row = static_cast<std::size_t>(i) * d;
          T sum_g = T(0), sum_gx = T(0);
          for (int j = 0; j < d; ++j) {
            const T gy = nd.grad[row + j] * gamma->value[static_cast<std::size_t>(j)];
            sum_g += gy;
            sum_gx += gy * (*xhat)[row + j];
          }
          if (x->requires_grad) {
            const T istd = (*inv_std)[static_cast<std::size_t>(i)];
            for (int j = 0; j < d; ++j) {
              const T gy = nd.grad[row + j] * gamma->value[static_cast<std::size_t>(j)];
              x->grad[row + j] +=
                  istd * (gy - sum_g / static_cast<T>(d) -
                          (*xhat)[row + j] * sum_gx / static_cast<T>(d));
            }
          }
          if (gamma->requires_grad)
            for (int j = 0; j < d; ++j)
              gamma->grad[static_cast<std::size_t>(j)] += nd.grad[row + j] * (*xhat)[row + j];
          if (beta->requires_grad)
            for (int j = 0; j < d; ++j)
              beta->grad[static_cast<std::size_t>(j)] += nd.grad[row + j];
        }
      });
  for (int i = 0; i < n; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * d;
    T mean = T(0);
    for (int j = 0; j < d; ++j) mean += x->value[row + j];
    mean /= static_cast<T>(d);
    T var = T(0);
    for (int j = 0; j < d; ++j) {
      const T c = x->value[row + j] - mean;
      var += c * c;
    }
    var /= static_cast<T>(d);
    const T istd = T(1) / std::sqrt(var + eps);
    (*inv_std)[static_cast<std::size_t>(i)] = istd;
    for (int j = 0; j < d; ++j) {
      const T xh = (x->value[row + j] - mean) * istd;
      (*xhat)[row + j] = xh;
      out->value[row + j] =
          xh * gamma->value[static_cast<std::size_t>(j)] + beta->value[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

/// Row-wise softmax of an (N, M) matrix.
template <typename T>
TensorPtr<T> softmax_rows(const TensorPtr<T>& x) {
  detail::require_rank(x, 2, "softmax_rows");
  const int n = x->shape[0], m = x->shape[1];
  auto out = make_op<T>(
      x->shape, {x}, [x, n, m](Node<T>& nd) {
        if (!x->requires_grad) return;
        for (int i = 0; i < n; ++i) {
          const std::size_t row = static_cast<std::size_t>(i) * m;
          T dot = T(0);
          for (int j = 0; j < m; ++j) dot += nd.grad[row + j] * nd.value[row + j];
          for (int j = 0; j < m; ++j)
            x->grad[row + j] += nd.value[row + j] * (nd.grad[row + j] - dot);
        }
      });
  for (int i = 0; i < n; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * m;
    T mx = x->value[row];
    for (int j = 1; j < m; ++j) mx = std::max(mx, x->value[row + j]);
    T sum = T(0);
    for (int j = 0; j < m; ++j) {
      const T e = std::exp(x->value[row + j] - mx);
      out->value[row + j] = e;
      sum += e;
    }
    for (int j = 0; j < m; ++j) out->value[row + j] /= sum;
  }
  return out;
}

// -------------------------------------------------------------- spatial ops

/// Convolution on a single (C,H,W) sample. Weights are (Cout, Cin*kh*kw),
/// flattened im2col layout; bias is (Cout).
template <typename T>
TensorPtr<T> conv2d(const TensorPtr<T>& x, const TensorPtr<T>& w, const TensorPtr<T>& b,
                    int kh, int kw, int stride, int pad) {
  detail::require_rank(x, 3, "conv2d");
  const int cin = x->shape[0], h = x->shape[1], wd = x->shape[2];
  if (w->shape.size() != 2 || w->shape[1] != cin * kh * kw)
    raise(ErrorCode::ShapeMismatch, "conv2d: weight shape");
  const int cout = w->shape[0];
  if (b->shape != std::vector<int>{cout}) raise(ErrorCode::ShapeMismatch, "conv2d: bias shape");
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (wd + 2 * pad - kw) / stride + 1;
  if (oh < 1 || ow < 1) raise(ErrorCode::ShapeMismatch, "conv2d: empty output");

  const int patch = cin * kh * kw, opix = oh * ow;
  auto col = std::make_shared<std::vector<T>>(static_cast<std::size_t>(patch) * opix, T(0));
  // col(row=patch index, col=output pixel)
  {
    std::size_t idx = 0;
    for (int c = 0; c < cin; ++c)
      for (int ki = 0; ki < kh; ++ki)
        for (int kj = 0; kj < kw; ++kj) {
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride - pad + ki;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride - pad + kj;
              T v = T(0);
              if (iy >= 0 && iy < h && ix >= 0 && ix < wd)
                v = x->value[(static_cast<std::size_t>(c) * h + iy) * wd + ix];
              (*col)[idx++] = v;
            }
          }
        }
  }

  auto out = make_op<T>(
      {cout, oh, ow}, {x, w, b},
      [x, w, b, col, cin, h, wd, kh, kw, stride, pad, oh, ow, cout, patch, opix](Node<T>& nd) {
        ConstEigenMap<T> G(nd.grad.data(), cout, opix);
        if (w->requires_grad) {
          ConstEigenMap<T> Col(col->data(), patch, opix);
          EigenMap<T> dW(w->grad.data(), cout, patch);
          dW.noalias() += G * Col.transpose();
        }
        if (b->requires_grad)
          for (int c = 0; c < cout; ++c) {
            T s = T(0);
            for (int p = 0; p < opix; ++p) s += nd.grad[static_cast<std::size_t>(c) * opix + p];
            b->grad[static_cast<std::size_t>(c)] += s;
          }
        if (x->requires_grad) {
          ConstEigenMap<T> W(w->value.data(), cout, patch);
          Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dCol =
              W.transpose() * G;  // (patch, opix)
          std::size_t idx = 0;
          for (int c = 0; c < cin; ++c)
            for (int ki = 0; ki < kh; ++ki)
              for (int kj = 0; kj < kw; ++kj) {
                for (int oy = 0; oy < oh; ++oy) {
                  const int iy = oy * stride - pad + ki;
                  for (int ox = 0; ox < ow; ++ox, ++idx) {
                    const int ix = ox * stride - pad + kj;
                    if (iy >= 0 && iy < h && ix >= 0 && ix < wd)
                      x->grad[(static_cast<std::size_t>(c) * h + iy) * wd + ix] +=
                          dCol(idx / opix, idx % opix);
                  }
                }
              }
        }
      });
  ConstEigenMap<T> W(w->value.data(), cout, patch), Col(col->data(), patch, opix);
  EigenMap<T> O(out->value.data(), cout, opix);
  O.noalias() = W * Col;
  for (int c = 0; c < cout; ++c)
    for (int p = 0; p < opix; ++p)
      out->value[static_cast<std::size_t>(c) * opix + p] += b->value[static_cast<std::size_t>(c)];
  return out;
}

/// Bilinear resize of a (C,H,W) tensor; gradient scatters with the same
/// interpolation weights.
template <typename T>
TensorPtr<T> bilinear_resize(const TensorPtr<T>& x, int out_h, int out_w) {
  detail::require_rank(x, 3, "bilinear_resize");
  const int c = x->shape[0], h = x->shape[1], w = x->shape[2];
  if (out_h == h && out_w == w) {
    auto out = make_op<T>(
        x->shape, {x}, [x](Node<T>& nd) { accumulate_grad(x, nd.grad); });
    out->value = x->value;
    return out;
  }

  struct Tap {
    int y0, y1, x0, x1;
    T wy, wx;
  };
  auto taps = std::make_shared<std::vector<Tap>>();
  taps->reserve(static_cast<std::size_t>(out_h) * out_w);
  const double sy = static_cast<double>(h) / out_h, sx = static_cast<double>(w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::min(std::max(fy, 0.0), static_cast<double>(h - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    for (int x2 = 0; x2 < out_w; ++x2) {
      double fx = (x2 + 0.5) * sx - 0.5;
      fx = std::min(std::max(fx, 0.0), static_cast<double>(w - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      taps->push_back({y0, std::min(y0 + 1, h - 1), x0, std::min(x0 + 1, w - 1),
                       static_cast<T>(fy - y0), static_cast<T>(fx - x0)});
    }
  }

  auto out = make_op<T>(
      {c, out_h, out_w}, {x}, [x, taps, c, h, w, out_h, out_w](Node<T>& nd) {
        if (!x->requires_grad) return;
        for (int ch = 0; ch < c; ++ch) {
          const std::size_t obase = static_cast<std::size_t>(ch) * out_h * out_w;
          const std::size_t ibase = static_cast<std::size_t>(ch) * h * w;
          for (std::size_t p = 0; p < taps->size(); ++p) {
            const auto& t = (*taps)[p];
            const T g = nd.grad[obase + p];
            x->grad[ibase + static_cast<std::size_t>(t.y0) * w + t.x0] +=
                g * (T(1) - t.wy) * (T(1) - t.wx);
            x->grad[ibase + static_cast<std::size_t>(t.y0) * w + t.x1] += g * (T(1) - t.wy) * t.wx;
            x->grad[ibase + static_cast<std::size_t>(t.y1) * w + t.x0] += g * t.wy * (T(1) - t.wx);
            x->grad[ibase + static_cast<std::size_t>(t.y1) * w + t.x1] += g * t.wy * t.wx;
          }
        }
      });
  for (int ch = 0; ch < c; ++ch) {
    const std::size_t obase = static_cast<std::size_t>(ch) * out_h * out_w;
    const std::size_t ibase = static_cast<std::size_t>(ch) * h * w;
    for (std::size_t p = 0; p < taps->size(); ++p) {
      const auto& t = (*taps)[p];
      out->value[obase + p] =
          (T(1) - t.wy) * ((T(1) - t.wx) * x->value[ibase + static_cast<std::size_t>(t.y0) * w + t.x0] +
                           t.wx * x->value[ibase + static_cast<std::size_t>(t.y0) * w + t.x1]) +
          t.wy * ((T(1) - t.wx) * x->value[ibase + static_cast<std::size_t>(t.y1) * w + t.x0] +
                  t.wx * x->value[ibase + static_cast<std::size_t>(t.y1) * w + t.x1]);
    }
  }
  return out;
}

template <typename T>
bool all_finite(const TensorPtr<T>& x) {
  for (const T v : x->value)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace hcdn::nn
