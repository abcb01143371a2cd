#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hcdn/nn/ops.hpp"
#include "hcdn/rng.hpp"

namespace hcdn::nn {

/// Owns named parameters and child links for checkpointing and optimizers.
/// Submodules are plain members registered by pointer in the constructor.
template <typename T>
class Module {
 public:
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;
  virtual ~Module() = default;

  std::vector<std::pair<std::string, TensorPtr<T>>> named_parameters() const {
    std::vector<std::pair<std::string, TensorPtr<T>>> out;
    collect("", out);
    return out;
  }

  void zero_grad() {
    for (auto& [name, p] : named_parameters())
      std::fill(p->grad.begin(), p->grad.end(), T(0));
  }

  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, TensorPtr<T>>>& out) const {
    for (const auto& [name, p] : params_) out.emplace_back(prefix + name, p);
    for (const auto& [name, m] : children_) m->collect(prefix + name + ".", out);
  }

 protected:
  TensorPtr<T> param(const std::string& name, std::vector<int> shape, bool requires_grad = true) {
    auto t = make_leaf<T>(std::move(shape), requires_grad);
    params_.emplace_back(name, t);
    return t;
  }

  void child(const std::string& name, Module<T>* m) { children_.emplace_back(name, m); }

 private:
  std::vector<std::pair<std::string, TensorPtr<T>>> params_;
  std::vector<std::pair<std::string, Module<T>*>> children_;
};

template <typename T>
void init_glorot(const TensorPtr<T>& t, std::mt19937_64& rng, int fan_in, int fan_out) {
  const double sd = std::sqrt(2.0 / (fan_in + fan_out));
  for (auto& v : t->value) v = static_cast<T>(rng_normal(rng) * sd);
}

template <typename T>
void init_constant(const TensorPtr<T>& t, T value) {
  std::fill(t->value.begin(), t->value.end(), value);
}

/// Re-randomizes every parameter; used by gradient checks so zero-initialized
/// residual projections don't hide their upstream gradients.
template <typename T>
void randomize_parameters(Module<T>& m, std::mt19937_64& rng, double sd = 0.1) {
  for (auto& [name, p] : m.named_parameters())
    for (auto& v : p->value) v = static_cast<T>(rng_normal(rng) * sd);
}

// ------------------------------------------------------------------ layers

template <typename T>
class Linear : public Module<T> {
 public:
  Linear(int din, int dout, std::mt19937_64& rng, bool zero_init = false, bool trainable = true)
      : weight(this->param("weight", {din, dout}, trainable)),
        bias(this->param("bias", {dout}, trainable)) {
    if (!zero_init) init_glorot(weight, rng, din, dout);
  }

  TensorPtr<T> forward(const TensorPtr<T>& x) const { return linear(x, weight, bias); }

  TensorPtr<T> weight, bias;
};

template <typename T>
class LayerNormM : public Module<T> {
 public:
  LayerNormM(int d, bool trainable = true)
      : gamma(this->param("gamma", {d}, trainable)), beta(this->param("beta", {d}, trainable)) {
    init_constant(gamma, T(1));
  }

  TensorPtr<T> forward(const TensorPtr<T>& x) const { return layernorm(x, gamma, beta); }

  TensorPtr<T> gamma, beta;
};

template <typename T>
class Conv2dM : public Module<T> {
 public:
  Conv2dM(int cin, int cout, int k, int stride, int pad, std::mt19937_64& rng,
          bool zero_init = false, bool trainable = true)
      : kernel(k), stride(stride), pad(pad),
        weight(this->param("weight", {cout, cin * k * k}, trainable)),
        bias(this->param("bias", {cout}, trainable)) {
    if (!zero_init) init_glorot(weight, rng, cin * k * k, cout);
  }

  TensorPtr<T> forward(const TensorPtr<T>& x) const {
    return conv2d(x, weight, bias, kernel, kernel, stride, pad);
  }

  int kernel, stride, pad;
  TensorPtr<T> weight, bias;
};

/// Literal "simple 3-layer CNN": three width-preserving 3x3 convolutions
/// with GELU between; the last convolution starts at zero so the enclosing
/// residual is an identity at initialization.
template <typename T>
class ConvBlock3 : public Module<T> {
 public:
  ConvBlock3(int width, std::mt19937_64& rng, bool trainable = true)
      : conv1(width, width, 3, 1, 1, rng, false, trainable),
        conv2(width, width, 3, 1, 1, rng, false, trainable),
        conv3(width, width, 3, 1, 1, rng, true, trainable) {
    this->child("conv1", &conv1);
    this->child("conv2", &conv2);
    this->child("conv3", &conv3);
  }

  TensorPtr<T> forward(const TensorPtr<T>& x) const {
    return conv3.forward(gelu(conv2.forward(gelu(conv1.forward(x)))));
  }

  Conv2dM<T> conv1, conv2, conv3;
};

template <typename T>
class Mlp : public Module<T> {
 public:
  Mlp(int d, int hidden, std::mt19937_64& rng, bool trainable = true)
      : fc1(d, hidden, rng, false, trainable), fc2(hidden, d, rng, true, trainable) {
    this->child("fc1", &fc1);
    this->child("fc2", &fc2);
  }

  TensorPtr<T> forward(const TensorPtr<T>& x) const {
    return fc2.forward(gelu(fc1.forward(x)));
  }

  Linear<T> fc1, fc2;
};

/// Multi-head attention per Eq. 5: per head Softmax(QK^T/sqrt(d_head))V,
/// heads concatenated, output projection (zero-initialized). Queries and
/// key/value sources may differ (cross-attention).
template <typename T>
class MultiHeadAttention : public Module<T> {
 public:
  MultiHeadAttention(int d, int heads, std::mt19937_64& rng, bool trainable = true)
      : heads(heads), d_head(d / heads),
        q_proj(d, d, rng, false, trainable), k_proj(d, d, rng, false, trainable),
        v_proj(d, d, rng, false, trainable), out_proj(d, d, rng, true, trainable) {
    if (d % heads != 0)
      raise(ErrorCode::ShapeMismatch, "attention width not divisible by head count");
    this->child("q_proj", &q_proj);
    this->child("k_proj", &k_proj);
    this->child("v_proj", &v_proj);
    this->child("out_proj", &out_proj);
  }

  TensorPtr<T> forward(const TensorPtr<T>& queries, const TensorPtr<T>& keyvalues) const {
    if (queries->shape[1] != keyvalues->shape[1])
      raise(ErrorCode::ShapeMismatch, "attention: query/key width mismatch");
    const auto q = q_proj.forward(queries);
    const auto k = k_proj.forward(keyvalues);
    const auto v = v_proj.forward(keyvalues);
    const T inv_sqrt_dh = T(1) / std::sqrt(static_cast<T>(d_head));
    TensorPtr<T> merged;
    for (int h = 0; h < heads; ++h) {
      const auto qh = slice_cols(q, h * d_head, d_head);
      const auto kh = slice_cols(k, h * d_head, d_head);
      const auto vh = slice_cols(v, h * d_head, d_head);
      const auto scores = scale(matmul(qh, transpose2d(kh)), inv_sqrt_dh);
      const auto attended = matmul(softmax_rows(scores), vh);
      merged = h == 0 ? attended : concat_cols(merged, attended);
    }
    return out_proj.forward(merged);
  }

  int heads, d_head;
  Linear<T> q_proj, k_proj, v_proj, out_proj;
};

/// Pre-norm transformer block with optional spatial reduction of the
/// key/value grid (stride-sr convolution + layernorm) for large token counts.
template <typename T>
class TransformerBlock : public Module<T> {
 public:
  TransformerBlock(int d, int heads, int mlp_ratio, int sr, std::mt19937_64& rng,
                   bool trainable = true)
      : sr(sr), norm1(d, trainable), attn(d, heads, rng, trainable),
        norm2(d, trainable), mlp(d, d * mlp_ratio, rng, trainable) {
    this->child("norm1", &norm1);
    this->child("attn", &attn);
    this->child("norm2", &norm2);
    this->child("mlp", &mlp);
    if (sr > 1) {
      sr_conv = std::make_unique<Conv2dM<T>>(d, d, sr, sr, 0, rng, false, trainable);
      sr_norm = std::make_unique<LayerNormM<T>>(d, trainable);
      this->child("sr_conv", sr_conv.get());
      this->child("sr_norm", sr_norm.get());
    }
  }

  /// tokens: (h*w, d) laid out row-major over the (h, w) grid.
  TensorPtr<T> forward(const TensorPtr<T>& tokens, int h, int w) const {
    auto x = norm1.forward(tokens);
    TensorPtr<T> kv = x;
    if (sr > 1) {
      const auto reduced = sr_conv->forward(tokens_to_chw(x, h, w));
      kv = sr_norm->forward(chw_to_tokens(reduced));
    }
    auto y = add(tokens, attn.forward(x, kv));
    return add(y, mlp.forward(norm2.forward(y)));
  }

  int sr;
  LayerNormM<T> norm1;
  MultiHeadAttention<T> attn;
  LayerNormM<T> norm2;
  Mlp<T> mlp;
  std::unique_ptr<Conv2dM<T>> sr_conv;
  std::unique_ptr<LayerNormM<T>> sr_norm;
};

/// Overlapped patch embedding: strided convolution + token layernorm.
template <typename T>
class PatchEmbed : public Module<T> {
 public:
  PatchEmbed(int cin, int cout, int k, int stride, int pad, std::mt19937_64& rng,
             bool trainable = true)
      : proj(cin, cout, k, stride, pad, rng, false, trainable), norm(cout, trainable) {
    this->child("proj", &proj);
    this->child("norm", &norm);
  }

  /// returns tokens (h'*w', cout); h'/w' via out_h/out_w.
  TensorPtr<T> forward(const TensorPtr<T>& x, int& out_h, int& out_w) const {
    const auto y = proj.forward(x);
    out_h = y->shape[1];
    out_w = y->shape[2];
    return norm.forward(chw_to_tokens(y));
  }

  Conv2dM<T> proj;
  LayerNormM<T> norm;
};

}  // namespace hcdn::nn
