#pragma once

#include "hcdn/nn/module.hpp"

namespace hcdn {

template <typename T>
struct FusionIntermediates {
  nn::TensorPtr<T> h_k, h_l, h_v, h_t;
};

/// Feature Fusion Module, Eqs. 6-9. Operates on token grids (h*w, dim).
///
///   A   = Attention(h_f, h_c, h_c)            (Eq. 6, h_f is the query)
///   h_k = CNN(Norm(h_c)) + h_c                (Eq. 7)
///   h_l = h_f + h_k + A                       (Eq. 8)
///   h_t = h_l + h_v + h_f + CNN(Norm(h_l))    (Eq. 9)
///
/// h_v is undefined in the source material; here h_v := A, with h_v := h_k
/// available via hv_attention = false. Sums associate left-to-right, so with
/// zero-initialized CNN blocks and attention output projection the reduction
/// h_t = (h_f + h_c) + h_f holds bit-exactly.
template <typename T>
class FeatureFusion : public nn::Module<T> {
 public:
  FeatureFusion(int dim, int heads, bool hv_attention, std::mt19937_64& rng)
      : hv_attention(hv_attention), attn(dim, heads, rng), norm_c(dim), cnn_k(dim, rng),
        norm_l(dim), cnn_t(dim, rng) {
    this->child("attn", &attn);
    this->child("norm_c", &norm_c);
    this->child("cnn_k", &cnn_k);
    this->child("norm_l", &norm_l);
    this->child("cnn_t", &cnn_t);
  }

  FusionIntermediates<T> fuse(const nn::TensorPtr<T>& h_c, const nn::TensorPtr<T>& h_f,
                              int h, int w) const {
    using namespace nn;
    if (h_c->shape != h_f->shape)
      raise(ErrorCode::ShapeMismatch, "ffm_fuse: h_c and h_f shapes differ");
    FusionIntermediates<T> out;
    const auto a = attn.forward(h_f, h_c);
    const auto cnn_c = chw_to_tokens(cnn_k.forward(tokens_to_chw(norm_c.forward(h_c), h, w)));
    out.h_k = add(cnn_c, h_c);
    out.h_l = add(add(h_f, out.h_k), a);
    out.h_v = hv_attention ? a : out.h_k;
    const auto cnn_l = chw_to_tokens(cnn_t.forward(tokens_to_chw(norm_l.forward(out.h_l), h, w)));
    out.h_t = add(add(add(out.h_l, out.h_v), h_f), cnn_l);
    return out;
  }

  bool hv_attention;
  nn::MultiHeadAttention<T> attn;
  nn::LayerNormM<T> norm_c;
  nn::ConvBlock3<T> cnn_k;
  nn::LayerNormM<T> norm_l;
  nn::ConvBlock3<T> cnn_t;
};

}  // namespace hcdn
