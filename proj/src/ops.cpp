#include "srcondense/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "srcondense/mac_counter.hpp"

namespace srcn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

/// Geometry of one cross-correlation: image (H, W) with `channels`
/// channels, producing (out_h, out_w) positions.
struct Window {
  std::size_t channels, h, w, kh, kw, stride, pad, out_h, out_w;
  [[nodiscard]] std::size_t rows() const { return channels * kh * kw; }
  [[nodiscard]] std::size_t cols() const { return out_h * out_w; }
  [[nodiscard]] bool trivial() const {
    return kh == 1 && kw == 1 && stride == 1 && pad == 0 && out_h == h && out_w == w;
  }
};

template <typename T>
void im2col(const T* image, const Window& g, T* cols) {
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        T* row = cols + ((c * g.kh + ky) * g.kw + kx) * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad);
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = image + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w))
                          ? T(0)
                          : src[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatter-adds columns back onto the image.
template <typename T>
void col2im(const T* cols, const Window& g, T* image) {
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const T* row = cols + ((c * g.kh + ky) * g.kw + kx) * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          T* dst = image + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const T* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) {
              dst[static_cast<std::size_t>(ix)] += src[ox];
            }
          }
        }
      }
    }
  }
}

std::string axis_error(const char* op, const char* axis, std::size_t got, std::size_t expected) {
  return std::string(op) + ": mismatch on axis " + axis + " (got " + std::to_string(got) +
         ", expected " + std::to_string(expected) + ")";
}

void check_spec(const char* op, const ConvSpec& spec) {
  if (spec.stride == 0) throw DimensionError(std::string(op) + ": stride must be positive");
  if (spec.groups == 0) throw DimensionError(std::string(op) + ": groups must be positive");
}

template <typename T>
void check_bias(const char* op, const Var<T>& bias, std::size_t out_channels) {
  if (!bias.defined()) return;
  const Shape& s = bias.shape();
  if (s.numel() != out_channels || s.c != out_channels) {
    throw DimensionError(axis_error(op, "C (bias)", s.c, out_channels));
  }
}

template <typename T>
void add_bias(Tensor<T>& out, const Var<T>& bias) {
  if (!bias.defined()) return;
  const Shape& s = out.shape();
  const T* b = bias.value().raw();
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      T* p = out.plane(n, c);
      std::for_each(p, p + s.plane(), [v = b[c]](T& x) { x += v; });
    }
}

template <typename T>
void accumulate_bias_grad(const Tensor<T>& grad_out, Node<T>* bias) {
  if (bias == nullptr || !bias->requires_grad) return;
  const Shape& s = grad_out.shape();
  T* gb = bias->grad_buffer().raw();
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* p = grad_out.plane(n, c);
      T acc = T(0);
      for (std::size_t i = 0; i < s.plane(); ++i) acc += p[i];
      gb[c] += acc;
    }
}

/// Weight tensor with masked connections zeroed. Mask has O * (I/G) entries.
template <typename T>
Tensor<T> apply_mask(const Tensor<T>& weight, std::span<const std::uint8_t> mask) {
  Tensor<T> out = weight;
  const std::size_t window = weight.shape().plane();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0) std::fill_n(out.raw() + i * window, window, T(0));
  }
  return out;
}

struct ConvGeometry {
  Shape in, out;
  std::size_t kh, kw, in_per_group, out_per_group;
  Window window;
};

template <typename T>
ConvGeometry conv_geometry(const char* op, const Var<T>& input, const Var<T>& weight,
                           const ConvSpec& spec) {
  check_spec(op, spec);
  const Shape& x = input.shape();
  const Shape& k = weight.shape();
  if (k.n % spec.groups != 0) {
    throw DimensionError(std::string(op) + ": output channels (axis O) = " + std::to_string(k.n) +
                         " not divisible by groups = " + std::to_string(spec.groups));
  }
  if (x.c != k.c * spec.groups) throw DimensionError(axis_error(op, "C", x.c, k.c * spec.groups));
  if (x.h + 2 * spec.padding < k.h) throw DimensionError(axis_error(op, "H (kernel larger than padded input)", x.h + 2 * spec.padding, k.h));
  if (x.w + 2 * spec.padding < k.w) throw DimensionError(axis_error(op, "W (kernel larger than padded input)", x.w + 2 * spec.padding, k.w));
  ConvGeometry g{};
  g.in = x;
  g.kh = k.h;
  g.kw = k.w;
  g.in_per_group = k.c;
  g.out_per_group = k.n / spec.groups;
  g.out = {x.n, k.n, conv_output_size(x.h, k.h, spec), conv_output_size(x.w, k.w, spec)};
  g.window = {g.in_per_group, x.h, x.w, k.h, k.w, spec.stride, spec.padding, g.out.h, g.out.w};
  return g;
}

/// Shared forward/backward for conv2d and masked_conv2d. `effective` is the
/// weight actually applied (masked or not).
template <typename T>
Var<T> conv2d_impl(const char* op, const Var<T>& input, const Var<T>& weight,
                   Tensor<T> effective, std::vector<std::uint8_t> mask, const Var<T>& bias,
                   const ConvSpec& spec, std::uint64_t connections) {
  const ConvGeometry geo = conv_geometry(op, input, weight, spec);
  check_bias(op, bias, geo.out.c);
  const Window& win = geo.window;
  const std::size_t G = spec.groups;
  const std::size_t k_rows = win.rows();

  Tensor<T> out(geo.out);
  std::vector<T> cols(win.trivial() ? 0 : k_rows * win.cols());
  const Tensor<T>& x = input.value();
  for (std::size_t n = 0; n < geo.in.n; ++n) {
    for (std::size_t g = 0; g < G; ++g) {
      const T* img = x.plane(n, g * geo.in_per_group);
      const T* col_ptr = img;
      if (!win.trivial()) {
        im2col(img, win, cols.data());
        col_ptr = cols.data();
      }
      ConstMatMap<T> W(effective.raw() + g * geo.out_per_group * k_rows,
                       static_cast<Eigen::Index>(geo.out_per_group), static_cast<Eigen::Index>(k_rows));
      ConstMatMap<T> C(col_ptr, static_cast<Eigen::Index>(k_rows), static_cast<Eigen::Index>(win.cols()));
      MatMap<T> Y(out.plane(n, g * geo.out_per_group), static_cast<Eigen::Index>(geo.out_per_group),
                  static_cast<Eigen::Index>(win.cols()));
      Y.noalias() = W * C;
    }
  }
  add_bias(out, bias);
  detail::report_macs(op, geo.out,
                      static_cast<std::uint64_t>(geo.out.n) * geo.out.h * geo.out.w * geo.kh * geo.kw *
                          connections);

  auto backward = [geo, spec, effective = std::move(effective), mask = std::move(mask)](Node<T>& self) {
    Node<T>* xin = self.parents[0].get();
    Node<T>* wn = self.parents[1].get();
    Node<T>* bn = self.parents[2].get();
    const Tensor<T>& gy = self.grad;
    const Window& win = geo.window;
    const std::size_t k_rows = win.rows();
    const bool need_x = xin->requires_grad;
    const bool need_w = wn->requires_grad;
    std::vector<T> cols(k_rows * win.cols());
    Tensor<T> gw_local;
    if (need_w) gw_local = Tensor<T>(wn->value.shape());
    for (std::size_t n = 0; n < geo.in.n; ++n) {
      for (std::size_t g = 0; g < spec.groups; ++g) {
        ConstMatMap<T> GY(gy.plane(n, g * geo.out_per_group),
                          static_cast<Eigen::Index>(geo.out_per_group),
                          static_cast<Eigen::Index>(win.cols()));
        if (need_w) {
          const T* img = xin->value.plane(n, g * geo.in_per_group);
          const T* col_ptr = img;
          if (!win.trivial()) {
            im2col(img, win, cols.data());
            col_ptr = cols.data();
          }
          ConstMatMap<T> C(col_ptr, static_cast<Eigen::Index>(k_rows), static_cast<Eigen::Index>(win.cols()));
          MatMap<T> GW(gw_local.raw() + g * geo.out_per_group * k_rows,
                       static_cast<Eigen::Index>(geo.out_per_group), static_cast<Eigen::Index>(k_rows));
          GW.noalias() += GY * C.transpose();
        }
        if (need_x) {
          ConstMatMap<T> W(effective.raw() + g * geo.out_per_group * k_rows,
                           static_cast<Eigen::Index>(geo.out_per_group), static_cast<Eigen::Index>(k_rows));
          T* gx = xin->grad_buffer().plane(n, g * geo.in_per_group);
          if (win.trivial()) {
            MatMap<T> GX(gx, static_cast<Eigen::Index>(k_rows), static_cast<Eigen::Index>(win.cols()));
            GX.noalias() += W.transpose() * GY;
          } else {
            MatMap<T> DC(cols.data(), static_cast<Eigen::Index>(k_rows), static_cast<Eigen::Index>(win.cols()));
            DC.noalias() = W.transpose() * GY;
            col2im(cols.data(), win, gx);
          }
        }
      }
    }
    if (need_w) {
      if (!mask.empty()) gw_local = apply_mask(gw_local, mask);
      T* dst = wn->grad_buffer().raw();
      const T* src = gw_local.raw();
      for (std::size_t i = 0; i < gw_local.numel(); ++i) dst[i] += src[i];
    }
    accumulate_bias_grad(gy, bn);
  };
  return make_result<T>(std::move(out), {input, weight, bias}, std::move(backward));
}

}  // namespace

std::size_t conv_output_size(std::size_t in, std::size_t kernel, const ConvSpec& spec) {
  check_spec("conv2d", spec);
  if (in + 2 * spec.padding < kernel) throw DimensionError("conv2d: kernel larger than padded input");
  return (in + 2 * spec.padding - kernel) / spec.stride + 1;
}

std::size_t conv_transpose_output_size(std::size_t in, std::size_t kernel, const ConvSpec& spec) {
  check_spec("conv_transpose2d", spec);
  if (spec.padding >= kernel) throw DimensionError("conv_transpose2d: padding must be smaller than the kernel");
  if (in == 0) throw DimensionError("conv_transpose2d: empty input");
  const std::size_t full = spec.stride * (in - 1) + kernel;
  if (full <= 2 * spec.padding) throw DimensionError("conv_transpose2d: padding consumes the whole output");
  return full - 2 * spec.padding;
}

template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, const ConvSpec& spec) {
  const Shape& k = weight.shape();
  return conv2d_impl<T>("conv2d", input, weight, weight.value(), {}, bias, spec,
                        static_cast<std::uint64_t>(k.n) * k.c);
}

template <typename T>
Var<T> masked_conv2d(const Var<T>& input, const Var<T>& weight, std::span<const std::uint8_t> mask,
                     const Var<T>& bias, const ConvSpec& spec) {
  const Shape& k = weight.shape();
  if (mask.size() != k.n * k.c) {
    throw DimensionError(axis_error("masked_conv2d", "mask length (O*I/G)", mask.size(), k.n * k.c));
  }
  std::uint64_t active = 0;
  for (auto m : mask) active += (m != 0);
  return conv2d_impl<T>("masked_conv2d", input, weight, apply_mask(weight.value(), mask),
                        std::vector<std::uint8_t>(mask.begin(), mask.end()), bias, spec, active);
}

template <typename T>
Var<T> conv_transpose2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias,
                        const ConvSpec& spec) {
  constexpr const char* op = "conv_transpose2d";
  check_spec(op, spec);
  const Shape& x = input.shape();
  const Shape& k = weight.shape();
  const std::size_t G = spec.groups;
  if (x.c != k.n) throw DimensionError(axis_error(op, "C", x.c, k.n));
  if (k.n % G != 0) {
    throw DimensionError(std::string(op) + ": input channels (axis C) = " + std::to_string(k.n) +
                         " not divisible by groups = " + std::to_string(G));
  }
  const std::size_t in_per_group = k.n / G;
  const std::size_t out_per_group = k.c;
  const Shape out_shape{x.n, out_per_group * G, conv_transpose_output_size(x.h, k.h, spec),
                        conv_transpose_output_size(x.w, k.w, spec)};
  check_bias(op, bias, out_shape.c);
  // The output image is the "input" of the adjoint cross-correlation.
  const Window win{out_per_group, out_shape.h, out_shape.w, k.h, k.w, spec.stride, spec.padding, x.h, x.w};
  const std::size_t k_rows = win.rows();

  Tensor<T> out(out_shape);
  std::vector<T> cols(k_rows * win.cols());
  const Tensor<T>& xv = input.value();
  const Tensor<T>& wv = weight.value();
  for (std::size_t n = 0; n < x.n; ++n) {
    for (std::size_t g = 0; g < G; ++g) {
      ConstMatMap<T> W(wv.raw() + g * in_per_group * k_rows, static_cast<Eigen::Index>(in_per_group),
                       static_cast<Eigen::Index>(k_rows));
      ConstMatMap<T> X(xv.plane(n, g * in_per_group), static_cast<Eigen::Index>(in_per_group),
                       static_cast<Eigen::Index>(win.cols()));
      MatMap<T> C(cols.data(), static_cast<Eigen::Index>(k_rows), static_cast<Eigen::Index>(win.cols()));
      C.noalias() = W.transpose() * X;
      col2im(cols.data(), win, out.plane(n, g * out_per_group));
    }
  }
  add_bias(out, bias);
  detail::report_macs(op, out_shape,
                      static_cast<std::uint64_t>(x.n) * x.h * x.w * k.h * k.w * k.n * out_per_group);

  auto backward = [win, G, in_per_group, x](Node<T>& self) {
    Node<T>* xin = self.parents[0].get();
    Node<T>* wn = self.parents[1].get();
    Node<T>* bn = self.parents[2].get();
    const Tensor<T>& gy = self.grad;
    const std::size_t k_rows = win.rows();
    std::vector<T> cols(k_rows * win.cols());
    for (std::size_t n = 0; n < x.n; ++n) {
      for (std::size_t g = 0; g < G; ++g) {
        im2col(gy.plane(n, g * win.channels), win, cols.data());
        ConstMatMap<T> C(cols.data(), static_cast<Eigen::Index>(k_rows), static_cast<Eigen::Index>(win.cols()));
        if (xin->requires_grad) {
          ConstMatMap<T> W(wn->value.raw() + g * in_per_group * k_rows,
                           static_cast<Eigen::Index>(in_per_group), static_cast<Eigen::Index>(k_rows));
          MatMap<T> GX(xin->grad_buffer().plane(n, g * in_per_group),
                       static_cast<Eigen::Index>(in_per_group), static_cast<Eigen::Index>(win.cols()));
          GX.noalias() += W * C;
        }
        if (wn->requires_grad) {
          ConstMatMap<T> X(xin->value.plane(n, g * in_per_group), static_cast<Eigen::Index>(in_per_group),
                           static_cast<Eigen::Index>(win.cols()));
          MatMap<T> GW(wn->grad_buffer().raw() + g * in_per_group * k_rows,
                       static_cast<Eigen::Index>(in_per_group), static_cast<Eigen::Index>(k_rows));
          GW.noalias() += X * C.transpose();
        }
      }
    }
    accumulate_bias_grad(gy, bn);
  };
  return make_result<T>(std::move(out), {input, weight, bias}, std::move(backward));
}

template <typename T>
Var<T> leaky_relu(const Var<T>& input, T slope) {
  const Tensor<T>& x = input.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] >= T(0) ? x[i] : slope * x[i];
  return make_result<T>(std::move(out), {input}, [slope](Node<T>& self) {
    Node<T>* in = self.parents[0].get();
    const Tensor<T>& x = in->value;
    T* gx = in->grad_buffer().raw();
    for (std::size_t i = 0; i < x.numel(); ++i) gx[i] += x[i] >= T(0) ? self.grad[i] : slope * self.grad[i];
  });
}

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n) throw DimensionError(axis_error("concat_channels", "N", sb.n, sa.n));
  if (sa.h != sb.h) throw DimensionError(axis_error("concat_channels", "H", sb.h, sa.h));
  if (sa.w != sb.w) throw DimensionError(axis_error("concat_channels", "W", sb.w, sa.w));
  const Shape os{sa.n, sa.c + sb.c, sa.h, sa.w};
  Tensor<T> out(os);
  const std::size_t la = sa.c * sa.plane();
  const std::size_t lb = sb.c * sb.plane();
  for (std::size_t n = 0; n < os.n; ++n) {
    std::copy_n(a.value().raw() + n * la, la, out.raw() + n * (la + lb));
    std::copy_n(b.value().raw() + n * lb, lb, out.raw() + n * (la + lb) + la);
  }
  return make_result<T>(std::move(out), {a, b}, [la, lb, nb = os.n](Node<T>& self) {
    Node<T>* pa = self.parents[0].get();
    Node<T>* pb = self.parents[1].get();
    for (std::size_t n = 0; n < nb; ++n) {
      const T* g = self.grad.raw() + n * (la + lb);
      if (pa->requires_grad) {
        T* d = pa->grad_buffer().raw() + n * la;
        for (std::size_t i = 0; i < la; ++i) d[i] += g[i];
      }
      if (pb->requires_grad) {
        T* d = pb->grad_buffer().raw() + n * lb;
        for (std::size_t i = 0; i < lb; ++i) d[i] += g[la + i];
      }
    }
  });
}

template <typename T>
Var<T> index_select_channels(const Var<T>& input, std::span<const std::size_t> indices) {
  const Shape& s = input.shape();
  for (std::size_t idx : indices) {
    if (idx >= s.c) {
      throw IndexError("index_select_channels: channel index " + std::to_string(idx) +
                       " out of range for " + std::to_string(s.c) + " channels");
    }
  }
  const Shape os{s.n, indices.size(), s.h, s.w};
  Tensor<T> out(os);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t j = 0; j < indices.size(); ++j)
      std::copy_n(input.value().plane(n, indices[j]), s.plane(), out.plane(n, j));
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make_result<T>(std::move(out), {input}, [idx = std::move(idx)](Node<T>& self) {
    Node<T>* in = self.parents[0].get();
    Tensor<T>& gx = in->grad_buffer();
    const Shape& s = gx.shape();
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const T* g = self.grad.plane(n, j);
        T* d = gx.plane(n, idx[j]);
        for (std::size_t i = 0; i < s.plane(); ++i) d[i] += g[i];
      }
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa != sb) throw DimensionError("add: shape mismatch " + sa.str() + " vs " + sb.str());
  Tensor<T> out(sa);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      T* d = p->grad_buffer().raw();
      for (std::size_t i = 0; i < self.grad.numel(); ++i) d[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = factor * a.value()[i];
  return make_result<T>(std::move(out), {a}, [factor](Node<T>& self) {
    T* d = self.parents[0]->grad_buffer().raw();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) d[i] += factor * self.grad[i];
  });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  T acc = T(0);
  for (T v : a.value().data()) acc += v;
  return make_result<T>(Tensor<T>({1, 1, 1, 1}, acc), {a}, [](Node<T>& self) {
    const T g = self.grad[0];
    for (T& d : self.parents[0]->grad_buffer().data()) d += g;
  });
}

template <typename T>
Var<T> weighted_sum(const Var<T>& a, const Tensor<T>& weights) {
  if (a.shape() != weights.shape()) {
    throw DimensionError("weighted_sum: shape mismatch " + a.shape().str() + " vs " + weights.shape().str());
  }
  T acc = T(0);
  for (std::size_t i = 0; i < weights.numel(); ++i) acc += a.value()[i] * weights[i];
  return make_result<T>(Tensor<T>({1, 1, 1, 1}, acc), {a}, [weights](Node<T>& self) {
    const T g = self.grad[0];
    T* d = self.parents[0]->grad_buffer().raw();
    for (std::size_t i = 0; i < weights.numel(); ++i) d[i] += g * weights[i];
  });
}

template <typename T>
Var<T> scalar(T value) {
  return Var<T>(Tensor<T>({1, 1, 1, 1}, value));
}

#define SRCN_INSTANTIATE_OPS(T)                                                                  \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, const ConvSpec&);          \
  template Var<T> masked_conv2d(const Var<T>&, const Var<T>&, std::span<const std::uint8_t>,     \
                                const Var<T>&, const ConvSpec&);                                 \
  template Var<T> conv_transpose2d(const Var<T>&, const Var<T>&, const Var<T>&, const ConvSpec&); \
  template Var<T> leaky_relu(const Var<T>&, T);                                                  \
  template Var<T> concat_channels(const Var<T>&, const Var<T>&);                                 \
  template Var<T> index_select_channels(const Var<T>&, std::span<const std::size_t>);            \
  template Var<T> add(const Var<T>&, const Var<T>&);                                             \
  template Var<T> scale(const Var<T>&, T);                                                       \
  template Var<T> sum(const Var<T>&);                                                            \
  template Var<T> weighted_sum(const Var<T>&, const Tensor<T>&);                                 \
  template Var<T> scalar(T);

SRCN_INSTANTIATE_OPS(float)
SRCN_INSTANTIATE_OPS(double)

}  // namespace srcn
