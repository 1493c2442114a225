#pragma once

// Minimal dense-tensor engine with reverse-mode differentiation: a
// define-by-run graph of shared nodes, just enough operators for the
// detector architectures, double precision throughout. Inner kernels of
// matmul/dense/conv go through Eigen GEMM via im2col.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace gazemap::nn {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;  ///< row-major

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(checked_numel(shape), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != checked_numel(shape))
      throw std::invalid_argument("Tensor: data length does not match shape");
  }

  int64_t size() const { return static_cast<int64_t>(data.size()); }

  static int64_t checked_numel(std::span<const int> s) {
    if (s.empty()) throw std::invalid_argument("Tensor: empty shape");
    int64_t n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
      n *= d;
    }
    return n;
  }
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  ///< same shape as value; accumulated by backward
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;  ///< adds into parents' grads
  /// Distance to the nearest non-differentiable point of this op (relu zero
  /// crossing, pooling argmax tie); unset for smooth ops.
  std::function<double(const Node&)> kink_fn;
  std::string op;

  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

inline NodePtr leaf(Tensor value, std::string op = "leaf") {
  auto n = std::make_shared<Node>();
  n->grad = Tensor(value.shape);
  n->value = std::move(value);
  n->op = std::move(op);
  return n;
}

namespace detail {

using MatRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;

inline NodePtr make_node(Tensor value, std::vector<NodePtr> parents,
                         std::string op) {
  auto n = std::make_shared<Node>();
  n->grad = Tensor(value.shape);
  n->value = std::move(value);
  n->parents = std::move(parents);
  n->op = std::move(op);
  return n;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline bool same_shape(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape;
}

/// Unfolds a zero-padded [C,H,W] input into a [C*9, H*W] patch matrix for
/// 3x3 stride-1 convolution.
inline void im2col2d(const double* x, int c_in, int h, int w, double* col) {
  const int hw = h * w;
  for (int c = 0; c < c_in; ++c) {
    const double* xc = x + static_cast<int64_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        double* row = col + (static_cast<int64_t>(c) * 9 + ky * 3 + kx) * hw;
        for (int y = 0; y < h; ++y) {
          const int iy = y + ky - 1;
          double* dst = row + static_cast<int64_t>(y) * w;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + w, 0.0);
            continue;
          }
          const double* src = xc + static_cast<int64_t>(iy) * w;
          if (kx == 1) {
            std::copy(src, src + w, dst);
          } else if (kx == 0) {
            dst[0] = 0.0;
            std::copy(src, src + w - 1, dst + 1);
          } else {
            std::copy(src + 1, src + w, dst);
            dst[w - 1] = 0.0;
          }
        }
      }
  }
}

/// Transpose of im2col2d: scatter-adds a patch-matrix gradient back onto
/// the input gradient.
inline void col2im2d(const double* col, int c_in, int h, int w, double* dx) {
  const int hw = h * w;
  for (int c = 0; c < c_in; ++c) {
    double* xc = dx + static_cast<int64_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const double* row =
            col + (static_cast<int64_t>(c) * 9 + ky * 3 + kx) * hw;
        for (int y = 0; y < h; ++y) {
          const int iy = y + ky - 1;
          if (iy < 0 || iy >= h) continue;
          const double* src = row + static_cast<int64_t>(y) * w;
          double* dst = xc + static_cast<int64_t>(iy) * w;
          if (kx == 1) {
            for (int x = 0; x < w; ++x) dst[x] += src[x];
          } else if (kx == 0) {
            for (int x = 1; x < w; ++x) dst[x - 1] += src[x];
          } else {
            for (int x = 0; x + 1 < w; ++x) dst[x + 1] += src[x];
          }
        }
      }
  }
}

/// 3D analogue: [C,T,H,W] -> [C*27, T*H*W] for 3x3x3 stride-1 convolution.
inline void im2col3d(const double* x, int c_in, int t_in, int h, int w,
                     double* col) {
  const int hw = h * w;
  const int64_t thw = static_cast<int64_t>(t_in) * hw;
  for (int c = 0; c < c_in; ++c)
    for (int kt = 0; kt < 3; ++kt)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          double* row =
              col + (static_cast<int64_t>(c) * 27 + kt * 9 + ky * 3 + kx) * thw;
          for (int t = 0; t < t_in; ++t) {
            const int it = t + kt - 1;
            double* plane = row + static_cast<int64_t>(t) * hw;
            if (it < 0 || it >= t_in) {
              std::fill(plane, plane + hw, 0.0);
              continue;
            }
            const double* xp = x + c * thw + static_cast<int64_t>(it) * hw;
            for (int y = 0; y < h; ++y) {
              const int iy = y + ky - 1;
              double* dst = plane + static_cast<int64_t>(y) * w;
              if (iy < 0 || iy >= h) {
                std::fill(dst, dst + w, 0.0);
                continue;
              }
              const double* src = xp + static_cast<int64_t>(iy) * w;
              if (kx == 1) {
                std::copy(src, src + w, dst);
              } else if (kx == 0) {
                dst[0] = 0.0;
                std::copy(src, src + w - 1, dst + 1);
              } else {
                std::copy(src + 1, src + w, dst);
                dst[w - 1] = 0.0;
              }
            }
          }
        }
}

inline void col2im3d(const double* col, int c_in, int t_in, int h, int w,
                     double* dx) {
  const int hw = h * w;
  const int64_t thw = static_cast<int64_t>(t_in) * hw;
  for (int c = 0; c < c_in; ++c)
    for (int kt = 0; kt < 3; ++kt)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const double* row =
              col + (static_cast<int64_t>(c) * 27 + kt * 9 + ky * 3 + kx) * thw;
          for (int t = 0; t < t_in; ++t) {
            const int it = t + kt - 1;
            if (it < 0 || it >= t_in) continue;
            const double* plane = row + static_cast<int64_t>(t) * hw;
            double* xp = dx + c * thw + static_cast<int64_t>(it) * hw;
            for (int y = 0; y < h; ++y) {
              const int iy = y + ky - 1;
              if (iy < 0 || iy >= h) continue;
              const double* src = plane + static_cast<int64_t>(y) * w;
              double* dst = xp + static_cast<int64_t>(iy) * w;
              if (kx == 1) {
                for (int x = 0; x < w; ++x) dst[x] += src[x];
              } else if (kx == 0) {
                for (int x = 1; x < w; ++x) dst[x - 1] += src[x];
              } else {
                for (int x = 0; x + 1 < w; ++x) dst[x + 1] += src[x];
              }
            }
          }
        }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise and linear-algebra operators

inline NodePtr add(const NodePtr& a, const NodePtr& b) {
  detail::require(detail::same_shape(a->value, b->value), "add: shape mismatch");
  Tensor y(a->value.shape);
  for (int64_t i = 0; i < y.size(); ++i)
    y.data[i] = a->value.data[i] + b->value.data[i];
  auto n = detail::make_node(std::move(y), {a, b}, "add");
  n->backward_fn = [](Node& self) {
    for (int64_t i = 0; i < self.grad.size(); ++i) {
      self.parents[0]->grad.data[i] += self.grad.data[i];
      self.parents[1]->grad.data[i] += self.grad.data[i];
    }
  };
  return n;
}

inline NodePtr scale(const NodePtr& a, double c) {
  Tensor y(a->value.shape);
  for (int64_t i = 0; i < y.size(); ++i) y.data[i] = c * a->value.data[i];
  auto n = detail::make_node(std::move(y), {a}, "scale");
  n->backward_fn = [c](Node& self) {
    for (int64_t i = 0; i < self.grad.size(); ++i)
      self.parents[0]->grad.data[i] += c * self.grad.data[i];
  };
  return n;
}

inline NodePtr relu(const NodePtr& a) {
  Tensor y(a->value.shape);
  for (int64_t i = 0; i < y.size(); ++i)
    y.data[i] = a->value.data[i] > 0.0 ? a->value.data[i] : 0.0;
  auto n = detail::make_node(std::move(y), {a}, "relu");
  n->backward_fn = [](Node& self) {
    const Tensor& x = self.parents[0]->value;
    for (int64_t i = 0; i < self.grad.size(); ++i)
      if (x.data[i] > 0.0) self.parents[0]->grad.data[i] += self.grad.data[i];
  };
  n->kink_fn = [](const Node& self) {
    double gap = std::numeric_limits<double>::infinity();
    for (double x : self.parents[0]->value.data) gap = std::min(gap, std::abs(x));
    return gap;
  };
  return n;
}

inline NodePtr sigmoid(const NodePtr& a) {
  Tensor y(a->value.shape);
  for (int64_t i = 0; i < y.size(); ++i)
    y.data[i] = 1.0 / (1.0 + std::exp(-a->value.data[i]));
  auto n = detail::make_node(std::move(y), {a}, "sigmoid");
  n->backward_fn = [](Node& self) {
    for (int64_t i = 0; i < self.grad.size(); ++i) {
      const double s = self.value.data[i];
      self.parents[0]->grad.data[i] += self.grad.data[i] * s * (1.0 - s);
    }
  };
  return n;
}

inline NodePtr reshape(const NodePtr& a, std::vector<int> shape) {
  detail::require(Tensor::checked_numel(shape) == a->value.size(),
                  "reshape: element count mismatch");
  Tensor y(std::move(shape), a->value.data);
  auto n = detail::make_node(std::move(y), {a}, "reshape");
  n->backward_fn = [](Node& self) {
    for (int64_t i = 0; i < self.grad.size(); ++i)
      self.parents[0]->grad.data[i] += self.grad.data[i];
  };
  return n;
}

inline NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  detail::require(a->value.shape.size() == 2 && b->value.shape.size() == 2,
                  "matmul: operands must be rank 2");
  const int n = a->value.shape[0], k = a->value.shape[1];
  detail::require(b->value.shape[0] == k, "matmul: inner dimension mismatch");
  const int m = b->value.shape[1];
  Tensor y({n, m});
  {
    detail::CMapM am(a->value.data.data(), n, k);
    detail::CMapM bm(b->value.data.data(), k, m);
    detail::MapM ym(y.data.data(), n, m);
    ym.noalias() = am * bm;
  }
  auto node = detail::make_node(std::move(y), {a, b}, "matmul");
  node->backward_fn = [n, k, m](Node& self) {
    detail::CMapM g(self.grad.data.data(), n, m);
    detail::CMapM am(self.parents[0]->value.data.data(), n, k);
    detail::CMapM bm(self.parents[1]->value.data.data(), k, m);
    detail::MapM da(self.parents[0]->grad.data.data(), n, k);
    detail::MapM db(self.parents[1]->grad.data.data(), k, m);
    da.noalias() += g * bm.transpose();
    db.noalias() += am.transpose() * g;
  };
  return node;
}

/// y = W x + b with x a vector [n], W [m,n], b [m].
inline NodePtr dense(const NodePtr& x, const NodePtr& w, const NodePtr& b) {
  detail::require(x->value.shape.size() == 1 && w->value.shape.size() == 2 &&
                      b->value.shape.size() == 1,
                  "dense: expected x[n], W[m,n], b[m]");
  const int m = w->value.shape[0], n = w->value.shape[1];
  detail::require(x->value.shape[0] == n && b->value.shape[0] == m,
                  "dense: shape mismatch");
  Tensor y({m});
  {
    detail::CMapM wm(w->value.data.data(), m, n);
    detail::CMapV xv(x->value.data.data(), n);
    detail::CMapV bv(b->value.data.data(), m);
    detail::MapV yv(y.data.data(), m);
    yv.noalias() = wm * xv + bv;
  }
  auto node = detail::make_node(std::move(y), {x, w, b}, "dense");
  node->backward_fn = [m, n](Node& self) {
    detail::CMapV g(self.grad.data.data(), m);
    detail::CMapM wm(self.parents[1]->value.data.data(), m, n);
    detail::CMapV xv(self.parents[0]->value.data.data(), n);
    detail::MapV dx(self.parents[0]->grad.data.data(), n);
    detail::MapM dw(self.parents[1]->grad.data.data(), m, n);
    detail::MapV db(self.parents[2]->grad.data.data(), m);
    dx.noalias() += wm.transpose() * g;
    dw.noalias() += g * xv.transpose();
    db.noalias() += g;
  };
  return node;
}

// ---------------------------------------------------------------------------
// convolution

/// 3x3 cross-correlation, stride 1, zero padding 1: x[C_in,H,W],
/// w[C_out,C_in,3,3], b[C_out] -> y[C_out,H,W].
inline NodePtr conv2d(const NodePtr& x, const NodePtr& w, const NodePtr& b) {
  detail::require(x->value.shape.size() == 3 && w->value.shape.size() == 4 &&
                      b->value.shape.size() == 1,
                  "conv2d: expected x[C,H,W], w[O,C,3,3], b[O]");
  const int c_in = x->value.shape[0], h = x->value.shape[1],
            wdt = x->value.shape[2];
  const int c_out = w->value.shape[0];
  detail::require(w->value.shape[1] == c_in && w->value.shape[2] == 3 &&
                      w->value.shape[3] == 3 && b->value.shape[0] == c_out,
                  "conv2d: shape mismatch");
  const int hw = h * wdt, c9 = c_in * 9;
  Tensor y({c_out, h, wdt});
  {
    std::vector<double> col(static_cast<size_t>(c9) * hw);
    detail::im2col2d(x->value.data.data(), c_in, h, wdt, col.data());
    detail::CMapM wm(w->value.data.data(), c_out, c9);
    detail::CMapM cm(col.data(), c9, hw);
    detail::MapM ym(y.data.data(), c_out, hw);
    ym.noalias() = wm * cm;
    for (int c = 0; c < c_out; ++c) ym.row(c).array() += b->value.data[c];
  }
  auto node = detail::make_node(std::move(y), {x, w, b}, "conv2d");
  node->backward_fn = [c_in, c_out, h, wdt, hw, c9](Node& self) {
    // the patch matrix is recomputed from the saved input to keep the
    // closure light
    std::vector<double> col(static_cast<size_t>(c9) * hw);
    detail::im2col2d(self.parents[0]->value.data.data(), c_in, h, wdt,
                     col.data());
    detail::CMapM g(self.grad.data.data(), c_out, hw);
    detail::CMapM cm(col.data(), c9, hw);
    detail::MapM dw(self.parents[1]->grad.data.data(), c_out, c9);
    dw.noalias() += g * cm.transpose();
    detail::CMapM wm(self.parents[1]->value.data.data(), c_out, c9);
    std::vector<double> dcol(static_cast<size_t>(c9) * hw);
    detail::MapM dc(dcol.data(), c9, hw);
    dc.noalias() = wm.transpose() * g;
    detail::col2im2d(dcol.data(), c_in, h, wdt,
                     self.parents[0]->grad.data.data());
    for (int c = 0; c < c_out; ++c)
      self.parents[2]->grad.data[c] += g.row(c).sum();
  };
  return node;
}

/// 3x3x3 cross-correlation, stride 1, zero padding 1 in t/y/x:
/// x[C_in,T,H,W], w[C_out,C_in,3,3,3], b[C_out] -> y[C_out,T,H,W].
inline NodePtr conv3d(const NodePtr& x, const NodePtr& w, const NodePtr& b) {
  detail::require(x->value.shape.size() == 4 && w->value.shape.size() == 5 &&
                      b->value.shape.size() == 1,
                  "conv3d: expected x[C,T,H,W], w[O,C,3,3,3], b[O]");
  const int c_in = x->value.shape[0], t_in = x->value.shape[1],
            h = x->value.shape[2], wdt = x->value.shape[3];
  const int c_out = w->value.shape[0];
  detail::require(w->value.shape[1] == c_in && w->value.shape[2] == 3 &&
                      w->value.shape[3] == 3 && w->value.shape[4] == 3 &&
                      b->value.shape[0] == c_out,
                  "conv3d: shape mismatch");
  const int64_t thw = static_cast<int64_t>(t_in) * h * wdt;
  const int c27 = c_in * 27;
  Tensor y({c_out, t_in, h, wdt});
  {
    std::vector<double> col(static_cast<size_t>(c27) * thw);
    detail::im2col3d(x->value.data.data(), c_in, t_in, h, wdt, col.data());
    detail::CMapM wm(w->value.data.data(), c_out, c27);
    detail::CMapM cm(col.data(), c27, thw);
    detail::MapM ym(y.data.data(), c_out, thw);
    ym.noalias() = wm * cm;
    for (int c = 0; c < c_out; ++c) ym.row(c).array() += b->value.data[c];
  }
  auto node = detail::make_node(std::move(y), {x, w, b}, "conv3d");
  node->backward_fn = [c_in, c_out, t_in, h, wdt, thw, c27](Node& self) {
    std::vector<double> col(static_cast<size_t>(c27) * thw);
    detail::im2col3d(self.parents[0]->value.data.data(), c_in, t_in, h, wdt,
                     col.data());
    detail::CMapM g(self.grad.data.data(), c_out, thw);
    detail::CMapM cm(col.data(), c27, thw);
    detail::MapM dw(self.parents[1]->grad.data.data(), c_out, c27);
    dw.noalias() += g * cm.transpose();
    detail::CMapM wm(self.parents[1]->value.data.data(), c_out, c27);
    std::vector<double> dcol(static_cast<size_t>(c27) * thw);
    detail::MapM dc(dcol.data(), c27, thw);
    dc.noalias() = wm.transpose() * g;
    detail::col2im3d(dcol.data(), c_in, t_in, h, wdt,
                     self.parents[0]->grad.data.data());
    for (int c = 0; c < c_out; ++c)
      self.parents[2]->grad.data[c] += g.row(c).sum();
  };
  return node;
}

// ---------------------------------------------------------------------------
// pooling, upsampling, concatenation

namespace detail {

/// Clamped window coordinates min(base+d, limit-1) for d in [0,k), with
/// replication duplicates removed. Returns the count written to `out`.
inline int unique_coords(int base, int k, int limit, int* out) {
  int cnt = 0;
  for (int d = 0; d < k; ++d) {
    const int v = std::min(base + d, limit - 1);
    if (cnt == 0 || out[cnt - 1] != v) out[cnt++] = v;
  }
  return cnt;
}

inline double window_gap(std::span<const double> vals) {
  // gap between the two largest distinct scan values; ties at the top give 0
  double best = -std::numeric_limits<double>::infinity(), second = best;
  for (double v : vals) {
    if (v > best) {
      second = best;
      best = v;
    } else if (v > second) {
      second = v;
    }
  }
  if (!(second > -std::numeric_limits<double>::infinity()))
    return std::numeric_limits<double>::infinity();
  return best - second;
}

}  // namespace detail

/// 2x2 spatial max-pool, stride 2. Odd extents are replication-padded, so
/// output dims are ceil(H/2) x ceil(W/2).
inline NodePtr maxpool2d(const NodePtr& x) {
  detail::require(x->value.shape.size() == 3, "maxpool2d: expected x[C,H,W]");
  const int c_n = x->value.shape[0], h = x->value.shape[1],
            w = x->value.shape[2];
  const int oh = (h + 1) / 2, ow = (w + 1) / 2;
  Tensor y({c_n, oh, ow});
  auto argmax = std::make_shared<std::vector<int64_t>>(y.size());
  int64_t o = 0;
  for (int c = 0; c < c_n; ++c) {
    const double* xc = x->value.data.data() + static_cast<int64_t>(c) * h * w;
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox, ++o) {
        double best = -std::numeric_limits<double>::infinity();
        int64_t best_i = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int iy = std::min(2 * oy + dy, h - 1);
            const int ix = std::min(2 * ox + dx, w - 1);
            const int64_t idx = static_cast<int64_t>(iy) * w + ix;
            if (xc[idx] > best) {
              best = xc[idx];
              best_i = static_cast<int64_t>(c) * h * w + idx;
            }
          }
        y.data[o] = best;
        (*argmax)[o] = best_i;
      }
  }
  auto node = detail::make_node(std::move(y), {x}, "maxpool2d");
  node->backward_fn = [argmax](Node& self) {
    for (int64_t i = 0; i < self.grad.size(); ++i)
      self.parents[0]->grad.data[(*argmax)[i]] += self.grad.data[i];
  };
  node->kink_fn = [c_n, h, w, oh, ow](const Node& self) {
    // replication duplicates are excluded: a clamped copy moves with its
    // source under perturbation, so it is not a real tie
    const double* xd = self.parents[0]->value.data.data();
    double gap = std::numeric_limits<double>::infinity();
    int ys[2], xs[2];
    for (int c = 0; c < c_n; ++c)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const int ny = detail::unique_coords(2 * oy, 2, h, ys);
          const int nx = detail::unique_coords(2 * ox, 2, w, xs);
          double vals[4];
          int k = 0;
          for (int a = 0; a < ny; ++a)
            for (int b = 0; b < nx; ++b)
              vals[k++] = xd[(static_cast<int64_t>(c) * h + ys[a]) * w + xs[b]];
          gap = std::min(gap, detail::window_gap({vals, static_cast<size_t>(k)}));
        }
    return gap;
  };
  return node;
}

/// (kt,2,2) max-pool with stride equal to the window; replication padding on
/// every axis, so output dims are the ceilings.
inline NodePtr maxpool3d(const NodePtr& x, int kt = 2) {
  detail::require(x->value.shape.size() == 4, "maxpool3d: expected x[C,T,H,W]");
  detail::require(kt >= 1, "maxpool3d: kt must be >= 1");
  const int c_n = x->value.shape[0], t_in = x->value.shape[1],
            h = x->value.shape[2], w = x->value.shape[3];
  const int ot = (t_in + kt - 1) / kt, oh = (h + 1) / 2, ow = (w + 1) / 2;
  Tensor y({c_n, ot, oh, ow});
  auto argmax = std::make_shared<std::vector<int64_t>>(y.size());
  const int64_t thw = static_cast<int64_t>(t_in) * h * w;
  int64_t o = 0;
  for (int c = 0; c < c_n; ++c) {
    const double* xc = x->value.data.data() + c * thw;
    for (int oy_t = 0; oy_t < ot; ++oy_t)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox, ++o) {
          double best = -std::numeric_limits<double>::infinity();
          int64_t best_i = 0;
          for (int dt = 0; dt < kt; ++dt)
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                const int it = std::min(kt * oy_t + dt, t_in - 1);
                const int iy = std::min(2 * oy + dy, h - 1);
                const int ix = std::min(2 * ox + dx, w - 1);
                const int64_t idx =
                    (static_cast<int64_t>(it) * h + iy) * w + ix;
                if (xc[idx] > best) {
                  best = xc[idx];
                  best_i = c * thw + idx;
                }
              }
          y.data[o] = best;
          (*argmax)[o] = best_i;
        }
  }
  auto node = detail::make_node(std::move(y), {x}, "maxpool3d");
  node->backward_fn = [argmax](Node& self) {
    for (int64_t i = 0; i < self.grad.size(); ++i)
      self.parents[0]->grad.data[(*argmax)[i]] += self.grad.data[i];
  };
  node->kink_fn = [c_n, t_in, h, w, ot, oh, ow, kt, thw](const Node& self) {
    const double* xd = self.parents[0]->value.data.data();
    double gap = std::numeric_limits<double>::infinity();
    std::vector<int> ts(kt);
    int ys[2], xs[2];
    std::vector<double> vals;
    for (int c = 0; c < c_n; ++c)
      for (int oy_t = 0; oy_t < ot; ++oy_t)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            const int nt = detail::unique_coords(kt * oy_t, kt, t_in, ts.data());
            const int ny = detail::unique_coords(2 * oy, 2, h, ys);
            const int nx = detail::unique_coords(2 * ox, 2, w, xs);
            vals.clear();
            for (int a = 0; a < nt; ++a)
              for (int b = 0; b < ny; ++b)
                for (int d = 0; d < nx; ++d)
                  vals.push_back(
                      xd[c * thw +
                         (static_cast<int64_t>(ts[a]) * h + ys[b]) * w + xs[d]]);
            gap = std::min(gap, detail::window_gap(vals));
          }
    return gap;
  };
  return node;
}

/// Max over the whole time axis: x[C,T,H,W] -> y[C,H,W].
inline NodePtr temporal_global_maxpool(const NodePtr& x) {
  detail::require(x->value.shape.size() == 4,
                  "temporal_global_maxpool: expected x[C,T,H,W]");
  const int c_n = x->value.shape[0], t_in = x->value.shape[1],
            h = x->value.shape[2], w = x->value.shape[3];
  const int64_t hw = static_cast<int64_t>(h) * w, thw = t_in * hw;
  Tensor y({c_n, h, w});
  auto argmax = std::make_shared<std::vector<int64_t>>(y.size());
  for (int c = 0; c < c_n; ++c)
    for (int64_t p = 0; p < hw; ++p) {
      double best = -std::numeric_limits<double>::infinity();
      int64_t best_i = 0;
      for (int t = 0; t < t_in; ++t) {
        const int64_t idx = c * thw + t * hw + p;
        if (x->value.data[idx] > best) {
          best = x->value.data[idx];
          best_i = idx;
        }
      }
      y.data[c * hw + p] = best;
      (*argmax)[c * hw + p] = best_i;
    }
  auto node = detail::make_node(std::move(y), {x}, "tmaxpool");
  node->backward_fn = [argmax](Node& self) {
    for (int64_t i = 0; i < self.grad.size(); ++i)
      self.parents[0]->grad.data[(*argmax)[i]] += self.grad.data[i];
  };
  node->kink_fn = [c_n, t_in, hw, thw](const Node& self) {
    if (t_in < 2) return std::numeric_limits<double>::infinity();
    const double* xd = self.parents[0]->value.data.data();
    double gap = std::numeric_limits<double>::infinity();
    std::vector<double> vals(t_in);
    for (int c = 0; c < c_n; ++c)
      for (int64_t p = 0; p < hw; ++p) {
        for (int t = 0; t < t_in; ++t) vals[t] = xd[c * thw + t * hw + p];
        gap = std::min(gap, detail::window_gap(vals));
      }
    return gap;
  };
  return node;
}

/// Nearest-neighbor factor-2 upsampling: x[C,H,W] -> y[C,2H,2W].
inline NodePtr upsample2d(const NodePtr& x) {
  detail::require(x->value.shape.size() == 3, "upsample2d: expected x[C,H,W]");
  const int c_n = x->value.shape[0], h = x->value.shape[1],
            w = x->value.shape[2];
  Tensor y({c_n, 2 * h, 2 * w});
  for (int c = 0; c < c_n; ++c)
    for (int oy = 0; oy < 2 * h; ++oy)
      for (int ox = 0; ox < 2 * w; ++ox)
        y.data[(static_cast<int64_t>(c) * 2 * h + oy) * 2 * w + ox] =
            x->value.data[(static_cast<int64_t>(c) * h + oy / 2) * w + ox / 2];
  auto node = detail::make_node(std::move(y), {x}, "upsample2d");
  node->backward_fn = [c_n, h, w](Node& self) {
    for (int c = 0; c < c_n; ++c)
      for (int oy = 0; oy < 2 * h; ++oy)
        for (int ox = 0; ox < 2 * w; ++ox)
          self.parents[0]
              ->grad.data[(static_cast<int64_t>(c) * h + oy / 2) * w + ox / 2] +=
              self.grad.data[(static_cast<int64_t>(c) * 2 * h + oy) * 2 * w + ox];
  };
  return node;
}

/// Concatenates along the channel axis: [Ca,H,W] + [Cb,H,W] -> [Ca+Cb,H,W].
inline NodePtr concat_channels(const NodePtr& a, const NodePtr& b) {
  detail::require(a->value.shape.size() == 3 && b->value.shape.size() == 3 &&
                      a->value.shape[1] == b->value.shape[1] &&
                      a->value.shape[2] == b->value.shape[2],
                  "concat_channels: expected [Ca,H,W] and [Cb,H,W]");
  const int ca = a->value.shape[0], cb = b->value.shape[0];
  const int h = a->value.shape[1], w = a->value.shape[2];
  Tensor y({ca + cb, h, w});
  std::copy(a->value.data.begin(), a->value.data.end(), y.data.begin());
  std::copy(b->value.data.begin(), b->value.data.end(),
            y.data.begin() + a->value.size());
  auto node = detail::make_node(std::move(y), {a, b}, "concat");
  node->backward_fn = [](Node& self) {
    const int64_t na = self.parents[0]->grad.size();
    for (int64_t i = 0; i < na; ++i)
      self.parents[0]->grad.data[i] += self.grad.data[i];
    for (int64_t i = 0; i < self.parents[1]->grad.size(); ++i)
      self.parents[1]->grad.data[i] += self.grad.data[i + na];
  };
  return node;
}

// ---------------------------------------------------------------------------
// loss, backward pass, optimizer

/// Mean of squared differences against a constant target.
inline NodePtr mse_loss(const NodePtr& pred, const Tensor& target) {
  detail::require(detail::same_shape(pred->value, target),
                  "mse_loss: shape mismatch");
  const int64_t n = pred->value.size();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double d = pred->value.data[i] - target.data[i];
    acc += d * d;
  }
  Tensor y({1});
  y.data[0] = acc / static_cast<double>(n);
  auto node = detail::make_node(std::move(y), {pred}, "mse");
  node->backward_fn = [target, n](Node& self) {
    const double coeff = 2.0 * self.grad.data[0] / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i)
      self.parents[0]->grad.data[i] +=
          coeff * (self.parents[0]->value.data[i] - target.data[i]);
  };
  return node;
}

/// Nodes reachable from `root` in topological order (parents before
/// children).
inline std::vector<Node*> topo_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> seen{root};
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root, 0);
  while (!stack.empty()) {
    Node* n = stack.back().first;
    size_t& i = stack.back().second;
    if (i < n->parents.size()) {
      Node* p = n->parents[i++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  return order;
}

/// Reverse-mode sweep from a scalar root; each reachable node's backward
/// runs exactly once. Gradients accumulate into whatever is already in the
/// buffers — fresh nodes start at zero, persistent leaves keep summing
/// across calls (use seed = 1/B for batch averaging).
inline void backward(const NodePtr& root, double seed = 1.0) {
  if (root->value.size() != 1)
    throw std::invalid_argument("backward: root must be scalar");
  std::vector<Node*> order = topo_order(root.get());
  root->grad.data[0] += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

/// Smallest distance to a non-differentiable point over the whole graph
/// (infinity when every op is smooth at the current values). Finite-
/// difference checks resample inputs while this is below the probe step.
inline double min_kink_gap(const NodePtr& root) {
  double gap = std::numeric_limits<double>::infinity();
  for (Node* n : topo_order(root.get()))
    if (n->kink_fn) gap = std::min(gap, n->kink_fn(*n));
  return gap;
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter list. Gradients are
/// read from each parameter node's grad buffer.
class Adam {
 public:
  explicit Adam(std::vector<NodePtr> params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const NodePtr& p : params_) {
      m_.emplace_back(p->value.shape);
      v_.emplace_back(p->value.shape);
    }
  }

  void zero_grad() {
    for (const NodePtr& p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (size_t k = 0; k < params_.size(); ++k) {
      Tensor& p = params_[k]->value;
      const Tensor& g = params_[k]->grad;
      for (int64_t i = 0; i < p.size(); ++i) {
        m_[k].data[i] = cfg_.beta1 * m_[k].data[i] + (1.0 - cfg_.beta1) * g.data[i];
        v_[k].data[i] =
            cfg_.beta2 * v_[k].data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
        const double mhat = m_[k].data[i] / bc1;
        const double vhat = v_[k].data[i] / bc2;
        p.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  const std::vector<NodePtr>& params() const { return params_; }

  /// Adjusts the step size mid-run (used by schedules); moment state and
  /// the bias-correction counter are kept.
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  std::vector<NodePtr> params_;
  std::vector<Tensor> m_, v_;
  AdamConfig cfg_;
  long t_ = 0;
};

// ---------------------------------------------------------------------------
// finite-difference verification

struct GradCheckReport {
  double max_rel_err = 0.0;
  long long checked = 0;
  std::string worst_leaf;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares reverse-mode gradients at `leaves` against central differences
/// of the scalar produced by `rebuild` (which must reconstruct the graph
/// from the leaves' current values on every call). Coordinates are
/// subsampled per leaf when `max_coords_per_leaf` >= 0.
template <typename F>
GradCheckReport grad_check(F&& rebuild, std::span<const NodePtr> leaves,
                           long long max_coords_per_leaf = -1,
                           uint64_t seed = 0, double h = 1e-5) {
  for (const NodePtr& l : leaves) l->zero_grad();
  NodePtr root = rebuild();
  backward(root);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (const NodePtr& l : leaves) analytic.push_back(l->grad.data);

  GradCheckReport rep;
  std::mt19937_64 rng(seed);
  for (size_t li = 0; li < leaves.size(); ++li) {
    const NodePtr& l = leaves[li];
    const int64_t n = l->value.size();
    std::vector<int64_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords_per_leaf >= 0 && n > max_coords_per_leaf) {
      for (int64_t i = 0; i < max_coords_per_leaf; ++i) {
        const int64_t j =
            i + static_cast<int64_t>(rng() % static_cast<uint64_t>(n - i));
        std::swap(coords[i], coords[j]);
      }
      coords.resize(max_coords_per_leaf);
    }
    for (int64_t i : coords) {
      const double orig = l->value.data[i];
      l->value.data[i] = orig + h;
      const double f_plus = rebuild()->value.data[0];
      l->value.data[i] = orig - h;
      const double f_minus = rebuild()->value.data[0];
      l->value.data[i] = orig;
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double ana = analytic[li][i];
      const double rel = std::abs(ana - numeric) /
                         std::max({std::abs(ana), std::abs(numeric), 1e-6});
      ++rep.checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_leaf = l->op + "[" + std::to_string(i) + "]";
        rep.worst_analytic = ana;
        rep.worst_numeric = numeric;
      }
    }
  }
  return rep;
}

}  // namespace gazemap::nn
