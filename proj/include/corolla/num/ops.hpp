#pragma once

#include <algorithm>
#include <cmath>

#include "corolla/num/autodiff.hpp"

namespace corolla::num {

namespace detail {

template <class T>
void shapes_equal(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    require(a.same_shape(b), ErrorCode::shape_mismatch,
            std::string(op) + ": shape mismatch " +
                Tensor<T>::shape_str(a.shape) + " vs " +
                Tensor<T>::shape_str(b.shape));
}

// Collapse a shape to [outer, axis_dim, inner] around `axis`.
inline void axis_strides(const std::vector<size_t>& shape, size_t axis,
                         size_t& outer, size_t& dim, size_t& inner) {
    outer = 1;
    for (size_t i = 0; i < axis; ++i) outer *= shape[i];
    dim = shape[axis];
    inner = 1;
    for (size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
}

}  // namespace detail

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    detail::shapes_equal(a.value(), b.value(), "add");
    Tensor<T> out = a.value();
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.value().data[i];
    return make_op<T>("add", std::move(out), {a, b}, [](Node<T>& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
        if (n.parents[1]->requires_grad) n.parents[1]->accumulate(n.grad);
    });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    detail::shapes_equal(a.value(), b.value(), "sub");
    Tensor<T> out = a.value();
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.value().data[i];
    return make_op<T>("sub", std::move(out), {a, b}, [](Node<T>& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor<T> g = n.grad;
            for (auto& v : g.data) v = -v;
            n.parents[1]->accumulate(g);
        }
    });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    detail::shapes_equal(a.value(), b.value(), "mul");
    Tensor<T> out = a.value();
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.value().data[i];
    return make_op<T>("mul", std::move(out), {a, b}, [](Node<T>& n) {
        if (n.parents[0]->requires_grad) {
            Tensor<T> g = n.grad;
            for (size_t i = 0; i < g.data.size(); ++i)
                g.data[i] *= n.parents[1]->value.data[i];
            n.parents[0]->accumulate(g);
        }
        if (n.parents[1]->requires_grad) {
            Tensor<T> g = n.grad;
            for (size_t i = 0; i < g.data.size(); ++i)
                g.data[i] *= n.parents[0]->value.data[i];
            n.parents[1]->accumulate(g);
        }
    });
}

template <class T>
Var<T> scale(const Var<T>& a, T s) {
    Tensor<T> out = a.value();
    for (auto& v : out.data) v *= s;
    return make_op<T>("scale", std::move(out), {a}, [s](Node<T>& n) {
        if (!n.parents[0]->requires_grad) return;
        Tensor<T> g = n.grad;
        for (auto& v : g.data) v *= s;
        n.parents[0]->accumulate(g);
    });
}

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    const auto& A = a.value();
    const auto& B = b.value();
    require(A.rank() == 2 && B.rank() == 2, ErrorCode::shape_mismatch,
            "matmul: rank-2 operands required");
    require(A.shape[1] == B.shape[0], ErrorCode::shape_mismatch,
            "matmul: inner dimensions differ");
    size_t m = A.shape[0], k = A.shape[1], n = B.shape[1];
    Tensor<T> out({m, n});
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) {
            T acc = T(0);
            for (size_t p = 0; p < k; ++p) acc += A.at2(i, p) * B.at2(p, j);
            out.at2(i, j) = acc;
        }
    return make_op<T>("matmul", std::move(out), {a, b}, [m, k, n](Node<T>& n_) {
        const auto& A = n_.parents[0]->value;
        const auto& B = n_.parents[1]->value;
        const auto& G = n_.grad;
        if (n_.parents[0]->requires_grad) {
            Tensor<T> dA({m, k});
            for (size_t i = 0; i < m; ++i)
                for (size_t p = 0; p < k; ++p) {
                    T acc = T(0);
                    for (size_t j = 0; j < n; ++j)
                        acc += G.at2(i, j) * B.at2(p, j);
                    dA.at2(i, p) = acc;
                }
            n_.parents[0]->accumulate(dA);
        }
        if (n_.parents[1]->requires_grad) {
            Tensor<T> dB({k, n});
            for (size_t p = 0; p < k; ++p)
                for (size_t j = 0; j < n; ++j) {
                    T acc = T(0);
                    for (size_t i = 0; i < m; ++i)
                        acc += A.at2(i, p) * G.at2(i, j);
                    dB.at2(p, j) = acc;
                }
            n_.parents[1]->accumulate(dB);
        }
    });
}

template <class T>
Var<T> transpose(const Var<T>& a) {
    const auto& A = a.value();
    require(A.rank() == 2, ErrorCode::shape_mismatch, "transpose: rank-2 only");
    size_t m = A.shape[0], n = A.shape[1];
    Tensor<T> out({n, m});
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) out.at2(j, i) = A.at2(i, j);
    return make_op<T>("transpose", std::move(out), {a}, [m, n](Node<T>& nd) {
        if (!nd.parents[0]->requires_grad) return;
        Tensor<T> g({m, n});
        for (size_t i = 0; i < m; ++i)
            for (size_t j = 0; j < n; ++j) g.at2(i, j) = nd.grad.at2(j, i);
        nd.parents[0]->accumulate(g);
    });
}

// y = W x + b, W:[out x in], x:[in], b:[out].
template <class T>
Var<T> linear(const Var<T>& w, const Var<T>& x, const Var<T>& b) {
    const auto& W = w.value();
    const auto& X = x.value();
    const auto& B = b.value();
    require(W.rank() == 2 && X.rank() == 1 && B.rank() == 1,
            ErrorCode::shape_mismatch, "linear: expected W[o,i], x[i], b[o]");
    require(W.shape[1] == X.shape[0] && W.shape[0] == B.shape[0],
            ErrorCode::shape_mismatch, "linear: dimension mismatch");
    size_t o = W.shape[0], in = W.shape[1];
    Tensor<T> out({o});
    for (size_t r = 0; r < o; ++r) {
        T acc = B[r];
        for (size_t c = 0; c < in; ++c) acc += W.at2(r, c) * X[c];
        out[r] = acc;
    }
    return make_op<T>("linear", std::move(out), {w, x, b}, [o, in](Node<T>& n) {
        const auto& W = n.parents[0]->value;
        const auto& X = n.parents[1]->value;
        const auto& G = n.grad;
        if (n.parents[0]->requires_grad) {
            Tensor<T> dW({o, in});
            for (size_t r = 0; r < o; ++r)
                for (size_t c = 0; c < in; ++c) dW.at2(r, c) = G[r] * X[c];
            n.parents[0]->accumulate(dW);
        }
        if (n.parents[1]->requires_grad) {
            Tensor<T> dX({in});
            for (size_t c = 0; c < in; ++c) {
                T acc = T(0);
                for (size_t r = 0; r < o; ++r) acc += W.at2(r, c) * G[r];
                dX[c] = acc;
            }
            n.parents[1]->accumulate(dX);
        }
        if (n.parents[2]->requires_grad) n.parents[2]->accumulate(G);
    });
}

// Valid-padding cross-correlation. x:[ci,h,w], k:[co,ci,kh,kw].
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& k, size_t stride = 1) {
    const auto& X = x.value();
    const auto& K = k.value();
    require(X.rank() == 3 && K.rank() == 4, ErrorCode::shape_mismatch,
            "conv2d: expected x[ci,h,w], k[co,ci,kh,kw]");
    require(K.shape[1] == X.shape[0], ErrorCode::shape_mismatch,
            "conv2d: channel mismatch");
    require(stride >= 1, ErrorCode::invalid_argument, "conv2d: stride >= 1");
    size_t ci = X.shape[0], h = X.shape[1], w = X.shape[2];
    size_t co = K.shape[0], kh = K.shape[2], kw = K.shape[3];
    require(kh <= h && kw <= w, ErrorCode::shape_mismatch,
            "conv2d: kernel larger than input");
    size_t oh = (h - kh) / stride + 1, ow = (w - kw) / stride + 1;
    Tensor<T> out({co, oh, ow});
    for (size_t o = 0; o < co; ++o)
        for (size_t i = 0; i < oh; ++i)
            for (size_t j = 0; j < ow; ++j) {
                T acc = T(0);
                for (size_t c = 0; c < ci; ++c)
                    for (size_t p = 0; p < kh; ++p)
                        for (size_t q = 0; q < kw; ++q)
                            acc += X.at3(c, i * stride + p, j * stride + q) *
                                   K.at4(o, c, p, q);
                out.at3(o, i, j) = acc;
            }
    return make_op<T>(
        "conv2d", std::move(out), {x, k},
        [ci, h, w, co, kh, kw, oh, ow, stride](Node<T>& n) {
            const auto& X = n.parents[0]->value;
            const auto& K = n.parents[1]->value;
            const auto& G = n.grad;
            if (n.parents[0]->requires_grad) {
                Tensor<T> dX({ci, h, w});
                for (size_t o = 0; o < co; ++o)
                    for (size_t i = 0; i < oh; ++i)
                        for (size_t j = 0; j < ow; ++j) {
                            T g = G.at3(o, i, j);
                            for (size_t c = 0; c < ci; ++c)
                                for (size_t p = 0; p < kh; ++p)
                                    for (size_t q = 0; q < kw; ++q)
                                        dX.at3(c, i * stride + p, j * stride + q) +=
                                            g * K.at4(o, c, p, q);
                        }
                n.parents[0]->accumulate(dX);
            }
            if (n.parents[1]->requires_grad) {
                Tensor<T> dK({co, ci, kh, kw});
                for (size_t o = 0; o < co; ++o)
                    for (size_t i = 0; i < oh; ++i)
                        for (size_t j = 0; j < ow; ++j) {
                            T g = G.at3(o, i, j);
                            for (size_t c = 0; c < ci; ++c)
                                for (size_t p = 0; p < kh; ++p)
                                    for (size_t q = 0; q < kw; ++q)
                                        dK.at4(o, c, p, q) +=
                                            g * X.at3(c, i * stride + p,
                                                      j * stride + q);
                        }
                n.parents[1]->accumulate(dK);
            }
        });
}

// x:[c,h,w] plus one bias per channel.
template <class T>
Var<T> bias_channels(const Var<T>& x, const Var<T>& b) {
    const auto& X = x.value();
    const auto& B = b.value();
    require(X.rank() == 3 && B.rank() == 1 && B.shape[0] == X.shape[0],
            ErrorCode::shape_mismatch, "bias_channels: expected x[c,h,w], b[c]");
    size_t c = X.shape[0], hw = X.shape[1] * X.shape[2];
    Tensor<T> out = X;
    for (size_t ch = 0; ch < c; ++ch)
        for (size_t i = 0; i < hw; ++i) out.data[ch * hw + i] += B[ch];
    return make_op<T>("bias_channels", std::move(out), {x, b},
                      [c, hw](Node<T>& n) {
                          if (n.parents[0]->requires_grad)
                              n.parents[0]->accumulate(n.grad);
                          if (n.parents[1]->requires_grad) {
                              Tensor<T> db({c});
                              for (size_t ch = 0; ch < c; ++ch) {
                                  T acc = T(0);
                                  for (size_t i = 0; i < hw; ++i)
                                      acc += n.grad.data[ch * hw + i];
                                  db[ch] = acc;
                              }
                              n.parents[1]->accumulate(db);
                          }
                      });
}

template <class T>
Var<T> relu(const Var<T>& x) {
    Tensor<T> out = x.value();
    for (auto& v : out.data) v = v > T(0) ? v : T(0);
    return make_op<T>("relu", std::move(out), {x}, [](Node<T>& n) {
        if (!n.parents[0]->requires_grad) return;
        Tensor<T> g = n.grad;
        const auto& X = n.parents[0]->value;
        for (size_t i = 0; i < g.data.size(); ++i)
            if (X.data[i] <= T(0)) g.data[i] = T(0);
        n.parents[0]->accumulate(g);
    });
}

// Non-overlapping average pooling; trailing rows/cols that do not fill a
// window are dropped. x:[c,h,w].
template <class T>
Var<T> avgpool(const Var<T>& x, size_t wh, size_t ww) {
    const auto& X = x.value();
    require(X.rank() == 3, ErrorCode::shape_mismatch, "avgpool: x[c,h,w]");
    require(wh >= 1 && ww >= 1, ErrorCode::invalid_argument,
            "avgpool: window >= 1");
    size_t c = X.shape[0], h = X.shape[1], w = X.shape[2];
    size_t oh = h / wh, ow = w / ww;
    require(oh >= 1 && ow >= 1, ErrorCode::shape_mismatch,
            "avgpool: window larger than input");
    T inv = T(1) / static_cast<T>(wh * ww);
    Tensor<T> out({c, oh, ow});
    for (size_t ch = 0; ch < c; ++ch)
        for (size_t i = 0; i < oh; ++i)
            for (size_t j = 0; j < ow; ++j) {
                T acc = T(0);
                for (size_t p = 0; p < wh; ++p)
                    for (size_t q = 0; q < ww; ++q)
                        acc += X.at3(ch, i * wh + p, j * ww + q);
                out.at3(ch, i, j) = acc * inv;
            }
    return make_op<T>("avgpool", std::move(out), {x},
                      [c, h, w, oh, ow, wh, ww, inv](Node<T>& n) {
                          if (!n.parents[0]->requires_grad) return;
                          Tensor<T> dX({c, h, w});
                          for (size_t ch = 0; ch < c; ++ch)
                              for (size_t i = 0; i < oh; ++i)
                                  for (size_t j = 0; j < ow; ++j) {
                                      T g = n.grad.at3(ch, i, j) * inv;
                                      for (size_t p = 0; p < wh; ++p)
                                          for (size_t q = 0; q < ww; ++q)
                                              dX.at3(ch, i * wh + p, j * ww + q) = g;
                                  }
                          n.parents[0]->accumulate(dX);
                      });
}

template <class T>
Var<T> reshape(const Var<T>& x, std::vector<size_t> shape) {
    Tensor<T> out(shape, x.value().data);
    std::vector<size_t> old_shape = x.value().shape;
    return make_op<T>("reshape", std::move(out), {x}, [old_shape](Node<T>& n) {
        if (!n.parents[0]->requires_grad) return;
        n.parents[0]->accumulate(Tensor<T>(old_shape, n.grad.data));
    });
}

template <class T>
Var<T> concat(const std::vector<Var<T>>& xs, size_t axis) {
    require(!xs.empty(), ErrorCode::invalid_argument, "concat: empty input");
    const auto& first = xs[0].value();
    require(axis < first.rank(), ErrorCode::invalid_argument,
            "concat: axis out of range");
    std::vector<size_t> out_shape = first.shape;
    size_t total_axis = 0;
    for (const auto& x : xs) {
        const auto& s = x.value().shape;
        require(s.size() == first.rank(), ErrorCode::shape_mismatch,
                "concat: rank mismatch");
        for (size_t d = 0; d < s.size(); ++d)
            require(d == axis || s[d] == first.shape[d],
                    ErrorCode::shape_mismatch, "concat: non-axis dims differ");
        total_axis += s[axis];
    }
    out_shape[axis] = total_axis;
    size_t outer, dim, inner;
    detail::axis_strides(out_shape, axis, outer, dim, inner);

    Tensor<T> out(out_shape);
    std::vector<size_t> piece_dims;
    size_t off = 0;
    for (const auto& x : xs) {
        size_t d = x.value().shape[axis];
        piece_dims.push_back(d);
        for (size_t o = 0; o < outer; ++o)
            for (size_t a = 0; a < d; ++a)
                std::copy_n(x.value().data.begin() + (o * d + a) * inner, inner,
                            out.data.begin() + (o * dim + off + a) * inner);
        off += d;
    }
    return make_op<T>("concat", std::move(out), xs,
                      [outer, dim, inner, piece_dims](Node<T>& n) {
                          size_t off = 0;
                          for (size_t pi = 0; pi < n.parents.size(); ++pi) {
                              size_t d = piece_dims[pi];
                              if (n.parents[pi]->requires_grad) {
                                  Tensor<T> g(n.parents[pi]->value.shape);
                                  for (size_t o = 0; o < outer; ++o)
                                      for (size_t a = 0; a < d; ++a)
                                          std::copy_n(
                                              n.grad.data.begin() +
                                                  (o * dim + off + a) * inner,
                                              inner,
                                              g.data.begin() + (o * d + a) * inner);
                                  n.parents[pi]->accumulate(g);
                              }
                              off += d;
                          }
                      });
}

template <class T>
Var<T> slice(const Var<T>& x, size_t axis, size_t start, size_t len) {
    const auto& X = x.value();
    require(axis < X.rank(), ErrorCode::invalid_argument,
            "slice: axis out of range");
    require(start + len <= X.shape[axis] && len >= 1,
            ErrorCode::invalid_argument, "slice: range out of bounds");
    size_t outer, dim, inner;
    detail::axis_strides(X.shape, axis, outer, dim, inner);
    std::vector<size_t> out_shape = X.shape;
    out_shape[axis] = len;
    Tensor<T> out(out_shape);
    for (size_t o = 0; o < outer; ++o)
        for (size_t a = 0; a < len; ++a)
            std::copy_n(X.data.begin() + (o * dim + start + a) * inner, inner,
                        out.data.begin() + (o * len + a) * inner);
    return make_op<T>("slice", std::move(out), {x},
                      [outer, dim, inner, start, len](Node<T>& n) {
                          if (!n.parents[0]->requires_grad) return;
                          Tensor<T> g(n.parents[0]->value.shape);
                          for (size_t o = 0; o < outer; ++o)
                              for (size_t a = 0; a < len; ++a)
                                  std::copy_n(
                                      n.grad.data.begin() + (o * len + a) * inner,
                                      inner,
                                      g.data.begin() + (o * dim + start + a) * inner);
                          n.parents[0]->accumulate(g);
                      });
}

// Stack rank-1 vectors into a [n x d] matrix.
template <class T>
Var<T> stack_rows(const std::vector<Var<T>>& rows) {
    require(!rows.empty(), ErrorCode::invalid_argument, "stack_rows: empty");
    std::vector<Var<T>> reshaped;
    size_t d = rows[0].value().numel();
    reshaped.reserve(rows.size());
    for (const auto& r : rows) {
        require(r.value().rank() == 1 && r.value().numel() == d,
                ErrorCode::shape_mismatch, "stack_rows: rank-1 equal lengths");
        reshaped.push_back(reshape(r, {1, d}));
    }
    return concat(reshaped, 0);
}

// Normalize along `axis` to unit L2 norm; rows shorter than eps map to x/eps.
// Supports rank-1 (axis 0) and rank-2 (axis 1).
template <class T>
Var<T> l2_normalize(const Var<T>& x, size_t axis, T eps = T(1e-12)) {
    const auto& X = x.value();
    bool rows_mode = X.rank() == 2 && axis == 1;
    require(rows_mode || (X.rank() == 1 && axis == 0),
            ErrorCode::invalid_argument,
            "l2_normalize: rank-1 axis 0 or rank-2 axis 1");
    size_t nrows = rows_mode ? X.shape[0] : 1;
    size_t d = rows_mode ? X.shape[1] : X.shape[0];
    Tensor<T> out = X;
    std::vector<T> norms(nrows);
    for (size_t r = 0; r < nrows; ++r) {
        T ss = T(0);
        for (size_t c = 0; c < d; ++c) {
            T v = X.data[r * d + c];
            ss += v * v;
        }
        T nrm = std::sqrt(ss);
        T eff = std::max(nrm, eps);
        norms[r] = eff;
        for (size_t c = 0; c < d; ++c) out.data[r * d + c] /= eff;
    }
    return make_op<T>("l2_normalize", std::move(out), {x},
                      [nrows, d, norms, eps](Node<T>& n) {
                          if (!n.parents[0]->requires_grad) return;
                          const auto& X = n.parents[0]->value;
                          Tensor<T> g(X.shape);
                          for (size_t r = 0; r < nrows; ++r) {
                              T nrm = norms[r];
                              if (nrm <= eps) {
                                  for (size_t c = 0; c < d; ++c)
                                      g.data[r * d + c] =
                                          n.grad.data[r * d + c] / eps;
                                  continue;
                              }
                              T dot = T(0);
                              for (size_t c = 0; c < d; ++c)
                                  dot += X.data[r * d + c] * n.grad.data[r * d + c];
                              T n3 = nrm * nrm * nrm;
                              for (size_t c = 0; c < d; ++c)
                                  g.data[r * d + c] =
                                      n.grad.data[r * d + c] / nrm -
                                      X.data[r * d + c] * dot / n3;
                          }
                          n.parents[0]->accumulate(g);
                      });
}

// Max-shifted log-sum-exp. Rank-1: axis 0 -> scalar. Rank-2: axis 1 -> [rows].
template <class T>
Var<T> logsumexp(const Var<T>& x, size_t axis = 0) {
    const auto& X = x.value();
    bool rows_mode = X.rank() == 2 && axis == 1;
    require(rows_mode || (X.rank() == 1 && axis == 0),
            ErrorCode::invalid_argument,
            "logsumexp: rank-1 axis 0 or rank-2 axis 1");
    size_t nrows = rows_mode ? X.shape[0] : 1;
    size_t d = rows_mode ? X.shape[1] : X.shape[0];
    require(d >= 1, ErrorCode::invalid_argument, "logsumexp: empty reduction");
    Tensor<T> out(rows_mode ? std::vector<size_t>{nrows}
                            : std::vector<size_t>{1});
    for (size_t r = 0; r < nrows; ++r) {
        T m = X.data[r * d];
        for (size_t c = 1; c < d; ++c) m = std::max(m, X.data[r * d + c]);
        T s = T(0);
        for (size_t c = 0; c < d; ++c) s += std::exp(X.data[r * d + c] - m);
        out[r] = m + std::log(s);
    }
    std::vector<T> lse(out.data);
    return make_op<T>("logsumexp", std::move(out), {x},
                      [nrows, d, lse](Node<T>& n) {
                          if (!n.parents[0]->requires_grad) return;
                          const auto& X = n.parents[0]->value;
                          Tensor<T> g(X.shape);
                          for (size_t r = 0; r < nrows; ++r)
                              for (size_t c = 0; c < d; ++c)
                                  g.data[r * d + c] =
                                      n.grad[r] * std::exp(X.data[r * d + c] - lse[r]);
                          n.parents[0]->accumulate(g);
                      });
}

template <class T>
Var<T> pick(const Var<T>& x, size_t index) {
    const auto& X = x.value();
    require(X.rank() == 1, ErrorCode::shape_mismatch, "pick: rank-1 input");
    require(index < X.shape[0], ErrorCode::invalid_argument,
            "pick: index out of range");
    return make_op<T>("pick", Tensor<T>::scalar(X[index]), {x},
                      [index](Node<T>& n) {
                          if (!n.parents[0]->requires_grad) return;
                          Tensor<T> g(n.parents[0]->value.shape);
                          g[index] = n.grad[0];
                          n.parents[0]->accumulate(g);
                      });
}

template <class T>
Var<T> sum(const Var<T>& x) {
    T acc = T(0);
    for (T v : x.value().data) acc += v;
    return make_op<T>("sum", Tensor<T>::scalar(acc), {x}, [](Node<T>& n) {
        if (!n.parents[0]->requires_grad) return;
        n.parents[0]->accumulate(Tensor<T>(n.parents[0]->value.shape, n.grad[0]));
    });
}

template <class T>
Var<T> mean(const Var<T>& x) {
    size_t cnt = x.value().numel();
    require(cnt >= 1, ErrorCode::invalid_argument, "mean: empty input");
    T acc = T(0);
    for (T v : x.value().data) acc += v;
    acc /= static_cast<T>(cnt);
    return make_op<T>("mean", Tensor<T>::scalar(acc), {x}, [cnt](Node<T>& n) {
        if (!n.parents[0]->requires_grad) return;
        n.parents[0]->accumulate(
            Tensor<T>(n.parents[0]->value.shape, n.grad[0] / static_cast<T>(cnt)));
    });
}

}  // namespace corolla::num
