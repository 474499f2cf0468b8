#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "seisgen/tensor.hpp"

namespace seisgen::nn {

using seisgen::Index;
using seisgen::Shape;
using seisgen::Tensor;

// A named learnable tensor with an accumulated gradient buffer.
template <typename S>
struct Param {
    std::string name;
    Tensor<S> value;
    Tensor<S> grad;

    Param() = default;
    Param(std::string n, Tensor<S> v)
        : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
    void zero_grad() { grad.setZero(); }
};

template <typename S>
class Graph;

template <typename S>
struct Var {
    Graph<S>* g = nullptr;
    int id = -1;

    const Tensor<S>& value() const { return g->value_of(id); }
    const Shape& shape() const { return value().shape(); }
};

// Define-by-run reverse-mode tape. Values are computed eagerly; backward()
// walks the tape in reverse creation order, which is a topological order
// because ops only reference earlier nodes.
template <typename S>
class Graph {
public:
    Var<S> input(Tensor<S> value, bool requires_grad = false) {
        Node n;
        n.value = std::move(value);
        n.requires_grad = requires_grad;
        nodes_.push_back(std::move(n));
        return {this, static_cast<int>(nodes_.size()) - 1};
    }

    Var<S> param(Param<S>& p) {
        Var<S> v = input(p.value, true);
        nodes_[static_cast<size_t>(v.id)].bound = &p;
        return v;
    }

    Var<S> constant(Tensor<S> value) { return input(std::move(value), false); }

    Var<S> make(Tensor<S> value, std::initializer_list<Var<S>> parents) {
        bool rg = false;
        for (const Var<S>& p : parents) rg = rg || requires_grad(p);
        Node n;
        n.value = std::move(value);
        n.requires_grad = rg;
        nodes_.push_back(std::move(n));
        return {this, static_cast<int>(nodes_.size()) - 1};
    }

    void set_backward(Var<S> v, std::function<void(Graph&)> fn) {
        nodes_[static_cast<size_t>(v.id)].backward = std::move(fn);
    }

    const Tensor<S>& value_of(int id) const { return nodes_[static_cast<size_t>(id)].value; }
    bool requires_grad(Var<S> v) const { return nodes_[static_cast<size_t>(v.id)].requires_grad; }
    bool requires_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

    // Gradient buffer of a node, allocated (zeroed) on first touch.
    Tensor<S>& grad_ref(int id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.grad_ready) {
            n.grad = Tensor<S>(n.value.shape());
            n.grad_ready = true;
        }
        return n.grad;
    }
    bool grad_ready(int id) const { return nodes_[static_cast<size_t>(id)].grad_ready; }
    const Tensor<S>& grad_of(Var<S> v) const { return nodes_[static_cast<size_t>(v.id)].grad; }

    size_t size() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 and accumulates into every reachable leaf;
    // gradients of bound params are added to their grad buffers.
    void backward(Var<S> loss) {
        if (value_of(loss.id).size() != 1)
            throw std::invalid_argument("backward() expects a scalar loss");
        grad_ref(loss.id)[0] = S(1);
        for (int i = loss.id; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (!n.requires_grad || !n.grad_ready) continue;
            if (n.backward) n.backward(*this);
            if (n.bound) n.bound->grad.flat() += n.grad.flat();
        }
    }

private:
    struct Node {
        Tensor<S> value;
        Tensor<S> grad;
        bool requires_grad = false;
        bool grad_ready = false;
        std::function<void(Graph&)> backward;
        Param<S>* bound = nullptr;
    };
    std::vector<Node> nodes_;
};

namespace detail {

// out[om,on] += op(a) * op(b); am/ak and bk/bn are the STORAGE dims of a and
// b, and ta/tb transpose the corresponding Eigen view.
template <typename S>
void gemm_acc(const Tensor<S>& a, Index am, Index ak, bool ta, const Tensor<S>& b, Index bk,
              Index bn, bool tb, Tensor<S>& out, Index om, Index on) {
    auto A = a.matrix(am, ak);
    auto B = b.matrix(bk, bn);
    auto C = out.matrix(om, on);
    if (!ta && !tb)
        C.noalias() += A * B;
    else if (ta && !tb)
        C.noalias() += A.transpose() * B;
    else if (!ta && tb)
        C.noalias() += A * B.transpose();
    else
        C.noalias() += A.transpose() * B.transpose();
}

template <typename S>
void im2col(const Tensor<S>& x, int kh, int kw, int stride, int pad, Tensor<S>& cols) {
    const Index c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
    const Index oh = (h + 2 * pad - kh) / stride + 1;
    const Index ow = (w + 2 * pad - kw) / stride + 1;
    S* dst = cols.data();
    for (Index ci = 0; ci < c_in; ++ci) {
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                const S* src = x.data() + ci * h * w;
                for (Index oy = 0; oy < oh; ++oy) {
                    const Index y = oy * stride - pad + ki;
                    if (y < 0 || y >= h) {
                        for (Index ox = 0; ox < ow; ++ox) *dst++ = S(0);
                        continue;
                    }
                    const S* row = src + y * w;
                    for (Index ox = 0; ox < ow; ++ox) {
                        const Index xx = ox * stride - pad + kj;
                        *dst++ = (xx < 0 || xx >= w) ? S(0) : row[xx];
                    }
                }
            }
        }
    }
}

template <typename S>
void col2im_acc(const Tensor<S>& cols, int kh, int kw, int stride, int pad, Tensor<S>& dx) {
    const Index c_in = dx.dim(0), h = dx.dim(1), w = dx.dim(2);
    const Index oh = (h + 2 * pad - kh) / stride + 1;
    const Index ow = (w + 2 * pad - kw) / stride + 1;
    const S* src = cols.data();
    for (Index ci = 0; ci < c_in; ++ci) {
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                S* dst = dx.data() + ci * h * w;
                for (Index oy = 0; oy < oh; ++oy) {
                    const Index y = oy * stride - pad + ki;
                    if (y < 0 || y >= h) {
                        src += ow;
                        continue;
                    }
                    S* row = dst + y * w;
                    for (Index ox = 0; ox < ow; ++ox) {
                        const Index xx = ox * stride - pad + kj;
                        if (xx >= 0 && xx < w) row[xx] += *src;
                        ++src;
                    }
                }
            }
        }
    }
}

inline std::vector<Index> permute_shape(const Shape& in, const std::vector<int>& axes) {
    Shape out(in.size());
    for (size_t i = 0; i < axes.size(); ++i) out[i] = in[static_cast<size_t>(axes[i])];
    return out;
}

template <typename S>
void permute_copy(const Tensor<S>& in, const std::vector<int>& axes, Tensor<S>& out) {
    const int r = static_cast<int>(in.rank());
    std::array<Index, 4> idim{1, 1, 1, 1}, istr{0, 0, 0, 0};
    for (int i = 0; i < r; ++i) idim[static_cast<size_t>(i)] = in.dim(i);
    Index s = 1;
    for (int i = r - 1; i >= 0; --i) {
        istr[static_cast<size_t>(i)] = s;
        s *= idim[static_cast<size_t>(i)];
    }
    std::array<Index, 4> odim{1, 1, 1, 1}, ostr{0, 0, 0, 0};
    for (int i = 0; i < r; ++i) odim[static_cast<size_t>(i)] = idim[static_cast<size_t>(axes[static_cast<size_t>(i)])];
    for (int i = 0; i < r; ++i) ostr[static_cast<size_t>(i)] = istr[static_cast<size_t>(axes[static_cast<size_t>(i)])];
    S* dst = out.data();
    const S* src = in.data();
    for (Index i0 = 0; i0 < odim[0]; ++i0)
        for (Index i1 = 0; i1 < odim[1]; ++i1)
            for (Index i2 = 0; i2 < odim[2]; ++i2) {
                const S* base = src + i0 * ostr[0] + i1 * ostr[1] + i2 * ostr[2];
                for (Index i3 = 0; i3 < odim[3]; ++i3) *dst++ = base[i3 * ostr[3]];
            }
}

template <typename S>
void permute_acc(const Tensor<S>& gout, const std::vector<int>& axes, Tensor<S>& gin) {
    // gin[j] += gout[perm(j)]: iterate gout in order, scatter to gin.
    const int r = static_cast<int>(gin.rank());
    std::array<Index, 4> idim{1, 1, 1, 1}, istr{0, 0, 0, 0};
    for (int i = 0; i < r; ++i) idim[static_cast<size_t>(i)] = gin.dim(i);
    Index s = 1;
    for (int i = r - 1; i >= 0; --i) {
        istr[static_cast<size_t>(i)] = s;
        s *= idim[static_cast<size_t>(i)];
    }
    std::array<Index, 4> odim{1, 1, 1, 1}, ostr{0, 0, 0, 0};
    for (int i = 0; i < r; ++i) {
        odim[static_cast<size_t>(i)] = idim[static_cast<size_t>(axes[static_cast<size_t>(i)])];
        ostr[static_cast<size_t>(i)] = istr[static_cast<size_t>(axes[static_cast<size_t>(i)])];
    }
    const S* src = gout.data();
    S* dst = gin.data();
    for (Index i0 = 0; i0 < odim[0]; ++i0)
        for (Index i1 = 0; i1 < odim[1]; ++i1)
            for (Index i2 = 0; i2 < odim[2]; ++i2) {
                S* base = dst + i0 * ostr[0] + i1 * ostr[1] + i2 * ostr[2];
                for (Index i3 = 0; i3 < odim[3]; ++i3) base[i3 * ostr[3]] += *src++;
            }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
    Graph<S>& g = *a.g;
    if (!g.value_of(a.id).same_shape(g.value_of(b.id)))
        throw std::invalid_argument("add: shape mismatch");
    Tensor<S> out = g.value_of(a.id);
    out.flat() += g.value_of(b.id).flat();
    Var<S> r = g.make(std::move(out), {a, b});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id, bi = b.id;
        g.set_backward(r, [ri, ai, bi](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            if (gr.requires_grad(ai)) gr.grad_ref(ai).flat() += go.flat();
            if (gr.requires_grad(bi)) gr.grad_ref(bi).flat() += go.flat();
        });
    }
    return r;
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
    Graph<S>& g = *a.g;
    if (!g.value_of(a.id).same_shape(g.value_of(b.id)))
        throw std::invalid_argument("sub: shape mismatch");
    Tensor<S> out = g.value_of(a.id);
    out.flat() -= g.value_of(b.id).flat();
    Var<S> r = g.make(std::move(out), {a, b});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id, bi = b.id;
        g.set_backward(r, [ri, ai, bi](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            if (gr.requires_grad(ai)) gr.grad_ref(ai).flat() += go.flat();
            if (gr.requires_grad(bi)) gr.grad_ref(bi).flat() -= go.flat();
        });
    }
    return r;
}

template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
    Graph<S>& g = *a.g;
    if (!g.value_of(a.id).same_shape(g.value_of(b.id)))
        throw std::invalid_argument("mul: shape mismatch");
    Tensor<S> out = g.value_of(a.id);
    out.flat() *= g.value_of(b.id).flat();
    Var<S> r = g.make(std::move(out), {a, b});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id, bi = b.id;
        g.set_backward(r, [ri, ai, bi](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            if (gr.requires_grad(ai))
                gr.grad_ref(ai).flat() += go.flat() * gr.value_of(bi).flat();
            if (gr.requires_grad(bi))
                gr.grad_ref(bi).flat() += go.flat() * gr.value_of(ai).flat();
        });
    }
    return r;
}

template <typename S>
Var<S> scale(Var<S> a, S c) {
    Graph<S>& g = *a.g;
    Tensor<S> out = g.value_of(a.id);
    out.flat() *= c;
    Var<S> r = g.make(std::move(out), {a});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id;
        g.set_backward(r, [ri, ai, c](Graph<S>& gr) {
            gr.grad_ref(ai).flat() += gr.grad_ref(ri).flat() * c;
        });
    }
    return r;
}

template <typename S>
Var<S> add_scalar(Var<S> a, S c) {
    Graph<S>& g = *a.g;
    Tensor<S> out = g.value_of(a.id);
    out.flat() += c;
    Var<S> r = g.make(std::move(out), {a});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id;
        g.set_backward(r, [ri, ai](Graph<S>& gr) {
            gr.grad_ref(ai).flat() += gr.grad_ref(ri).flat();
        });
    }
    return r;
}

template <typename S, typename FwdFn, typename DerivFn>
Var<S> pointwise(Var<S> a, FwdFn f, DerivFn df) {
    Graph<S>& g = *a.g;
    const Tensor<S>& x = g.value_of(a.id);
    Tensor<S> out(x.shape());
    for (Index i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    Var<S> r = g.make(std::move(out), {a});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id;
        g.set_backward(r, [ri, ai, df](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            const Tensor<S>& x = gr.value_of(ai);
            Tensor<S>& gi = gr.grad_ref(ai);
            for (Index i = 0; i < x.size(); ++i) gi[i] += go[i] * df(x[i]);
        });
    }
    return r;
}

template <typename S>
Var<S> relu(Var<S> a) {
    return pointwise(
        a, [](S x) { return x > S(0) ? x : S(0); }, [](S x) { return x > S(0) ? S(1) : S(0); });
}

template <typename S>
Var<S> sigmoid(Var<S> a) {
    return pointwise(
        a, [](S x) { return S(1) / (S(1) + std::exp(-x)); },
        [](S x) {
            const S s = S(1) / (S(1) + std::exp(-x));
            return s * (S(1) - s);
        });
}

template <typename S>
Var<S> silu(Var<S> a) {
    return pointwise(
        a,
        [](S x) { return x / (S(1) + std::exp(-x)); },
        [](S x) {
            const S s = S(1) / (S(1) + std::exp(-x));
            return s * (S(1) + x * (S(1) - s));
        });
}

template <typename S>
Var<S> gelu(Var<S> a) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    constexpr double inv_sqrt2pi = 0.3989422804014326779;
    return pointwise(
        a,
        [=](S x) { return S(0.5) * x * (S(1) + S(std::erf(double(x) * inv_sqrt2))); },
        [=](S x) {
            const double xd = double(x);
            return S(0.5 * (1.0 + std::erf(xd * inv_sqrt2)) +
                     xd * inv_sqrt2pi * std::exp(-0.5 * xd * xd));
        });
}

template <typename S>
Var<S> softplus(Var<S> a) {
    return pointwise(
        a,
        [](S x) { return x > S(30) ? x : S(std::log1p(std::exp(double(x)))); },
        [](S x) { return S(1) / (S(1) + std::exp(-x)); });
}

template <typename S>
Var<S> tanh_act(Var<S> a) {
    return pointwise(
        a, [](S x) { return std::tanh(x); },
        [](S x) {
            const S t = std::tanh(x);
            return S(1) - t * t;
        });
}

template <typename S>
Var<S> exp_(Var<S> a) {
    return pointwise(
        a, [](S x) { return std::exp(x); }, [](S x) { return std::exp(x); });
}

// log(x + offset); inputs must keep x + offset > 0.
template <typename S>
Var<S> log_offset(Var<S> a, S offset) {
    return pointwise(
        a, [offset](S x) { return std::log(x + offset); },
        [offset](S x) { return S(1) / (x + offset); });
}

template <typename S>
Var<S> clamp_min(Var<S> a, S lo) {
    return pointwise(
        a, [lo](S x) { return x < lo ? lo : x; }, [lo](S x) { return x < lo ? S(0) : S(1); });
}

template <typename S>
Var<S> square(Var<S> a) {
    return pointwise(
        a, [](S x) { return x * x; }, [](S x) { return S(2) * x; });
}

template <typename S>
Var<S> stop_grad(Var<S> a) {
    return a.g->constant(a.value());
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

template <typename S>
Var<S> reshape(Var<S> a, Shape shape) {
    Graph<S>& g = *a.g;
    Tensor<S> out = g.value_of(a.id).reshaped(shape);
    Var<S> r = g.make(std::move(out), {a});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id;
        g.set_backward(r, [ri, ai](Graph<S>& gr) {
            gr.grad_ref(ai).flat() += gr.grad_ref(ri).flat();
        });
    }
    return r;
}

template <typename S>
Var<S> permute(Var<S> a, std::vector<int> axes) {
    Graph<S>& g = *a.g;
    const Tensor<S>& x = g.value_of(a.id);
    if (static_cast<Index>(axes.size()) != x.rank() || x.rank() > 4)
        throw std::invalid_argument("permute: bad axes");
    Tensor<S> out(detail::permute_shape(x.shape(), axes));
    detail::permute_copy(x, axes, out);
    Var<S> r = g.make(std::move(out), {a});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id;
        g.set_backward(r, [ri, ai, axes](Graph<S>& gr) {
            detail::permute_acc(gr.grad_ref(ri), axes, gr.grad_ref(ai));
        });
    }
    return r;
}

// [Ca,H,W] ++ [Cb,H,W] -> [Ca+Cb,H,W]
template <typename S>
Var<S> concat_ch(Var<S> a, Var<S> b) {
    Graph<S>& g = *a.g;
    const Tensor<S>& xa = g.value_of(a.id);
    const Tensor<S>& xb = g.value_of(b.id);
    if (xa.rank() != 3 || xb.rank() != 3 || xa.dim(1) != xb.dim(1) || xa.dim(2) != xb.dim(2))
        throw std::invalid_argument("concat_ch: shape mismatch");
    const Index na = xa.size();
    Tensor<S> out({xa.dim(0) + xb.dim(0), xa.dim(1), xa.dim(2)});
    std::copy(xa.data(), xa.data() + xa.size(), out.data());
    std::copy(xb.data(), xb.data() + xb.size(), out.data() + xa.size());
    Var<S> r = g.make(std::move(out), {a, b});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id, bi = b.id;
        g.set_backward(r, [ri, ai, bi, na](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            if (gr.requires_grad(ai)) {
                Tensor<S>& ga = gr.grad_ref(ai);
                for (Index i = 0; i < na; ++i) ga[i] += go[i];
            }
            if (gr.requires_grad(bi)) {
                Tensor<S>& gb = gr.grad_ref(bi);
                for (Index i = 0; i < go.size() - na; ++i) gb[i] += go[na + i];
            }
        });
    }
    return r;
}

template <typename S>
Var<S> upsample_nearest2x(Var<S> a) {
    Graph<S>& g = *a.g;
    const Tensor<S>& x = g.value_of(a.id);
    if (x.rank() != 3) throw std::invalid_argument("upsample_nearest2x: rank-3 input expected");
    const Index c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor<S> out({c, 2 * h, 2 * w});
    for (Index ci = 0; ci < c; ++ci)
        for (Index y = 0; y < 2 * h; ++y)
            for (Index xx = 0; xx < 2 * w; ++xx)
                out.at(ci, y, xx) = x.at(ci, y / 2, xx / 2);
    Var<S> r = g.make(std::move(out), {a});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id;
        g.set_backward(r, [ri, ai, c, h, w](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            Tensor<S>& gi = gr.grad_ref(ai);
            for (Index ci = 0; ci < c; ++ci)
                for (Index y = 0; y < 2 * h; ++y)
                    for (Index xx = 0; xx < 2 * w; ++xx)
                        gi.at(ci, y / 2, xx / 2) += go.at(ci, y, xx);
        });
    }
    return r;
}

// Keep the top-left H x W window of a [C,H0,W0] map.
template <typename S>
Var<S> crop_hw(Var<S> a, Index h, Index w) {
    Graph<S>& g = *a.g;
    const Tensor<S>& x = g.value_of(a.id);
    if (x.rank() != 3 || h > x.dim(1) || w > x.dim(2))
        throw std::invalid_argument("crop_hw: bad target size");
    if (h == x.dim(1) && w == x.dim(2)) return a;
    const Index c = x.dim(0);
    Tensor<S> out({c, h, w});
    for (Index ci = 0; ci < c; ++ci)
        for (Index y = 0; y < h; ++y)
            for (Index xx = 0; xx < w; ++xx) out.at(ci, y, xx) = x.at(ci, y, xx);
    Var<S> r = g.make(std::move(out), {a});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id;
        g.set_backward(r, [ri, ai, c, h, w](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            Tensor<S>& gi = gr.grad_ref(ai);
            for (Index ci = 0; ci < c; ++ci)
                for (Index y = 0; y < h; ++y)
                    for (Index xx = 0; xx < w; ++xx) gi.at(ci, y, xx) += go.at(ci, y, xx);
        });
    }
    return r;
}

// ---------------------------------------------------------------------------
// Bias adds
// ---------------------------------------------------------------------------

// x[M,N] + b[N] broadcast over rows.
template <typename S>
Var<S> add_row_bias(Var<S> x, Var<S> b) {
    Graph<S>& g = *x.g;
    const Tensor<S>& xv = g.value_of(x.id);
    const Tensor<S>& bv = g.value_of(b.id);
    const Index n = bv.size();
    if (xv.size() % n != 0) throw std::invalid_argument("add_row_bias: size mismatch");
    const Index m = xv.size() / n;
    Tensor<S> out = xv;
    out.matrix(m, n).rowwise() += bv.matrix(1, n).row(0);
    Var<S> r = g.make(std::move(out), {x, b});
    if (g.requires_grad(r)) {
        int ri = r.id, xi = x.id, bi = b.id;
        g.set_backward(r, [ri, xi, bi, m, n](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            if (gr.requires_grad(xi)) gr.grad_ref(xi).flat() += go.flat();
            if (gr.requires_grad(bi))
                gr.grad_ref(bi).matrix(1, n).row(0) += go.matrix(m, n).colwise().sum();
        });
    }
    return r;
}

// x[C,H,W] + b[C] broadcast over the spatial grid.
template <typename S>
Var<S> add_chan_bias(Var<S> x, Var<S> b) {
    Graph<S>& g = *x.g;
    const Tensor<S>& xv = g.value_of(x.id);
    const Tensor<S>& bv = g.value_of(b.id);
    const Index c = bv.size();
    if (xv.rank() != 3 || xv.dim(0) != c) throw std::invalid_argument("add_chan_bias: shape mismatch");
    const Index hw = xv.dim(1) * xv.dim(2);
    Tensor<S> out = xv;
    for (Index ci = 0; ci < c; ++ci) {
        S* p = out.data() + ci * hw;
        const S bc = bv[ci];
        for (Index i = 0; i < hw; ++i) p[i] += bc;
    }
    Var<S> r = g.make(std::move(out), {x, b});
    if (g.requires_grad(r)) {
        int ri = r.id, xi = x.id, bi = b.id;
        g.set_backward(r, [ri, xi, bi, c, hw](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            if (gr.requires_grad(xi)) gr.grad_ref(xi).flat() += go.flat();
            if (gr.requires_grad(bi)) {
                Tensor<S>& gb = gr.grad_ref(bi);
                for (Index ci = 0; ci < c; ++ci) {
                    const S* p = go.data() + ci * hw;
                    S acc = S(0);
                    for (Index i = 0; i < hw; ++i) acc += p[i];
                    gb[ci] += acc;
                }
            }
        });
    }
    return r;
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
    Graph<S>& g = *a.g;
    const Tensor<S>& av = g.value_of(a.id);
    const Tensor<S>& bv = g.value_of(b.id);
    if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
        throw std::invalid_argument("matmul: incompatible shapes " + shape_str(av.shape()) + " x " +
                                    shape_str(bv.shape()));
    const Index m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor<S> out({m, n});
    out.matrix().noalias() = av.matrix() * bv.matrix();
    Var<S> r = g.make(std::move(out), {a, b});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id, bi = b.id;
        g.set_backward(r, [ri, ai, bi, m, k, n](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            if (gr.requires_grad(ai))
                detail::gemm_acc(go, m, n, false, gr.value_of(bi), k, n, true, gr.grad_ref(ai), m, k);
            if (gr.requires_grad(bi))
                detail::gemm_acc(gr.value_of(ai), m, k, true, go, m, n, false, gr.grad_ref(bi), k, n);
        });
    }
    return r;
}

template <typename S>
Var<S> transpose2(Var<S> a) {
    Graph<S>& g = *a.g;
    const Tensor<S>& av = g.value_of(a.id);
    if (av.rank() != 2) throw std::invalid_argument("transpose2: rank-2 expected");
    return permute(a, {1, 0});
}

// [B,M,K] x [B,K,N] -> [B,M,N]
template <typename S>
Var<S> bmm(Var<S> a, Var<S> b) {
    Graph<S>& g = *a.g;
    const Tensor<S>& av = g.value_of(a.id);
    const Tensor<S>& bv = g.value_of(b.id);
    if (av.rank() != 3 || bv.rank() != 3 || av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(1))
        throw std::invalid_argument("bmm: incompatible shapes");
    const Index bsz = av.dim(0), m = av.dim(1), k = av.dim(2), n = bv.dim(2);
    Tensor<S> out({bsz, m, n});
    using CM = typename Tensor<S>::ConstMatMap;
    using MM = typename Tensor<S>::MatMap;
    for (Index i = 0; i < bsz; ++i) {
        CM A(av.data() + i * m * k, m, k);
        CM B(bv.data() + i * k * n, k, n);
        MM C(out.data() + i * m * n, m, n);
        C.noalias() = A * B;
    }
    Var<S> r = g.make(std::move(out), {a, b});
    if (g.requires_grad(r)) {
        int ri = r.id, ai = a.id, bi = b.id;
        g.set_backward(r, [ri, ai, bi, bsz, m, k, n](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            for (Index i = 0; i < bsz; ++i) {
                CM G(go.data() + i * m * n, m, n);
                if (gr.requires_grad(ai)) {
                    CM B(gr.value_of(bi).data() + i * k * n, k, n);
                    MM GA(gr.grad_ref(ai).data() + i * m * k, m, k);
                    GA.noalias() += G * B.transpose();
                }
                if (gr.requires_grad(bi)) {
                    CM A(gr.value_of(ai).data() + i * m * k, m, k);
                    MM GB(gr.grad_ref(bi).data() + i * k * n, k, n);
                    GB.noalias() += A.transpose() * G;
                }
            }
        });
    }
    return r;
}

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

// x[Cin,H,W] * w[Cout,Cin,kh,kw] + b[Cout], zero padding.
template <typename S>
Var<S> conv2d(Var<S> x, Var<S> w, Var<S> b, int stride, int pad) {
    Graph<S>& g = *x.g;
    const Tensor<S>& xv = g.value_of(x.id);
    const Tensor<S>& wv = g.value_of(w.id);
    if (xv.rank() != 3 || wv.rank() != 4 || xv.dim(0) != wv.dim(1))
        throw std::invalid_argument("conv2d: shape mismatch");
    const Index c_in = xv.dim(0), h = xv.dim(1), ww = xv.dim(2);
    const Index c_out = wv.dim(0);
    const int kh = static_cast<int>(wv.dim(2)), kw = static_cast<int>(wv.dim(3));
    const Index oh = (h + 2 * pad - kh) / stride + 1;
    const Index ow = (ww + 2 * pad - kw) / stride + 1;
    const Index krows = c_in * kh * kw;

    Tensor<S> cols({krows, oh * ow});
    detail::im2col(xv, kh, kw, stride, pad, cols);
    Tensor<S> out({c_out, oh, ow});
    out.matrix(c_out, oh * ow).noalias() = wv.matrix(c_out, krows) * cols.matrix(krows, oh * ow);
    const Tensor<S>& bv = g.value_of(b.id);
    for (Index co = 0; co < c_out; ++co) {
        S* p = out.data() + co * oh * ow;
        for (Index i = 0; i < oh * ow; ++i) p[i] += bv[co];
    }

    Var<S> r = g.make(std::move(out), {x, w, b});
    if (g.requires_grad(r)) {
        int ri = r.id, xi = x.id, wi = w.id, bi = b.id;
        g.set_backward(r, [ri, xi, wi, bi, stride, pad, kh, kw, c_in, c_out, h, ww, oh,
                           ow, krows](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            auto gom = go.matrix(c_out, oh * ow);
            if (gr.requires_grad(bi)) {
                Tensor<S>& gb = gr.grad_ref(bi);
                for (Index co = 0; co < c_out; ++co) gb[co] += gom.row(co).sum();
            }
            if (gr.requires_grad(wi)) {
                Tensor<S> cols({krows, oh * ow});
                detail::im2col(gr.value_of(xi), kh, kw, stride, pad, cols);
                gr.grad_ref(wi).matrix(c_out, krows).noalias() +=
                    gom * cols.matrix(krows, oh * ow).transpose();
            }
            if (gr.requires_grad(xi)) {
                Tensor<S> dcols({krows, oh * ow});
                dcols.matrix(krows, oh * ow).noalias() =
                    gr.value_of(wi).matrix(c_out, krows).transpose() * gom;
                detail::col2im_acc(dcols, kh, kw, stride, pad, gr.grad_ref(xi));
            }
        });
    }
    return r;
}

// Depthwise 1-D convolution along the middle axis: x[B,T,C], w[K,C], b[C],
// zero-padded "same" output.
template <typename S>
Var<S> depthwise_conv1d(Var<S> x, Var<S> w, Var<S> b) {
    Graph<S>& g = *x.g;
    const Tensor<S>& xv = g.value_of(x.id);
    const Tensor<S>& wv = g.value_of(w.id);
    if (xv.rank() != 3 || wv.rank() != 2 || xv.dim(2) != wv.dim(1))
        throw std::invalid_argument("depthwise_conv1d: shape mismatch");
    const Index bsz = xv.dim(0), t = xv.dim(1), c = xv.dim(2);
    const int k = static_cast<int>(wv.dim(0));
    const int half = k / 2;
    const Tensor<S>& bv = g.value_of(b.id);
    Tensor<S> out({bsz, t, c});
    for (Index bb = 0; bb < bsz; ++bb)
        for (Index tt = 0; tt < t; ++tt)
            for (Index cc = 0; cc < c; ++cc) {
                S acc = bv[cc];
                for (int kk = 0; kk < k; ++kk) {
                    const Index src = tt + kk - half;
                    if (src >= 0 && src < t) acc += xv.at(bb, src, cc) * wv.at(kk, cc);
                }
                out.at(bb, tt, cc) = acc;
            }
    Var<S> r = g.make(std::move(out), {x, w, b});
    if (g.requires_grad(r)) {
        int ri = r.id, xi = x.id, wi = w.id, bi = b.id;
        g.set_backward(r, [ri, xi, wi, bi, bsz, t, c, k, half](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            const Tensor<S>& xv = gr.value_of(xi);
            const Tensor<S>& wv = gr.value_of(wi);
            const bool need_x = gr.requires_grad(xi);
            const bool need_w = gr.requires_grad(wi);
            const bool need_b = gr.requires_grad(bi);
            for (Index bb = 0; bb < bsz; ++bb)
                for (Index tt = 0; tt < t; ++tt)
                    for (Index cc = 0; cc < c; ++cc) {
                        const S gv = go.at(bb, tt, cc);
                        if (need_b) gr.grad_ref(bi)[cc] += gv;
                        for (int kk = 0; kk < k; ++kk) {
                            const Index src = tt + kk - half;
                            if (src < 0 || src >= t) continue;
                            if (need_x) gr.grad_ref(xi).at(bb, src, cc) += gv * wv.at(kk, cc);
                            if (need_w) gr.grad_ref(wi).at(kk, cc) += gv * xv.at(bb, src, cc);
                        }
                    }
        });
    }
    return r;
}

// ---------------------------------------------------------------------------
// Normalization and softmax
// ---------------------------------------------------------------------------

// GroupNorm over [C,H,W] with affine per channel.
template <typename S>
Var<S> group_norm(Var<S> x, Var<S> gamma, Var<S> beta, int groups, S eps = S(1e-5)) {
    Graph<S>& g = *x.g;
    const Tensor<S>& xv = g.value_of(x.id);
    if (xv.rank() != 3) throw std::invalid_argument("group_norm: rank-3 expected");
    const Index c = xv.dim(0), hw = xv.dim(1) * xv.dim(2);
    if (c % groups != 0) throw std::invalid_argument("group_norm: C not divisible by groups");
    const Index cg = c / groups;
    const Index n = cg * hw;
    const Tensor<S>& gv = g.value_of(gamma.id);
    const Tensor<S>& bv = g.value_of(beta.id);

    auto xhat = std::make_shared<Tensor<S>>(xv.shape());
    auto inv_std = std::make_shared<std::vector<S>>(static_cast<size_t>(groups));
    Tensor<S> out(xv.shape());
    for (int gi = 0; gi < groups; ++gi) {
        const S* xp = xv.data() + gi * n;
        S mean = S(0);
        for (Index i = 0; i < n; ++i) mean += xp[i];
        mean /= S(n);
        S var = S(0);
        for (Index i = 0; i < n; ++i) {
            const S d = xp[i] - mean;
            var += d * d;
        }
        var /= S(n);
        const S inv = S(1) / std::sqrt(var + eps);
        (*inv_std)[static_cast<size_t>(gi)] = inv;
        S* xh = xhat->data() + gi * n;
        S* op = out.data() + gi * n;
        for (Index ci = 0; ci < cg; ++ci) {
            const Index ch = gi * cg + ci;
            const S ga = gv[ch], be = bv[ch];
            for (Index i = 0; i < hw; ++i) {
                const S v = (xp[ci * hw + i] - mean) * inv;
                xh[ci * hw + i] = v;
                op[ci * hw + i] = ga * v + be;
            }
        }
    }
    Var<S> r = g.make(std::move(out), {x, gamma, beta});
    if (g.requires_grad(r)) {
        int ri = r.id, xi = x.id, gi_ = gamma.id, bi = beta.id;
        g.set_backward(r, [ri, xi, gi_, bi, groups, c, cg, hw, n, xhat, inv_std](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            const Tensor<S>& gamv = gr.value_of(gi_);
            if (gr.requires_grad(gi_) || gr.requires_grad(bi)) {
                for (Index ch = 0; ch < c; ++ch) {
                    const S* gop = go.data() + ch * hw;
                    const S* xh = xhat->data() + ch * hw;
                    S sg = S(0), sb = S(0);
                    for (Index i = 0; i < hw; ++i) {
                        sg += gop[i] * xh[i];
                        sb += gop[i];
                    }
                    if (gr.requires_grad(gi_)) gr.grad_ref(gi_)[ch] += sg;
                    if (gr.requires_grad(bi)) gr.grad_ref(bi)[ch] += sb;
                }
            }
            if (gr.requires_grad(xi)) {
                Tensor<S>& gx = gr.grad_ref(xi);
                for (int gg = 0; gg < groups; ++gg) {
                    const S inv = (*inv_std)[static_cast<size_t>(gg)];
                    const S* xh = xhat->data() + gg * n;
                    const S* gop = go.data() + gg * n;
                    // dxhat = go * gamma (per channel)
                    S sum_d = S(0), sum_dx = S(0);
                    for (Index ci = 0; ci < cg; ++ci) {
                        const S ga = gamv[gg * cg + ci];
                        for (Index i = 0; i < hw; ++i) {
                            const S d = gop[ci * hw + i] * ga;
                            sum_d += d;
                            sum_dx += d * xh[ci * hw + i];
                        }
                    }
                    S* gxp = gx.data() + gg * n;
                    for (Index ci = 0; ci < cg; ++ci) {
                        const S ga = gamv[gg * cg + ci];
                        for (Index i = 0; i < hw; ++i) {
                            const S d = gop[ci * hw + i] * ga;
                            gxp[ci * hw + i] +=
                                inv * (d - sum_d / S(n) - xh[ci * hw + i] * sum_dx / S(n));
                        }
                    }
                }
            }
        });
    }
    return r;
}

// LayerNorm over the last axis of a rank-2/3 tensor.
template <typename S>
Var<S> layer_norm(Var<S> x, Var<S> gamma, Var<S> beta, S eps = S(1e-5)) {
    Graph<S>& g = *x.g;
    const Tensor<S>& xv = g.value_of(x.id);
    const Index d = xv.dim(xv.rank() - 1);
    const Index rows = xv.size() / d;
    const Tensor<S>& gv = g.value_of(gamma.id);
    const Tensor<S>& bv = g.value_of(beta.id);
    if (gv.size() != d || bv.size() != d) throw std::invalid_argument("layer_norm: affine size");

    auto xhat = std::make_shared<Tensor<S>>(xv.shape());
    auto inv_std = std::make_shared<std::vector<S>>(static_cast<size_t>(rows));
    Tensor<S> out(xv.shape());
    for (Index rI = 0; rI < rows; ++rI) {
        const S* xp = xv.data() + rI * d;
        S mean = S(0);
        for (Index i = 0; i < d; ++i) mean += xp[i];
        mean /= S(d);
        S var = S(0);
        for (Index i = 0; i < d; ++i) {
            const S dd = xp[i] - mean;
            var += dd * dd;
        }
        var /= S(d);
        const S inv = S(1) / std::sqrt(var + eps);
        (*inv_std)[static_cast<size_t>(rI)] = inv;
        S* xh = xhat->data() + rI * d;
        S* op = out.data() + rI * d;
        for (Index i = 0; i < d; ++i) {
            xh[i] = (xp[i] - mean) * inv;
            op[i] = gv[i] * xh[i] + bv[i];
        }
    }
    Var<S> r = g.make(std::move(out), {x, gamma, beta});
    if (g.requires_grad(r)) {
        int ri = r.id, xi = x.id, gi = gamma.id, bi = beta.id;
        g.set_backward(r, [ri, xi, gi, bi, rows, d, xhat, inv_std](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            const Tensor<S>& gamv = gr.value_of(gi);
            for (Index rI = 0; rI < rows; ++rI) {
                const S* gop = go.data() + rI * d;
                const S* xh = xhat->data() + rI * d;
                if (gr.requires_grad(gi)) {
                    Tensor<S>& gg = gr.grad_ref(gi);
                    for (Index i = 0; i < d; ++i) gg[i] += gop[i] * xh[i];
                }
                if (gr.requires_grad(bi)) {
                    Tensor<S>& gb = gr.grad_ref(bi);
                    for (Index i = 0; i < d; ++i) gb[i] += gop[i];
                }
                if (gr.requires_grad(xi)) {
                    const S inv = (*inv_std)[static_cast<size_t>(rI)];
                    S sum_d = S(0), sum_dx = S(0);
                    for (Index i = 0; i < d; ++i) {
                        const S dd = gop[i] * gamv[i];
                        sum_d += dd;
                        sum_dx += dd * xh[i];
                    }
                    S* gxp = gr.grad_ref(xi).data() + rI * d;
                    for (Index i = 0; i < d; ++i) {
                        const S dd = gop[i] * gamv[i];
                        gxp[i] += inv * (dd - sum_d / S(d) - xh[i] * sum_dx / S(d));
                    }
                }
            }
        });
    }
    return r;
}

template <typename S>
Var<S> softmax_last(Var<S> x) {
    Graph<S>& g = *x.g;
    const Tensor<S>& xv = g.value_of(x.id);
    const Index d = xv.dim(xv.rank() - 1);
    const Index rows = xv.size() / d;
    Tensor<S> out(xv.shape());
    for (Index rI = 0; rI < rows; ++rI) {
        const S* xp = xv.data() + rI * d;
        S* op = out.data() + rI * d;
        S mx = xp[0];
        for (Index i = 1; i < d; ++i) mx = std::max(mx, xp[i]);
        S sum = S(0);
        for (Index i = 0; i < d; ++i) {
            op[i] = std::exp(xp[i] - mx);
            sum += op[i];
        }
        for (Index i = 0; i < d; ++i) op[i] /= sum;
    }
    Var<S> r = g.make(std::move(out), {x});
    if (g.requires_grad(r)) {
        int ri = r.id, xi = x.id;
        g.set_backward(r, [ri, xi, rows, d](Graph<S>& gr) {
            const Tensor<S>& go = gr.grad_ref(ri);
            const Tensor<S>& y = gr.value_of(ri);
            Tensor<S>& gx = gr.grad_ref(xi);
            for (Index rI = 0; rI < rows; ++rI) {
                const S* gop = go.data() + rI * d;
                const S* yp = y.data() + rI * d;
                S dot = S(0);
                for (Index i = 0; i < d; ++i) dot += gop[i] * yp[i];
                S* gxp = gx.data() + rI * d;
                for (Index i = 0; i < d; ++i) gxp[i] += yp[i] * (gop[i] - dot);
            }
        });
    }
    return r;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <typename S>
Var<S> sum_all(Var<S> x) {
    Graph<S>& g = *x.g;
    Tensor<S> out({1});
    out[0] = g.value_of(x.id).flat().sum();
    Var<S> r = g.make(std::move(out), {x});
    if (g.requires_grad(r)) {
        int ri = r.id, xi = x.id;
        g.set_backward(r, [ri, xi](Graph<S>& gr) {
            gr.grad_ref(xi).flat() += gr.grad_ref(ri)[0];
        });
    }
    return r;
}

template <typename S>
Var<S> mean_all(Var<S> x) {
    const Index n = x.value().size();
    return scale(sum_all(x), S(1) / S(n));
}

template <typename S>
Var<S> mse(Var<S> pred, Var<S> target) {
    return mean_all(square(sub(pred, target)));
}

}  // namespace seisgen::nn
