#include "tsagent/tensor.hpp"

#include "tsagent/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace tsa {

namespace {

std::atomic<std::int64_t> g_next_id{1};

std::shared_ptr<TensorNode> make_node(Shape shape, std::vector<double> data) {
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->id = g_next_id.fetch_add(1);
    return n;
}

void check_finite(const std::vector<double>& v, const char* op) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw NumericError(std::string("non-finite value produced by primitive '") + op + "'");
        }
    }
}

void ensure_grad(TensorNode& n) {
    if (n.grad.empty()) n.grad.assign(static_cast<std::size_t>(shape_size(n.shape)), 0.0);
}

void finish(const std::shared_ptr<TensorNode>& out,
            std::vector<std::shared_ptr<TensorNode>> parents,
            std::function<void(TensorNode&)> fn, const char* op) {
    check_finite(out->data, op);
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->needs_grad || p->requires_grad;
    out->needs_grad = needs;
    if (needs) {
        out->parents = std::move(parents);
        out->backward_fn = std::move(fn);
    }
}

// Effective strides with 0 on broadcast dims, for same-rank elementwise ops.
struct BcastPlan {
    Shape out_shape;
    std::vector<std::int64_t> a_stride, b_stride, out_dims;
};

BcastPlan plan_broadcast(const Shape& a, const Shape& b, const char* op) {
    if (a.size() != b.size()) {
        throw ShapeError(std::string(op) + ": rank mismatch " + shape_str(a) + " vs " + shape_str(b));
    }
    BcastPlan p;
    std::size_t r = a.size();
    p.out_shape.resize(r);
    for (std::size_t i = 0; i < r; ++i) {
        if (a[i] == b[i]) p.out_shape[i] = a[i];
        else if (a[i] == 1) p.out_shape[i] = b[i];
        else if (b[i] == 1) p.out_shape[i] = a[i];
        else throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " vs " + shape_str(b));
    }
    auto strides = [](const Shape& s) {
        std::vector<std::int64_t> st(s.size(), 1);
        for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i) st[i] = st[i + 1] * s[i + 1];
        return st;
    };
    auto sa = strides(a), sb = strides(b);
    p.a_stride.resize(r);
    p.b_stride.resize(r);
    p.out_dims.resize(r);
    for (std::size_t i = 0; i < r; ++i) {
        p.a_stride[i] = (a[i] == 1 && p.out_shape[i] != 1) ? 0 : sa[i];
        p.b_stride[i] = (b[i] == 1 && p.out_shape[i] != 1) ? 0 : sb[i];
        p.out_dims[i] = p.out_shape[i];
    }
    return p;
}

template <typename F, typename DF>
Tensor elementwise_binary(const Tensor& a, const Tensor& b, const char* op, F f, DF df) {
    const auto& an = a.node();
    const auto& bn = b.node();
    // Scalar operands broadcast against anything.
    bool a_scalar = shape_size(an->shape) == 1;
    bool b_scalar = shape_size(bn->shape) == 1;

    if (an->shape == bn->shape || a_scalar || b_scalar) {
        const Shape& out_shape = a_scalar ? bn->shape : an->shape;
        std::int64_t n = shape_size(out_shape);
        std::vector<double> out(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) {
            double av = an->data[a_scalar ? 0 : i];
            double bv = bn->data[b_scalar ? 0 : i];
            out[i] = f(av, bv);
        }
        auto node = make_node(out_shape, std::move(out));
        auto fn = [a_scalar, b_scalar, n, df](TensorNode& self) {
            auto& A = *self.parents[0];
            auto& B = *self.parents[1];
            bool ga = A.needs_grad || A.requires_grad;
            bool gb = B.needs_grad || B.requires_grad;
            if (ga) ensure_grad(A);
            if (gb) ensure_grad(B);
            for (std::int64_t i = 0; i < n; ++i) {
                double av = A.data[a_scalar ? 0 : i];
                double bv = B.data[b_scalar ? 0 : i];
                auto [da, db] = df(av, bv);
                double g = self.grad[i];
                if (ga) A.grad[a_scalar ? 0 : i] += g * da;
                if (gb) B.grad[b_scalar ? 0 : i] += g * db;
            }
        };
        finish(node, {an, bn}, std::move(fn), op);
        return Tensor(node);
    }

    BcastPlan p = plan_broadcast(an->shape, bn->shape, op);
    std::int64_t n = shape_size(p.out_shape);
    std::vector<double> out(static_cast<std::size_t>(n));
    std::size_t r = p.out_dims.size();
    std::vector<std::int64_t> coord(r, 0);
    for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t ia = 0, ib = 0;
        for (std::size_t d = 0; d < r; ++d) {
            ia += coord[d] * p.a_stride[d];
            ib += coord[d] * p.b_stride[d];
        }
        out[i] = f(an->data[ia], bn->data[ib]);
        for (int d = static_cast<int>(r) - 1; d >= 0; --d) {
            if (++coord[d] < p.out_dims[d]) break;
            coord[d] = 0;
        }
    }
    auto node = make_node(p.out_shape, std::move(out));
    auto fn = [p, n, df](TensorNode& self) {
        auto& A = *self.parents[0];
        auto& B = *self.parents[1];
        bool ga = A.needs_grad || A.requires_grad;
        bool gb = B.needs_grad || B.requires_grad;
        if (ga) ensure_grad(A);
        if (gb) ensure_grad(B);
        std::size_t r = p.out_dims.size();
        std::vector<std::int64_t> coord(r, 0);
        for (std::int64_t i = 0; i < n; ++i) {
            std::int64_t ia = 0, ib = 0;
            for (std::size_t d = 0; d < r; ++d) {
                ia += coord[d] * p.a_stride[d];
                ib += coord[d] * p.b_stride[d];
            }
            auto [da, db] = df(A.data[ia], B.data[ib]);
            double g = self.grad[i];
            if (ga) A.grad[ia] += g * da;
            if (gb) B.grad[ib] += g * db;
            for (int d = static_cast<int>(r) - 1; d >= 0; --d) {
                if (++coord[d] < p.out_dims[d]) break;
                coord[d] = 0;
            }
        }
    };
    finish(node, {an, bn}, std::move(fn), op);
    return Tensor(node);
}

template <typename F, typename DF>
Tensor elementwise_unary(const Tensor& x, const char* op, F f, DF df) {
    const auto& xn = x.node();
    std::int64_t n = shape_size(xn->shape);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) out[i] = f(xn->data[i]);
    auto node = make_node(xn->shape, std::move(out));
    auto fn = [n, df](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        for (std::int64_t i = 0; i < n; ++i) X.grad[i] += self.grad[i] * df(X.data[i], self.data[i]);
    };
    finish(node, {xn}, std::move(fn), op);
    return Tensor(node);
}

void require_2d(const Tensor& x, const char* op) {
    if (x.shape().size() != 2) throw ShapeError(std::string(op) + ": expected 2-D tensor, got " + shape_str(x.shape()));
}

} // namespace

std::int64_t shape_size(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

// -- Tensor constructors -----------------------------------------------------

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
    std::vector<double> d(static_cast<std::size_t>(shape_size(shape)), value);
    return Tensor(make_node(std::move(shape), std::move(d)));
}

Tensor Tensor::from(Shape shape, std::vector<double> data) {
    if (shape_size(shape) != static_cast<std::int64_t>(data.size()))
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
    return Tensor(make_node(std::move(shape), std::move(data)));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::param(const std::string& name, Shape shape, Rng& rng, double scale) {
    std::vector<double> d(static_cast<std::size_t>(shape_size(shape)));
    for (auto& v : d) v = rng.normal(0.0, scale);
    auto n = make_node(std::move(shape), std::move(d));
    n->requires_grad = true;
    n->name = name;
    return Tensor(n);
}

Tensor Tensor::param_const(const std::string& name, Shape shape, double value) {
    std::vector<double> d(static_cast<std::size_t>(shape_size(shape)), value);
    auto n = make_node(std::move(shape), std::move(d));
    n->requires_grad = true;
    n->name = name;
    return Tensor(n);
}

double Tensor::item() const {
    if (size() != 1) throw ContractError("item() requires a scalar tensor, got " + shape_str(shape()));
    return n_->data[0];
}

std::vector<double> Tensor::grad() const {
    if (!n_->grad.empty()) return n_->grad;
    return std::vector<double>(static_cast<std::size_t>(size()), 0.0);
}

Tensor Tensor::detach() const {
    return Tensor(make_node(n_->shape, n_->data));
}

// -- elementwise -------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    return elementwise_binary(a, b, "add", [](double x, double y) { return x + y; },
                              [](double, double) { return std::pair<double, double>(1.0, 1.0); });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return elementwise_binary(a, b, "sub", [](double x, double y) { return x - y; },
                              [](double, double) { return std::pair<double, double>(1.0, -1.0); });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return elementwise_binary(a, b, "mul", [](double x, double y) { return x * y; },
                              [](double x, double y) { return std::pair<double, double>(y, x); });
}

Tensor relu(const Tensor& x) {
    return elementwise_unary(x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
                             [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    constexpr double inv_sqrt2pi = 0.3989422804014327;
    return elementwise_unary(
        x, "gelu", [=](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
        [=](double v, double) {
            return 0.5 * (1.0 + std::erf(v * inv_sqrt2)) + v * inv_sqrt2pi * std::exp(-0.5 * v * v);
        });
}

Tensor sigmoid(const Tensor& x) {
    return elementwise_unary(x, "sigmoid", [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                             [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
    return elementwise_unary(x, "tanh", [](double v) { return std::tanh(v); },
                             [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& x) {
    return elementwise_unary(x, "exp", [](double v) { return std::exp(v); },
                             [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
    return elementwise_unary(x, "log", [](double v) { return std::log(v); },
                             [](double v, double) { return 1.0 / v; });
}

Tensor power(const Tensor& x, double p) {
    return elementwise_unary(x, "power", [p](double v) { return std::pow(v, p); },
                             [p](double v, double) { return p * std::pow(v, p - 1.0); });
}

Tensor dropout_mask(const Tensor& x, double rate, std::uint64_t seed) {
    if (rate < 0.0 || rate > 1.0) throw ContractError("dropout rate must lie in [0,1]");
    if (rate == 0.0) return x;
    std::int64_t n = x.size();
    auto mask = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n), 0.0);
    if (rate < 1.0) {
        Rng rng = Rng::fork(seed, 0xd509);
        double keep = 1.0 - rate;
        for (auto& m : *mask) m = (rng.uniform() >= rate) ? 1.0 / keep : 0.0;
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) out[i] = x.node()->data[i] * (*mask)[i];
    auto node = make_node(x.shape(), std::move(out));
    auto fn = [mask, n](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        for (std::int64_t i = 0; i < n; ++i) X.grad[i] += self.grad[i] * (*mask)[i];
    };
    finish(node, {x.node()}, std::move(fn), "dropout_mask");
    return Tensor(node);
}

// -- linear algebra ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    int n = a.shape()[0], k = a.shape()[1];
    if (b.shape()[0] != k)
        throw ShapeError("matmul: inner dims differ, " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
    int m = b.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(n) * m);
    kernels::matmul(a.data().data(), b.data().data(), out.data(), n, k, m);
    auto node = make_node({n, m}, std::move(out));
    auto fn = [n, k, m](TensorNode& self) {
        auto& A = *self.parents[0];
        auto& B = *self.parents[1];
        if (A.needs_grad || A.requires_grad) {
            ensure_grad(A);
            std::vector<double> da(static_cast<std::size_t>(n) * k);
            kernels::matmul_nt(self.grad.data(), B.data.data(), da.data(), n, m, k);
            for (std::size_t i = 0; i < da.size(); ++i) A.grad[i] += da[i];
        }
        if (B.needs_grad || B.requires_grad) {
            ensure_grad(B);
            std::vector<double> db(static_cast<std::size_t>(k) * m);
            kernels::matmul_tn(A.data.data(), self.grad.data(), db.data(), k, n, m);
            for (std::size_t i = 0; i < db.size(); ++i) B.grad[i] += db[i];
        }
    };
    finish(node, {a.node(), b.node()}, std::move(fn), "matmul");
    return Tensor(node);
}

Tensor transpose(const Tensor& x) {
    require_2d(x, "transpose");
    int n = x.shape()[0], m = x.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(n) * m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(j) * n + i] = x.data()[static_cast<std::size_t>(i) * m + j];
    auto node = make_node({m, n}, std::move(out));
    auto fn = [n, m](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                X.grad[static_cast<std::size_t>(i) * m + j] += self.grad[static_cast<std::size_t>(j) * n + i];
    };
    finish(node, {x.node()}, std::move(fn), "transpose");
    return Tensor(node);
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_size(shape) != x.size())
        throw ShapeError("reshape: size mismatch " + shape_str(x.shape()) + " -> " + shape_str(shape));
    auto node = make_node(std::move(shape), x.data());
    auto fn = [](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        for (std::size_t i = 0; i < self.grad.size(); ++i) X.grad[i] += self.grad[i];
    };
    finish(node, {x.node()}, std::move(fn), "reshape");
    return Tensor(node);
}

namespace {
struct AxisBlocks {
    std::int64_t outer, axis_len, inner;
};
AxisBlocks blocks_for(const Shape& s, int axis) {
    AxisBlocks b{1, s[static_cast<std::size_t>(axis)], 1};
    for (int i = 0; i < axis; ++i) b.outer *= s[static_cast<std::size_t>(i)];
    for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i) b.inner *= s[i];
    return b;
}
} // namespace

Tensor concat(const std::vector<Tensor>& xs, int axis) {
    if (xs.empty()) throw ContractError("concat: empty input list");
    const Shape& base = xs[0].shape();
    if (axis < 0 || axis >= static_cast<int>(base.size())) throw ShapeError("concat: bad axis");
    Shape out_shape = base;
    int total = 0;
    for (const auto& x : xs) {
        if (x.shape().size() != base.size()) throw ShapeError("concat: rank mismatch");
        for (std::size_t d = 0; d < base.size(); ++d)
            if (static_cast<int>(d) != axis && x.shape()[d] != base[d])
                throw ShapeError("concat: shape mismatch at dim " + std::to_string(d));
        total += x.shape()[static_cast<std::size_t>(axis)];
    }
    out_shape[static_cast<std::size_t>(axis)] = total;
    AxisBlocks ob = blocks_for(out_shape, axis);
    std::vector<double> out(static_cast<std::size_t>(shape_size(out_shape)));
    std::int64_t off = 0;
    for (const auto& x : xs) {
        AxisBlocks xb = blocks_for(x.shape(), axis);
        for (std::int64_t o = 0; o < xb.outer; ++o) {
            const double* src = x.data().data() + o * xb.axis_len * xb.inner;
            double* dst = out.data() + (o * ob.axis_len + off) * ob.inner;
            std::memcpy(dst, src, sizeof(double) * static_cast<std::size_t>(xb.axis_len * xb.inner));
        }
        off += xb.axis_len;
    }
    auto node = make_node(out_shape, std::move(out));
    std::vector<std::shared_ptr<TensorNode>> parents;
    parents.reserve(xs.size());
    for (const auto& x : xs) parents.push_back(x.node());
    auto fn = [axis, ob](TensorNode& self) {
        std::int64_t off = 0;
        for (auto& pn : self.parents) {
            AxisBlocks xb = blocks_for(pn->shape, axis);
            if (pn->needs_grad || pn->requires_grad) {
                ensure_grad(*pn);
                for (std::int64_t o = 0; o < xb.outer; ++o) {
                    const double* g = self.grad.data() + (o * ob.axis_len + off) * ob.inner;
                    double* dst = pn->grad.data() + o * xb.axis_len * xb.inner;
                    for (std::int64_t i = 0; i < xb.axis_len * xb.inner; ++i) dst[i] += g[i];
                }
            }
            off += xb.axis_len;
        }
    };
    finish(node, std::move(parents), std::move(fn), "concat");
    return Tensor(node);
}

Tensor slice(const Tensor& x, int axis, int start, int stop) {
    const Shape& s = x.shape();
    if (axis < 0 || axis >= static_cast<int>(s.size())) throw ShapeError("slice: bad axis");
    if (start < 0 || stop > s[static_cast<std::size_t>(axis)] || start >= stop)
        throw ShapeError("slice: bad range [" + std::to_string(start) + "," + std::to_string(stop) +
                         ") on " + shape_str(s));
    Shape out_shape = s;
    out_shape[static_cast<std::size_t>(axis)] = stop - start;
    AxisBlocks xb = blocks_for(s, axis);
    AxisBlocks ob = blocks_for(out_shape, axis);
    std::vector<double> out(static_cast<std::size_t>(shape_size(out_shape)));
    for (std::int64_t o = 0; o < xb.outer; ++o) {
        const double* src = x.data().data() + (o * xb.axis_len + start) * xb.inner;
        double* dst = out.data() + o * ob.axis_len * ob.inner;
        std::memcpy(dst, src, sizeof(double) * static_cast<std::size_t>(ob.axis_len * ob.inner));
    }
    auto node = make_node(out_shape, std::move(out));
    auto fn = [xb, ob, start](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        for (std::int64_t o = 0; o < xb.outer; ++o) {
            const double* g = self.grad.data() + o * ob.axis_len * ob.inner;
            double* dst = X.grad.data() + (o * xb.axis_len + start) * xb.inner;
            for (std::int64_t i = 0; i < ob.axis_len * ob.inner; ++i) dst[i] += g[i];
        }
    };
    finish(node, {x.node()}, std::move(fn), "slice");
    return Tensor(node);
}

// -- normalizing / reductions ------------------------------------------------

Tensor softmax(const Tensor& x) {
    const Shape& s = x.shape();
    std::int64_t cols = s.back();
    std::int64_t rows = shape_size(s) / cols;
    std::vector<double> out(static_cast<std::size_t>(rows * cols));
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* xr = x.data().data() + r * cols;
        double* yr = out.data() + r * cols;
        double mx = xr[0];
        for (std::int64_t j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
        double z = 0.0;
        for (std::int64_t j = 0; j < cols; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            z += yr[j];
        }
        for (std::int64_t j = 0; j < cols; ++j) yr[j] /= z;
    }
    auto node = make_node(s, std::move(out));
    auto fn = [rows, cols](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* y = self.data.data() + r * cols;
            const double* g = self.grad.data() + r * cols;
            double dot = 0.0;
            for (std::int64_t j = 0; j < cols; ++j) dot += g[j] * y[j];
            double* gx = X.grad.data() + r * cols;
            for (std::int64_t j = 0; j < cols; ++j) gx[j] += y[j] * (g[j] - dot);
        }
    };
    finish(node, {x.node()}, std::move(fn), "softmax");
    return Tensor(node);
}

Tensor layer_norm(const Tensor& x, double eps) {
    const Shape& s = x.shape();
    std::int64_t cols = s.back();
    std::int64_t rows = shape_size(s) / cols;
    std::vector<double> out(static_cast<std::size_t>(rows * cols));
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(rows));
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* xr = x.data().data() + r * cols;
        double mu = 0.0;
        for (std::int64_t j = 0; j < cols; ++j) mu += xr[j];
        mu /= static_cast<double>(cols);
        double var = 0.0;
        for (std::int64_t j = 0; j < cols; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(cols);
        double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        double* yr = out.data() + r * cols;
        for (std::int64_t j = 0; j < cols; ++j) yr[j] = (xr[j] - mu) * is;
    }
    auto node = make_node(s, std::move(out));
    auto fn = [rows, cols, inv_std](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* y = self.data.data() + r * cols;
            const double* g = self.grad.data() + r * cols;
            double gmean = 0.0, gymean = 0.0;
            for (std::int64_t j = 0; j < cols; ++j) {
                gmean += g[j];
                gymean += g[j] * y[j];
            }
            gmean /= static_cast<double>(cols);
            gymean /= static_cast<double>(cols);
            double is = (*inv_std)[r];
            double* gx = X.grad.data() + r * cols;
            for (std::int64_t j = 0; j < cols; ++j) gx[j] += is * (g[j] - gmean - y[j] * gymean);
        }
    };
    finish(node, {x.node()}, std::move(fn), "layer_norm");
    return Tensor(node);
}

Tensor mean(const Tensor& x) {
    std::int64_t n = x.size();
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    auto node = make_node({1}, {acc / static_cast<double>(n)});
    auto fn = [n](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        double g = self.grad[0] / static_cast<double>(n);
        for (auto& gi : X.grad) gi += g;
    };
    finish(node, {x.node()}, std::move(fn), "mean");
    return Tensor(node);
}

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    auto node = make_node({1}, {acc});
    auto fn = [](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        double g = self.grad[0];
        for (auto& gi : X.grad) gi += g;
    };
    finish(node, {x.node()}, std::move(fn), "sum");
    return Tensor(node);
}

namespace {
// Shared axis-reduction for 2-D mean/sum; keepdims output.
Tensor reduce2d(const Tensor& x, int axis, bool take_mean, const char* op) {
    require_2d(x, op);
    if (axis != 0 && axis != 1) throw ShapeError(std::string(op) + ": axis must be 0 or 1");
    int n = x.shape()[0], m = x.shape()[1];
    int out_n = axis == 0 ? 1 : n;
    int out_m = axis == 0 ? m : 1;
    double denom = take_mean ? (axis == 0 ? n : m) : 1.0;
    std::vector<double> out(static_cast<std::size_t>(out_n) * out_m, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out[axis == 0 ? j : i] += x.data()[static_cast<std::size_t>(i) * m + j];
    for (auto& v : out) v /= denom;
    auto node = make_node({out_n, out_m}, std::move(out));
    auto fn = [n, m, axis, denom](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                X.grad[static_cast<std::size_t>(i) * m + j] += self.grad[axis == 0 ? j : i] / denom;
    };
    finish(node, {x.node()}, std::move(fn), op);
    return Tensor(node);
}
} // namespace

Tensor mean(const Tensor& x, int axis) { return reduce2d(x, axis, true, "mean"); }
Tensor sum(const Tensor& x, int axis) { return reduce2d(x, axis, false, "sum"); }

Tensor variance(const Tensor& x) {
    std::int64_t n = x.size();
    double mu = 0.0;
    for (double v : x.data()) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x.data()) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    auto node = make_node({1}, {var});
    auto fn = [n, mu](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        double g = self.grad[0] * 2.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < X.grad.size(); ++i) X.grad[i] += g * (X.data[i] - mu);
    };
    finish(node, {x.node()}, std::move(fn), "variance");
    return Tensor(node);
}

Tensor variance(const Tensor& x, int axis) {
    require_2d(x, "variance");
    if (axis != 0 && axis != 1) throw ShapeError("variance: axis must be 0 or 1");
    int n = x.shape()[0], m = x.shape()[1];
    int out_n = axis == 0 ? 1 : n;
    int out_m = axis == 0 ? m : 1;
    int len = axis == 0 ? n : m;
    auto mus = std::make_shared<std::vector<double>>(static_cast<std::size_t>(out_n) * out_m, 0.0);
    std::vector<double> out(mus->size(), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) (*mus)[axis == 0 ? j : i] += x.data()[static_cast<std::size_t>(i) * m + j];
    for (auto& v : *mus) v /= len;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double d = x.data()[static_cast<std::size_t>(i) * m + j] - (*mus)[axis == 0 ? j : i];
            out[axis == 0 ? j : i] += d * d;
        }
    for (auto& v : out) v /= len;
    auto node = make_node({out_n, out_m}, std::move(out));
    auto fn = [n, m, axis, len, mus](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) {
                std::size_t xi = static_cast<std::size_t>(i) * m + j;
                std::size_t oi = axis == 0 ? j : i;
                X.grad[xi] += self.grad[oi] * 2.0 * (X.data[xi] - (*mus)[oi]) / len;
            }
    };
    finish(node, {x.node()}, std::move(fn), "variance");
    return Tensor(node);
}

// -- convolutions ------------------------------------------------------------

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int dilation, Pad1d pad) {
    require_2d(x, "conv1d");
    if (w.shape().size() != 3) throw ShapeError("conv1d: weight must be [Cout x Cin x K]");
    int len = x.shape()[0], cin = x.shape()[1];
    int cout = w.shape()[0], k = w.shape()[2];
    if (w.shape()[1] != cin)
        throw ShapeError("conv1d: channel mismatch, input " + shape_str(x.shape()) + " weight " + shape_str(w.shape()));
    if (b.size() != cout) throw ShapeError("conv1d: bias size must equal Cout");
    if (dilation < 1) throw ContractError("conv1d: dilation must be >= 1");
    int pad_left = pad == Pad1d::Same ? ((k - 1) * dilation) / 2 : (k - 1) * dilation;
    int len_out = len;

    auto cols = std::make_shared<std::vector<double>>(static_cast<std::size_t>(len_out) * cin * k);
    kernels::im2col1d(x.data().data(), cols->data(), len, cin, k, 1, dilation, pad_left, len_out);
    std::vector<double> out(static_cast<std::size_t>(len_out) * cout);
    kernels::matmul_nt(cols->data(), w.data().data(), out.data(), len_out, cin * k, cout);
    for (int t = 0; t < len_out; ++t)
        for (int c = 0; c < cout; ++c) out[static_cast<std::size_t>(t) * cout + c] += b.data()[c];

    auto node = make_node({len_out, cout}, std::move(out));
    auto fn = [cols, len, cin, cout, k, dilation, pad_left, len_out](TensorNode& self) {
        auto& X = *self.parents[0];
        auto& W = *self.parents[1];
        auto& B = *self.parents[2];
        if (B.needs_grad || B.requires_grad) {
            ensure_grad(B);
            for (int t = 0; t < len_out; ++t)
                for (int c = 0; c < cout; ++c) B.grad[c] += self.grad[static_cast<std::size_t>(t) * cout + c];
        }
        if (W.needs_grad || W.requires_grad) {
            ensure_grad(W);
            std::vector<double> dw(static_cast<std::size_t>(cout) * cin * k);
            kernels::matmul_tn(self.grad.data(), cols->data(), dw.data(), cout, len_out, cin * k);
            for (std::size_t i = 0; i < dw.size(); ++i) W.grad[i] += dw[i];
        }
        if (X.needs_grad || X.requires_grad) {
            ensure_grad(X);
            std::vector<double> dcols(cols->size());
            kernels::matmul(self.grad.data(), W.data.data(), dcols.data(), len_out, cout, cin * k);
            std::vector<double> dx(static_cast<std::size_t>(len) * cin);
            kernels::col2im1d(dcols.data(), dx.data(), len, cin, k, 1, dilation, pad_left, len_out);
            for (std::size_t i = 0; i < dx.size(); ++i) X.grad[i] += dx[i];
        }
    };
    finish(node, {x.node(), w.node(), b.node()}, std::move(fn), "conv1d");
    return Tensor(node);
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.shape().size() != 3) throw ShapeError("conv2d: input must be [H x W x Cin]");
    if (w.shape().size() != 4) throw ShapeError("conv2d: weight must be [Cout x Cin x Kh x Kw]");
    int h = x.shape()[0], wd = x.shape()[1], cin = x.shape()[2];
    int cout = w.shape()[0], kh = w.shape()[2], kw = w.shape()[3];
    if (w.shape()[1] != cin) throw ShapeError("conv2d: channel mismatch");
    if (kh != kw || (kh != 1 && kh != 3 && kh != 5))
        throw ContractError("conv2d: kernel must be square 1/3/5");
    if (b.size() != cout) throw ShapeError("conv2d: bias size must equal Cout");

    auto cols = std::make_shared<std::vector<double>>(static_cast<std::size_t>(h) * wd * cin * kh * kw);
    kernels::im2col2d(x.data().data(), cols->data(), h, wd, cin, kh, kw);
    std::vector<double> out(static_cast<std::size_t>(h) * wd * cout);
    kernels::matmul_nt(cols->data(), w.data().data(), out.data(), h * wd, cin * kh * kw, cout);
    for (int t = 0; t < h * wd; ++t)
        for (int c = 0; c < cout; ++c) out[static_cast<std::size_t>(t) * cout + c] += b.data()[c];

    auto node = make_node({h, wd, cout}, std::move(out));
    auto fn = [cols, h, wd, cin, cout, kh, kw](TensorNode& self) {
        auto& X = *self.parents[0];
        auto& W = *self.parents[1];
        auto& B = *self.parents[2];
        int np = h * wd, ck = cin * kh * kw;
        if (B.needs_grad || B.requires_grad) {
            ensure_grad(B);
            for (int t = 0; t < np; ++t)
                for (int c = 0; c < cout; ++c) B.grad[c] += self.grad[static_cast<std::size_t>(t) * cout + c];
        }
        if (W.needs_grad || W.requires_grad) {
            ensure_grad(W);
            std::vector<double> dw(static_cast<std::size_t>(cout) * ck);
            kernels::matmul_tn(self.grad.data(), cols->data(), dw.data(), cout, np, ck);
            for (std::size_t i = 0; i < dw.size(); ++i) W.grad[i] += dw[i];
        }
        if (X.needs_grad || X.requires_grad) {
            ensure_grad(X);
            std::vector<double> dcols(cols->size());
            kernels::matmul(self.grad.data(), W.data.data(), dcols.data(), np, cout, ck);
            std::vector<double> dx(static_cast<std::size_t>(h) * wd * cin);
            kernels::col2im2d(dcols.data(), dx.data(), h, wd, cin, kh, kw);
            for (std::size_t i = 0; i < dx.size(); ++i) X.grad[i] += dx[i];
        }
    };
    finish(node, {x.node(), w.node(), b.node()}, std::move(fn), "conv2d");
    return Tensor(node);
}

Tensor avg_pool1d(const Tensor& x, int kernel) {
    require_2d(x, "avg_pool1d");
    if (kernel < 1 || kernel % 2 == 0) throw ContractError("avg_pool1d: kernel must be odd and >= 1");
    int len = x.shape()[0], d = x.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(len) * d);
    kernels::moving_average(x.data().data(), out.data(), len, d, kernel);
    auto node = make_node({len, d}, std::move(out));
    auto fn = [len, d, kernel](TensorNode& self) {
        auto& X = *self.parents[0];
        ensure_grad(X);
        int half = kernel / 2;
        for (int t = 0; t < len; ++t)
            for (int c = 0; c < d; ++c) {
                double g = self.grad[static_cast<std::size_t>(t) * d + c] / kernel;
                for (int o = -half; o <= half; ++o) {
                    int src = std::clamp(t + o, 0, len - 1);
                    X.grad[static_cast<std::size_t>(src) * d + c] += g;
                }
            }
    };
    finish(node, {x.node()}, std::move(fn), "avg_pool1d");
    return Tensor(node);
}

Tensor embedding_project(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_2d(x, "embedding_project");
    require_2d(w, "embedding_project");
    int n = x.shape()[0], din = x.shape()[1];
    if (w.shape()[0] != din)
        throw ShapeError("embedding_project: weight rows must equal input cols, " + shape_str(x.shape()) +
                         " vs " + shape_str(w.shape()));
    int dout = w.shape()[1];
    if (b.size() != dout) throw ShapeError("embedding_project: bias size must equal output dim");
    std::vector<double> out(static_cast<std::size_t>(n) * dout);
    kernels::matmul(x.data().data(), w.data().data(), out.data(), n, din, dout);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dout; ++j) out[static_cast<std::size_t>(i) * dout + j] += b.data()[j];
    auto node = make_node({n, dout}, std::move(out));
    auto fn = [n, din, dout](TensorNode& self) {
        auto& X = *self.parents[0];
        auto& W = *self.parents[1];
        auto& B = *self.parents[2];
        if (B.needs_grad || B.requires_grad) {
            ensure_grad(B);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < dout; ++j) B.grad[j] += self.grad[static_cast<std::size_t>(i) * dout + j];
        }
        if (W.needs_grad || W.requires_grad) {
            ensure_grad(W);
            std::vector<double> dw(static_cast<std::size_t>(din) * dout);
            kernels::matmul_tn(X.data.data(), self.grad.data(), dw.data(), din, n, dout);
            for (std::size_t i = 0; i < dw.size(); ++i) W.grad[i] += dw[i];
        }
        if (X.needs_grad || X.requires_grad) {
            ensure_grad(X);
            std::vector<double> dx(static_cast<std::size_t>(n) * din);
            kernels::matmul_nt(self.grad.data(), W.data.data(), dx.data(), n, dout, din);
            for (std::size_t i = 0; i < dx.size(); ++i) X.grad[i] += dx[i];
        }
    };
    finish(node, {x.node(), w.node(), b.node()}, std::move(fn), "embedding_project");
    return Tensor(node);
}

// -- backward ----------------------------------------------------------------

void backward(const Tensor& loss) {
    auto root = loss.node();
    if (!root) throw ContractError("backward: undefined tensor");
    if (loss.size() != 1) throw ContractError("backward: loss must be scalar, got " + shape_str(loss.shape()));
    if (root->consumed) throw ContractError("backward: graph already consumed");

    // Gather reachable nodes; descending id is reverse-topological.
    std::vector<std::shared_ptr<TensorNode>> order;
    std::vector<std::shared_ptr<TensorNode>> stack{root};
    std::unordered_map<TensorNode*, bool> seen;
    while (!stack.empty()) {
        auto n = stack.back();
        stack.pop_back();
        if (seen[n.get()]) continue;
        seen[n.get()] = true;
        order.push_back(n);
        for (auto& p : n->parents) stack.push_back(p);
    }
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a->id > b->id; });

    root->grad.assign(1, 1.0);
    for (auto& n : order) {
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
    // Consume the graph: release edges and intermediate gradients, keep leaf
    // gradients for the optimizer.
    for (auto& n : order) {
        n->backward_fn = nullptr;
        n->parents.clear();
        n->consumed = true;
        if (!n->requires_grad) n->grad.clear();
    }
}

// -- ParamStore ----------------------------------------------------------------

Tensor ParamStore::create(const std::string& name, Shape shape, Rng& rng, double scale) {
    if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
    Tensor t = Tensor::param(name, std::move(shape), rng, scale);
    index_[name] = params_.size();
    params_.push_back(t);
    return t;
}

Tensor ParamStore::create_const(const std::string& name, Shape shape, double value) {
    if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
    Tensor t = Tensor::param_const(name, std::move(shape), value);
    index_[name] = params_.size();
    params_.push_back(t);
    return t;
}

Tensor ParamStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter: " + name);
    return params_[it->second];
}

void ParamStore::zero_grads() {
    for (auto& p : params_) p.clear_grad();
}

std::int64_t ParamStore::total_size() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

} // namespace tsa
