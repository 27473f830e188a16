#ifndef TSAGENT_TENSOR_HPP
#define TSAGENT_TENSOR_HPP

#include "tsagent/errors.hpp"
#include "tsagent/rng.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace tsa {

using Shape = std::vector<int>;

std::int64_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

// One recorded primitive application (or a leaf). Nodes form a DAG through
// the parents list; ids are creation-ordered, so descending id is a valid
// reverse-topological order for the backward pass.
struct TensorNode {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;        // sized lazily during backward
    bool requires_grad = false;      // leaf parameter flag
    bool needs_grad = false;         // true if on a path from any parameter
    bool consumed = false;
    std::string name;                // non-empty for named leaves
    std::int64_t id = 0;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;
};

// Value-semantics handle to a graph node. Copies share the node.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor from(Shape shape, std::vector<double> data);
    static Tensor scalar(double value);
    // Named leaf with requires_grad set; init ~ Normal(0, scale).
    static Tensor param(const std::string& name, Shape shape, Rng& rng, double scale);
    static Tensor param_const(const std::string& name, Shape shape, double value);

    bool defined() const { return n_ != nullptr; }
    const Shape& shape() const { return n_->shape; }
    std::int64_t size() const { return shape_size(n_->shape); }
    int rows() const { return n_->shape.at(0); }
    int cols() const { return n_->shape.at(1); }
    const std::vector<double>& data() const { return n_->data; }
    std::vector<double>& data_mut() { return n_->data; }
    double item() const;
    double at(std::int64_t i) const { return n_->data[i]; }

    bool requires_grad() const { return n_->requires_grad; }
    const std::string& name() const { return n_->name; }
    // Gradient of the last backward pass; zeros if this leaf was not reached.
    std::vector<double> grad() const;
    std::vector<double>& grad_mut() { return n_->grad; }
    void clear_grad() { n_->grad.clear(); }

    // Constant copy cut off from the graph.
    Tensor detach() const;

    std::shared_ptr<TensorNode> node() const { return n_; }
    explicit Tensor(std::shared_ptr<TensorNode> n) : n_(std::move(n)) {}

private:
    std::shared_ptr<TensorNode> n_;
};

// -- primitives ------------------------------------------------------------
// Elementwise ops broadcast when one operand is scalar-sized or when ranks
// match and each dim is equal or 1.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(const std::vector<Tensor>& xs, int axis);
Tensor slice(const Tensor& x, int axis, int start, int stop);

Tensor softmax(const Tensor& x);                  // over the last axis
Tensor layer_norm(const Tensor& x, double eps = 1e-5);

Tensor mean(const Tensor& x);                     // full reduction -> {1}
Tensor mean(const Tensor& x, int axis);           // 2-D, keepdims
Tensor variance(const Tensor& x);                 // population, full -> {1}
Tensor variance(const Tensor& x, int axis);       // 2-D, keepdims
Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, int axis);

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor power(const Tensor& x, double p);

// Inverted dropout; rate 0 is the identity, rate 1 zeroes values and grads.
// The mask is a pure function of (shape, seed).
Tensor dropout_mask(const Tensor& x, double rate, std::uint64_t seed);

enum class Pad1d { Same, Causal };
// x: [L x Cin], w: [Cout x Cin x K], b: [Cout]; stride 1.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              int dilation = 1, Pad1d pad = Pad1d::Same);
// x: [H x W x Cin], w: [Cout x Cin x Kh x Kw], b: [Cout]; odd kernels <= 5,
// same padding, stride 1.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b);
// Centered moving average over time with replicate padding; x: [L x D].
Tensor avg_pool1d(const Tensor& x, int kernel);
// Fused affine projection: x[N x din] * w[din x dout] + b[dout].
Tensor embedding_project(const Tensor& x, const Tensor& w, const Tensor& b);

// -- autodiff ---------------------------------------------------------------
// Seeds d(loss)/d(loss) = 1, walks the graph in reverse topological order
// exactly once, accumulates leaf gradients, then releases the graph edges.
void backward(const Tensor& loss);

// -- parameters --------------------------------------------------------------
class ParamStore {
public:
    Tensor create(const std::string& name, Shape shape, Rng& rng, double scale);
    Tensor create_const(const std::string& name, Shape shape, double value);
    Tensor get(const std::string& name) const;
    bool has(const std::string& name) const { return index_.count(name) > 0; }
    const std::vector<Tensor>& all() const { return params_; }
    std::vector<Tensor>& all_mut() { return params_; }
    void zero_grads();
    std::int64_t total_size() const;

private:
    std::vector<Tensor> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

} // namespace tsa

#endif // TSAGENT_TENSOR_HPP
