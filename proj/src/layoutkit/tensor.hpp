#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace layoutkit::ad {

// Dense row-major float64 tensor with reverse-mode autodiff. A Tensor is a
// cheap handle onto a graph node; primitives record their inputs and an
// exact backward rule, and backward() replays the tape from a scalar loss.
class Tensor;

struct Node {
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized on demand, accumulated with +=
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;  // reads grad, accumulates into parents

    int64_t numel() const {
        int64_t n = 1;
        for (int d : shape) n *= d;
        return n;
    }
    void ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
    }
};

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double v, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    int64_t numel() const { return node_->numel(); }

    std::vector<double>& data() { return node_->value; }
    const std::vector<double>& data() const { return node_->value; }
    std::vector<double>& grad() {
        node_->ensure_grad();
        return node_->grad;
    }
    bool has_grad() const { return !node_->grad.empty(); }
    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool v) { node_->requires_grad = v; }

    double value() const;  // scalar tensors only
    double at(std::initializer_list<int> idx) const;

    std::shared_ptr<Node> node() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
    std::shared_ptr<Node> node_;
    friend Tensor make_node(std::vector<int> shape, std::vector<Tensor> parents,
                            bool requires_grad);
};

[[noreturn]] void shape_error(const std::string& op, const std::vector<const Tensor*>& args);

// ---- elementwise, with suffix broadcasting over leading axes ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);

// ---- elementwise unary ----
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double c);
Tensor clamp(const Tensor& a, double lo, double hi);

// ---- structural ----
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor permute(const Tensor& a, const std::vector<int>& axes);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, int start, int len);
Tensor gather_rows(const Tensor& a, const std::vector<int>& rows);      // 2D -> [n, cols]
Tensor select_index(const Tensor& a, const std::vector<int>& idx);      // 2D -> [rows]
Tensor embedding_gather(const Tensor& table, const std::vector<int>& ids);

// ---- matmul: (M,K)x(K,N) or batched (B,M,K)x(B,K,N) ----
Tensor matmul(const Tensor& a, const Tensor& b);

// ---- reductions / normalizations ----
Tensor sum(const Tensor& a);
Tensor sum(const Tensor& a, int axis);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, int axis);
Tensor max(const Tensor& a, int axis);
Tensor softmax(const Tensor& a, int axis);
Tensor log_softmax(const Tensor& a, int axis);
Tensor layer_norm(const Tensor& a, int axis, double eps);

// ---- stochastic ----
Tensor dropout(const Tensor& a, double p, uint64_t seed, bool training);

// Runs reverse-mode accumulation from a scalar loss into every
// requires_grad leaf reachable on the tape. Gradients add up across calls.
void backward(const Tensor& loss);

// While alive, primitives skip graph recording (forward-only evaluation).
bool grad_enabled();
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// Central finite differences against the analytic gradient of f at the
// given inputs; returns max |analytic - numeric| / max(1e-8, |numeric|).
double finite_diff_check(const std::function<Tensor(std::vector<Tensor>&)>& f,
                         std::vector<Tensor>& inputs, double eps = 1e-5);

}  // namespace layoutkit::ad
