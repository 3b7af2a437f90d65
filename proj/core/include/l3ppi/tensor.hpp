#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

namespace l3ppi {

class Tensor;

// Worker-local gradient sink for batch-parallel accumulation: while active on
// a thread, backward() routes leaf-parameter gradients into the map instead
// of the shared grad buffers. Merge order is the caller's responsibility.
using GradSink = std::unordered_map<const void*, std::vector<double>>;

namespace detail {

struct TensorNode {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first touched by backward
    bool requires_grad = false;
    bool tracked = false;  // requires_grad or downstream of a tracked node
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;

    std::size_t size() const { return data.size(); }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
    // Leaf parameters honor the thread-local sink; everything else is
    // tape-private and accumulates in place.
    void accumulate(std::size_t i, double v);
};

}  // namespace detail

// Dense row-major double tensor with an optional reverse-mode record.
// Cheap handle semantics: copies share the underlying node.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor from_row(std::span<const double> row);  // (1, n) constant

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const;
    int rows() const { return shape().at(0); }
    int cols() const { return shape().size() > 1 ? shape().at(1) : 1; }
    std::size_t size() const;
    bool requires_grad() const;
    bool tracked() const;

    double value() const;  // scalar tensors only
    double at(int r, int c) const;
    std::span<const double> data() const;
    std::span<double> mutable_data();  // optimizer updates; no lineage recorded
    std::span<const double> grad() const;
    bool has_grad() const;
    void zero_grad();

    Tensor detached_copy(bool requires_grad = false) const;
    void copy_data_from(const Tensor& other);

    std::shared_ptr<detail::TensorNode> node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

  private:
    std::shared_ptr<detail::TensorNode> node_;
};

// Generic op constructor for custom differentiable ops (e.g. the weighted
// graph aggregation). `backward_fn` receives the output node and must
// accumulate into parents via TensorNode::accumulate.
Tensor make_op(std::vector<int> shape, std::vector<double> data, std::vector<Tensor> parents,
               std::function<void(detail::TensorNode&)> backward_fn);

// ---- forward ops -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);  // same shape, (1,n) row broadcast, or scalar b
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise; scalar b broadcasts
Tensor neg(const Tensor& a);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);  // grad passes strictly inside
Tensor sum(const Tensor& a);                          // scalar
Tensor mean(const Tensor& a);                         // scalar
Tensor reduce_max(const Tensor& a);                   // scalar; subgradient to first argmax
Tensor concat_rows(std::span<const Tensor> parts);
Tensor gather_rows(const Tensor& a, std::vector<int> indices);

// ---- reverse pass ----------------------------------------------------------

// Accumulates d(loss)/d(leaf) * seed into every reachable tracked leaf.
// Loss must be scalar. Leaves without requires_grad are untouched.
void backward(const Tensor& loss, double seed = 1.0);

// RAII scope that redirects leaf-gradient accumulation on this thread into a
// sink; used for deterministic ordered batch-parallel reductions.
class GradSinkScope {
  public:
    explicit GradSinkScope(GradSink& sink);
    ~GradSinkScope();
    GradSinkScope(const GradSinkScope&) = delete;
    GradSinkScope& operator=(const GradSinkScope&) = delete;
};

// Merges sink contents into the leaf grad buffers (call from one thread, in
// the desired order).
void merge_grad_sink(const GradSink& sink, std::span<const Tensor> params);

// ---- finite-difference oracle ----------------------------------------------

// Max relative error between analytic gradients and central differences,
// rel = |a - fd| / max(|a|, |fd|, 1e-2). `f` must be deterministic.
double grad_check(const std::function<Tensor()>& f, std::span<const Tensor> params,
                  double h = 1e-5);

}  // namespace l3ppi
