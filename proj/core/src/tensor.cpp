#include "l3ppi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace l3ppi {

namespace {

thread_local GradSink* tl_sink = nullptr;

std::int64_t shape_size(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

bool any_tracked(const std::vector<Tensor>& parents) {
    for (const Tensor& p : parents)
        if (p.tracked()) return true;
    return false;
}

}  // namespace

namespace detail {

void TensorNode::accumulate(std::size_t i, double v) {
    if (tl_sink && requires_grad) {
        auto& buf = (*tl_sink)[this];
        if (buf.size() != data.size()) buf.assign(data.size(), 0.0);
        buf[i] += v;
        return;
    }
    ensure_grad();
    grad[i] += v;
}

}  // namespace detail

using detail::TensorNode;

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    auto node = std::make_shared<TensorNode>();
    node->data.assign(static_cast<std::size_t>(shape_size(shape)), value);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    node->tracked = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    if (static_cast<std::int64_t>(data.size()) != shape_size(shape))
        throw std::invalid_argument("tensor data length does not match shape");
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    node->tracked = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

Tensor Tensor::from_row(std::span<const double> row) {
    return from_data({1, static_cast<int>(row.size())}, {row.begin(), row.end()});
}

const std::vector<int>& Tensor::shape() const {
    if (!node_) throw std::logic_error("empty tensor");
    return node_->shape;
}

std::size_t Tensor::size() const {
    if (!node_) throw std::logic_error("empty tensor");
    return node_->size();
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::tracked() const { return node_ && node_->tracked; }

double Tensor::value() const {
    if (size() != 1) throw std::invalid_argument("value() needs a scalar tensor");
    return node_->data[0];
}

double Tensor::at(int r, int c) const {
    const auto& sh = shape();
    const int ncols = sh.size() > 1 ? sh[1] : 1;
    return node_->data[static_cast<std::size_t>(r) * static_cast<std::size_t>(ncols) +
                       static_cast<std::size_t>(c)];
}

std::span<const double> Tensor::data() const {
    if (!node_) throw std::logic_error("empty tensor");
    return node_->data;
}

std::span<double> Tensor::mutable_data() {
    if (!node_) throw std::logic_error("empty tensor");
    return node_->data;
}

std::span<const double> Tensor::grad() const {
    if (!node_) throw std::logic_error("empty tensor");
    return node_->grad;
}

bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->data.size(); }

void Tensor::zero_grad() {
    if (node_) node_->grad.assign(node_->data.size(), 0.0);
}

Tensor Tensor::detached_copy(bool requires_grad) const {
    return from_data(shape(), {node_->data.begin(), node_->data.end()}, requires_grad);
}

void Tensor::copy_data_from(const Tensor& other) {
    if (shape() != other.shape()) throw std::invalid_argument("copy_data_from: shape mismatch");
    node_->data = other.node()->data;
}

Tensor make_op(std::vector<int> shape, std::vector<double> data, std::vector<Tensor> parents,
               std::function<void(TensorNode&)> backward_fn) {
    if (static_cast<std::int64_t>(data.size()) != shape_size(shape))
        throw std::invalid_argument("make_op: data length does not match shape");
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->tracked = any_tracked(parents);
    if (node->tracked) {
        node->parents.reserve(parents.size());
        for (const Tensor& p : parents) node->parents.push_back(p.node());
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

// ---- elementwise and shape helpers ------------------------------------------

namespace {

enum class AddKind { Same, RowBroadcast, ScalarB };

AddKind classify_add(const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) return AddKind::Same;
    if (b.size() == 1) return AddKind::ScalarB;
    if (a.shape().size() == 2 && b.shape().size() == 2 && b.shape()[0] == 1 &&
        b.shape()[1] == a.shape()[1])
        return AddKind::RowBroadcast;
    throw std::invalid_argument("shape mismatch in elementwise op");
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    const AddKind kind = classify_add(a, b);
    std::vector<double> out(a.data().begin(), a.data().end());
    const auto bd = b.data();
    const std::size_t bn = bd.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i % bn];

    auto an = a.node();
    auto bn_node = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn_node, kind](TensorNode& o) {
        if (an->tracked)
            for (std::size_t i = 0; i < o.size(); ++i) an->accumulate(i, o.grad[i]);
        if (bn_node->tracked) {
            const std::size_t bsz = bn_node->size();
            for (std::size_t i = 0; i < o.size(); ++i) bn_node->accumulate(i % bsz, o.grad[i]);
        }
        (void)kind;
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    classify_add(a, b);
    std::vector<double> out(a.data().begin(), a.data().end());
    const auto bd = b.data();
    const std::size_t bn = bd.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bd[i % bn];

    auto an = a.node();
    auto bnode = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bnode](TensorNode& o) {
        if (an->tracked)
            for (std::size_t i = 0; i < o.size(); ++i) an->accumulate(i, o.grad[i]);
        if (bnode->tracked) {
            const std::size_t bsz = bnode->size();
            for (std::size_t i = 0; i < o.size(); ++i) bnode->accumulate(i % bsz, -o.grad[i]);
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (!(a.shape() == b.shape() || b.size() == 1))
        throw std::invalid_argument("mul: want same shape or scalar rhs");
    std::vector<double> out(a.data().begin(), a.data().end());
    const auto bd = b.data();
    const std::size_t bn = bd.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bd[i % bn];

    auto an = a.node();
    auto bnode = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bnode](TensorNode& o) {
        const std::size_t bsz = bnode->size();
        if (an->tracked)
            for (std::size_t i = 0; i < o.size(); ++i)
                an->accumulate(i, o.grad[i] * bnode->data[i % bsz]);
        if (bnode->tracked)
            for (std::size_t i = 0; i < o.size(); ++i)
                bnode->accumulate(i % bsz, o.grad[i] * an->data[i]);
    });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor add_scalar(const Tensor& a, double c) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& x : out) x += c;
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](TensorNode& o) {
        for (std::size_t i = 0; i < o.size(); ++i) an->accumulate(i, o.grad[i]);
    });
}

Tensor mul_scalar(const Tensor& a, double c) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& x : out) x *= c;
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an, c](TensorNode& o) {
        for (std::size_t i = 0; i < o.size(); ++i) an->accumulate(i, o.grad[i] * c);
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    const auto& as = a.shape();
    const auto& bs = b.shape();
    if (as.size() != 2 || bs.size() != 2 || as[1] != bs[0])
        throw std::invalid_argument("matmul: incompatible shapes");
    const int m = as[0], k = as[1], n = bs[1];
    std::vector<double> out(static_cast<std::size_t>(m) * static_cast<std::size_t>(n), 0.0);
    const auto ad = a.data();
    const auto bd = b.data();
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            const double av = ad[static_cast<std::size_t>(i) * k + p];
            if (av == 0.0) continue;
            for (int j = 0; j < n; ++j)
                out[static_cast<std::size_t>(i) * n + j] += av * bd[static_cast<std::size_t>(p) * n + j];
        }

    auto an = a.node();
    auto bnode = b.node();
    return make_op({m, n}, std::move(out), {a, b}, [an, bnode, m, k, n](TensorNode& o) {
        if (an->tracked) {
            // dA = dC * B^T
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j)
                        acc += o.grad[static_cast<std::size_t>(i) * n + j] *
                               bnode->data[static_cast<std::size_t>(p) * n + j];
                    an->accumulate(static_cast<std::size_t>(i) * k + p, acc);
                }
        }
        if (bnode->tracked) {
            // dB = A^T * dC
            for (int p = 0; p < k; ++p)
                for (int j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < m; ++i)
                        acc += an->data[static_cast<std::size_t>(i) * k + p] *
                               o.grad[static_cast<std::size_t>(i) * n + j];
                    bnode->accumulate(static_cast<std::size_t>(p) * n + j, acc);
                }
        }
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& x : out) x = x > 0.0 ? x : 0.0;
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](TensorNode& o) {
        for (std::size_t i = 0; i < o.size(); ++i)
            if (an->data[i] > 0.0) an->accumulate(i, o.grad[i]);
    });
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& x : out) x = 1.0 / (1.0 + std::exp(-x));
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](TensorNode& o) {
        for (std::size_t i = 0; i < o.size(); ++i) {
            const double s = o.data[i];
            an->accumulate(i, o.grad[i] * s * (1.0 - s));
        }
    });
}

Tensor log_t(const Tensor& a) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& x : out) x = std::log(x);
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](TensorNode& o) {
        for (std::size_t i = 0; i < o.size(); ++i) an->accumulate(i, o.grad[i] / an->data[i]);
    });
}

Tensor exp_t(const Tensor& a) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& x : out) x = std::exp(x);
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](TensorNode& o) {
        for (std::size_t i = 0; i < o.size(); ++i) an->accumulate(i, o.grad[i] * o.data[i]);
    });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("clamp: need lo < hi");
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& x : out) x = std::min(std::max(x, lo), hi);
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an, lo, hi](TensorNode& o) {
        for (std::size_t i = 0; i < o.size(); ++i)
            if (an->data[i] > lo && an->data[i] < hi) an->accumulate(i, o.grad[i]);
    });
}

Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (double x : a.data()) total += x;
    auto an = a.node();
    return make_op({1}, {total}, {a}, [an](TensorNode& o) {
        for (std::size_t i = 0; i < an->size(); ++i) an->accumulate(i, o.grad[0]);
    });
}

Tensor mean(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.size());
    double total = 0.0;
    for (double x : a.data()) total += x;
    auto an = a.node();
    return make_op({1}, {total * inv}, {a}, [an, inv](TensorNode& o) {
        for (std::size_t i = 0; i < an->size(); ++i) an->accumulate(i, o.grad[0] * inv);
    });
}

Tensor reduce_max(const Tensor& a) {
    const auto d = a.data();
    std::size_t best = 0;
    for (std::size_t i = 1; i < d.size(); ++i)
        if (d[i] > d[best]) best = i;
    auto an = a.node();
    return make_op({1}, {d[best]}, {a}, [an, best](TensorNode& o) {
        an->accumulate(best, o.grad[0]);
    });
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
    const int cols = parts[0].cols();
    int rows = 0;
    for (const Tensor& p : parts) {
        if (p.shape().size() != 2 || p.cols() != cols)
            throw std::invalid_argument("concat_rows: column mismatch");
        rows += p.rows();
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (const Tensor& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());

    std::vector<Tensor> parents(parts.begin(), parts.end());
    std::vector<std::shared_ptr<TensorNode>> pnodes;
    pnodes.reserve(parts.size());
    for (const Tensor& p : parts) pnodes.push_back(p.node());
    return make_op({rows, cols}, std::move(out), std::move(parents), [pnodes](TensorNode& o) {
        std::size_t offset = 0;
        for (const auto& pn : pnodes) {
            if (pn->tracked)
                for (std::size_t i = 0; i < pn->size(); ++i) pn->accumulate(i, o.grad[offset + i]);
            offset += pn->size();
        }
    });
}

Tensor gather_rows(const Tensor& a, std::vector<int> indices) {
    if (a.shape().size() != 2) throw std::invalid_argument("gather_rows: want a matrix");
    const int cols = a.cols();
    std::vector<double> out;
    out.reserve(indices.size() * static_cast<std::size_t>(cols));
    for (int r : indices) {
        if (r < 0 || r >= a.rows()) throw std::out_of_range("gather_rows: row out of range");
        const auto d = a.data();
        out.insert(out.end(), d.begin() + static_cast<std::ptrdiff_t>(r) * cols,
                   d.begin() + (static_cast<std::ptrdiff_t>(r) + 1) * cols);
    }
    auto an = a.node();
    auto idx = std::make_shared<std::vector<int>>(std::move(indices));
    return make_op({static_cast<int>(idx->size()), cols}, std::move(out), {a},
                   [an, idx, cols](TensorNode& o) {
                       for (std::size_t r = 0; r < idx->size(); ++r)
                           for (int c = 0; c < cols; ++c)
                               an->accumulate(
                                   static_cast<std::size_t>((*idx)[r]) * cols + static_cast<std::size_t>(c),
                                   o.grad[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]);
                   });
}

// ---- reverse pass ------------------------------------------------------------

void backward(const Tensor& loss, double seed) {
    if (loss.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
    auto root = loss.node();
    if (!root->tracked) return;

    // iterative postorder over tracked parents
    std::vector<TensorNode*> order;
    std::unordered_map<TensorNode*, int> state;  // 0 new, 1 open, 2 done
    std::vector<TensorNode*> stack{root.get()};
    while (!stack.empty()) {
        TensorNode* cur = stack.back();
        int& st = state[cur];
        if (st == 0) {
            st = 1;
            for (const auto& p : cur->parents)
                if (p->tracked && state[p.get()] == 0) stack.push_back(p.get());
        } else {
            stack.pop_back();
            if (st == 1) {
                st = 2;
                order.push_back(cur);
            }
        }
    }

    for (TensorNode* n : order)
        if (!n->requires_grad) n->grad.assign(n->data.size(), 0.0);
    root->ensure_grad();
    root->grad[0] += seed;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

GradSinkScope::GradSinkScope(GradSink& sink) { tl_sink = &sink; }
GradSinkScope::~GradSinkScope() { tl_sink = nullptr; }

void merge_grad_sink(const GradSink& sink, std::span<const Tensor> params) {
    for (const Tensor& p : params) {
        auto it = sink.find(p.node().get());
        if (it == sink.end()) continue;
        auto node = p.node();
        node->ensure_grad();
        for (std::size_t i = 0; i < it->second.size(); ++i) node->grad[i] += it->second[i];
    }
}

// ---- finite differences --------------------------------------------------------

double grad_check(const std::function<Tensor()>& f, std::span<const Tensor> params, double h) {
    Tensor out = f();
    for (const Tensor& p : params) const_cast<Tensor&>(p).zero_grad();
    backward(out);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const Tensor& p : params) analytic.emplace_back(p.grad().begin(), p.grad().end());

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        auto data = p.mutable_data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            data[i] = saved + h;
            const double up = f().value();
            data[i] = saved - h;
            const double down = f().value();
            data[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double a = analytic[pi][i];
            const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-2});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace l3ppi
