#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace gevit {

// Reverse-mode autodiff over dense row-major arrays. A Tensor is a shared
// handle to a graph node; ops build the graph, backward() walks it once in
// reverse topological order and accumulates into leaf grads.
template <class T>
struct TensorNode {
    std::vector<int> shape;
    std::vector<T> value;
    std::vector<T> grad;  // sized lazily during backward
    bool requires_grad = false;
    bool on_grad_path = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backprop;

    std::vector<T>& ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
        return grad;
    }
};

inline size_t shape_numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor dims must be positive");
        n *= static_cast<size_t>(d);
    }
    return n;
}

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + ")";
}

template <class T>
class Tensor {
public:
    using Node = TensorNode<T>;

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Tensor zeros(std::vector<int> shape) {
        auto n = std::make_shared<Node>();
        n->value.assign(shape_numel(shape), T(0));
        n->shape = std::move(shape);
        return Tensor(n);
    }
    static Tensor constant(std::vector<int> shape, std::vector<T> data) {
        if (data.size() != shape_numel(shape))
            throw std::invalid_argument("data length does not match shape " + shape_str(shape));
        auto n = std::make_shared<Node>();
        n->shape = std::move(shape);
        n->value = std::move(data);
        return Tensor(n);
    }
    static Tensor scalar(T v) { return constant({1}, {v}); }
    // Leaf with gradient tracking (a parameter).
    static Tensor param(std::vector<int> shape, std::vector<T> data) {
        Tensor t = constant(std::move(shape), std::move(data));
        t.node_->requires_grad = true;
        t.node_->on_grad_path = true;
        return t;
    }
    static Tensor from_op(std::vector<int> shape, std::vector<T> value,
                          std::vector<Tensor> parents, std::function<void(Node&)> backprop) {
        if (value.size() != shape_numel(shape))
            throw std::logic_error("op produced wrong element count for " + shape_str(shape));
        auto n = std::make_shared<Node>();
        n->shape = std::move(shape);
        n->value = std::move(value);
        for (auto& p : parents) {
            n->parents.push_back(p.node_);
            if (p.node_->on_grad_path) n->on_grad_path = true;
        }
        if (n->on_grad_path) n->backprop = std::move(backprop);
        return Tensor(n);
    }

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    size_t numel() const { return node_->value.size(); }
    const std::vector<T>& value() const { return node_->value; }
    std::vector<T>& mutable_value() { return node_->value; }
    const std::vector<T>& grad() const { return node_->grad; }
    bool on_grad_path() const { return node_ && node_->on_grad_path; }
    std::shared_ptr<Node> node() const { return node_; }

    T item() const {
        if (numel() != 1) throw std::logic_error("item() on non-scalar tensor " + shape_str(shape()));
        return node_->value[0];
    }
    void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }

private:
    std::shared_ptr<Node> node_;
};

// Populates dLoss/dLeaf for every gradient-tracked leaf reachable from a
// scalar loss. Repeated subexpressions accumulate.
template <class T>
void backward(const Tensor<T>& loss) {
    if (loss.numel() != 1) throw std::invalid_argument("backward requires a scalar loss");
    using Node = TensorNode<T>;
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack{{loss.node().get(), 0}};
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->on_grad_path && seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    loss.node()->ensure_grad()[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop) (*it)->backprop(**it);
}

// ---- elementwise ----

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "add");
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] + b.value()[i];
    auto an = a.node(), bn = b.node();
    return Tensor<T>::from_op(a.shape(), std::move(v), {a, b}, [an, bn](TensorNode<T>& out) {
        if (an->on_grad_path) {
            auto& g = an->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
        }
        if (bn->on_grad_path) {
            auto& g = bn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
        }
    });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "sub");
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] - b.value()[i];
    auto an = a.node(), bn = b.node();
    return Tensor<T>::from_op(a.shape(), std::move(v), {a, b}, [an, bn](TensorNode<T>& out) {
        if (an->on_grad_path) {
            auto& g = an->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
        }
        if (bn->on_grad_path) {
            auto& g = bn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] -= out.grad[i];
        }
    });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "mul");
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * b.value()[i];
    auto an = a.node(), bn = b.node();
    return Tensor<T>::from_op(a.shape(), std::move(v), {a, b}, [an, bn](TensorNode<T>& out) {
        if (an->on_grad_path) {
            auto& g = an->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * bn->value[i];
        }
        if (bn->on_grad_path) {
            auto& g = bn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * an->value[i];
        }
    });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T c) {
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * c;
    auto an = a.node();
    return Tensor<T>::from_op(a.shape(), std::move(v), {a}, [an, c](TensorNode<T>& out) {
        auto& g = an->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * c;
    });
}

template <class T>
Tensor<T> swish(const Tensor<T>& a) {
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) {
        T s = T(1) / (T(1) + std::exp(-a.value()[i]));
        v[i] = a.value()[i] * s;
    }
    auto an = a.node();
    return Tensor<T>::from_op(a.shape(), std::move(v), {a}, [an](TensorNode<T>& out) {
        auto& g = an->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) {
            T x = an->value[i];
            T s = T(1) / (T(1) + std::exp(-x));
            g[i] += out.grad[i] * (s + x * s * (T(1) - s));
        }
    });
}

// ---- linear algebra ----

// 2D matmul with optional transposes: (m,k)*(k,n) -> (m,n).
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool ta = false, bool tb = false) {
    if (a.shape().size() != 2 || b.shape().size() != 2)
        throw std::invalid_argument("matmul expects 2D operands, got " + shape_str(a.shape()) +
                                    " and " + shape_str(b.shape()));
    int m = ta ? a.shape()[1] : a.shape()[0];
    int k = ta ? a.shape()[0] : a.shape()[1];
    int kb = tb ? b.shape()[1] : b.shape()[0];
    int n = tb ? b.shape()[0] : b.shape()[1];
    if (k != kb)
        throw std::invalid_argument("matmul: inner dims disagree, " + shape_str(a.shape()) +
                                    (ta ? "^T" : "") + " * " + shape_str(b.shape()) +
                                    (tb ? "^T" : ""));
    auto dense = [](const std::vector<T>& A, int rows, int cols, bool t, int i, int j) {
        return t ? A[j * cols + i] : A[i * cols + j];
    };
    std::vector<T> v(static_cast<size_t>(m) * n, T(0));
    const auto& av = a.value();
    const auto& bv = b.value();
    int acols = a.shape()[1], bcols = b.shape()[1];
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            T ai = dense(av, a.shape()[0], acols, ta, i, p);
            for (int j = 0; j < n; ++j) v[i * n + j] += ai * dense(bv, b.shape()[0], bcols, tb, p, j);
        }
    auto an = a.node(), bn = b.node();
    return Tensor<T>::from_op(
        {m, n}, std::move(v), {a, b},
        [an, bn, m, n, k, ta, tb, acols, bcols](TensorNode<T>& out) {
            auto idx = [](int i, int j, int cols, bool t) { return t ? j * cols + i : i * cols + j; };
            if (an->on_grad_path) {
                auto& ga = an->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        T acc = T(0);
                        for (int j = 0; j < n; ++j)
                            acc += out.grad[i * n + j] * bn->value[idx(p, j, bcols, tb)];
                        ga[idx(i, p, acols, ta)] += acc;
                    }
            }
            if (bn->on_grad_path) {
                auto& gb = bn->ensure_grad();
                for (int p = 0; p < k; ++p)
                    for (int j = 0; j < n; ++j) {
                        T acc = T(0);
                        for (int i = 0; i < m; ++i)
                            acc += out.grad[i * n + j] * an->value[idx(i, p, acols, ta)];
                        gb[idx(p, j, bcols, tb)] += acc;
                    }
            }
        });
}

// x: (N,C), b: (C); adds b to every row.
template <class T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& b) {
    if (x.shape().size() != 2 || b.shape().size() != 1 || x.shape()[1] != b.shape()[0])
        throw std::invalid_argument("add_bias: incompatible shapes " + shape_str(x.shape()) +
                                    " and " + shape_str(b.shape()));
    int N = x.shape()[0], C = x.shape()[1];
    std::vector<T> v(x.numel());
    for (int i = 0; i < N; ++i)
        for (int c = 0; c < C; ++c) v[i * C + c] = x.value()[i * C + c] + b.value()[c];
    auto xn = x.node(), bn = b.node();
    return Tensor<T>::from_op(x.shape(), std::move(v), {x, b}, [xn, bn, N, C](TensorNode<T>& out) {
        if (xn->on_grad_path) {
            auto& g = xn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
        }
        if (bn->on_grad_path) {
            auto& g = bn->ensure_grad();
            for (int i = 0; i < N; ++i)
                for (int c = 0; c < C; ++c) g[c] += out.grad[i * C + c];
        }
    });
}

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    return add_bias(matmul(x, w), b);
}

// ---- shape ----

template <class T>
Tensor<T> reshape(const Tensor<T>& x, std::vector<int> shape) {
    if (shape_numel(shape) != x.numel())
        throw std::invalid_argument("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape) +
                                    " changes element count");
    auto xn = x.node();
    return Tensor<T>::from_op(std::move(shape), x.value(), {x}, [xn](TensorNode<T>& out) {
        auto& g = xn->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
    });
}

// Concatenates (N,Ci) blocks along the channel axis.
template <class T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    int N = parts[0].shape()[0];
    int C = 0;
    for (const auto& p : parts) {
        if (p.shape().size() != 2 || p.shape()[0] != N)
            throw std::invalid_argument("concat_cols: row mismatch");
        C += p.shape()[1];
    }
    std::vector<T> v(static_cast<size_t>(N) * C);
    int off = 0;
    for (const auto& p : parts) {
        int c = p.shape()[1];
        for (int i = 0; i < N; ++i)
            std::copy_n(p.value().begin() + static_cast<size_t>(i) * c, c,
                        v.begin() + static_cast<size_t>(i) * C + off);
        off += c;
    }
    std::vector<std::shared_ptr<TensorNode<T>>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    return Tensor<T>::from_op({N, C}, std::move(v), parts, [nodes, N, C](TensorNode<T>& out) {
        int off = 0;
        for (auto& pn : nodes) {
            int c = pn->shape[1];
            if (pn->on_grad_path) {
                auto& g = pn->ensure_grad();
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < c; ++j) g[i * c + j] += out.grad[i * C + off + j];
            }
            off += c;
        }
    });
}

// Stacks S tensors of shape (N,C) into (N,S,C).
template <class T>
Tensor<T> stack_mid(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw std::invalid_argument("stack_mid: no inputs");
    int N = parts[0].shape()[0], C = parts[0].shape()[1];
    int S = static_cast<int>(parts.size());
    for (const auto& p : parts)
        if (p.shape() != std::vector<int>{N, C}) throw std::invalid_argument("stack_mid: shape mismatch");
    std::vector<T> v(static_cast<size_t>(N) * S * C);
    for (int s = 0; s < S; ++s)
        for (int i = 0; i < N; ++i)
            std::copy_n(parts[s].value().begin() + static_cast<size_t>(i) * C, C,
                        v.begin() + (static_cast<size_t>(i) * S + s) * C);
    std::vector<std::shared_ptr<TensorNode<T>>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    return Tensor<T>::from_op({N, S, C}, std::move(v), parts, [nodes, N, S, C](TensorNode<T>& out) {
        for (int s = 0; s < S; ++s) {
            if (!nodes[s]->on_grad_path) continue;
            auto& g = nodes[s]->ensure_grad();
            for (int i = 0; i < N; ++i)
                for (int c = 0; c < C; ++c)
                    g[i * C + c] += out.grad[(static_cast<size_t>(i) * S + s) * C + c];
        }
    });
}

// rows of the output are x[idx[r]]; backward scatter-adds.
template <class T>
Tensor<T> gather_rows(const Tensor<T>& x, std::vector<int> idx) {
    if (x.shape().size() != 2) throw std::invalid_argument("gather_rows expects (N,C)");
    int N = x.shape()[0], C = x.shape()[1];
    for (int r : idx)
        if (r < 0 || r >= N) throw std::out_of_range("gather_rows: row index out of range");
    int M = static_cast<int>(idx.size());
    std::vector<T> v(static_cast<size_t>(M) * C);
    for (int r = 0; r < M; ++r)
        std::copy_n(x.value().begin() + static_cast<size_t>(idx[r]) * C, C,
                    v.begin() + static_cast<size_t>(r) * C);
    auto xn = x.node();
    return Tensor<T>::from_op({M, C}, std::move(v), {x},
                              [xn, idx = std::move(idx), C](TensorNode<T>& out) {
                                  auto& g = xn->ensure_grad();
                                  for (size_t r = 0; r < idx.size(); ++r)
                                      for (int c = 0; c < C; ++c)
                                          g[static_cast<size_t>(idx[r]) * C + c] += out.grad[r * C + c];
                              });
}

// ---- normalization / activation over rows ----

// Softmax over the last axis, computed with max subtraction.
template <class T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
    if (x.shape().empty()) throw std::invalid_argument("softmax_rows: scalar input");
    int n = x.shape().back();
    size_t rows = x.numel() / n;
    std::vector<T> v(x.numel());
    for (size_t r = 0; r < rows; ++r) {
        const T* in = x.value().data() + r * n;
        T* out = v.data() + r * n;
        T mx = *std::max_element(in, in + n);
        T sum = T(0);
        for (int j = 0; j < n; ++j) sum += (out[j] = std::exp(in[j] - mx));
        for (int j = 0; j < n; ++j) out[j] /= sum;
    }
    auto xn = x.node();
    return Tensor<T>::from_op(x.shape(), std::move(v), {x}, [xn, rows, n](TensorNode<T>& out) {
        auto& g = xn->ensure_grad();
        for (size_t r = 0; r < rows; ++r) {
            const T* y = out.value.data() + r * n;
            const T* dy = out.grad.data() + r * n;
            T dot = T(0);
            for (int j = 0; j < n; ++j) dot += y[j] * dy[j];
            for (int j = 0; j < n; ++j) g[r * n + j] += y[j] * (dy[j] - dot);
        }
    });
}

// Per-row normalization over the channel axis followed by gain and bias.
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
    if (x.shape().empty()) throw std::invalid_argument("layer_norm: scalar input");
    int C = x.shape().back();
    if (gain.shape() != std::vector<int>{C} || bias.shape() != std::vector<int>{C})
        throw std::invalid_argument("layer_norm: gain/bias must have shape (" + std::to_string(C) + ")");
    size_t rows = x.numel() / C;
    std::vector<T> v(x.numel());
    std::vector<T> inv_std(rows), means(rows);
    for (size_t r = 0; r < rows; ++r) {
        const T* in = x.value().data() + r * C;
        T mean = T(0);
        for (int c = 0; c < C; ++c) mean += in[c];
        mean /= C;
        T var = T(0);
        for (int c = 0; c < C; ++c) var += (in[c] - mean) * (in[c] - mean);
        var /= C;
        T is = T(1) / std::sqrt(var + eps);
        means[r] = mean;
        inv_std[r] = is;
        for (int c = 0; c < C; ++c)
            v[r * C + c] = (in[c] - mean) * is * gain.value()[c] + bias.value()[c];
    }
    auto xn = x.node(), gn = gain.node(), bn = bias.node();
    return Tensor<T>::from_op(
        x.shape(), std::move(v), {x, gain, bias},
        [xn, gn, bn, rows, C, means = std::move(means),
         inv_std = std::move(inv_std)](TensorNode<T>& out) {
            for (size_t r = 0; r < rows; ++r) {
                const T* in = xn->value.data() + r * C;
                const T* dy = out.grad.data() + r * C;
                T is = inv_std[r], mean = means[r];
                if (gn->on_grad_path) {
                    auto& gg = gn->ensure_grad();
                    for (int c = 0; c < C; ++c) gg[c] += dy[c] * (in[c] - mean) * is;
                }
                if (bn->on_grad_path) {
                    auto& gb = bn->ensure_grad();
                    for (int c = 0; c < C; ++c) gb[c] += dy[c];
                }
                if (xn->on_grad_path) {
                    auto& gx = xn->ensure_grad();
                    T sum_d = T(0), sum_dx = T(0);
                    for (int c = 0; c < C; ++c) {
                        T d = dy[c] * gn->value[c];
                        sum_d += d;
                        sum_dx += d * (in[c] - mean) * is;
                    }
                    for (int c = 0; c < C; ++c) {
                        T d = dy[c] * gn->value[c];
                        T xh = (in[c] - mean) * is;
                        gx[r * C + c] += is * (d - sum_d / C - xh * sum_dx / C);
                    }
                }
            }
        });
}

// ---- reductions ----

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
    T s = T(0);
    for (T v : x.value()) s += v;
    auto xn = x.node();
    return Tensor<T>::from_op({1}, {s}, {x}, [xn](TensorNode<T>& out) {
        auto& g = xn->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[0];
    });
}

// (N,C) -> (C), mean over rows.
template <class T>
Tensor<T> mean_rows(const Tensor<T>& x) {
    if (x.shape().size() != 2) throw std::invalid_argument("mean_rows expects (N,C)");
    int N = x.shape()[0], C = x.shape()[1];
    std::vector<T> v(C, T(0));
    for (int i = 0; i < N; ++i)
        for (int c = 0; c < C; ++c) v[c] += x.value()[i * C + c];
    for (int c = 0; c < C; ++c) v[c] /= N;
    auto xn = x.node();
    return Tensor<T>::from_op({C}, std::move(v), {x}, [xn, N, C](TensorNode<T>& out) {
        auto& g = xn->ensure_grad();
        for (int i = 0; i < N; ++i)
            for (int c = 0; c < C; ++c) g[i * C + c] += out.grad[c] / N;
    });
}

// (N,S,C) -> (N,C), max over the middle axis. Ties route the gradient to
// the first maximal element.
template <class T>
Tensor<T> max_mid(const Tensor<T>& x) {
    if (x.shape().size() != 3) throw std::invalid_argument("max_mid expects (N,S,C)");
    int N = x.shape()[0], S = x.shape()[1], C = x.shape()[2];
    std::vector<T> v(static_cast<size_t>(N) * C);
    std::vector<int> argmax(v.size());
    for (int i = 0; i < N; ++i)
        for (int c = 0; c < C; ++c) {
            T best = x.value()[(static_cast<size_t>(i) * S) * C + c];
            int bs = 0;
            for (int s = 1; s < S; ++s) {
                T cand = x.value()[(static_cast<size_t>(i) * S + s) * C + c];
                if (cand > best) {
                    best = cand;
                    bs = s;
                }
            }
            v[i * C + c] = best;
            argmax[i * C + c] = bs;
        }
    auto xn = x.node();
    return Tensor<T>::from_op({N, C}, std::move(v), {x},
                              [xn, N, S, C, argmax = std::move(argmax)](TensorNode<T>& out) {
                                  auto& g = xn->ensure_grad();
                                  for (int i = 0; i < N; ++i)
                                      for (int c = 0; c < C; ++c)
                                          g[(static_cast<size_t>(i) * S + argmax[i * C + c]) * C + c] +=
                                              out.grad[i * C + c];
                              });
}

// ---- loss / regularization ----

// -log softmax(logits)[label] for a single logits vector.
template <class T>
Tensor<T> cross_entropy_logits(const Tensor<T>& logits, int label) {
    if (logits.shape().size() != 1)
        throw std::invalid_argument("cross_entropy_logits expects a 1D logits vector");
    int C = logits.shape()[0];
    if (label < 0 || label >= C)
        throw std::out_of_range("label " + std::to_string(label) + " out of range for " +
                                std::to_string(C) + " classes");
    T mx = *std::max_element(logits.value().begin(), logits.value().end());
    T lse = T(0);
    for (T z : logits.value()) lse += std::exp(z - mx);
    lse = std::log(lse) + mx;
    auto ln = logits.node();
    return Tensor<T>::from_op({1}, {lse - logits.value()[label]}, {logits},
                              [ln, label, C, mx, lse](TensorNode<T>& out) {
                                  auto& g = ln->ensure_grad();
                                  for (int c = 0; c < C; ++c) {
                                      T p = std::exp(ln->value[c] - lse);
                                      g[c] += out.grad[0] * (p - (c == label ? T(1) : T(0)));
                                  }
                              });
}

// Inverted dropout; identity when rate == 0.
template <class T>
Tensor<T> dropout(const Tensor<T>& x, double rate, std::mt19937_64& rng) {
    if (rate <= 0.0) return x;
    if (rate >= 1.0) throw std::invalid_argument("dropout rate must be < 1");
    std::bernoulli_distribution keep(1.0 - rate);
    std::vector<T> mask(x.numel());
    T inv = T(1.0 / (1.0 - rate));
    for (auto& m : mask) m = keep(rng) ? inv : T(0);
    std::vector<T> v(x.numel());
    for (size_t i = 0; i < v.size(); ++i) v[i] = x.value()[i] * mask[i];
    auto xn = x.node();
    return Tensor<T>::from_op(x.shape(), std::move(v), {x},
                              [xn, mask = std::move(mask)](TensorNode<T>& out) {
                                  auto& g = xn->ensure_grad();
                                  for (size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * mask[i];
                              });
}

// ---- gradient checking ----

// Compares the analytic gradient of a scalar-valued function against
// central finite differences; returns the max relative error.
template <class T>
double finite_diff_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, Tensor<T> x,
                         double eps) {
    Tensor<T> loss = f(x);
    x.zero_grad();
    backward(loss);
    std::vector<T> analytic = x.grad();
    double worst = 0.0;
    for (size_t i = 0; i < x.numel(); ++i) {
        T saved = x.value()[i];
        x.mutable_value()[i] = saved + T(eps);
        double up = static_cast<double>(f(x).item());
        x.mutable_value()[i] = saved - T(eps);
        double down = static_cast<double>(f(x).item());
        x.mutable_value()[i] = saved;
        double numeric = (up - down) / (2.0 * eps);
        double a = static_cast<double>(analytic[i]);
        double denom = std::max({std::abs(a), std::abs(numeric), 1e-3});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    }
    return worst;
}

}  // namespace gevit
