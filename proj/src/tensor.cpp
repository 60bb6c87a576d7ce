#include "tgt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "tgt/errors.hpp"
#include "tgt/kernels.hpp"

namespace tgt {

namespace {

thread_local bool g_grad_enabled = true;

std::size_t numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
}

void require_rank2(const Tensor& t, const char* op) {
    require_defined(t, op);
    if (t.rank() != 2)
        throw ShapeError(std::string(op) + ": expected rank 2, got " +
                         shape_string(t.shape()));
}

bool any_requires(const std::vector<Tensor>& parents) {
    for (const Tensor& p : parents)
        if (p.requires_grad()) return true;
    return false;
}

// Fresh output wired to its parents. The backward closure receives the
// output tensor and reads parents through its node.
Tensor make_output(std::vector<int> shape, const char* op,
                   std::vector<Tensor> parents,
                   std::function<void(Tensor&)> bw) {
    bool req = g_grad_enabled && any_requires(parents);
    Tensor out = Tensor::zeros(std::move(shape), req);
    if (req) {
        auto node = std::make_shared<OpNode>();
        node->op = op;
        node->parents = std::move(parents);
        node->backward = std::move(bw);
        out.node() = std::move(node);
    }
    return out;
}

// (outer, len, inner) view of a shape around one axis.
void axis_view(const std::vector<int>& shape, int axis, int& outer, int& len,
               int& inner) {
    outer = 1;
    inner = 1;
    for (int i = 0; i < axis; ++i) outer *= shape[static_cast<std::size_t>(i)];
    len = shape[static_cast<std::size_t>(axis)];
    for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < shape.size();
         ++i)
        inner *= shape[i];
}

void check_axis(const Tensor& t, int axis, const char* op) {
    if (axis < 0 || axis >= t.rank())
        throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for " + shape_string(t.shape()));
}

}  // namespace

std::string shape_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << " x ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    for (int d : shape)
        if (d <= 0)
            throw ShapeError("tensor: non-positive dimension in " +
                             shape_string(shape));
    auto s = std::make_shared<TensorState>();
    s->values.assign(numel(shape), 0.0);
    s->shape = std::move(shape);
    s->requires_grad = requires_grad;
    return Tensor(std::move(s));
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values,
                    bool requires_grad) {
    if (numel(shape) != values.size())
        throw ShapeError("tensor: " + std::to_string(values.size()) +
                         " values for shape " + shape_string(shape));
    Tensor t = zeros(std::move(shape), requires_grad);
    t.values() = std::move(values);
    return t;
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

double Tensor::scalar_value() const {
    if (size() != 1)
        throw ShapeError("scalar_value: tensor holds " +
                         std::to_string(size()) + " elements");
    return state_->values[0];
}

std::vector<double>& Tensor::grad() {
    if (state_->grad.empty()) state_->grad.assign(size(), 0.0);
    return state_->grad;
}

void Tensor::zero_grad() {
    std::fill(state_->grad.begin(), state_->grad.end(), 0.0);
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

// --- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    if (a.dim(1) != b.dim(0))
        throw ShapeError("matmul: inner dims differ, " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out = make_output({m, n}, "matmul", {a, b}, [m, k, n](Tensor& o) {
        Tensor& pa = o.node()->parents[0];
        Tensor& pb = o.node()->parents[1];
        const double* g = o.grad().data();
        if (pa.requires_grad())
            kern::matmul_acc_left(g, pb.values().data(), pa.grad().data(), m,
                                  k, n);
        if (pb.requires_grad())
            kern::matmul_acc_right(pa.values().data(), g, pb.grad().data(), m,
                                   k, n);
    });
    kern::matmul(a.values().data(), b.values().data(), out.values().data(), m,
                 k, n);
    return out;
}

Tensor transpose(const Tensor& a) {
    require_rank2(a, "transpose");
    const int m = a.dim(0), n = a.dim(1);
    Tensor out = make_output({n, m}, "transpose", {a}, [m, n](Tensor& o) {
        Tensor& pa = o.node()->parents[0];
        if (pa.requires_grad())
            kern::transpose_acc(pa.grad().data(), o.grad().data(), m, n);
    });
    kern::transpose(a.values().data(), out.values().data(), m, n);
    return out;
}

namespace {

// Shared add/sub/mul plumbing: equal shapes, or one single-element side that
// broadcasts against the other.
enum class EltKind { add, sub, mul };

Tensor elementwise(const Tensor& a, const Tensor& b, EltKind kind,
                   const char* name) {
    require_defined(a, name);
    require_defined(b, name);
    if (a.shape() == b.shape()) {
        const std::size_t n = a.size();
        Tensor out = make_output(
            a.shape(), name, {a, b}, [kind, n](Tensor& o) {
                Tensor& pa = o.node()->parents[0];
                Tensor& pb = o.node()->parents[1];
                const double* g = o.grad().data();
                switch (kind) {
                    case EltKind::add:
                        if (pa.requires_grad()) kern::acc(pa.grad().data(), g, n);
                        if (pb.requires_grad()) kern::acc(pb.grad().data(), g, n);
                        break;
                    case EltKind::sub:
                        if (pa.requires_grad()) kern::acc(pa.grad().data(), g, n);
                        if (pb.requires_grad())
                            kern::acc_scaled(pb.grad().data(), g, -1.0, n);
                        break;
                    case EltKind::mul:
                        if (pa.requires_grad())
                            kern::acc_mul(pa.grad().data(), g,
                                          pb.values().data(), n);
                        if (pb.requires_grad())
                            kern::acc_mul(pb.grad().data(), g,
                                          pa.values().data(), n);
                        break;
                }
            });
        const double* av = a.values().data();
        const double* bv = b.values().data();
        double* ov = out.values().data();
        switch (kind) {
            case EltKind::add: kern::add(av, bv, ov, n); break;
            case EltKind::sub:
                for (std::size_t i = 0; i < n; ++i) ov[i] = av[i] - bv[i];
                break;
            case EltKind::mul: kern::mul(av, bv, ov, n); break;
        }
        return out;
    }
    // Single-element side broadcasts. scalar_first records which parent it is.
    const bool scalar_first = a.size() == 1;
    if (!scalar_first && b.size() != 1)
        throw ShapeError(std::string(name) + ": shape mismatch, " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    const Tensor& big = scalar_first ? b : a;
    const std::size_t n = big.size();
    Tensor out = make_output(
        big.shape(), name, {a, b}, [kind, n, scalar_first](Tensor& o) {
            Tensor& pa = o.node()->parents[0];
            Tensor& pb = o.node()->parents[1];
            Tensor& ps = scalar_first ? pa : pb;
            Tensor& pt = scalar_first ? pb : pa;
            const double* g = o.grad().data();
            const double sv = ps.values()[0];
            const double sign =
                (kind == EltKind::sub && scalar_first) ? -1.0 : 1.0;
            if (pt.requires_grad()) {
                if (kind == EltKind::mul)
                    kern::acc_scaled(pt.grad().data(), g, sv, n);
                else
                    kern::acc_scaled(pt.grad().data(), g, sign, n);
            }
            if (ps.requires_grad()) {
                double s = 0.0;
                if (kind == EltKind::mul) {
                    const double* tv = pt.values().data();
                    for (std::size_t i = 0; i < n; ++i) s += g[i] * tv[i];
                } else {
                    s = kern::sum_all(g, n);
                    if (kind == EltKind::sub && !scalar_first) s = -s;
                }
                ps.grad()[0] += s;
            }
        });
    const double sv = (scalar_first ? a : b).values()[0];
    const double* bv = big.values().data();
    double* ov = out.values().data();
    switch (kind) {
        case EltKind::add: kern::affine(bv, 1.0, sv, ov, n); break;
        case EltKind::sub:
            if (scalar_first)
                kern::affine(bv, -1.0, sv, ov, n);
            else
                kern::affine(bv, 1.0, -sv, ov, n);
            break;
        case EltKind::mul: kern::affine(bv, sv, 0.0, ov, n); break;
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return elementwise(a, b, EltKind::add, "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return elementwise(a, b, EltKind::sub, "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return elementwise(a, b, EltKind::mul, "mul");
}

Tensor relu(const Tensor& a) {
    require_defined(a, "relu");
    const std::size_t n = a.size();
    Tensor out = make_output(a.shape(), "relu", {a}, [n](Tensor& o) {
        Tensor& pa = o.node()->parents[0];
        if (pa.requires_grad())
            kern::acc_relu_mask(pa.grad().data(), o.grad().data(),
                                pa.values().data(), n);
    });
    kern::relu(a.values().data(), out.values().data(), n);
    return out;
}

Tensor affine(const Tensor& a, double s, double t) {
    require_defined(a, "affine");
    const std::size_t n = a.size();
    Tensor out = make_output(a.shape(), "affine", {a}, [s, n](Tensor& o) {
        Tensor& pa = o.node()->parents[0];
        if (pa.requires_grad())
            kern::acc_scaled(pa.grad().data(), o.grad().data(), s, n);
    });
    kern::affine(a.values().data(), s, t, out.values().data(), n);
    return out;
}

Tensor scale(const Tensor& a, double s) { return affine(a, s, 0.0); }

Tensor softmax(const Tensor& a, int axis) {
    require_defined(a, "softmax");
    check_axis(a, axis, "softmax");
    int outer, len, inner;
    axis_view(a.shape(), axis, outer, len, inner);
    Tensor out =
        make_output(a.shape(), "softmax", {a}, [outer, len, inner](Tensor& o) {
            Tensor& pa = o.node()->parents[0];
            if (pa.requires_grad())
                kern::softmax_backward_lines(o.values().data(),
                                             o.grad().data(),
                                             pa.grad().data(), outer, len,
                                             inner);
        });
    kern::softmax_lines(a.values().data(), out.values().data(), outer, len,
                        inner);
    return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    for (const Tensor& p : parts) require_defined(p, "concat");
    const Tensor& first = parts.front();
    check_axis(first, axis, "concat");
    int total = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != first.rank())
            throw ShapeError("concat: rank mismatch, " +
                             shape_string(first.shape()) + " vs " +
                             shape_string(p.shape()));
        for (int d = 0; d < first.rank(); ++d)
            if (d != axis && p.dim(d) != first.dim(d))
                throw ShapeError("concat: dim " + std::to_string(d) +
                                 " differs, " + shape_string(first.shape()) +
                                 " vs " + shape_string(p.shape()));
        total += p.dim(axis);
    }
    std::vector<int> out_shape = first.shape();
    out_shape[static_cast<std::size_t>(axis)] = total;
    int outer, out_len, inner;
    axis_view(out_shape, axis, outer, out_len, inner);

    std::vector<int> lens;
    lens.reserve(parts.size());
    for (const Tensor& p : parts) lens.push_back(p.dim(axis));

    Tensor out = make_output(
        out_shape, "concat", parts,
        [outer, out_len, inner, lens](Tensor& o) {
            int offset = 0;
            for (std::size_t i = 0; i < lens.size(); ++i) {
                Tensor& p = o.node()->parents[i];
                if (p.requires_grad())
                    kern::acc_block_axis(p.grad().data(), o.grad().data(),
                                         outer, out_len, lens[i], offset,
                                         inner);
                offset += lens[i];
            }
        });
    int offset = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        kern::copy_block_axis(out.values().data(), parts[i].values().data(),
                              outer, out_len, lens[i], offset, inner);
        offset += lens[i];
    }
    return out;
}

Tensor gather_rows(const Tensor& table, std::vector<int> idx) {
    require_rank2(table, "gather_rows");
    if (idx.empty()) throw ShapeError("gather_rows: empty index list");
    const int rows = table.dim(0), width = table.dim(1);
    for (int i : idx)
        if (i < 0 || i >= rows)
            throw ShapeError("gather_rows: index " + std::to_string(i) +
                             " out of range for " +
                             shape_string(table.shape()));
    const int count = static_cast<int>(idx.size());
    // The closure and the forward pass share one index buffer.
    auto shared_idx = std::make_shared<std::vector<int>>(std::move(idx));
    Tensor out = make_output(
        {count, width}, "gather_rows", {table},
        [shared_idx, count, width](Tensor& o) {
            Tensor& pt = o.node()->parents[0];
            if (pt.requires_grad())
                kern::scatter_rows_acc(pt.grad().data(), shared_idx->data(),
                                       o.grad().data(), count, width);
        });
    kern::gather_rows(table.values().data(), shared_idx->data(),
                      out.values().data(), count, width);
    return out;
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
    require_defined(a, "reshape");
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    if (n != a.size())
        throw ShapeError("reshape: " + shape_string(a.shape()) + " to " +
                         shape_string(shape) + " changes the element count");
    const std::size_t count = a.size();
    Tensor out = make_output(std::move(shape), "reshape", {a},
                             [count](Tensor& o) {
                                 Tensor& pa = o.node()->parents[0];
                                 if (pa.requires_grad())
                                     kern::acc(pa.grad().data(),
                                               o.grad().data(), count);
                             });
    out.values() = a.values();
    return out;
}

Tensor reduce_sum(const Tensor& a, int axis) {
    require_defined(a, "reduce_sum");
    check_axis(a, axis, "reduce_sum");
    int outer, len, inner;
    axis_view(a.shape(), axis, outer, len, inner);
    std::vector<int> out_shape;
    for (int d = 0; d < a.rank(); ++d)
        if (d != axis) out_shape.push_back(a.dim(d));
    if (out_shape.empty()) out_shape.push_back(1);
    Tensor out = make_output(out_shape, "reduce_sum", {a},
                             [outer, len, inner](Tensor& o) {
                                 Tensor& pa = o.node()->parents[0];
                                 if (pa.requires_grad())
                                     kern::broadcast_acc_axis(
                                         pa.grad().data(), o.grad().data(),
                                         outer, len, inner);
                             });
    kern::reduce_sum_axis(a.values().data(), out.values().data(), outer, len,
                          inner);
    return out;
}

Tensor sum_all(const Tensor& a) {
    require_defined(a, "sum_all");
    const std::size_t n = a.size();
    Tensor out = make_output({1}, "sum_all", {a}, [n](Tensor& o) {
        Tensor& pa = o.node()->parents[0];
        if (pa.requires_grad()) {
            const double g = o.grad()[0];
            double* d = pa.grad().data();
            for (std::size_t i = 0; i < n; ++i) d[i] += g;
        }
    });
    out.values()[0] = kern::sum_all(a.values().data(), n);
    return out;
}

// --- backward --------------------------------------------------------------

GradientTape::GradientTape(const Tensor& root) {
    if (!root.defined()) throw ShapeError("backward: undefined tensor");
    struct Frame {
        Tensor t;
        std::size_t next = 0;
    };
    std::unordered_set<const TensorState*> visited;
    std::vector<Frame> stack;
    visited.insert(root.state());
    stack.push_back({root});
    while (!stack.empty()) {
        Frame& f = stack.back();
        OpNode* node = f.t.node().get();
        const std::size_t parents = node ? node->parents.size() : 0;
        if (f.next < parents) {
            Tensor p = node->parents[f.next++];
            if (visited.insert(p.state()).second)
                stack.push_back({std::move(p)});
        } else {
            order_.push_back(std::move(f.t));
            stack.pop_back();
        }
    }
}

void backward(const Tensor& loss) {
    if (!loss.defined()) throw ShapeError("backward: undefined tensor");
    if (loss.size() != 1)
        throw ShapeError("backward: loss must hold one element, got " +
                         shape_string(loss.shape()));
    if (!loss.requires_grad())
        throw NumericError("backward: loss does not require gradients");
    GradientTape tape(loss);
    // Interior gradients restart at zero on every call; leaf gradients
    // accumulate across calls.
    for (const Tensor& t : tape.order()) {
        Tensor h = t;
        if (h.node()) h.zero_grad();
    }
    Tensor root = loss;
    root.grad()[0] += 1.0;
    const auto& order = tape.order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor t = *it;
        if (t.node() && t.requires_grad() && t.has_grad())
            t.node()->backward(t);
    }
}

void release_graph(const Tensor& root) {
    if (!root.defined()) return;
    GradientTape tape(root);
    for (const Tensor& t : tape.order()) {
        Tensor h = t;
        h.node().reset();
    }
}

double finite_difference_check(const std::function<Tensor()>& f,
                               const std::vector<Tensor>& params, double eps,
                               double floor) {
    for (const Tensor& p : params) {
        Tensor h = p;
        h.grad();
        h.zero_grad();
    }
    Tensor loss = f();
    backward(loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const Tensor& p : params) {
        Tensor h = p;
        analytic.push_back(h.grad());
    }
    release_graph(loss);

    double worst = 0.0;
    NoGradGuard ng;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double orig = p.values()[i];
            p.values()[i] = orig + eps;
            const double up = f().scalar_value();
            p.values()[i] = orig - eps;
            const double down = f().scalar_value();
            p.values()[i] = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double ana = analytic[pi][i];
            const double denom =
                std::max({std::fabs(ana), std::fabs(numeric), floor});
            worst = std::max(worst, std::fabs(ana - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace tgt
