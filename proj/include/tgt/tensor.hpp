#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tgt {

class Tensor;

// One recorded operation in the dynamic graph. Holds the inputs (keeping
// them alive) and a closure that routes the output's gradient into them.
struct OpNode {
    const char* op = "";
    std::vector<Tensor> parents;
    std::function<void(Tensor&)> backward;
};

struct TensorState {
    std::vector<int> shape;
    std::vector<double> values;  // row major
    std::vector<double> grad;    // empty until first needed
    bool requires_grad = false;
    std::shared_ptr<OpNode> node;  // producing op, null for leaves
};

// Dense f64 tensor, shared handle. Copying a Tensor aliases the same storage;
// ops build fresh outputs and record how to push gradients back.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> values,
                       bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return state_ != nullptr; }
    const std::vector<int>& shape() const { return state_->shape; }
    int rank() const { return static_cast<int>(state_->shape.size()); }
    int dim(int i) const { return state_->shape[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return state_->values.size(); }

    std::vector<double>& values() { return state_->values; }
    const std::vector<double>& values() const { return state_->values; }
    double scalar_value() const;

    bool requires_grad() const { return state_->requires_grad; }
    void set_requires_grad(bool b) { state_->requires_grad = b; }

    // Gradient buffer, materialized as zeros on first access.
    std::vector<double>& grad();
    bool has_grad() const { return !state_->grad.empty(); }
    void zero_grad();

    std::shared_ptr<OpNode>& node() { return state_->node; }
    const std::shared_ptr<OpNode>& node() const { return state_->node; }
    TensorState* state() const { return state_.get(); }

private:
    explicit Tensor(std::shared_ptr<TensorState> s) : state_(std::move(s)) {}
    std::shared_ptr<TensorState> state_;
};

// While alive, newly created ops record no graph (evaluation mode).
// Thread local so independent graphs on different threads stay independent.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

bool grad_enabled();

// --- ops -------------------------------------------------------------------
// All ops check shapes and throw ShapeError on mismatch. add/mul accept
// equal shapes, or one single-element operand which broadcasts against the
// other; there is no other broadcasting.

Tensor matmul(const Tensor& a, const Tensor& b);  // 2-d only
Tensor transpose(const Tensor& a);                // 2-d only
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
// out = a * s + t, elementwise against constants
Tensor affine(const Tensor& a, double s, double t);
Tensor scale(const Tensor& a, double s);

// Numerically stabilized softmax along the given axis. -inf entries get
// weight exactly 0 (used for attention masks); each line needs at least one
// finite entry.
Tensor softmax(const Tensor& a, int axis);

// Concatenate along an axis; all other dims must match.
Tensor concat(const std::vector<Tensor>& parts, int axis);

// Rows of a 2-d table by index; repeated indices are fine and their
// gradients accumulate into the same source row.
Tensor gather_rows(const Tensor& table, std::vector<int> idx);

// Same elements, new shape; counts must agree.
Tensor reshape(const Tensor& a, std::vector<int> shape);

// Sum over one axis, removing it. Rank-1 input yields a single element.
Tensor reduce_sum(const Tensor& a, int axis);
// Sum of every element, as a single-element tensor.
Tensor sum_all(const Tensor& a);

// --- backward --------------------------------------------------------------

// Reverse topological order of the graph below a root, each node once.
class GradientTape {
public:
    explicit GradientTape(const Tensor& root);
    // Roots last; walking backwards visits every node before its parents.
    const std::vector<Tensor>& order() const { return order_; }

private:
    std::vector<Tensor> order_;
};

// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every reachable
// tensor that requires them. The loss must hold exactly one element.
// Calling it again on the same graph accumulates a second time; callers
// reset gradients between steps.
void backward(const Tensor& loss);

// Drops the recorded ops below the root so intermediate storage can be
// reclaimed once handles go out of scope. Leaves keep values and grads.
void release_graph(const Tensor& root);

// Central-difference gradient check. f must rebuild its graph on every call
// and depend on params deterministically. Returns the largest relative error
// max(|analytic - numeric|) / max(|analytic|, |numeric|, floor) over all
// entries of all params.
double finite_difference_check(const std::function<Tensor()>& f,
                               const std::vector<Tensor>& params,
                               double eps = 1e-5, double floor = 1e-8);

std::string shape_string(const std::vector<int>& shape);

}  // namespace tgt
