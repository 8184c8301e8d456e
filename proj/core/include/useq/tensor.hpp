#pragma once

// Dense row-major tensors with a dynamic reverse-mode gradient graph.
//
// Every op that sees at least one input with requires_grad (while grad mode
// is enabled) records a GradNode on its output. The graph is rebuilt on each
// forward pass and is owned by the tensors that reference it, so dropping the
// loss releases all intermediate activations.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace useq {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct TensorImpl;

template <typename T>
struct GradNode {
    const char* op_name = "";
    std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
    // Reads out.grad and accumulates into the inputs that require grad.
    std::function<void(const TensorImpl<T>& out)> backward;
};

template <typename T>
struct TensorImpl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until a gradient reaches this tensor
    bool requires_grad = false;
    std::shared_ptr<GradNode<T>> grad_fn;

    // Allocates a zero gradient buffer on first use.
    std::span<T> ensure_grad();
};

// Grad recording is on by default and is tracked per thread.
bool grad_enabled() noexcept;

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    explicit BasicTensor(std::shared_ptr<TensorImpl<T>> impl);

    static BasicTensor zeros(Shape shape, bool requires_grad = false);
    static BasicTensor full(Shape shape, T value, bool requires_grad = false);
    static BasicTensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false);
    static BasicTensor scalar(T value, bool requires_grad = false);

    bool defined() const noexcept { return static_cast<bool>(impl_); }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    std::span<const T> data() const;
    // Direct write access, meant for leaves (parameter init and optimizer updates).
    std::span<T> mutable_data();
    T item() const;

    bool requires_grad() const;
    BasicTensor& set_requires_grad(bool on);
    bool is_leaf() const;
    bool has_grad() const;
    std::span<const T> grad() const;
    // Allocates a zero gradient if none exists yet.
    std::span<T> mutable_grad();
    void zero_grad();

    // Runs reverse-mode accumulation from this scalar. Repeated calls
    // accumulate into existing gradients; callers reset with zero_grad().
    void backward() const;

    // Same values, no graph history.
    BasicTensor detach() const;

    template <typename U>
    BasicTensor<U> cast() const;

    const std::shared_ptr<TensorImpl<T>>& impl() const noexcept { return impl_; }

private:
    const TensorImpl<T>& checked() const;
    std::shared_ptr<TensorImpl<T>> impl_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

// Ordered record of the ops reachable from a root tensor.
template <typename T>
class GradGraph {
public:
    static GradGraph trace(const BasicTensor<T>& root);

    // Outputs of recorded ops in topological order: every op appears after
    // the ops that produced its inputs, and exactly once.
    std::span<TensorImpl<T>* const> order() const noexcept { return order_; }
    std::size_t op_count() const noexcept { return order_.size(); }

    // Seeds d(root)/d(root) = 1 and runs each backward rule once, in reverse order.
    void backward();

private:
    std::shared_ptr<TensorImpl<T>> root_;
    std::vector<TensorImpl<T>*> order_;
};

template <typename T>
template <typename U>
BasicTensor<U> BasicTensor<T>::cast() const {
    const auto& src = checked();
    std::vector<U> converted(src.data.begin(), src.data.end());
    return BasicTensor<U>::from_data(src.shape, std::move(converted), src.requires_grad);
}

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;
extern template class GradGraph<float>;
extern template class GradGraph<double>;

}  // namespace useq
