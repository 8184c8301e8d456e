#include "useq/tensor.hpp"

#include <unordered_set>
#include <utility>

#include "useq/errors.hpp"

namespace useq {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

namespace {
thread_local bool t_grad_enabled = true;

void validate_shape(const Shape& shape) {
    for (std::size_t d : shape)
        if (d == 0) throw DimensionError("zero-length dimension in shape " + shape_string(shape));
}
}  // namespace

bool grad_enabled() noexcept { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

template <typename T>
std::span<T> TensorImpl<T>::ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
}

template <typename T>
BasicTensor<T>::BasicTensor(std::shared_ptr<TensorImpl<T>> impl) : impl_(std::move(impl)) {}

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value, bool requires_grad) {
    validate_shape(shape);
    auto impl = std::make_shared<TensorImpl<T>>();
    impl->data.assign(shape_numel(shape), value);
    impl->shape = std::move(shape);
    impl->requires_grad = requires_grad;
    return BasicTensor(std::move(impl));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_data(Shape shape, std::vector<T> data, bool requires_grad) {
    validate_shape(shape);
    if (shape_numel(shape) != data.size())
        throw DimensionError("shape " + shape_string(shape) + " does not hold " +
                             std::to_string(data.size()) + " values");
    auto impl = std::make_shared<TensorImpl<T>>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return BasicTensor(std::move(impl));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::scalar(T value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

template <typename T>
const TensorImpl<T>& BasicTensor<T>::checked() const {
    if (!impl_) throw ContractError("use of an undefined tensor");
    return *impl_;
}

template <typename T>
const Shape& BasicTensor<T>::shape() const {
    return checked().shape;
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
    const auto& s = shape();
    if (axis >= s.size())
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                             shape_string(s));
    return s[axis];
}

template <typename T>
std::size_t BasicTensor<T>::numel() const {
    return checked().data.size();
}

template <typename T>
std::span<const T> BasicTensor<T>::data() const {
    return checked().data;
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_data() {
    checked();
    return impl_->data;
}

template <typename T>
T BasicTensor<T>::item() const {
    const auto& impl = checked();
    if (impl.data.size() != 1)
        throw ContractError("item() on tensor of shape " + shape_string(impl.shape));
    return impl.data[0];
}

template <typename T>
bool BasicTensor<T>::requires_grad() const {
    return checked().requires_grad;
}

template <typename T>
BasicTensor<T>& BasicTensor<T>::set_requires_grad(bool on) {
    checked();
    if (impl_->grad_fn && !on)
        throw ContractError("cannot clear requires_grad on a non-leaf tensor");
    impl_->requires_grad = on;
    return *this;
}

template <typename T>
bool BasicTensor<T>::is_leaf() const {
    return !checked().grad_fn;
}

template <typename T>
bool BasicTensor<T>::has_grad() const {
    return !checked().grad.empty();
}

template <typename T>
std::span<const T> BasicTensor<T>::grad() const {
    return checked().grad;
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_grad() {
    checked();
    return impl_->ensure_grad();
}

template <typename T>
void BasicTensor<T>::zero_grad() {
    checked();
    impl_->grad.clear();
}

template <typename T>
void BasicTensor<T>::backward() const {
    GradGraph<T>::trace(*this).backward();
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
    const auto& impl = checked();
    return from_data(impl.shape, impl.data, false);
}

template <typename T>
GradGraph<T> GradGraph<T>::trace(const BasicTensor<T>& root) {
    if (!root.defined()) throw ContractError("backward from an undefined tensor");
    GradGraph graph;
    graph.root_ = root.impl();

    // Iterative post-order DFS; a node is emitted after all of its producers.
    std::unordered_set<const TensorImpl<T>*> visited;
    std::vector<std::pair<TensorImpl<T>*, std::size_t>> stack;
    if (graph.root_->grad_fn) {
        stack.emplace_back(graph.root_.get(), 0);
        visited.insert(graph.root_.get());
    }
    while (!stack.empty()) {
        auto& [node, next_input] = stack.back();
        const auto& inputs = node->grad_fn->inputs;
        if (next_input < inputs.size()) {
            TensorImpl<T>* in = inputs[next_input++].get();
            if (in->grad_fn && in->requires_grad && visited.insert(in).second)
                stack.emplace_back(in, 0);
        } else {
            graph.order_.push_back(node);
            stack.pop_back();
        }
    }
    return graph;
}

template <typename T>
void GradGraph<T>::backward() {
    if (root_->data.size() != 1)
        throw ContractError("backward requires a scalar loss, got shape " +
                            shape_string(root_->shape));
    if (!root_->requires_grad) return;
    // Intermediate gradients are per-pass scratch; only leaves accumulate
    // across calls.
    for (TensorImpl<T>* node : order_) node->grad.clear();
    root_->ensure_grad()[0] = T(1);
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        TensorImpl<T>* out = *it;
        if (out->grad.empty()) continue;  // no gradient flowed into this op
        out->grad_fn->backward(*out);
    }
}

template struct TensorImpl<float>;
template struct TensorImpl<double>;
template class BasicTensor<float>;
template class BasicTensor<double>;
template class GradGraph<float>;
template class GradGraph<double>;

}  // namespace useq
