#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "useq/tensor.hpp"

namespace useq::detail {

template <typename T>
using ImplPtr = std::shared_ptr<TensorImpl<T>>;

template <typename T>
using BackwardFn = std::function<void(const TensorImpl<T>&)>;

// Wraps a forward result and, when any input needs a gradient, attaches the
// backward rule.
template <typename T>
BasicTensor<T> make_output(Shape shape, std::vector<T> data, const char* op_name,
                           std::vector<ImplPtr<T>> inputs, BackwardFn<T> backward) {
    auto impl = std::make_shared<TensorImpl<T>>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    bool needs_grad = false;
    if (grad_enabled())
        for (const auto& in : inputs) needs_grad = needs_grad || in->requires_grad;
    if (needs_grad) {
        auto node = std::make_shared<GradNode<T>>();
        node->op_name = op_name;
        node->inputs = std::move(inputs);
        node->backward = std::move(backward);
        impl->requires_grad = true;
        impl->grad_fn = std::move(node);
    }
    return BasicTensor<T>(std::move(impl));
}

}  // namespace useq::detail
