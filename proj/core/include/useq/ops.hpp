#pragma once

// Differentiable tensor ops. All are templates over the element type and are
// explicitly instantiated for float (training and inference) and double
// (finite-difference verification).
//
// Binary elementwise ops accept equal shapes or a bias-style broadcast: the
// smaller operand's shape is either a suffix of the larger one's, or equals
// it with the last axis collapsed to 1.

#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "useq/random.hpp"
#include "useq/tensor.hpp"

namespace useq {

template <typename T>
using Scalar = std::type_identity_t<T>;

// [m,k] x [k,n] -> [m,n]
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

// [B,m,k] x [B,k,n] -> [B,m,n]
template <typename T>
BasicTensor<T> bmm(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, Scalar<T> factor);

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> exp(const BasicTensor<T>& x);
// Throws DomainError if any element is <= 0.
template <typename T>
BasicTensor<T> log(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> neg(const BasicTensor<T>& x);

// Max-subtracted softmax over the last axis.
template <typename T>
BasicTensor<T> softmax_lastaxis(const BasicTensor<T>& x);

// x: [batch, time, cin], w: [k, cin, cout] -> [batch, time, cout].
// Tap j reads time t - (k-1-j)*dilation; reads before t=0 see zeros.
template <typename T>
BasicTensor<T> conv1d_causal(const BasicTensor<T>& x, const BasicTensor<T>& w,
                             std::size_t dilation);

// Sum of all elements, shape [1].
template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x);

// Mean over one axis; the axis is removed from the shape.
template <typename T>
BasicTensor<T> mean_over_axis(const BasicTensor<T>& x, std::size_t axis);

template <typename T>
BasicTensor<T> concat(const std::vector<BasicTensor<T>>& parts, std::size_t axis);

// Half-open range [begin, end) along axis.
template <typename T>
BasicTensor<T> slice(const BasicTensor<T>& x, std::size_t axis, std::size_t begin,
                     std::size_t end);

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape);

template <typename T>
BasicTensor<T> transpose_last2(const BasicTensor<T>& x);

// out.shape[i] = x.shape[axes[i]]
template <typename T>
BasicTensor<T> permute(const BasicTensor<T>& x, const std::vector<std::size_t>& axes);

// Row gather from table [vocab, dim]; output shape is id_shape + [dim].
// Ids outside [0, vocab) raise ContractError.
template <typename T>
BasicTensor<T> embedding(const BasicTensor<T>& table, std::span<const std::int32_t> ids,
                         const Shape& id_shape);

// Normalizes over the last axis with biased variance.
template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                          const BasicTensor<T>& beta, Scalar<T> eps);

// Inverted dropout: zeroes each element with probability `rate` and scales
// survivors by 1/(1-rate). The mask is drawn from rng in row-major order.
template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& x, double rate, Rng& rng);

}  // namespace useq
