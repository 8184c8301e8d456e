#include "useq/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "op_support.hpp"
#include "useq/errors.hpp"

namespace useq {

using detail::ImplPtr;
using detail::make_output;

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
void require_rank(const BasicTensor<T>& x, std::size_t rank, const char* op) {
    if (x.rank() != rank)
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                             ", got shape " + shape_string(x.shape()));
}

void require_axis(std::size_t axis, std::size_t rank, const char* op) {
    if (axis >= rank)
        throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                             " out of range for rank " + std::to_string(rank));
}

// Splits a shape around `axis` into (outer, axis length, inner) extents.
struct AxisSplit {
    std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    s.extent = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

// --- broadcasting -----------------------------------------------------------

enum class Broadcast { none, suffix, trailing_one };

struct OperandMap {
    Broadcast kind = Broadcast::none;
    std::size_t small_numel = 0;
    std::size_t last = 1;  // last-axis extent of the output

    std::size_t operator()(std::size_t i) const {
        switch (kind) {
            case Broadcast::suffix: return i % small_numel;
            case Broadcast::trailing_one: return i / last;
            default: return i;
        }
    }
};

bool is_suffix(const Shape& small, const Shape& big) {
    if (small.size() > big.size()) return false;
    return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

bool is_trailing_one(const Shape& small, const Shape& big) {
    if (small.size() != big.size() || small.empty() || small.back() != 1) return false;
    return std::equal(small.begin(), small.end() - 1, big.begin());
}

struct BinaryPlan {
    Shape out_shape;
    OperandMap a, b;
};

BinaryPlan plan_binary(const Shape& sa, const Shape& sb, const char* op) {
    BinaryPlan plan;
    if (sa == sb) {
        plan.out_shape = sa;
        return plan;
    }
    auto classify = [](const Shape& small, const Shape& big, OperandMap& map) {
        if (is_suffix(small, big)) {
            map.kind = Broadcast::suffix;
        } else if (is_trailing_one(small, big)) {
            map.kind = Broadcast::trailing_one;
        } else {
            return false;
        }
        map.small_numel = shape_numel(small);
        map.last = big.back();
        return true;
    };
    if (classify(sb, sa, plan.b)) {
        plan.out_shape = sa;
        return plan;
    }
    if (classify(sa, sb, plan.a)) {
        plan.out_shape = sb;
        return plan;
    }
    throw DimensionError(std::string(op) + ": cannot broadcast " + shape_string(sa) + " with " +
                         shape_string(sb));
}

// Calls fn(i, ia, ib) for every output element i with the operand indices it
// reads, using nested loops instead of per-element index arithmetic.
template <typename Fn>
void for_each_pair(const BinaryPlan& plan, std::size_t n, Fn&& fn) {
    auto broadcast = [&](const OperandMap& small, auto&& emit) {
        if (small.kind == Broadcast::suffix) {
            for (std::size_t base = 0; base < n; base += small.small_numel)
                for (std::size_t j = 0; j < small.small_numel; ++j) emit(base + j, j);
        } else {
            for (std::size_t r = 0, base = 0; base < n; ++r, base += small.last)
                for (std::size_t j = 0; j < small.last; ++j) emit(base + j, r);
        }
    };
    if (plan.b.kind != Broadcast::none)
        broadcast(plan.b, [&](std::size_t i, std::size_t s) { fn(i, i, s); });
    else if (plan.a.kind != Broadcast::none)
        broadcast(plan.a, [&](std::size_t i, std::size_t s) { fn(i, s, i); });
    else
        for (std::size_t i = 0; i < n; ++i) fn(i, i, i);
}

// f(x, y) forward; da(x, y) and db(x, y) are the partial derivatives.
template <typename T, typename F, typename DA, typename DB>
BasicTensor<T> binary_op(const char* name, const BasicTensor<T>& a, const BasicTensor<T>& b, F f,
                         DA da, DB db) {
    BinaryPlan plan = plan_binary(a.shape(), b.shape(), name);
    const std::size_t n = shape_numel(plan.out_shape);
    const T* av = a.data().data();
    const T* bv = b.data().data();
    std::vector<T> out(n);
    T* od = out.data();
    for_each_pair(plan, n, [&](std::size_t i, std::size_t ia, std::size_t ib) {
        od[i] = f(av[ia], bv[ib]);
    });

    ImplPtr<T> pa = a.impl(), pb = b.impl();
    return make_output<T>(plan.out_shape, std::move(out), name, {pa, pb},
                          [pa, pb, plan, da, db](const TensorImpl<T>& o) {
                              const std::size_t n = o.data.size();
                              const T* x = pa->data.data();
                              const T* y = pb->data.data();
                              const T* go = o.grad.data();
                              if (pa->requires_grad) {
                                  T* g = pa->ensure_grad().data();
                                  for_each_pair(plan, n, [&](std::size_t i, std::size_t ia,
                                                             std::size_t ib) {
                                      g[ia] += go[i] * da(x[ia], y[ib]);
                                  });
                              }
                              if (pb->requires_grad) {
                                  T* g = pb->ensure_grad().data();
                                  for_each_pair(plan, n, [&](std::size_t i, std::size_t ia,
                                                             std::size_t ib) {
                                      g[ib] += go[i] * db(x[ia], y[ib]);
                                  });
                              }
                          });
}

// Forward values come from `forward`, which maps the whole input at once;
// d(x, y) is dy/dx given input x and output y.
template <typename T, typename Forward, typename D>
BasicTensor<T> mapped_op(const char* name, const BasicTensor<T>& x, Forward forward, D d) {
    auto xv = x.data();
    std::vector<T> out(xv.size());
    using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
    Eigen::Map<Arr>(out.data(), static_cast<Eigen::Index>(out.size())) =
        forward(Eigen::Map<const Arr>(xv.data(), static_cast<Eigen::Index>(xv.size())));
    ImplPtr<T> px = x.impl();
    return make_output<T>(x.shape(), std::move(out), name, {px},
                          [px, d](const TensorImpl<T>& o) {
                              auto g = px->ensure_grad();
                              for (std::size_t i = 0; i < g.size(); ++i)
                                  g[i] += o.grad[i] * d(px->data[i], o.data[i]);
                          });
}

template <typename T, typename F, typename D>
BasicTensor<T> unary_op(const char* name, const BasicTensor<T>& x, F f, D d) {
    return mapped_op<T>(name, x, [f](const auto& a) { return a.unaryExpr(f); }, d);
}

}  // namespace

// --- linear algebra ----------------------------------------------------------

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k)
        throw DimensionError("matmul: inner dimensions differ for " + shape_string(a.shape()) +
                             " x " + shape_string(b.shape()));
    std::vector<T> out(m * n);
    MatMap<T>(out.data(), m, n).noalias() =
        ConstMatMap<T>(a.data().data(), m, k) * ConstMatMap<T>(b.data().data(), k, n);

    ImplPtr<T> pa = a.impl(), pb = b.impl();
    return make_output<T>({m, n}, std::move(out), "matmul", {pa, pb},
                          [pa, pb, m, k, n](const TensorImpl<T>& o) {
                              ConstMatMap<T> g(o.grad.data(), m, n);
                              if (pa->requires_grad)
                                  MatMap<T>(pa->ensure_grad().data(), m, k).noalias() +=
                                      g * ConstMatMap<T>(pb->data.data(), k, n).transpose();
                              if (pb->requires_grad)
                                  MatMap<T>(pb->ensure_grad().data(), k, n).noalias() +=
                                      ConstMatMap<T>(pa->data.data(), m, k).transpose() * g;
                          });
}

template <typename T>
BasicTensor<T> bmm(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_rank(a, 3, "bmm");
    require_rank(b, 3, "bmm");
    const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
    if (b.dim(0) != batch || b.dim(1) != k)
        throw DimensionError("bmm: incompatible shapes " + shape_string(a.shape()) + " x " +
                             shape_string(b.shape()));
    std::vector<T> out(batch * m * n);
    for (std::size_t i = 0; i < batch; ++i)
        MatMap<T>(out.data() + i * m * n, m, n).noalias() =
            ConstMatMap<T>(a.data().data() + i * m * k, m, k) *
            ConstMatMap<T>(b.data().data() + i * k * n, k, n);

    ImplPtr<T> pa = a.impl(), pb = b.impl();
    return make_output<T>(
        {batch, m, n}, std::move(out), "bmm", {pa, pb},
        [pa, pb, batch, m, k, n](const TensorImpl<T>& o) {
            T* ga = pa->requires_grad ? pa->ensure_grad().data() : nullptr;
            T* gb = pb->requires_grad ? pb->ensure_grad().data() : nullptr;
            for (std::size_t i = 0; i < batch; ++i) {
                ConstMatMap<T> g(o.grad.data() + i * m * n, m, n);
                if (ga)
                    MatMap<T>(ga + i * m * k, m, k).noalias() +=
                        g * ConstMatMap<T>(pb->data.data() + i * k * n, k, n).transpose();
                if (gb)
                    MatMap<T>(gb + i * k * n, k, n).noalias() +=
                        ConstMatMap<T>(pa->data.data() + i * m * k, m, k).transpose() * g;
            }
        });
}

// --- elementwise -------------------------------------------------------------

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return binary_op<T>(
        "add", a, b, [](T x, T y) { return x + y; }, [](T, T) { return T(1); },
        [](T, T) { return T(1); });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return binary_op<T>(
        "sub", a, b, [](T x, T y) { return x - y; }, [](T, T) { return T(1); },
        [](T, T) { return T(-1); });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return binary_op<T>(
        "mul", a, b, [](T x, T y) { return x * y; }, [](T, T y) { return y; },
        [](T x, T) { return x; });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, Scalar<T> factor) {
    return unary_op<T>(
        "scale", x, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x) {
    return mapped_op<T>(
        "tanh", x, [](const auto& a) { return a.tanh(); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
    return mapped_op<T>(
        "sigmoid", x, [](const auto& a) { return a.logistic(); },
        [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
    return unary_op<T>(
        "relu", x, [](T v) { return v > T(0) ? v : T(0); },
        [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
BasicTensor<T> exp(const BasicTensor<T>& x) {
    return unary_op<T>(
        "exp", x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
BasicTensor<T> log(const BasicTensor<T>& x) {
    for (T v : x.data())
        if (!(v > T(0))) throw DomainError("log of non-positive value " + std::to_string(v));
    return unary_op<T>(
        "log", x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <typename T>
BasicTensor<T> neg(const BasicTensor<T>& x) {
    return unary_op<T>(
        "neg", x, [](T v) { return -v; }, [](T, T) { return T(-1); });
}

template <typename T>
BasicTensor<T> softmax_lastaxis(const BasicTensor<T>& x) {
    if (x.rank() == 0) throw DimensionError("softmax_lastaxis: rank-0 input");
    const std::size_t width = x.shape().back();
    const std::size_t rows = x.numel() / width;
    auto xv = x.data();
    std::vector<T> out(xv.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const T* in = xv.data() + r * width;
        T* y = out.data() + r * width;
        const T mx = *std::max_element(in, in + width);
        T total = 0;
        for (std::size_t i = 0; i < width; ++i) {
            y[i] = std::exp(in[i] - mx);
            total += y[i];
        }
        for (std::size_t i = 0; i < width; ++i) y[i] /= total;
    }
    ImplPtr<T> px = x.impl();
    return make_output<T>(x.shape(), std::move(out), "softmax", {px},
                          [px, rows, width](const TensorImpl<T>& o) {
                              auto g = px->ensure_grad();
                              for (std::size_t r = 0; r < rows; ++r) {
                                  const T* y = o.data.data() + r * width;
                                  const T* gy = o.grad.data() + r * width;
                                  T dot = 0;
                                  for (std::size_t i = 0; i < width; ++i) dot += gy[i] * y[i];
                                  for (std::size_t i = 0; i < width; ++i)
                                      g[r * width + i] += y[i] * (gy[i] - dot);
                              }
                          });
}

// --- convolution -------------------------------------------------------------

template <typename T>
BasicTensor<T> conv1d_causal(const BasicTensor<T>& x, const BasicTensor<T>& w,
                             std::size_t dilation) {
    require_rank(x, 3, "conv1d_causal");
    require_rank(w, 3, "conv1d_causal");
    if (dilation < 1) throw ContractError("conv1d_causal: dilation must be >= 1");
    const std::size_t batch = x.dim(0), steps = x.dim(1), cin = x.dim(2);
    const std::size_t taps = w.dim(0), cout = w.dim(2);
    if (w.dim(1) != cin)
        throw DimensionError("conv1d_causal: input channels " + shape_string(x.shape()) +
                             " do not match kernel " + shape_string(w.shape()));

    std::vector<T> out(batch * steps * cout, T(0));
    const T* xd = x.data().data();
    const T* wd = w.data().data();
    for (std::size_t b = 0; b < batch; ++b) {
        ConstMatMap<T> xb(xd + b * steps * cin, steps, cin);
        MatMap<T> yb(out.data() + b * steps * cout, steps, cout);
        for (std::size_t j = 0; j < taps; ++j) {
            const std::size_t shift = (taps - 1 - j) * dilation;
            if (shift >= steps) continue;
            const auto rows = static_cast<Eigen::Index>(steps - shift);
            yb.bottomRows(rows).noalias() +=
                xb.topRows(rows) * ConstMatMap<T>(wd + j * cin * cout, cin, cout);
        }
    }

    ImplPtr<T> px = x.impl(), pw = w.impl();
    return make_output<T>(
        {batch, steps, cout}, std::move(out), "conv1d_causal", {px, pw},
        [px, pw, batch, steps, cin, cout, taps, dilation](const TensorImpl<T>& o) {
            T* gx = px->requires_grad ? px->ensure_grad().data() : nullptr;
            T* gw = pw->requires_grad ? pw->ensure_grad().data() : nullptr;
            for (std::size_t b = 0; b < batch; ++b) {
                ConstMatMap<T> gy(o.grad.data() + b * steps * cout, steps, cout);
                ConstMatMap<T> xb(px->data.data() + b * steps * cin, steps, cin);
                for (std::size_t j = 0; j < taps; ++j) {
                    const std::size_t shift = (taps - 1 - j) * dilation;
                    if (shift >= steps) continue;
                    const auto rows = static_cast<Eigen::Index>(steps - shift);
                    if (gx)
                        MatMap<T>(gx + b * steps * cin, steps, cin).topRows(rows).noalias() +=
                            gy.bottomRows(rows) *
                            ConstMatMap<T>(pw->data.data() + j * cin * cout, cin, cout)
                                .transpose();
                    if (gw)
                        MatMap<T>(gw + j * cin * cout, cin, cout).noalias() +=
                            xb.topRows(rows).transpose() * gy.bottomRows(rows);
                }
            }
        });
}

// --- reductions and layout -----------------------------------------------------

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x) {
    T total = 0;
    for (T v : x.data()) total += v;
    ImplPtr<T> px = x.impl();
    return make_output<T>({1}, {total}, "sum", {px}, [px](const TensorImpl<T>& o) {
        auto g = px->ensure_grad();
        for (auto& v : g) v += o.grad[0];
    });
}

template <typename T>
BasicTensor<T> mean_over_axis(const BasicTensor<T>& x, std::size_t axis) {
    require_axis(axis, x.rank(), "mean_over_axis");
    const AxisSplit s = split_at(x.shape(), axis);
    Shape out_shape = x.shape();
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    if (out_shape.empty()) out_shape = {1};

    auto xv = x.data();
    std::vector<T> out(s.outer * s.inner, T(0));
    const T inv = T(1) / static_cast<T>(s.extent);
    for (std::size_t o = 0; o < s.outer; ++o) {
        T* dst = out.data() + o * s.inner;
        for (std::size_t e = 0; e < s.extent; ++e) {
            const T* src = xv.data() + (o * s.extent + e) * s.inner;
            for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
        }
        for (std::size_t i = 0; i < s.inner; ++i) dst[i] *= inv;
    }
    ImplPtr<T> px = x.impl();
    return make_output<T>(std::move(out_shape), std::move(out), "mean_over_axis", {px},
                          [px, s, inv](const TensorImpl<T>& o) {
                              auto g = px->ensure_grad();
                              for (std::size_t a = 0; a < s.outer; ++a)
                                  for (std::size_t e = 0; e < s.extent; ++e)
                                      for (std::size_t i = 0; i < s.inner; ++i)
                                          g[(a * s.extent + e) * s.inner + i] +=
                                              o.grad[a * s.inner + i] * inv;
                          });
}

template <typename T>
BasicTensor<T> concat(const std::vector<BasicTensor<T>>& parts, std::size_t axis) {
    if (parts.empty()) throw ContractError("concat: no inputs");
    const Shape& first = parts.front().shape();
    require_axis(axis, first.size(), "concat");
    Shape out_shape = first;
    out_shape[axis] = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        bool compatible = s.size() == first.size();
        for (std::size_t i = 0; compatible && i < s.size(); ++i)
            compatible = i == axis || s[i] == first[i];
        if (!compatible)
            throw DimensionError("concat: shape " + shape_string(s) + " incompatible with " +
                                 shape_string(first));
        out_shape[axis] += s[axis];
    }
    const AxisSplit os = split_at(out_shape, axis);
    const std::size_t out_row = os.extent * os.inner;
    std::vector<T> out(shape_numel(out_shape));
    std::vector<ImplPtr<T>> inputs;
    std::vector<std::size_t> offsets;  // element offset of each part within an output row
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const std::size_t row = p.dim(axis) * os.inner;
        auto pv = p.data();
        for (std::size_t o = 0; o < os.outer; ++o)
            std::copy_n(pv.data() + o * row, row, out.data() + o * out_row + offset);
        inputs.push_back(p.impl());
        offsets.push_back(offset);
        offset += row;
    }
    auto captured = inputs;
    return make_output<T>(std::move(out_shape), std::move(out), "concat", std::move(inputs),
                          [captured, offsets, os, out_row](const TensorImpl<T>& o) {
                              for (std::size_t k = 0; k < captured.size(); ++k) {
                                  auto& in = captured[k];
                                  if (!in->requires_grad) continue;
                                  auto g = in->ensure_grad();
                                  const std::size_t row = g.size() / os.outer;
                                  for (std::size_t a = 0; a < os.outer; ++a) {
                                      const T* src = o.grad.data() + a * out_row + offsets[k];
                                      T* dst = g.data() + a * row;
                                      for (std::size_t i = 0; i < row; ++i) dst[i] += src[i];
                                  }
                              }
                          });
}

template <typename T>
BasicTensor<T> slice(const BasicTensor<T>& x, std::size_t axis, std::size_t begin,
                     std::size_t end) {
    require_axis(axis, x.rank(), "slice");
    if (begin >= end || end > x.dim(axis))
        throw DimensionError("slice: range [" + std::to_string(begin) + "," +
                             std::to_string(end) + ") invalid for axis " + std::to_string(axis) +
                             " of shape " + shape_string(x.shape()));
    const AxisSplit s = split_at(x.shape(), axis);
    Shape out_shape = x.shape();
    out_shape[axis] = end - begin;
    const std::size_t in_row = s.extent * s.inner;
    const std::size_t out_row = (end - begin) * s.inner;
    const std::size_t skip = begin * s.inner;
    auto xv = x.data();
    std::vector<T> out(s.outer * out_row);
    for (std::size_t o = 0; o < s.outer; ++o)
        std::copy_n(xv.data() + o * in_row + skip, out_row, out.data() + o * out_row);
    ImplPtr<T> px = x.impl();
    return make_output<T>(std::move(out_shape), std::move(out), "slice", {px},
                          [px, s, in_row, out_row, skip](const TensorImpl<T>& o) {
                              auto g = px->ensure_grad();
                              for (std::size_t a = 0; a < s.outer; ++a) {
                                  const T* src = o.grad.data() + a * out_row;
                                  T* dst = g.data() + a * in_row + skip;
                                  for (std::size_t i = 0; i < out_row; ++i) dst[i] += src[i];
                              }
                          });
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape) {
    if (shape_numel(shape) != x.numel())
        throw DimensionError("reshape: " + shape_string(x.shape()) + " cannot become " +
                             shape_string(shape));
    auto xv = x.data();
    ImplPtr<T> px = x.impl();
    return make_output<T>(std::move(shape), std::vector<T>(xv.begin(), xv.end()), "reshape", {px},
                          [px](const TensorImpl<T>& o) {
                              auto g = px->ensure_grad();
                              for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                          });
}

template <typename T>
BasicTensor<T> permute(const BasicTensor<T>& x, const std::vector<std::size_t>& axes) {
    const Shape& in = x.shape();
    const std::size_t rank = in.size();
    if (axes.size() != rank) throw DimensionError("permute: axis list does not match rank");
    std::vector<bool> seen(rank, false);
    for (std::size_t a : axes) {
        require_axis(a, rank, "permute");
        if (seen[a]) throw DimensionError("permute: repeated axis");
        seen[a] = true;
    }
    std::vector<std::size_t> in_stride(rank, 1);
    for (std::size_t i = rank; i-- > 1;) in_stride[i - 1] = in_stride[i] * in[i];
    Shape out_shape(rank);
    std::vector<std::size_t> stride(rank);  // input stride per output axis
    for (std::size_t i = 0; i < rank; ++i) {
        out_shape[i] = in[axes[i]];
        stride[i] = in_stride[axes[i]];
    }
    const std::size_t n = x.numel();
    // source index for every output position, walked with an odometer
    std::vector<std::size_t> source(n);
    std::vector<std::size_t> counter(rank, 0);
    std::size_t src = 0;
    for (std::size_t i = 0; i < n; ++i) {
        source[i] = src;
        for (std::size_t d = rank; d-- > 0;) {
            ++counter[d];
            src += stride[d];
            if (counter[d] < out_shape[d]) break;
            src -= stride[d] * counter[d];
            counter[d] = 0;
        }
    }
    auto xv = x.data();
    std::vector<T> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = xv[source[i]];
    ImplPtr<T> px = x.impl();
    return make_output<T>(std::move(out_shape), std::move(out), "permute", {px},
                          [px, source = std::move(source)](const TensorImpl<T>& o) {
                              auto g = px->ensure_grad();
                              for (std::size_t i = 0; i < source.size(); ++i)
                                  g[source[i]] += o.grad[i];
                          });
}

template <typename T>
BasicTensor<T> transpose_last2(const BasicTensor<T>& x) {
    if (x.rank() < 2) throw DimensionError("transpose_last2: rank < 2");
    std::vector<std::size_t> axes(x.rank());
    for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
    std::swap(axes[axes.size() - 1], axes[axes.size() - 2]);
    return permute(x, axes);
}

// --- model-specific primitives ------------------------------------------------

template <typename T>
BasicTensor<T> embedding(const BasicTensor<T>& table, std::span<const std::int32_t> ids,
                         const Shape& id_shape) {
    require_rank(table, 2, "embedding");
    if (shape_numel(id_shape) != ids.size())
        throw DimensionError("embedding: id shape " + shape_string(id_shape) +
                             " does not match id count");
    const std::size_t vocab = table.dim(0), width = table.dim(1);
    for (std::int32_t id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= vocab)
            throw ContractError("embedding: id " + std::to_string(id) +
                                " outside vocabulary of size " + std::to_string(vocab));
    Shape out_shape = id_shape;
    out_shape.push_back(width);
    auto tv = table.data();
    std::vector<T> out(ids.size() * width);
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * width, width,
                    out.data() + i * width);
    ImplPtr<T> pt = table.impl();
    return make_output<T>(std::move(out_shape), std::move(out), "embedding", {pt},
                          [pt, ids = std::vector<std::int32_t>(ids.begin(), ids.end()),
                           width](const TensorImpl<T>& o) {
                              auto g = pt->ensure_grad();
                              for (std::size_t i = 0; i < ids.size(); ++i) {
                                  T* dst = g.data() + static_cast<std::size_t>(ids[i]) * width;
                                  const T* src = o.grad.data() + i * width;
                                  for (std::size_t k = 0; k < width; ++k) dst[k] += src[k];
                              }
                          });
}

template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                          const BasicTensor<T>& beta, Scalar<T> eps) {
    if (x.rank() == 0) throw DimensionError("layer_norm: rank-0 input");
    const std::size_t width = x.shape().back();
    if (gamma.shape() != Shape{width} || beta.shape() != Shape{width})
        throw DimensionError("layer_norm: scale/offset must have shape (" +
                             std::to_string(width) + ")");
    const std::size_t rows = x.numel() / width;
    auto xv = x.data();
    auto gv = gamma.data();
    auto bv = beta.data();
    std::vector<T> out(xv.size()), normalized(xv.size()), inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* in = xv.data() + r * width;
        T mean = 0;
        for (std::size_t i = 0; i < width; ++i) mean += in[i];
        mean /= static_cast<T>(width);
        T var = 0;
        for (std::size_t i = 0; i < width; ++i) var += (in[i] - mean) * (in[i] - mean);
        var /= static_cast<T>(width);
        inv_std[r] = T(1) / std::sqrt(var + eps);
        for (std::size_t i = 0; i < width; ++i) {
            const T h = (in[i] - mean) * inv_std[r];
            normalized[r * width + i] = h;
            out[r * width + i] = h * gv[i] + bv[i];
        }
    }
    ImplPtr<T> px = x.impl(), pg = gamma.impl(), pb = beta.impl();
    return make_output<T>(
        x.shape(), std::move(out), "layer_norm", {px, pg, pb},
        [px, pg, pb, rows, width, normalized = std::move(normalized),
         inv_std = std::move(inv_std)](const TensorImpl<T>& o) {
            T* gg = pg->requires_grad ? pg->ensure_grad().data() : nullptr;
            T* gb = pb->requires_grad ? pb->ensure_grad().data() : nullptr;
            T* gx = px->requires_grad ? px->ensure_grad().data() : nullptr;
            std::vector<T> dh(width);
            for (std::size_t r = 0; r < rows; ++r) {
                const T* gy = o.grad.data() + r * width;
                const T* h = normalized.data() + r * width;
                T mean_dh = 0, mean_dh_h = 0;
                for (std::size_t i = 0; i < width; ++i) {
                    if (gg) gg[i] += gy[i] * h[i];
                    if (gb) gb[i] += gy[i];
                    dh[i] = gy[i] * pg->data[i];
                    mean_dh += dh[i];
                    mean_dh_h += dh[i] * h[i];
                }
                if (!gx) continue;
                mean_dh /= static_cast<T>(width);
                mean_dh_h /= static_cast<T>(width);
                for (std::size_t i = 0; i < width; ++i)
                    gx[r * width + i] += inv_std[r] * (dh[i] - mean_dh - h[i] * mean_dh_h);
            }
        });
}

template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& x, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ContractError("dropout: rate must be in [0,1)");
    const T keep_scale = T(1) / (T(1) - static_cast<T>(rate));
    std::vector<T> mask(x.numel());
    for (auto& m : mask) m = rng.uniform01() < rate ? T(0) : keep_scale;
    auto xv = x.data();
    std::vector<T> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
    ImplPtr<T> px = x.impl();
    return make_output<T>(x.shape(), std::move(out), "dropout", {px},
                          [px, mask = std::move(mask)](const TensorImpl<T>& o) {
                              auto g = px->ensure_grad();
                              for (std::size_t i = 0; i < g.size(); ++i)
                                  g[i] += o.grad[i] * mask[i];
                          });
}

#define USEQ_INSTANTIATE_OPS(T)                                                               \
    template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);             \
    template BasicTensor<T> bmm(const BasicTensor<T>&, const BasicTensor<T>&);                \
    template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                \
    template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                \
    template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                \
    template BasicTensor<T> scale(const BasicTensor<T>&, Scalar<T>);                          \
    template BasicTensor<T> tanh(const BasicTensor<T>&);                                      \
    template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                   \
    template BasicTensor<T> relu(const BasicTensor<T>&);                                      \
    template BasicTensor<T> exp(const BasicTensor<T>&);                                       \
    template BasicTensor<T> log(const BasicTensor<T>&);                                       \
    template BasicTensor<T> neg(const BasicTensor<T>&);                                       \
    template BasicTensor<T> softmax_lastaxis(const BasicTensor<T>&);                          \
    template BasicTensor<T> conv1d_causal(const BasicTensor<T>&, const BasicTensor<T>&,       \
                                          std::size_t);                                       \
    template BasicTensor<T> sum(const BasicTensor<T>&);                                       \
    template BasicTensor<T> mean_over_axis(const BasicTensor<T>&, std::size_t);               \
    template BasicTensor<T> concat(const std::vector<BasicTensor<T>>&, std::size_t);          \
    template BasicTensor<T> slice(const BasicTensor<T>&, std::size_t, std::size_t,            \
                                  std::size_t);                                               \
    template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                            \
    template BasicTensor<T> transpose_last2(const BasicTensor<T>&);                           \
    template BasicTensor<T> permute(const BasicTensor<T>&, const std::vector<std::size_t>&);  \
    template BasicTensor<T> embedding(const BasicTensor<T>&, std::span<const std::int32_t>,   \
                                      const Shape&);                                          \
    template BasicTensor<T> layer_norm(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                       const BasicTensor<T>&, Scalar<T>);                     \
    template BasicTensor<T> dropout(const BasicTensor<T>&, double, Rng&);

USEQ_INSTANTIATE_OPS(float)
USEQ_INSTANTIATE_OPS(double)

#undef USEQ_INSTANTIATE_OPS

}  // namespace useq
