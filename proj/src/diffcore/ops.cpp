#include "argate/diffcore/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pullback.hpp"

namespace argate::diffcore {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

[[noreturn]] void shape_error(OpKind kind, const std::string& what) {
    throw ShapeError(std::string(op_name(kind)) + ": " + what);
}

void expect_arity(OpKind kind, std::span<const NodeId> inputs, std::size_t n) {
    if (inputs.size() != n) {
        shape_error(kind, "expected " + std::to_string(n) + " inputs, got " + std::to_string(inputs.size()));
    }
}

void expect_rank(OpKind kind, const Tensor& t, std::size_t rank, const char* which) {
    if (t.rank() != rank) {
        shape_error(kind, std::string(which) + " must have rank " + std::to_string(rank) + ", got shape " +
                              to_string(t.shape()));
    }
}

// ---------------------------------------------------------------------------
// Broadcasting

struct Broadcast {
    Shape out;
    std::vector<std::size_t> a_stride;
    std::vector<std::size_t> b_stride;
    bool same = false;
};

std::vector<std::size_t> contiguous_strides(const Shape& s) {
    std::vector<std::size_t> st(s.size(), 1);
    for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
    return st;
}

Broadcast make_broadcast(OpKind kind, const Shape& a, const Shape& b) {
    Broadcast bc;
    if (a == b) {
        bc.out = a;
        bc.same = true;
        return bc;
    }
    const std::size_t r = std::max(a.size(), b.size());
    Shape pa(r - a.size(), 1), pb(r - b.size(), 1);
    pa.insert(pa.end(), a.begin(), a.end());
    pb.insert(pb.end(), b.begin(), b.end());
    const auto sa = contiguous_strides(pa);
    const auto sb = contiguous_strides(pb);
    bc.out.resize(r);
    bc.a_stride.resize(r);
    bc.b_stride.resize(r);
    for (std::size_t i = 0; i < r; ++i) {
        if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
            shape_error(kind, "cannot broadcast " + to_string(a) + " with " + to_string(b) + " (dim " +
                                  std::to_string(i) + ": " + std::to_string(pa[i]) + " vs " + std::to_string(pb[i]) +
                                  ")");
        }
        bc.out[i] = std::max(pa[i], pb[i]);
        bc.a_stride[i] = pa[i] == 1 ? 0 : sa[i];
        bc.b_stride[i] = pb[i] == 1 ? 0 : sb[i];
    }
    return bc;
}

template <typename F>
void for_each_broadcast(const Broadcast& bc, F&& f) {
    const std::size_t n = element_count(bc.out);
    if (bc.same) {
        for (std::size_t i = 0; i < n; ++i) f(i, i, i);
        return;
    }
    const std::size_t r = bc.out.size();
    std::vector<std::size_t> counter(r, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < n; ++i) {
        f(i, ia, ib);
        for (std::size_t d = r; d-- > 0;) {
            ++counter[d];
            ia += bc.a_stride[d];
            ib += bc.b_stride[d];
            if (counter[d] < bc.out[d]) break;
            ia -= bc.a_stride[d] * counter[d];
            ib -= bc.b_stride[d] * counter[d];
            counter[d] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// Axis helpers: view a tensor as [outer, axis, inner].

struct AxisView {
    std::size_t outer = 1, extent = 1, inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
    AxisView v;
    for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
    v.extent = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
    return v;
}

double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Segment lookup for clamped piecewise-linear interpolation.
struct Segment {
    std::size_t lo;
    double t;
    bool inside;
};

Segment locate(std::span<const double> kp, double x) {
    const std::size_t m = kp.size();
    if (!(x > kp.front())) return {0, 0.0, false};
    if (!(x < kp.back())) return {m - 2, 1.0, false};
    const auto it = std::upper_bound(kp.begin(), kp.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - kp.begin());
    const std::size_t lo = hi - 1;
    return {lo, (x - kp[lo]) / (kp[hi] - kp[lo]), true};
}

// Cell lookup for one coordinate of multilinear interpolation.
struct Cell {
    std::size_t base;
    double frac;
    bool inside;
};

Cell locate_cell(double x, std::size_t n) {
    const double span = static_cast<double>(n - 1);
    bool inside = true;
    if (!(x > 0.0)) {
        x = 0.0;
        inside = false;
    } else if (!(x < 1.0)) {
        x = 1.0;
        inside = false;
    }
    const double s = x * span;
    std::size_t c = static_cast<std::size_t>(std::floor(s));
    if (c > n - 2) c = n - 2;
    return {c, s - static_cast<double>(c), inside};
}

// ---------------------------------------------------------------------------
// Forward kernels

Node make_node(OpKind kind, std::span<const NodeId> inputs, const Tape& tape, const OpAttrs& attrs) {
    Node n;
    n.kind = kind;
    n.inputs.assign(inputs.begin(), inputs.end());
    n.attrs = attrs;
    if (kind != OpKind::StopGradient) {
        for (NodeId in : inputs) n.requires_grad = n.requires_grad || tape.requires_grad(in);
    }
    return n;
}

void forward_matmul(Node& n, const Tensor& a, const Tensor& b) {
    expect_rank(OpKind::MatMul, a, 2, "lhs");
    expect_rank(OpKind::MatMul, b, 2, "rhs");
    if (a.dim(1) != b.dim(0)) {
        shape_error(OpKind::MatMul, "inner dimensions differ: " + to_string(a.shape()) + " x " + to_string(b.shape()));
    }
    n.value = Tensor({a.dim(0), b.dim(1)});
    MatrixMap(n.value.data(), a.dim(0), b.dim(1)).noalias() =
        ConstMatrixMap(a.data(), a.dim(0), a.dim(1)) * ConstMatrixMap(b.data(), b.dim(0), b.dim(1));
}

void forward_conv1d(Node& n, const Tensor& x, const Tensor& w, const Tensor& bias) {
    expect_rank(OpKind::Conv1d, x, 3, "input");
    expect_rank(OpKind::Conv1d, w, 3, "kernel");
    expect_rank(OpKind::Conv1d, bias, 1, "bias");
    const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const std::size_t cout = w.dim(0), kw = w.dim(2), stride = n.attrs.stride;
    if (w.dim(1) != cin) {
        shape_error(OpKind::Conv1d, "kernel expects " + std::to_string(w.dim(1)) + " input channels, input has " +
                                        std::to_string(cin));
    }
    if (bias.dim(0) != cout) {
        shape_error(OpKind::Conv1d, "bias length " + std::to_string(bias.dim(0)) + " != output channels " +
                                        std::to_string(cout));
    }
    if (stride == 0) shape_error(OpKind::Conv1d, "stride must be positive");
    if (kw > len) {
        shape_error(OpKind::Conv1d, "kernel width " + std::to_string(kw) + " exceeds input length " + std::to_string(len));
    }
    const std::size_t lout = (len - kw) / stride + 1;
    const std::size_t rows = cin * kw, cols = batch * lout;

    Tensor im2col({rows, cols});
    double* col = im2col.data();
    for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t k = 0; k < kw; ++k) {
            double* row = col + (c * kw + k) * cols;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* src = x.data() + (b * cin + c) * len + k;
                for (std::size_t t = 0; t < lout; ++t) row[b * lout + t] = src[t * stride];
            }
        }
    }
    RowMatrix y = ConstMatrixMap(w.data(), cout, rows) * ConstMatrixMap(im2col.data(), rows, cols);
    n.value = Tensor({batch, cout, lout});
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < cout; ++o) {
            double* dst = n.value.data() + (b * cout + o) * lout;
            const double* src = y.data() + o * cols + b * lout;
            for (std::size_t t = 0; t < lout; ++t) dst[t] = src[t] + bias[o];
        }
    }
    n.saved = std::move(im2col);
}

void forward_maxpool(Node& n, const Tensor& x) {
    const std::size_t win = n.attrs.window;
    if (x.rank() < 1) shape_error(OpKind::MaxPool1d, "input must have rank >= 1");
    if (win == 0) shape_error(OpKind::MaxPool1d, "window must be positive");
    const std::size_t len = x.shape().back();
    if (len < win) {
        shape_error(OpKind::MaxPool1d, "window " + std::to_string(win) + " exceeds length " + std::to_string(len));
    }
    const std::size_t lout = len / win;
    const std::size_t rows = x.size() / len;
    Shape out = x.shape();
    out.back() = lout;
    n.value = Tensor(out);
    n.saved_index.resize(n.value.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t t = 0; t < lout; ++t) {
            std::size_t best = r * len + t * win;
            for (std::size_t k = 1; k < win; ++k) {
                const std::size_t i = r * len + t * win + k;
                if (x[i] > x[best]) best = i;
            }
            n.value[r * lout + t] = x[best];
            n.saved_index[r * lout + t] = best;
        }
    }
}

template <typename F>
void forward_unary(Node& n, const Tensor& x, F f) {
    n.value = Tensor(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = f(x[i]);
}

void forward_softmax(Node& n, const Tensor& x) {
    if (x.rank() < 1) shape_error(OpKind::Softmax, "input must have rank >= 1");
    const std::size_t c = x.shape().back();
    const std::size_t rows = x.size() / c;
    n.value = Tensor(x.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = x.data() + r * c;
        double* out = n.value.data() + r * c;
        const double m = *std::max_element(in, in + c);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += (out[j] = std::exp(in[j] - m));
        for (std::size_t j = 0; j < c; ++j) out[j] /= z;
    }
}

void forward_binary(Node& n, const Tensor& a, const Tensor& b) {
    const auto bc = make_broadcast(n.kind, a.shape(), b.shape());
    n.value = Tensor(bc.out);
    double* out = n.value.data();
    if (n.kind == OpKind::Add) {
        for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = a[ia] + b[ib]; });
    } else {
        for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = a[ia] * b[ib]; });
    }
}

void forward_concat(Node& n, std::span<const Tensor* const> parts) {
    if (parts.empty()) throw DomainError("concat: no inputs");
    const std::size_t axis = n.attrs.axis.value_or(0);
    const Shape& first = parts[0]->shape();
    if (axis >= first.size()) shape_error(OpKind::Concat, "axis " + std::to_string(axis) + " out of range");
    Shape out = first;
    out[axis] = 0;
    for (const Tensor* p : parts) {
        const Shape& s = p->shape();
        bool ok = s.size() == first.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
        if (!ok) shape_error(OpKind::Concat, "shape " + to_string(s) + " incompatible with " + to_string(first));
        out[axis] += s[axis];
    }
    n.value = Tensor(out);
    const auto v = axis_view(out, axis);
    std::size_t offset = 0;
    for (const Tensor* p : parts) {
        const std::size_t ext = p->shape()[axis];
        for (std::size_t o = 0; o < v.outer; ++o) {
            std::copy_n(p->data() + o * ext * v.inner, ext * v.inner,
                        n.value.data() + (o * v.extent + offset) * v.inner);
        }
        offset += ext;
    }
}

void forward_slice(Node& n, const Tensor& x) {
    const std::size_t axis = n.attrs.axis.value_or(0);
    if (axis >= x.rank()) shape_error(OpKind::Slice, "axis " + std::to_string(axis) + " out of range");
    const std::size_t begin = n.attrs.begin, end = n.attrs.end;
    if (begin >= end || end > x.dim(axis)) {
        shape_error(OpKind::Slice, "range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                       ") invalid for dim " + std::to_string(x.dim(axis)));
    }
    Shape out = x.shape();
    out[axis] = end - begin;
    n.value = Tensor(out);
    const auto v = axis_view(x.shape(), axis);
    const std::size_t width = (end - begin) * v.inner;
    for (std::size_t o = 0; o < v.outer; ++o) {
        std::copy_n(x.data() + (o * v.extent + begin) * v.inner, width, n.value.data() + o * width);
    }
}

void forward_reduce(Node& n, const Tensor& x) {
    const bool is_mean = n.kind == OpKind::Mean;
    if (!n.attrs.axis) {
        double s = 0.0;
        for (double v : x.values()) s += v;
        n.value = Tensor::scalar(is_mean ? s / static_cast<double>(x.size()) : s);
        return;
    }
    const std::size_t axis = *n.attrs.axis;
    if (axis >= x.rank()) shape_error(n.kind, "axis " + std::to_string(axis) + " out of range for " + to_string(x.shape()));
    Shape out = x.shape();
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
    n.value = Tensor(out);
    const auto v = axis_view(x.shape(), axis);
    const double f = is_mean ? 1.0 / static_cast<double>(v.extent) : 1.0;
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t i = 0; i < v.inner; ++i) {
            double s = 0.0;
            for (std::size_t e = 0; e < v.extent; ++e) s += x[(o * v.extent + e) * v.inner + i];
            n.value[o * v.inner + i] = s * f;
        }
    }
}

void forward_cumsum(Node& n, const Tensor& x) {
    if (x.rank() < 1) shape_error(OpKind::CumSum, "input must have rank >= 1");
    const std::size_t c = x.shape().back();
    n.value = Tensor(x.shape());
    for (std::size_t r = 0; r < x.size() / c; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) n.value[r * c + j] = (s += x[r * c + j]);
    }
}

void forward_cross_entropy(Node& n, const Tensor& logits) {
    expect_rank(OpKind::SoftmaxCrossEntropy, logits, 2, "logits");
    const std::size_t batch = logits.dim(0), classes = logits.dim(1);
    const auto& labels = n.attrs.labels;
    if (labels.empty()) throw DomainError("softmax_cross_entropy: no labels");
    if (labels.size() != batch) {
        shape_error(OpKind::SoftmaxCrossEntropy,
                    std::to_string(labels.size()) + " labels for batch of " + std::to_string(batch));
    }
    n.value = Tensor({batch});
    n.saved = Tensor(logits.shape());
    for (std::size_t b = 0; b < batch; ++b) {
        if (labels[b] >= classes) {
            shape_error(OpKind::SoftmaxCrossEntropy,
                        "label " + std::to_string(labels[b]) + " >= classes " + std::to_string(classes));
        }
        const double* z = logits.data() + b * classes;
        double* p = n.saved.data() + b * classes;
        const double m = *std::max_element(z, z + classes);
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) sum += (p[c] = std::exp(z[c] - m));
        for (std::size_t c = 0; c < classes; ++c) p[c] /= sum;
        n.value[b] = m + std::log(sum) - z[labels[b]];
    }
}

void check_keypoints(std::span<const double> kp) {
    if (kp.size() < 2) shape_error(OpKind::PiecewiseLinear, "need at least 2 keypoints");
    for (std::size_t i = 1; i < kp.size(); ++i) {
        if (!(kp[i] > kp[i - 1])) throw DomainError("piecewise_linear: keypoints must be strictly increasing");
    }
}

void forward_pwl(Node& n, const Tensor& x, const Tensor& y) {
    const auto& kp = n.attrs.keypoints;
    check_keypoints(kp);
    if (y.size() != kp.size()) {
        shape_error(OpKind::PiecewiseLinear, std::to_string(y.size()) + " outputs for " + std::to_string(kp.size()) +
                                                 " keypoints");
    }
    n.value = Tensor(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Segment s = locate(kp, x[i]);
        n.value[i] = y[s.lo] * (1.0 - s.t) + y[s.lo + 1] * s.t;
    }
}

void forward_multilinear(Node& n, const Tensor& x, const Tensor& theta) {
    expect_rank(OpKind::Multilinear, x, 2, "input");
    const auto& sizes = n.attrs.sizes;
    const std::size_t d = sizes.size();
    if (d == 0 || d > 16) shape_error(OpKind::Multilinear, "dimension must be in [1, 16]");
    if (x.dim(1) != d) {
        shape_error(OpKind::Multilinear, "input width " + std::to_string(x.dim(1)) + " != lattice dimension " +
                                             std::to_string(d));
    }
    std::size_t total = 1;
    for (std::size_t s : sizes) {
        if (s < 2) shape_error(OpKind::Multilinear, "each dimension needs >= 2 vertices");
        total *= s;
    }
    if (theta.size() != total) {
        shape_error(OpKind::Multilinear, std::to_string(theta.size()) + " vertex values for lattice of " +
                                             std::to_string(total));
    }
    const auto strides = contiguous_strides(sizes);
    const std::size_t batch = x.dim(0);
    n.value = Tensor({batch});
    std::vector<Cell> cells(d);
    for (std::size_t b = 0; b < batch; ++b) {
        std::size_t base = 0;
        for (std::size_t j = 0; j < d; ++j) {
            cells[j] = locate_cell(x[b * d + j], sizes[j]);
            base += cells[j].base * strides[j];
        }
        double acc = 0.0;
        for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
            double w = 1.0;
            std::size_t idx = base;
            for (std::size_t j = 0; j < d; ++j) {
                if (corner >> j & 1) {
                    w *= cells[j].frac;
                    idx += strides[j];
                } else {
                    w *= 1.0 - cells[j].frac;
                }
            }
            acc += w * theta[idx];
        }
        n.value[b] = acc;
    }
}

// ---------------------------------------------------------------------------
// Pullback helpers

Tensor& grad_slot(const Tape& tape, const Node& n, std::size_t which, Gradients& grads) {
    const NodeId in = n.inputs[which];
    return grads.slot(in, tape.value(in).shape());
}

bool wants(const Tape& tape, const Node& n, std::size_t which) { return tape.requires_grad(n.inputs[which]); }

}  // namespace

std::string_view op_name(OpKind kind) {
    switch (kind) {
        case OpKind::Constant: return "constant";
        case OpKind::Parameter: return "parameter";
        case OpKind::MatMul: return "matmul";
        case OpKind::Conv1d: return "conv1d";
        case OpKind::MaxPool1d: return "maxpool1d";
        case OpKind::Relu: return "relu";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Softmax: return "softmax";
        case OpKind::Exp: return "exp";
        case OpKind::Square: return "square";
        case OpKind::Neg: return "neg";
        case OpKind::Softplus: return "softplus";
        case OpKind::Add: return "add";
        case OpKind::Mul: return "mul";
        case OpKind::Concat: return "concat";
        case OpKind::Reshape: return "reshape";
        case OpKind::Slice: return "slice";
        case OpKind::Mean: return "mean";
        case OpKind::Sum: return "sum";
        case OpKind::CumSum: return "cumsum";
        case OpKind::SoftmaxCrossEntropy: return "softmax_cross_entropy";
        case OpKind::StopGradient: return "stop_gradient";
        case OpKind::PiecewiseLinear: return "piecewise_linear";
        case OpKind::Multilinear: return "multilinear";
    }
    return "unknown";
}

NodeId forward(OpKind kind, std::span<const NodeId> inputs, Tape& tape, const OpAttrs& attrs) {
    for (NodeId in : inputs) {
        if (in >= tape.size()) shape_error(kind, "input node " + std::to_string(in) + " is not on this tape");
    }
    Node n = make_node(kind, inputs, tape, attrs);
    auto in = [&](std::size_t i) -> const Tensor& { return tape.value(inputs[i]); };

    switch (kind) {
        case OpKind::Constant:
        case OpKind::Parameter:
            shape_error(kind, "leaves are created with Tape::constant / Tape::parameter");
        case OpKind::MatMul:
            expect_arity(kind, inputs, 2);
            forward_matmul(n, in(0), in(1));
            break;
        case OpKind::Conv1d:
            expect_arity(kind, inputs, 3);
            forward_conv1d(n, in(0), in(1), in(2));
            break;
        case OpKind::MaxPool1d:
            expect_arity(kind, inputs, 1);
            forward_maxpool(n, in(0));
            break;
        case OpKind::Relu:
            expect_arity(kind, inputs, 1);
            forward_unary(n, in(0), [](double v) { return v > 0.0 ? v : 0.0; });
            break;
        case OpKind::Sigmoid:
            expect_arity(kind, inputs, 1);
            forward_unary(n, in(0), logistic);
            break;
        case OpKind::Softmax:
            expect_arity(kind, inputs, 1);
            forward_softmax(n, in(0));
            break;
        case OpKind::Exp:
            expect_arity(kind, inputs, 1);
            forward_unary(n, in(0), [](double v) { return std::exp(v); });
            break;
        case OpKind::Square:
            expect_arity(kind, inputs, 1);
            forward_unary(n, in(0), [](double v) { return v * v; });
            break;
        case OpKind::Neg:
            expect_arity(kind, inputs, 1);
            forward_unary(n, in(0), [](double v) { return -v; });
            break;
        case OpKind::Softplus:
            expect_arity(kind, inputs, 1);
            forward_unary(n, in(0), stable_softplus);
            break;
        case OpKind::Add:
        case OpKind::Mul:
            expect_arity(kind, inputs, 2);
            forward_binary(n, in(0), in(1));
            break;
        case OpKind::Concat: {
            std::vector<const Tensor*> parts;
            for (NodeId id : inputs) parts.push_back(&tape.value(id));
            forward_concat(n, parts);
            break;
        }
        case OpKind::Reshape:
            expect_arity(kind, inputs, 1);
            if (element_count(attrs.shape) != in(0).size()) {
                shape_error(kind, "cannot view " + to_string(in(0).shape()) + " as " + to_string(attrs.shape));
            }
            n.value = in(0).reshaped(attrs.shape);
            break;
        case OpKind::Slice:
            expect_arity(kind, inputs, 1);
            forward_slice(n, in(0));
            break;
        case OpKind::Mean:
        case OpKind::Sum:
            expect_arity(kind, inputs, 1);
            forward_reduce(n, in(0));
            break;
        case OpKind::CumSum:
            expect_arity(kind, inputs, 1);
            forward_cumsum(n, in(0));
            break;
        case OpKind::SoftmaxCrossEntropy:
            expect_arity(kind, inputs, 1);
            forward_cross_entropy(n, in(0));
            break;
        case OpKind::StopGradient:
            expect_arity(kind, inputs, 1);
            n.value = in(0);
            break;
        case OpKind::PiecewiseLinear:
            expect_arity(kind, inputs, 2);
            forward_pwl(n, in(0), in(1));
            break;
        case OpKind::Multilinear:
            expect_arity(kind, inputs, 2);
            forward_multilinear(n, in(0), in(1));
            break;
    }
    return tape.push(std::move(n));
}

namespace detail {

void pullback(const Tape& tape, NodeId id, const Tensor& g, Gradients& grads) {
    const Node& n = tape.node(id);
    auto in = [&](std::size_t i) -> const Tensor& { return tape.value(n.inputs[i]); };

    switch (n.kind) {
        case OpKind::Constant:
        case OpKind::Parameter:
        case OpKind::StopGradient:
            return;
        case OpKind::MatMul: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            const ConstMatrixMap gm(g.data(), a.dim(0), b.dim(1));
            if (wants(tape, n, 0)) {
                Tensor& ga = grad_slot(tape, n, 0, grads);
                MatrixMap(ga.data(), a.dim(0), a.dim(1)).noalias() +=
                    gm * ConstMatrixMap(b.data(), b.dim(0), b.dim(1)).transpose();
            }
            if (wants(tape, n, 1)) {
                Tensor& gb = grad_slot(tape, n, 1, grads);
                MatrixMap(gb.data(), b.dim(0), b.dim(1)).noalias() +=
                    ConstMatrixMap(a.data(), a.dim(0), a.dim(1)).transpose() * gm;
            }
            return;
        }
        case OpKind::Conv1d: {
            const Tensor& x = in(0);
            const Tensor& w = in(1);
            const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
            const std::size_t cout = w.dim(0), kw = w.dim(2), stride = n.attrs.stride;
            const std::size_t lout = n.value.dim(2), rows = cin * kw, cols = batch * lout;
            RowMatrix gy(cout, cols);
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t o = 0; o < cout; ++o) {
                    std::copy_n(g.data() + (b * cout + o) * lout, lout, gy.data() + o * cols + b * lout);
                }
            }
            if (wants(tape, n, 1)) {
                Tensor& gw = grad_slot(tape, n, 1, grads);
                MatrixMap(gw.data(), cout, rows).noalias() +=
                    gy * ConstMatrixMap(n.saved.data(), rows, cols).transpose();
            }
            if (wants(tape, n, 2)) {
                Tensor& gb = grad_slot(tape, n, 2, grads);
                for (std::size_t o = 0; o < cout; ++o) gb[o] += gy.row(o).sum();
            }
            if (wants(tape, n, 0)) {
                RowMatrix gcol = ConstMatrixMap(w.data(), cout, rows).transpose() * gy;
                Tensor& gx = grad_slot(tape, n, 0, grads);
                for (std::size_t c = 0; c < cin; ++c) {
                    for (std::size_t k = 0; k < kw; ++k) {
                        const double* row = gcol.data() + (c * kw + k) * cols;
                        for (std::size_t b = 0; b < batch; ++b) {
                            double* dst = gx.data() + (b * cin + c) * len + k;
                            for (std::size_t t = 0; t < lout; ++t) dst[t * stride] += row[b * lout + t];
                        }
                    }
                }
            }
            return;
        }
        case OpKind::MaxPool1d: {
            Tensor& gx = grad_slot(tape, n, 0, grads);
            for (std::size_t i = 0; i < g.size(); ++i) gx[n.saved_index[i]] += g[i];
            return;
        }
        case OpKind::Relu: {
            const Tensor& x = in(0);
            Tensor& gx = grad_slot(tape, n, 0, grads);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
            return;
        }
        case OpKind::Sigmoid: {
            Tensor& gx = grad_slot(tape, n, 0, grads);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
            return;
        }
        case OpKind::Softmax: {
            const std::size_t c = n.value.shape().back();
            Tensor& gx = grad_slot(tape, n, 0, grads);
            for (std::size_t r = 0; r < g.size() / c; ++r) {
                const double* y = n.value.data() + r * c;
                const double* gr = g.data() + r * c;
                double dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += gr[j] * y[j];
                for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += y[j] * (gr[j] - dot);
            }
            return;
        }
        case OpKind::Exp: {
            Tensor& gx = grad_slot(tape, n, 0, grads);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.value[i];
            return;
        }
        case OpKind::Square: {
            const Tensor& x = in(0);
            Tensor& gx = grad_slot(tape, n, 0, grads);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += 2.0 * x[i] * g[i];
            return;
        }
        case OpKind::Neg: {
            Tensor& gx = grad_slot(tape, n, 0, grads);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] -= g[i];
            return;
        }
        case OpKind::Softplus: {
            const Tensor& x = in(0);
            Tensor& gx = grad_slot(tape, n, 0, grads);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * logistic(x[i]);
            return;
        }
        case OpKind::Add:
        case OpKind::Mul: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            const auto bc = make_broadcast(n.kind, a.shape(), b.shape());
            const bool is_mul = n.kind == OpKind::Mul;
            if (wants(tape, n, 0)) {
                Tensor& ga = grad_slot(tape, n, 0, grads);
                for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                    ga[ia] += is_mul ? g[i] * b[ib] : g[i];
                });
            }
            if (wants(tape, n, 1)) {
                Tensor& gb = grad_slot(tape, n, 1, grads);
                for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                    gb[ib] += is_mul ? g[i] * a[ia] : g[i];
                });
            }
            return;
        }
        case OpKind::Concat: {
            const std::size_t axis = n.attrs.axis.value_or(0);
            const auto v = axis_view(n.value.shape(), axis);
            std::size_t offset = 0;
            for (std::size_t p = 0; p < n.inputs.size(); ++p) {
                const std::size_t ext = in(p).shape()[axis];
                if (wants(tape, n, p)) {
                    Tensor& gp = grad_slot(tape, n, p, grads);
                    for (std::size_t o = 0; o < v.outer; ++o) {
                        const double* src = g.data() + (o * v.extent + offset) * v.inner;
                        double* dst = gp.data() + o * ext * v.inner;
                        for (std::size_t i = 0; i < ext * v.inner; ++i) dst[i] += src[i];
                    }
                }
                offset += ext;
            }
            return;
        }
        case OpKind::Reshape: {
            Tensor& gx = grad_slot(tape, n, 0, grads);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
            return;
        }
        case OpKind::Slice: {
            const Tensor& x = in(0);
            const std::size_t axis = n.attrs.axis.value_or(0);
            const auto v = axis_view(x.shape(), axis);
            const std::size_t width = (n.attrs.end - n.attrs.begin) * v.inner;
            Tensor& gx = grad_slot(tape, n, 0, grads);
            for (std::size_t o = 0; o < v.outer; ++o) {
                double* dst = gx.data() + (o * v.extent + n.attrs.begin) * v.inner;
                for (std::size_t i = 0; i < width; ++i) dst[i] += g[o * width + i];
            }
            return;
        }
        case OpKind::Mean:
        case OpKind::Sum: {
            const Tensor& x = in(0);
            Tensor& gx = grad_slot(tape, n, 0, grads);
            const bool is_mean = n.kind == OpKind::Mean;
            if (!n.attrs.axis) {
                const double v = g[0] * (is_mean ? 1.0 / static_cast<double>(x.size()) : 1.0);
                for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += v;
                return;
            }
            const auto v = axis_view(x.shape(), *n.attrs.axis);
            const double f = is_mean ? 1.0 / static_cast<double>(v.extent) : 1.0;
            for (std::size_t o = 0; o < v.outer; ++o) {
                for (std::size_t e = 0; e < v.extent; ++e) {
                    for (std::size_t i = 0; i < v.inner; ++i) {
                        gx[(o * v.extent + e) * v.inner + i] += g[o * v.inner + i] * f;
                    }
                }
            }
            return;
        }
        case OpKind::CumSum: {
            const std::size_t c = n.value.shape().back();
            Tensor& gx = grad_slot(tape, n, 0, grads);
            for (std::size_t r = 0; r < g.size() / c; ++r) {
                double s = 0.0;
                for (std::size_t j = c; j-- > 0;) gx[r * c + j] += (s += g[r * c + j]);
            }
            return;
        }
        case OpKind::SoftmaxCrossEntropy: {
            const std::size_t batch = n.saved.dim(0), classes = n.saved.dim(1);
            Tensor& gx = grad_slot(tape, n, 0, grads);
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t c = 0; c < classes; ++c) {
                    const double target = c == n.attrs.labels[b] ? 1.0 : 0.0;
                    gx[b * classes + c] += g[b] * (n.saved[b * classes + c] - target);
                }
            }
            return;
        }
        case OpKind::PiecewiseLinear: {
            const Tensor& x = in(0);
            const Tensor& y = in(1);
            const auto& kp = n.attrs.keypoints;
            const bool gx_wanted = wants(tape, n, 0), gy_wanted = wants(tape, n, 1);
            Tensor* gx = gx_wanted ? &grad_slot(tape, n, 0, grads) : nullptr;
            Tensor* gy = gy_wanted ? &grad_slot(tape, n, 1, grads) : nullptr;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const Segment s = locate(kp, x[i]);
                if (gx && s.inside) (*gx)[i] += g[i] * (y[s.lo + 1] - y[s.lo]) / (kp[s.lo + 1] - kp[s.lo]);
                if (gy) {
                    (*gy)[s.lo] += g[i] * (1.0 - s.t);
                    (*gy)[s.lo + 1] += g[i] * s.t;
                }
            }
            return;
        }
        case OpKind::Multilinear: {
            const Tensor& x = in(0);
            const Tensor& theta = in(1);
            const auto& sizes = n.attrs.sizes;
            const std::size_t d = sizes.size(), batch = x.dim(0);
            const auto strides = contiguous_strides(sizes);
            const bool gx_wanted = wants(tape, n, 0), gt_wanted = wants(tape, n, 1);
            Tensor* gx = gx_wanted ? &grad_slot(tape, n, 0, grads) : nullptr;
            Tensor* gt = gt_wanted ? &grad_slot(tape, n, 1, grads) : nullptr;
            std::vector<Cell> cells(d);
            std::vector<double> dx(d);
            for (std::size_t b = 0; b < batch; ++b) {
                std::size_t base = 0;
                for (std::size_t j = 0; j < d; ++j) {
                    cells[j] = locate_cell(x[b * d + j], sizes[j]);
                    base += cells[j].base * strides[j];
                }
                std::fill(dx.begin(), dx.end(), 0.0);
                for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
                    std::size_t idx = base;
                    double w = 1.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        const bool up = corner >> j & 1;
                        w *= up ? cells[j].frac : 1.0 - cells[j].frac;
                        if (up) idx += strides[j];
                    }
                    if (gt) (*gt)[idx] += g[b] * w;
                    if (gx) {
                        for (std::size_t j = 0; j < d; ++j) {
                            double partial = theta[idx] * ((corner >> j & 1) ? 1.0 : -1.0);
                            for (std::size_t i = 0; i < d && partial != 0.0; ++i) {
                                if (i == j) continue;
                                partial *= (corner >> i & 1) ? cells[i].frac : 1.0 - cells[i].frac;
                            }
                            dx[j] += partial;
                        }
                    }
                }
                if (gx) {
                    for (std::size_t j = 0; j < d; ++j) {
                        if (cells[j].inside) (*gx)[b * d + j] += g[b] * dx[j] * static_cast<double>(sizes[j] - 1);
                    }
                }
            }
            return;
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Var front end

Var constant(Tape& tape, Tensor value) { return {tape, tape.constant(std::move(value))}; }
Var param(Tape& tape, Parameter& p) { return {tape, tape.parameter(p)}; }

namespace {

Var apply(OpKind kind, std::initializer_list<Var> inputs, const OpAttrs& attrs = {}) {
    Tape& tape = inputs.begin()->tape();
    std::vector<NodeId> ids;
    ids.reserve(inputs.size());
    for (const Var& v : inputs) {
        if (&v.tape() != &tape) shape_error(kind, "inputs recorded on different tapes");
        ids.push_back(v.id());
    }
    return {tape, forward(kind, ids, tape, attrs)};
}

}  // namespace

Var matmul(Var a, Var b) { return apply(OpKind::MatMul, {a, b}); }

Var conv1d(Var x, Var w, Var bias, std::size_t stride) {
    OpAttrs attrs;
    attrs.stride = stride;
    return apply(OpKind::Conv1d, {x, w, bias}, attrs);
}

Var maxpool1d(Var x, std::size_t window) {
    OpAttrs attrs;
    attrs.window = window;
    return apply(OpKind::MaxPool1d, {x}, attrs);
}

Var relu(Var x) { return apply(OpKind::Relu, {x}); }
Var sigmoid(Var x) { return apply(OpKind::Sigmoid, {x}); }
Var softmax(Var x) { return apply(OpKind::Softmax, {x}); }
Var exp(Var x) { return apply(OpKind::Exp, {x}); }
Var square(Var x) { return apply(OpKind::Square, {x}); }
Var neg(Var x) { return apply(OpKind::Neg, {x}); }
Var softplus(Var x) { return apply(OpKind::Softplus, {x}); }
Var add(Var a, Var b) { return apply(OpKind::Add, {a, b}); }
Var mul(Var a, Var b) { return apply(OpKind::Mul, {a, b}); }
Var scale(Var x, double factor) { return mul(x, constant(x.tape(), Tensor::scalar(factor))); }

Var concat(std::span<const Var> parts, std::size_t axis) {
    if (parts.empty()) throw DomainError("concat: no inputs");
    Tape& tape = parts.front().tape();
    std::vector<NodeId> ids;
    for (const Var& v : parts) ids.push_back(v.id());
    OpAttrs attrs;
    attrs.axis = axis;
    return {tape, forward(OpKind::Concat, ids, tape, attrs)};
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
    return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var reshape(Var x, Shape shape) {
    OpAttrs attrs;
    attrs.shape = std::move(shape);
    return apply(OpKind::Reshape, {x}, attrs);
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
    OpAttrs attrs;
    attrs.axis = axis;
    attrs.begin = begin;
    attrs.end = end;
    return apply(OpKind::Slice, {x}, attrs);
}

Var sum(Var x) { return apply(OpKind::Sum, {x}); }
Var mean(Var x) { return apply(OpKind::Mean, {x}); }

Var sum(Var x, std::size_t axis) {
    OpAttrs attrs;
    attrs.axis = axis;
    return apply(OpKind::Sum, {x}, attrs);
}

Var mean(Var x, std::size_t axis) {
    OpAttrs attrs;
    attrs.axis = axis;
    return apply(OpKind::Mean, {x}, attrs);
}

Var cumsum(Var x) { return apply(OpKind::CumSum, {x}); }

Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels) {
    OpAttrs attrs;
    attrs.labels.assign(labels.begin(), labels.end());
    return apply(OpKind::SoftmaxCrossEntropy, {logits}, attrs);
}

Var stop_gradient(Var x) { return apply(OpKind::StopGradient, {x}); }

Var piecewise_linear(Var x, Var outputs, std::span<const double> keypoints) {
    OpAttrs attrs;
    attrs.keypoints.assign(keypoints.begin(), keypoints.end());
    return apply(OpKind::PiecewiseLinear, {x, outputs}, attrs);
}

Var multilinear(Var x, Var vertices, std::span<const std::size_t> sizes) {
    OpAttrs attrs;
    attrs.sizes.assign(sizes.begin(), sizes.end());
    return apply(OpKind::Multilinear, {x, vertices}, attrs);
}

}  // namespace argate::diffcore
