#include "deepmvc/tensor.hpp"

#include "deepmvc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace deepmvc {

namespace {

std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

void check_positive_extents(const Shape& s) {
    for (std::size_t d : s) {
        if (d == 0) throw DimensionError("zero extent in shape " + shape_str(s));
    }
}

// Sign-preserving magnitude clamp used by div; 0 maps to +eps.
double clamp_mag(double x, double eps) {
    if (x >= eps) return x;
    if (x <= -eps) return x;
    return x >= 0.0 ? eps : -eps;
}

constexpr double kLogEps = 1e-12;
constexpr double kDivEps = 1e-12;
constexpr double kExpMax = 709.0; // saturate instead of overflowing to inf

} // namespace

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

namespace detail {

std::vector<double>& Adjoints::of(const NodePtr& p) {
    auto it = buf.find(p.get());
    if (it == buf.end()) {
        it = buf.emplace(p.get(), std::vector<double>(p->size(), 0.0)).first;
    }
    return it->second;
}

} // namespace detail

using detail::Adjoints;
using detail::Node;
using detail::NodePtr;

// --- Tensor handle ----------------------------------------------------------

Tensor Tensor::wrap(NodePtr n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_data(Shape{}, {v}, requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    check_positive_extents(shape);
    auto n = std::make_shared<Node>();
    n->data.assign(shape_size(shape), v);
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return wrap(std::move(n));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    check_positive_extents(shape);
    if (shape_size(shape) != data.size()) {
        throw DimensionError("data length " + std::to_string(data.size()) +
                             " does not fill shape " + shape_str(shape));
    }
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    return wrap(std::move(n));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                      bool requires_grad) {
    return from_data(Shape{rows, cols}, std::move(data), requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->data.size(); }

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows() on tensor of shape " + shape_str(shape()));
    return shape()[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols() on tensor of shape " + shape_str(shape()));
    return shape()[1];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

double Tensor::value() const {
    if (size() != 1) throw ContractViolation("value() on non-scalar tensor " + shape_str(shape()));
    return node_->data[0];
}

double Tensor::at(std::size_t i) const { return node_->data.at(i); }

double Tensor::at(std::size_t i, std::size_t j) const {
    if (rank() != 2) throw DimensionError("at(i,j) on tensor of shape " + shape_str(shape()));
    return node_->data.at(i * shape()[1] + j);
}

const std::vector<double>& Tensor::data() const { return node_->data; }

std::vector<double>& Tensor::data_mut() {
    if (!node_->is_leaf()) throw ContractViolation("data_mut() on a non-leaf tensor");
    return node_->data;
}

bool Tensor::has_grad() const { return !node_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
    if (node_->grad.empty()) throw ContractViolation("grad requested before backward reached this leaf");
    return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->size(), 0.0); }

Tensor Tensor::detach() const {
    auto n = std::make_shared<Node>();
    n->shape = node_->shape;
    n->data = node_->data;
    n->requires_grad = false;
    return wrap(std::move(n));
}

// --- broadcasting machinery -------------------------------------------------

namespace {

Shape broadcast_shape(const Shape& a, const Shape& b, const char* opname) {
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (da == db || da == 1 || db == 1) {
            out[i] = std::max(da, db);
        } else {
            throw DimensionError(std::string(opname) + ": shapes " + shape_str(a) + " and " +
                                 shape_str(b) + " are not broadcastable");
        }
    }
    return out;
}

// Row-major strides of `in` expressed in the `out` coordinate system,
// with 0 where the input dim is broadcast.
std::vector<std::size_t> bcast_strides(const Shape& in, const Shape& out) {
    std::vector<std::size_t> strides(out.size(), 0);
    std::size_t stride = 1;
    for (std::size_t i = in.size(); i-- > 0;) {
        const std::size_t out_dim = out[i + (out.size() - in.size())];
        strides[i + (out.size() - in.size())] = (in[i] == 1 && out_dim > 1) ? 0 : stride;
        stride *= in[i];
    }
    return strides;
}

// Calls f(out_flat, a_flat, b_flat) over all positions of `out`.
template <class F>
void for_each_bcast(const Shape& out, const std::vector<std::size_t>& sa,
                    const std::vector<std::size_t>& sb, F&& f) {
    const std::size_t total = shape_size(out);
    const std::size_t rank = out.size();
    if (rank == 0) {
        f(0, 0, 0);
        return;
    }
    std::vector<std::size_t> idx(rank, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t o = 0; o < total; ++o) {
        f(o, ia, ib);
        for (std::size_t d = rank; d-- > 0;) {
            ++idx[d];
            ia += sa[d];
            ib += sb[d];
            if (idx[d] < out[d]) break;
            ia -= sa[d] * out[d];
            ib -= sb[d] * out[d];
            idx[d] = 0;
        }
    }
}

template <class FwdF, class DfaF, class DfbF>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, FwdF fwd, DfaF dfa, DfbF dfb) {
    const NodePtr pa = a.node();
    const NodePtr pb = b.node();
    const Shape out_shape = broadcast_shape(pa->shape, pb->shape, name);

    auto n = std::make_shared<Node>();
    n->shape = out_shape;
    n->data.resize(shape_size(out_shape));
    n->requires_grad = pa->requires_grad || pb->requires_grad;

    if (pa->shape == pb->shape) {
        for (std::size_t i = 0; i < n->data.size(); ++i) {
            n->data[i] = fwd(pa->data[i], pb->data[i]);
        }
    } else {
        const auto sa = bcast_strides(pa->shape, out_shape);
        const auto sb = bcast_strides(pb->shape, out_shape);
        for_each_bcast(out_shape, sa, sb, [&](std::size_t o, std::size_t ia, std::size_t ib) {
            n->data[o] = fwd(pa->data[ia], pb->data[ib]);
        });
    }

    if (n->requires_grad) {
        n->parents = {pa, pb};
        const Shape shape = out_shape;
        n->backward = [pa, pb, shape, fwd, dfa, dfb](const std::vector<double>& out_adj,
                                                     Adjoints& adj) {
            const auto sa = bcast_strides(pa->shape, shape);
            const auto sb = bcast_strides(pb->shape, shape);
            std::vector<double>* ga = pa->requires_grad ? &adj.of(pa) : nullptr;
            std::vector<double>* gb = pb->requires_grad ? &adj.of(pb) : nullptr;
            for_each_bcast(shape, sa, sb, [&](std::size_t o, std::size_t ia, std::size_t ib) {
                const double g = out_adj[o];
                if (ga) (*ga)[ia] += g * dfa(pa->data[ia], pb->data[ib]);
                if (gb) (*gb)[ib] += g * dfb(pa->data[ia], pb->data[ib]);
            });
        };
    }
    return Tensor::wrap(std::move(n));
}

// dfdx receives (input value, output value).
template <class FwdF, class BwdF>
Tensor unary_op(const Tensor& x, FwdF fwd, BwdF dfdx) {
    const NodePtr px = x.node();
    auto n = std::make_shared<Node>();
    n->shape = px->shape;
    n->data.resize(px->size());
    n->requires_grad = px->requires_grad;
    for (std::size_t i = 0; i < n->data.size(); ++i) n->data[i] = fwd(px->data[i]);

    if (n->requires_grad) {
        n->parents = {px};
        std::vector<double> out_vals = n->data;
        n->backward = [px, out_vals = std::move(out_vals), dfdx](const std::vector<double>& out_adj,
                                                                 Adjoints& adj) {
            auto& g = adj.of(px);
            for (std::size_t i = 0; i < out_adj.size(); ++i) {
                g[i] += out_adj[i] * dfdx(px->data[i], out_vals[i]);
            }
        };
    }
    return Tensor::wrap(std::move(n));
}

} // namespace

// --- elementwise ops ---------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "mul", [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "div", [](double x, double y) { return x / clamp_mag(y, kDivEps); },
        [](double, double y) { return 1.0 / clamp_mag(y, kDivEps); },
        [](double x, double y) {
            if (std::abs(y) < kDivEps) return 0.0; // forward is constant in y here
            return -x / (y * y);
        });
}

Tensor exp(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::exp(std::min(v, kExpMax)); },
        [](double v, double y) { return v < kExpMax ? y : 0.0; });
}

Tensor log(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::log(std::max(v, kLogEps)); },
        [](double v, double) { return v > kLogEps ? 1.0 / v : 0.0; });
}

Tensor relu(const Tensor& x) {
    return unary_op(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor square(const Tensor& x) {
    return unary_op(
        x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor sqrt(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::sqrt(std::max(v, 0.0)); },
        [](double v, double y) { return v > kLogEps ? 0.5 / y : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
    return unary_op(
        x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor clamp_min(const Tensor& x, double lo) {
    return unary_op(
        x, [lo](double v) { return v > lo ? v : lo; },
        [lo](double v, double) { return v > lo ? 1.0 : 0.0; });
}

// --- matmul / transpose / concat / reshape -----------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    const NodePtr pa = a.node();
    const NodePtr pb = b.node();
    if (pa->shape.size() != 2 || pb->shape.size() != 2) {
        throw DimensionError("matmul requires rank-2 operands, got " + shape_str(pa->shape) +
                             " and " + shape_str(pb->shape));
    }
    const std::size_t m = pa->shape[0], p = pa->shape[1];
    const std::size_t p2 = pb->shape[0], q = pb->shape[1];
    if (p != p2) {
        throw DimensionError("matmul inner dimensions disagree: " + shape_str(pa->shape) + " vs " +
                             shape_str(pb->shape));
    }

    auto n = std::make_shared<Node>();
    n->shape = {m, q};
    n->data.assign(m * q, 0.0);
    n->requires_grad = pa->requires_grad || pb->requires_grad;

    const double* A = pa->data.data();
    const double* B = pb->data.data();
    double* C = n->data.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < p; ++k) {
            const double aik = A[i * p + k];
            if (aik == 0.0) continue;
            const double* brow = B + k * q;
            double* crow = C + i * q;
            for (std::size_t j = 0; j < q; ++j) crow[j] += aik * brow[j];
        }
    }

    if (n->requires_grad) {
        n->parents = {pa, pb};
        n->backward = [pa, pb, m, p, q](const std::vector<double>& out_adj, Adjoints& adj) {
            const double* A = pa->data.data();
            const double* B = pb->data.data();
            const double* G = out_adj.data();
            if (pa->requires_grad) {
                auto& ga = adj.of(pa); // dA = G * B^T
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t k = 0; k < p; ++k) {
                        double s = 0.0;
                        const double* grow = G + i * q;
                        const double* brow = B + k * q;
                        for (std::size_t j = 0; j < q; ++j) s += grow[j] * brow[j];
                        ga[i * p + k] += s;
                    }
                }
            }
            if (pb->requires_grad) {
                auto& gb = adj.of(pb); // dB = A^T * G
                for (std::size_t i = 0; i < m; ++i) {
                    const double* grow = G + i * q;
                    for (std::size_t k = 0; k < p; ++k) {
                        const double aik = A[i * p + k];
                        if (aik == 0.0) continue;
                        double* brow = gb.data() + k * q;
                        for (std::size_t j = 0; j < q; ++j) brow[j] += aik * grow[j];
                    }
                }
            }
        };
    }
    return Tensor::wrap(std::move(n));
}

Tensor transpose(const Tensor& a) {
    const NodePtr pa = a.node();
    if (pa->shape.size() != 2) {
        throw DimensionError("transpose requires rank-2, got " + shape_str(pa->shape));
    }
    const std::size_t r = pa->shape[0], c = pa->shape[1];
    auto n = std::make_shared<Node>();
    n->shape = {c, r};
    n->data.resize(r * c);
    n->requires_grad = pa->requires_grad;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) n->data[j * r + i] = pa->data[i * c + j];
    }
    if (n->requires_grad) {
        n->parents = {pa};
        n->backward = [pa, r, c](const std::vector<double>& out_adj, Adjoints& adj) {
            auto& g = adj.of(pa);
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) g[i * c + j] += out_adj[j * r + i];
            }
        };
    }
    return Tensor::wrap(std::move(n));
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ContractViolation("concat of zero tensors");
    if (axis > 1) throw DimensionError("concat supports axis 0 or 1");
    for (const Tensor& t : parts) {
        if (t.rank() != 2) throw DimensionError("concat requires rank-2 parts, got " + shape_str(t.shape()));
    }
    const std::size_t fixed_axis = 1 - axis;
    const std::size_t fixed = parts[0].shape()[fixed_axis];
    std::size_t total = 0;
    bool any_grad = false;
    for (const Tensor& t : parts) {
        if (t.shape()[fixed_axis] != fixed) {
            throw DimensionError("concat axis " + std::to_string(axis) + ": shape " +
                                 shape_str(t.shape()) + " incompatible with " +
                                 shape_str(parts[0].shape()));
        }
        total += t.shape()[axis];
        any_grad = any_grad || t.requires_grad();
    }

    const std::size_t rows = axis == 0 ? total : fixed;
    const std::size_t cols = axis == 0 ? fixed : total;
    auto n = std::make_shared<Node>();
    n->shape = {rows, cols};
    n->data.resize(rows * cols);
    n->requires_grad = any_grad;

    std::size_t offset = 0;
    for (const Tensor& t : parts) {
        const std::size_t tr = t.shape()[0], tc = t.shape()[1];
        if (axis == 0) {
            std::copy(t.data().begin(), t.data().end(), n->data.begin() + offset * cols);
            offset += tr;
        } else {
            for (std::size_t i = 0; i < tr; ++i) {
                std::copy(t.data().begin() + i * tc, t.data().begin() + (i + 1) * tc,
                          n->data.begin() + i * cols + offset);
            }
            offset += tc;
        }
    }

    if (any_grad) {
        std::vector<NodePtr> ps;
        ps.reserve(parts.size());
        for (const Tensor& t : parts) ps.push_back(t.node());
        n->parents = ps;
        n->backward = [ps, axis, rows, cols](const std::vector<double>& out_adj, Adjoints& adj) {
            std::size_t offset = 0;
            for (const NodePtr& p : ps) {
                const std::size_t tr = p->shape[0], tc = p->shape[1];
                if (p->requires_grad) {
                    auto& g = adj.of(p);
                    if (axis == 0) {
                        for (std::size_t i = 0; i < tr * tc; ++i) g[i] += out_adj[offset * cols + i];
                    } else {
                        for (std::size_t i = 0; i < tr; ++i) {
                            for (std::size_t j = 0; j < tc; ++j) {
                                g[i * tc + j] += out_adj[i * cols + offset + j];
                            }
                        }
                    }
                }
                offset += axis == 0 ? tr : tc;
            }
        };
    }
    return Tensor::wrap(std::move(n));
}

Tensor reshape(const Tensor& x, Shape shape) {
    check_positive_extents(shape);
    const NodePtr px = x.node();
    if (shape_size(shape) != px->size()) {
        throw DimensionError("reshape " + shape_str(px->shape) + " -> " + shape_str(shape) +
                             " changes element count");
    }
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->data = px->data;
    n->requires_grad = px->requires_grad;
    if (n->requires_grad) {
        n->parents = {px};
        n->backward = [px](const std::vector<double>& out_adj, Adjoints& adj) {
            auto& g = adj.of(px);
            for (std::size_t i = 0; i < out_adj.size(); ++i) g[i] += out_adj[i];
        };
    }
    return Tensor::wrap(std::move(n));
}

// --- reductions ---------------------------------------------------------------

namespace {

void check_axis(const Shape& s, std::size_t axis, const char* op) {
    if (axis >= s.size()) {
        throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                             " invalid for shape " + shape_str(s));
    }
}

Shape drop_axis(const Shape& s, std::size_t axis) {
    Shape out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i != axis) out.push_back(s[i]);
    }
    return out;
}

// Decompose flat iteration around `axis` into outer/len/inner blocks.
struct AxisView {
    std::size_t outer = 1, len = 1, inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
    AxisView v;
    for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
    v.len = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
    return v;
}

} // namespace

Tensor sum(const Tensor& x) {
    const NodePtr px = x.node();
    double s = 0.0;
    for (double v : px->data) s += v;
    auto n = std::make_shared<Node>();
    n->shape = {};
    n->data = {s};
    n->requires_grad = px->requires_grad;
    if (n->requires_grad) {
        n->parents = {px};
        n->backward = [px](const std::vector<double>& out_adj, Adjoints& adj) {
            auto& g = adj.of(px);
            for (double& gi : g) gi += out_adj[0];
        };
    }
    return Tensor::wrap(std::move(n));
}

Tensor sum(const Tensor& x, std::size_t axis) {
    const NodePtr px = x.node();
    check_axis(px->shape, axis, "sum");
    const AxisView v = axis_view(px->shape, axis);
    auto n = std::make_shared<Node>();
    n->shape = drop_axis(px->shape, axis);
    n->data.assign(v.outer * v.inner, 0.0);
    n->requires_grad = px->requires_grad;
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t k = 0; k < v.len; ++k) {
            const double* src = px->data.data() + (o * v.len + k) * v.inner;
            double* dst = n->data.data() + o * v.inner;
            for (std::size_t i = 0; i < v.inner; ++i) dst[i] += src[i];
        }
    }
    if (n->requires_grad) {
        n->parents = {px};
        n->backward = [px, v](const std::vector<double>& out_adj, Adjoints& adj) {
            auto& g = adj.of(px);
            for (std::size_t o = 0; o < v.outer; ++o) {
                for (std::size_t k = 0; k < v.len; ++k) {
                    double* dst = g.data() + (o * v.len + k) * v.inner;
                    const double* src = out_adj.data() + o * v.inner;
                    for (std::size_t i = 0; i < v.inner; ++i) dst[i] += src[i];
                }
            }
        };
    }
    return Tensor::wrap(std::move(n));
}

Tensor mean(const Tensor& x) {
    return sum(x) * (1.0 / static_cast<double>(x.size()));
}

Tensor mean(const Tensor& x, std::size_t axis) {
    check_axis(x.shape(), axis, "mean");
    return sum(x, axis) * (1.0 / static_cast<double>(x.shape()[axis]));
}

namespace {

Tensor max_impl(const Tensor& x, std::optional<std::size_t> axis) {
    const NodePtr px = x.node();
    auto n = std::make_shared<Node>();
    n->requires_grad = px->requires_grad;
    std::vector<std::size_t> argmax; // flat input index per output element

    if (!axis) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < px->size(); ++i) {
            if (px->data[i] > px->data[best]) best = i;
        }
        n->shape = {};
        n->data = {px->data[best]};
        argmax = {best};
    } else {
        check_axis(px->shape, *axis, "max");
        const AxisView v = axis_view(px->shape, *axis);
        n->shape = drop_axis(px->shape, *axis);
        n->data.resize(v.outer * v.inner);
        argmax.resize(v.outer * v.inner);
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t i = 0; i < v.inner; ++i) {
                std::size_t best = (o * v.len) * v.inner + i;
                for (std::size_t k = 1; k < v.len; ++k) {
                    const std::size_t idx = (o * v.len + k) * v.inner + i;
                    if (px->data[idx] > px->data[best]) best = idx;
                }
                n->data[o * v.inner + i] = px->data[best];
                argmax[o * v.inner + i] = best;
            }
        }
    }

    if (n->requires_grad) {
        n->parents = {px};
        n->backward = [px, argmax = std::move(argmax)](const std::vector<double>& out_adj,
                                                       Adjoints& adj) {
            auto& g = adj.of(px);
            for (std::size_t i = 0; i < out_adj.size(); ++i) g[argmax[i]] += out_adj[i];
        };
    }
    return Tensor::wrap(std::move(n));
}

} // namespace

Tensor max(const Tensor& x) { return max_impl(x, std::nullopt); }
Tensor max(const Tensor& x, std::size_t axis) { return max_impl(x, axis); }

namespace {

Shape keepdim_shape(const Shape& s, std::size_t axis) {
    Shape out = s;
    out[axis] = 1;
    return out;
}

} // namespace

Tensor sum_keepdim(const Tensor& x, std::size_t axis) {
    check_axis(x.shape(), axis, "sum");
    return reshape(sum(x, axis), keepdim_shape(x.shape(), axis));
}

Tensor max_keepdim(const Tensor& x, std::size_t axis) {
    check_axis(x.shape(), axis, "max");
    return reshape(max(x, axis), keepdim_shape(x.shape(), axis));
}

// --- softmax -------------------------------------------------------------------

Tensor softmax(const Tensor& x, std::size_t axis) {
    const NodePtr px = x.node();
    check_axis(px->shape, axis, "softmax");
    const AxisView v = axis_view(px->shape, axis);

    auto n = std::make_shared<Node>();
    n->shape = px->shape;
    n->data.resize(px->size());
    n->requires_grad = px->requires_grad;

    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t i = 0; i < v.inner; ++i) {
            double m = px->data[(o * v.len) * v.inner + i];
            for (std::size_t k = 1; k < v.len; ++k) {
                m = std::max(m, px->data[(o * v.len + k) * v.inner + i]);
            }
            double z = 0.0;
            for (std::size_t k = 0; k < v.len; ++k) {
                const std::size_t idx = (o * v.len + k) * v.inner + i;
                n->data[idx] = std::exp(px->data[idx] - m);
                z += n->data[idx];
            }
            for (std::size_t k = 0; k < v.len; ++k) n->data[(o * v.len + k) * v.inner + i] /= z;
        }
    }

    if (n->requires_grad) {
        n->parents = {px};
        std::vector<double> y = n->data;
        n->backward = [px, v, y = std::move(y)](const std::vector<double>& out_adj, Adjoints& adj) {
            auto& g = adj.of(px);
            for (std::size_t o = 0; o < v.outer; ++o) {
                for (std::size_t i = 0; i < v.inner; ++i) {
                    double dot = 0.0;
                    for (std::size_t k = 0; k < v.len; ++k) {
                        const std::size_t idx = (o * v.len + k) * v.inner + i;
                        dot += out_adj[idx] * y[idx];
                    }
                    for (std::size_t k = 0; k < v.len; ++k) {
                        const std::size_t idx = (o * v.len + k) * v.inner + i;
                        g[idx] += y[idx] * (out_adj[idx] - dot);
                    }
                }
            }
        };
    }
    return Tensor::wrap(std::move(n));
}

// --- backward pass ---------------------------------------------------------------

void backward(const Tensor& loss) {
    const NodePtr root = loss.node();
    if (!root || root->size() != 1) {
        throw ContractViolation("backward requires a scalar loss, got " +
                                (root ? shape_str(root->shape) : std::string("undefined")));
    }
    if (!root->requires_grad) return;

    // Iterative post-order DFS over requires_grad ancestors; reversed it is a
    // topological order with every node before its parents.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, child] = stack.back();
        if (child < node->parents.size()) {
            Node* p = node->parents[child].get();
            ++child;
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    Adjoints adj;
    adj.buf.emplace(root.get(), std::vector<double>{1.0});

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        auto found = adj.buf.find(node);
        if (found == adj.buf.end()) continue;
        if (node->backward) {
            node->backward(found->second, adj);
        } else if (node->requires_grad) {
            if (node->grad.empty()) node->grad.assign(node->size(), 0.0);
            for (std::size_t i = 0; i < node->size(); ++i) node->grad[i] += found->second[i];
        }
    }
}

// --- gradient checking -------------------------------------------------------------

double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                  const std::vector<Tensor>& xs, double epsilon) {
    if (epsilon < 1e-7 || epsilon > 1e-3) {
        throw ContractViolation("grad_check epsilon must lie in [1e-7, 1e-3]");
    }

    std::vector<Tensor> leaves;
    leaves.reserve(xs.size());
    for (const Tensor& x : xs) {
        leaves.push_back(Tensor::from_data(x.shape(), x.data(), /*requires_grad=*/true));
    }
    Tensor out = f(leaves);
    if (out.size() != 1) {
        throw ContractViolation("grad_check requires a scalar-valued function, got " +
                                shape_str(out.shape()));
    }
    backward(out);

    auto eval = [&](const std::vector<std::vector<double>>& vals) {
        std::vector<Tensor> args;
        args.reserve(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            args.push_back(Tensor::from_data(xs[i].shape(), vals[i]));
        }
        return f(args).value();
    };

    std::vector<std::vector<double>> vals;
    for (const Tensor& x : xs) vals.push_back(x.data());

    double max_err = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        const std::vector<double> analytic = leaves[t].has_grad()
                                                 ? leaves[t].grad()
                                                 : std::vector<double>(xs[t].size(), 0.0);
        for (std::size_t i = 0; i < vals[t].size(); ++i) {
            const double orig = vals[t][i];
            vals[t][i] = orig + epsilon;
            const double hi = eval(vals);
            vals[t][i] = orig - epsilon;
            const double lo = eval(vals);
            vals[t][i] = orig;
            const double numeric = (hi - lo) / (2.0 * epsilon);
            const double err =
                std::abs(analytic[i] - numeric) / (std::abs(analytic[i]) + std::abs(numeric) + 1e-12);
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double epsilon) {
    return grad_check(
        [&f](const std::vector<Tensor>& xs) { return f(xs[0]); }, std::vector<Tensor>{x}, epsilon);
}

} // namespace deepmvc
