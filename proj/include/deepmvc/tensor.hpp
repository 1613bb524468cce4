#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace deepmvc {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

namespace detail {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Per-backward-pass adjoint buffers. Persistent grads live on leaf nodes;
// intermediate adjoints are scoped to one backward() call.
struct Adjoints {
    std::unordered_map<Node*, std::vector<double>> buf;
    std::vector<double>& of(const NodePtr& p);
};

struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad; // leaves only, lazily allocated
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(const std::vector<double>& out_adj, Adjoints& adj)> backward;

    std::size_t size() const { return data.size(); }
    bool is_leaf() const { return parents.empty(); }
};

} // namespace detail

// Dense float64 tensor participating in a define-by-run autodiff graph.
// Value-semantic handle: copies share the underlying node. Data is immutable
// after creation except for leaf parameters (data_mut) and grad buffers.
class Tensor {
public:
    Tensor() = default;

    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    // Row-major rank-2 convenience.
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                         bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t size() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t rows() const;
    std::size_t cols() const;
    bool requires_grad() const;

    double value() const; // size-1 tensors only
    double at(std::size_t i) const;
    double at(std::size_t i, std::size_t j) const;
    const std::vector<double>& data() const;
    std::vector<double>& data_mut(); // leaves only

    bool has_grad() const;
    const std::vector<double>& grad() const;
    void zero_grad();

    // Same data, cut from the graph.
    Tensor detach() const;

    detail::NodePtr node() const { return node_; }
    static Tensor wrap(detail::NodePtr n);

private:
    detail::NodePtr node_;
};

// --- core operations -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b); // denominator magnitude clamped at 1e-12

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x); // input clamped at 1e-12
Tensor relu(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor clamp_min(const Tensor& x, double lo);

Tensor softmax(const Tensor& x, std::size_t axis);

Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, std::size_t axis);
Tensor max(const Tensor& x);
Tensor max(const Tensor& x, std::size_t axis);

// Keeps the reduced axis as extent 1 so the result broadcasts back.
Tensor sum_keepdim(const Tensor& x, std::size_t axis);
Tensor max_keepdim(const Tensor& x, std::size_t axis);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor reshape(const Tensor& x, Shape shape);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator+(const Tensor& a, double s) { return add(a, Tensor::scalar(s)); }
inline Tensor operator+(double s, const Tensor& a) { return add(Tensor::scalar(s), a); }
inline Tensor operator-(const Tensor& a, double s) { return sub(a, Tensor::scalar(s)); }
inline Tensor operator-(double s, const Tensor& a) { return sub(Tensor::scalar(s), a); }
inline Tensor operator*(const Tensor& a, double s) { return mul(a, Tensor::scalar(s)); }
inline Tensor operator*(double s, const Tensor& a) { return mul(Tensor::scalar(s), a); }
inline Tensor operator/(const Tensor& a, double s) { return div(a, Tensor::scalar(s)); }
inline Tensor operator/(double s, const Tensor& a) { return div(Tensor::scalar(s), a); }
inline Tensor operator-(const Tensor& a) { return mul(a, Tensor::scalar(-1.0)); }

// Reverse-mode pass from a scalar loss. Populates grad on every
// requires_grad leaf reachable from it; repeated calls accumulate.
void backward(const Tensor& loss);

// Max relative error between analytic gradients and central differences,
// |a - n| / (|a| + |n| + 1e-12), over all components of all inputs.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double epsilon);
double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                  const std::vector<Tensor>& xs, double epsilon);

} // namespace deepmvc
