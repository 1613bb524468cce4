#include "deepmvc/losses.hpp"

#include "deepmvc/errors.hpp"

#include <cmath>
#include <string>

namespace deepmvc {

namespace {

constexpr double kNormFloor = 1e-12;
constexpr double kMaskedOut = -1e9; // additive mask removing j == i from negatives

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(what) + ": shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()) + " differ");
    }
}

Tensor row_normalize(const Tensor& z) {
    Tensor norms = sqrt(sum_keepdim(square(z), 1)); // n x 1
    return z / clamp_min(norms, kNormFloor);
}

void check_no_zero_rows(const Tensor& z, const char* what) {
    const std::size_t n = z.rows(), d = z.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = z.at(i, j);
            s += v * v;
        }
        if (s == 0.0) {
            throw DegenerateInputError(std::string(what) + ": row " + std::to_string(i) +
                                       " has zero norm");
        }
    }
}

void check_simplex_rows(const Tensor& z, const char* what) {
    const std::size_t n = z.rows(), d = z.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = z.at(i, j);
            if (v < -1e-6) {
                throw ContractViolation(std::string(what) + ": row " + std::to_string(i) +
                                        " has negative entry " + std::to_string(v));
            }
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-6) {
            throw ContractViolation(std::string(what) + ": row " + std::to_string(i) +
                                    " sums to " + std::to_string(s) + ", not 1");
        }
    }
}

// Diagonal additive mask; constant, shared by all pairs of one call.
Tensor diag_mask(std::size_t n) {
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m[i * n + i] = kMaskedOut;
    return Tensor::matrix(n, n, std::move(m));
}

// Row-wise logsumexp of an n x c matrix, returned as shape {n}.
Tensor logsumexp_rows(const Tensor& x) {
    Tensor m = max_keepdim(x, 1).detach();
    Tensor s = log(sum(exp(x - m), 1));
    return s + reshape(m, Shape{x.rows()});
}

} // namespace

Tensor reconstruction_loss(const std::vector<Tensor>& x, const std::vector<Tensor>& x_hat) {
    if (x.empty() || x.size() != x_hat.size()) {
        throw DimensionError("reconstruction_loss: " + std::to_string(x.size()) + " inputs vs " +
                             std::to_string(x_hat.size()) + " reconstructions");
    }
    const std::size_t n = x[0].rows();
    Tensor acc = Tensor::scalar(0.0);
    for (std::size_t v = 0; v < x.size(); ++v) {
        check_same_shape(x[v], x_hat[v], "reconstruction_loss");
        if (x[v].rows() != n) {
            throw DimensionError("reconstruction_loss: views disagree on instance count");
        }
        acc = acc + sum(square(x[v] - x_hat[v]));
    }
    return acc * (1.0 / (static_cast<double>(n) * static_cast<double>(x.size())));
}

Tensor pairwise_cosine_logits(const Tensor& z_u, const Tensor& z_v, double tau) {
    if (tau <= 0.0) throw ContractViolation("pairwise_cosine_logits: tau must be positive");
    check_same_shape(z_u, z_v, "pairwise_cosine_logits");
    check_no_zero_rows(z_u, "pairwise_cosine_logits");
    check_no_zero_rows(z_v, "pairwise_cosine_logits");
    return matmul(row_normalize(z_u), transpose(row_normalize(z_v))) * (1.0 / tau);
}

Tensor contrastive_loss(const std::vector<Tensor>& z, double tau) {
    const std::size_t V = z.size();
    if (V < 2) throw ContractViolation("contrastive_loss needs V >= 2 views");
    if (tau <= 0.0 || tau > 10.0) throw ContractViolation("contrastive_loss: tau outside (0, 10]");
    const std::size_t n = z[0].rows();
    if (n < 2) throw ContractViolation("contrastive_loss needs n >= 2 (negative set empty)");
    for (const Tensor& t : z) check_same_shape(z[0], t, "contrastive_loss");

    const double inv_tau = 1.0 / tau;
    const Tensor mask = diag_mask(n);

    std::vector<Tensor> zn, same_masked;
    zn.reserve(V);
    same_masked.reserve(V);
    for (const Tensor& t : z) zn.push_back(row_normalize(t));
    for (std::size_t v = 0; v < V; ++v) {
        same_masked.push_back(matmul(zn[v], transpose(zn[v])) * inv_tau + mask);
    }

    Tensor acc = Tensor::scalar(0.0);
    for (std::size_t u = 0; u < V; ++u) {
        for (std::size_t v = u + 1; v < V; ++v) {
            Tensor cross = matmul(zn[u], transpose(zn[v])) * inv_tau;
            Tensor positives = sum(zn[u] * zn[v], 1) * inv_tau; // diag of cross, shape {n}
            Tensor cross_m = cross + mask;
            Tensor cross_mt = transpose(cross) + mask;
            // Ordered (u,v) and (v,u) share positives; negatives differ only in
            // which cross-view matrix supplies the j != i column.
            Tensor lse_uv = logsumexp_rows(concat({cross_m, same_masked[u], same_masked[v]}, 1));
            Tensor lse_vu = logsumexp_rows(concat({cross_mt, same_masked[v], same_masked[u]}, 1));
            acc = acc + sum(lse_uv - positives) + sum(lse_vu - positives);
        }
    }
    const double denom = static_cast<double>(n) * static_cast<double>(V) * static_cast<double>(V - 1);
    return acc * (1.0 / denom);
}

Tensor joint_distribution(const Tensor& z_u, const Tensor& z_v) {
    check_same_shape(z_u, z_v, "joint_distribution");
    check_simplex_rows(z_u, "joint_distribution");
    check_simplex_rows(z_v, "joint_distribution");
    const double n = static_cast<double>(z_u.rows());
    Tensor raw = matmul(transpose(z_u), z_v) * (1.0 / n);
    return (raw + transpose(raw)) * 0.5;
}

Tensor mi_entropy_loss(const Tensor& P, double lambda) {
    if (P.rank() != 2 || P.rows() != P.cols()) {
        throw ContractViolation("mi_entropy_loss: P must be square, got " + shape_str(P.shape()));
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ContractViolation("mi_entropy_loss: lambda must be finite and non-negative");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double v = P.at(i);
        if (v < -1e-9) throw ContractViolation("mi_entropy_loss: negative entry in P");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw ContractViolation("mi_entropy_loss: P sums to " + std::to_string(total) + ", not 1");
    }

    Tensor marg_u = reshape(sum(P, 1), Shape{P.rows(), 1}); // row sums
    Tensor marg_v = reshape(sum(P, 0), Shape{1, P.cols()}); // column sums
    Tensor log_ratio = log(P) - (log(marg_u) + log(marg_v)) * lambda;
    return -sum(P * log_ratio);
}

Tensor mi_loss_all_pairs(const std::vector<Tensor>& z, double lambda) {
    const std::size_t V = z.size();
    if (V < 2) throw ContractViolation("mi_loss_all_pairs needs V >= 2 views");
    Tensor acc = Tensor::scalar(0.0);
    std::size_t pairs = 0;
    for (std::size_t u = 0; u < V; ++u) {
        for (std::size_t v = u + 1; v < V; ++v) {
            acc = acc + mi_entropy_loss(joint_distribution(z[u], z[v]), lambda);
            ++pairs;
        }
    }
    return acc * (1.0 / static_cast<double>(pairs));
}

Tensor total_loss(const LossWeights& w, const Tensor& l_sv, const Tensor& l_mv, const Tensor& l_cm) {
    if (w.sv < 0.0 || w.mv < 0.0 || w.cm < 0.0 || !std::isfinite(w.sv + w.mv + w.cm)) {
        throw ContractViolation("total_loss: weights must be finite and non-negative");
    }
    Tensor acc = Tensor::scalar(0.0);
    if (l_sv.defined()) acc = acc + l_sv * w.sv;
    if (l_mv.defined()) acc = acc + l_mv * w.mv;
    if (l_cm.defined()) acc = acc + l_cm * w.cm;
    return acc;
}

} // namespace deepmvc
