#include "deepmvc/clustering.hpp"

#include "deepmvc/errors.hpp"
#include "deepmvc/nets.hpp"
#include "deepmvc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace deepmvc {

namespace {

constexpr double kRatioFloor = 1e-9; // empty soft clusters appear at init

// Normalized Cauchy-Schwarz pair sum shared by l1 (memberships) and l3
// (simplex-corner exponentials): binom(k,2)^-1 sum_{a<b} A_ab / sqrt(A_aa A_bb).
Tensor cs_divergence(const Tensor& memberships, const Tensor& kernel) {
    const std::size_t k = memberships.cols();
    Tensor km = matmul(kernel, memberships);                  // n x k
    Tensor raw = matmul(transpose(memberships), km);          // k x k
    // The pair-mass matrix is mathematically symmetric; enforcing it keeps
    // the value stable under cluster relabeling.
    Tensor pair_mass = (raw + transpose(raw)) * 0.5;
    Tensor self_mass = sum(memberships * km, 0);              // {k}, the diagonal
    Tensor col = reshape(self_mass, Shape{k, 1});
    Tensor row = reshape(self_mass, Shape{1, k});
    Tensor denom = clamp_min(sqrt(col * row), kRatioFloor);

    std::vector<double> upper(k * k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) upper[a * k + b] = 1.0;
    }
    const double pairs = static_cast<double>(k * (k - 1)) / 2.0;
    return sum(pair_mass / denom * Tensor::matrix(k, k, std::move(upper))) * (1.0 / pairs);
}

} // namespace

DdcParams init_ddc(std::size_t fused_dim, std::size_t k, std::uint64_t seed,
                   std::size_t hidden_dim) {
    MlpParams both = init_params(MlpSpec{{fused_dim, hidden_dim, k}}, seed);
    DdcParams p;
    p.w1 = both.weights[0];
    p.b1 = both.biases[0];
    p.w2 = both.weights[1];
    p.b2 = both.biases[1];
    return p;
}

std::pair<Tensor, Tensor> ddc_forward(const DdcParams& params, const Tensor& z_fused) {
    if (z_fused.rank() != 2 || z_fused.cols() != params.w1.rows()) {
        throw DimensionError("ddc_forward input " + shape_str(z_fused.shape()) +
                             " does not match hidden layer " + shape_str(params.w1.shape()));
    }
    Tensor hidden = relu(matmul(z_fused, params.w1) + params.b1);
    Tensor alpha = softmax(matmul(hidden, params.w2) + params.b2, 1);
    return {hidden, alpha};
}

double kernel_bandwidth(const Tensor& hidden) {
    const std::size_t n = hidden.rows(), d = hidden.cols();
    if (n < 2) throw ContractViolation("kernel_bandwidth needs n >= 2 hidden rows");
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = hidden.at(i, c) - hidden.at(j, c);
                s += diff * diff;
            }
            dists.push_back(std::sqrt(s));
        }
    }
    const std::size_t mid = (dists.size() - 1) / 2; // lower median for even counts
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    const double sigma = 0.15 * dists[mid];
    if (sigma == 0.0) {
        throw DegenerateInputError("kernel_bandwidth: all hidden representations identical");
    }
    return sigma;
}

Tensor gaussian_kernel(const Tensor& hidden, double sigma) {
    if (!(sigma > 0.0)) throw ContractViolation("gaussian_kernel: sigma must be positive");
    Tensor rowsq = sum_keepdim(square(hidden), 1); // n x 1
    Tensor cross = matmul(hidden, transpose(hidden));
    Tensor dist_sq = clamp_min(rowsq + transpose(rowsq) - 2.0 * cross, 0.0);
    return exp(dist_sq * (-1.0 / (2.0 * sigma * sigma)));
}

Tensor DdcLossTerms::sum() const { return l1 + l2 + l3; }

DdcLossTerms ddc_loss(const Tensor& alpha, const Tensor& hidden, double sigma) {
    const std::size_t n = alpha.rows(), k = alpha.cols();
    if (k < 2) throw ContractViolation("ddc_loss needs k >= 2 clusters");
    if (n < 2) throw ContractViolation("ddc_loss needs n >= 2 instances");
    if (hidden.rows() != n) {
        throw DimensionError("ddc_loss: alpha " + shape_str(alpha.shape()) + " vs hidden " +
                             shape_str(hidden.shape()));
    }
    if (sigma < 0.0) sigma = kernel_bandwidth(hidden.detach());

    Tensor kappa = gaussian_kernel(hidden, sigma);
    DdcLossTerms out;
    out.l1 = cs_divergence(alpha, kappa);

    // sum_{i<j} a_i . a_j = (||sum_i a_i||^2 - sum_i ||a_i||^2) / 2
    Tensor col_sums = sum(alpha, 0);
    Tensor cross_mass = sum(square(col_sums)) - sum(square(alpha));
    out.l2 = cross_mass * (1.0 / (static_cast<double>(n) * static_cast<double>(n - 1)));

    // m_ia = exp(-||alpha_i - e_a||^2) = exp(-(||alpha_i||^2 + 1 - 2 alpha_ia))
    Tensor alpha_sq = sum_keepdim(square(alpha), 1);
    Tensor corners = exp(-1.0 * (alpha_sq + 1.0 - 2.0 * alpha));
    out.l3 = cs_divergence(corners, kappa);
    return out;
}

std::vector<int> harden(const Tensor& alpha) {
    const std::size_t n = alpha.rows(), k = alpha.cols();
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c) {
            if (alpha.at(i, c) > alpha.at(i, best)) best = c;
        }
        labels[i] = static_cast<int>(best);
    }
    return labels;
}

KmeansResult kmeans(const Tensor& x, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
    const std::size_t n = x.rows(), d = x.cols();
    if (n < k) {
        throw ContractViolation("kmeans: n = " + std::to_string(n) + " < k = " + std::to_string(k));
    }
    if (k == 0) throw ContractViolation("kmeans: k must be positive");

    const std::vector<double>& data = x.data();
    auto dist_sq = [&](std::size_t i, const double* c) {
        double s = 0.0;
        const double* row = data.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = row[j] - c[j];
            s += diff * diff;
        }
        return s;
    };

    // k-means++ seeding
    Rng rng(seed);
    std::vector<double> centroids(k * d);
    std::vector<double> best_d(n, std::numeric_limits<double>::max());
    {
        const std::size_t first = rng.uniform_index(n);
        std::copy_n(data.begin() + first * d, d, centroids.begin());
        for (std::size_t c = 1; c < k; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                best_d[i] = std::min(best_d[i], dist_sq(i, centroids.data() + (c - 1) * d));
                total += best_d[i];
            }
            std::size_t chosen = 0;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double acc = 0.0;
                chosen = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += best_d[i];
                    if (acc >= target) {
                        chosen = i;
                        break;
                    }
                }
            } else {
                chosen = rng.uniform_index(n); // all points identical to some centroid
            }
            std::copy_n(data.begin() + chosen * d, d, centroids.begin() + c * d);
        }
    }

    KmeansResult res;
    res.labels.assign(n, -1);
    std::vector<int> prev(n, -2);
    std::vector<double> sums(k * d);
    std::vector<std::size_t> counts(k);

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_val = dist_sq(i, centroids.data());
            for (std::size_t c = 1; c < k; ++c) {
                const double v = dist_sq(i, centroids.data() + c * d);
                if (v < best_val) {
                    best_val = v;
                    best = c;
                }
            }
            res.labels[i] = static_cast<int>(best);
            inertia += best_val;
        }
        res.inertia = inertia;
        res.inertia_trajectory.push_back(inertia);
        if (res.labels == prev) break;
        prev = res.labels;

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(res.labels[i]);
            ++counts[c];
            for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += data[i * d + j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Re-seed an empty cluster on the point farthest from its centroid.
                std::size_t far = 0;
                double far_val = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double v =
                        dist_sq(i, centroids.data() + static_cast<std::size_t>(res.labels[i]) * d);
                    if (v > far_val) {
                        far_val = v;
                        far = i;
                    }
                }
                std::copy_n(data.begin() + far * d, d, centroids.begin() + c * d);
            } else {
                for (std::size_t j = 0; j < d; ++j) {
                    centroids[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
                }
            }
        }
    }

    std::vector<double> onehot(n * k, 0.0);
    for (std::size_t i = 0; i < n; ++i) onehot[i * k + static_cast<std::size_t>(res.labels[i])] = 1.0;
    res.alpha = Tensor::matrix(n, k, std::move(onehot));
    res.centroids = Tensor::matrix(k, d, std::move(centroids));
    return res;
}

} // namespace deepmvc
