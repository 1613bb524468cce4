#pragma once

#include "deepmvc/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace deepmvc {

// n instances observed through V views. Values are stored as float32 to
// match the MVD container exactly, so save -> load round-trips bit-exactly.
struct MultiViewDataset {
    std::string name;
    std::size_t n = 0;
    std::vector<std::size_t> dims;          // d_v per view
    std::vector<std::vector<float>> views;  // row-major n x d_v each
    std::vector<std::uint32_t> labels;      // empty when absent
    std::uint32_t k = 0;

    std::size_t view_count() const { return views.size(); }
    bool has_labels() const { return !labels.empty(); }

    Tensor view_tensor(std::size_t v) const;
    Tensor view_rows(std::size_t v, const std::vector<std::size_t>& rows) const;
    // Restriction to the first V views (labels kept).
    MultiViewDataset prefix_views(std::size_t V) const;
};

// Gaussian blobs around per-view uniform centers with minimum separation
// 4 * cluster_sigma, clipped to [0,1]. Labels are balanced unless
// imbalance_ratio > 1 (largest/smallest class size ratio). view_kv, when
// given, draws only k_v distinct centers for view v (classes share centers
// via label mod k_v), making per-view clusterability controllable.
MultiViewDataset generate_blobs(std::size_t n, std::size_t V, std::size_t k, std::size_t dim,
                                double cluster_sigma, std::uint64_t seed,
                                double imbalance_ratio = 1.0,
                                std::vector<std::size_t> view_kv = {});

// Two views: the original rows, and a same-class partner row (never the
// instance itself when alternatives exist) with N(0, noise_sigma^2) noise.
MultiViewDataset generate_random_pairing(const Tensor& base, const std::vector<std::uint32_t>& labels,
                                         std::uint32_t k, double noise_sigma, std::uint64_t seed);

// One view per grid cell of each H x W image, flattened row-major; the four
// corner patches are dropped when requested (4x4 grid -> 12 views).
MultiViewDataset generate_patched(const Tensor& images, std::size_t H, std::size_t W,
                                  std::size_t grid_rows, std::size_t grid_cols, bool drop_corners,
                                  std::uint64_t seed,
                                  std::vector<std::uint32_t> labels = {}, std::uint32_t k = 0);

// Exact inverse of generate_patched when no corners were dropped.
Tensor reassemble_patches(const MultiViewDataset& ds, std::size_t H, std::size_t W,
                          std::size_t grid_rows, std::size_t grid_cols);

// Appends one iid Uniform[0,1] view; labels untouched.
MultiViewDataset append_uninformative_view(const MultiViewDataset& ds, std::size_t dim,
                                           std::uint64_t seed);

// (x - min) / (max - min) over the whole view.
std::vector<float> normalize_view(const std::vector<float>& x);
void normalize_views(MultiViewDataset& ds);

void save_mvd(const MultiViewDataset& ds, const std::string& path);
MultiViewDataset load_mvd(const std::string& path);

// One numeric CSV per view; optional single-column labels CSV.
MultiViewDataset load_csv_views(const std::vector<std::string>& view_paths,
                                const std::string& labels_path = "", std::uint32_t k = 0);

} // namespace deepmvc
