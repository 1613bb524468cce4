#include "deepmvc/dataset.hpp"

#include "deepmvc/errors.hpp"
#include "deepmvc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace deepmvc {

namespace {

float clip01(double v) { return static_cast<float>(std::min(1.0, std::max(0.0, v))); }

std::vector<double> to_double(const std::vector<float>& v) {
    return std::vector<double>(v.begin(), v.end());
}

// Class sizes for an imbalance ratio r: weights interpolate 1..r, rounded by
// largest remainder. r = 1 gives the balanced floor/ceil split.
std::vector<std::size_t> class_sizes(std::size_t n, std::size_t k, double ratio) {
    if (ratio < 1.0) throw ContractViolation("imbalance_ratio must be >= 1");
    std::vector<double> w(k);
    for (std::size_t c = 0; c < k; ++c) {
        w[c] = k == 1 ? 1.0 : 1.0 + (ratio - 1.0) * static_cast<double>(c) / static_cast<double>(k - 1);
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<std::size_t> sizes(k);
    std::vector<std::pair<double, std::size_t>> rem(k);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const double exact = static_cast<double>(n) * w[c] / total;
        sizes[c] = static_cast<std::size_t>(exact);
        rem[c] = {exact - static_cast<double>(sizes[c]), c};
        assigned += sizes[c];
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[rem[i % k].second];
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] == 0) throw GenerationError("imbalance ratio leaves class " + std::to_string(c) + " empty");
    }
    return sizes;
}

} // namespace

Tensor MultiViewDataset::view_tensor(std::size_t v) const {
    return Tensor::matrix(n, dims[v], to_double(views[v]));
}

Tensor MultiViewDataset::view_rows(std::size_t v, const std::vector<std::size_t>& rows) const {
    const std::size_t d = dims[v];
    std::vector<double> out;
    out.reserve(rows.size() * d);
    for (std::size_t r : rows) {
        for (std::size_t j = 0; j < d; ++j) out.push_back(views[v][r * d + j]);
    }
    return Tensor::matrix(rows.size(), d, std::move(out));
}

MultiViewDataset MultiViewDataset::prefix_views(std::size_t V) const {
    if (V == 0 || V > views.size()) {
        throw ContractViolation("prefix_views: V = " + std::to_string(V) + " outside [1, " +
                                std::to_string(views.size()) + "]");
    }
    MultiViewDataset out = *this;
    out.views.resize(V);
    out.dims.resize(V);
    return out;
}

MultiViewDataset generate_blobs(std::size_t n, std::size_t V, std::size_t k, std::size_t dim,
                                double cluster_sigma, std::uint64_t seed, double imbalance_ratio,
                                std::vector<std::size_t> view_kv) {
    if (n < k * V) throw ContractViolation("generate_blobs needs n >= k*V");
    if (k == 0 || V == 0 || dim == 0) throw ContractViolation("generate_blobs: zero k/V/dim");
    if (view_kv.empty()) view_kv.assign(V, k);
    if (view_kv.size() != V) throw ContractViolation("generate_blobs: view_kv length != V");
    for (std::size_t kv : view_kv) {
        if (kv == 0 || kv > k) throw ContractViolation("generate_blobs: k_v outside [1, k]");
    }

    Rng rng(seed);
    const double min_sep = 4.0 * cluster_sigma;

    // Per-view centers with rejection sampling for the separation constraint.
    std::vector<std::vector<double>> centers(V);
    std::size_t attempts = 0;
    for (std::size_t v = 0; v < V; ++v) {
        const std::size_t kv = view_kv[v];
        centers[v].resize(kv * dim);
        for (std::size_t c = 0; c < kv; ++c) {
            while (true) {
                if (++attempts > 1000 + n) {
                    throw GenerationError("center separation " + std::to_string(min_sep) +
                                          " unattainable after 1000 tries");
                }
                for (std::size_t j = 0; j < dim; ++j) centers[v][c * dim + j] = rng.uniform();
                bool ok = true;
                for (std::size_t p = 0; p < c && ok; ++p) {
                    double dist = 0.0;
                    for (std::size_t j = 0; j < dim; ++j) {
                        const double diff = centers[v][c * dim + j] - centers[v][p * dim + j];
                        dist += diff * diff;
                    }
                    ok = std::sqrt(dist) >= min_sep;
                }
                if (ok) break;
            }
        }
    }

    MultiViewDataset ds;
    ds.name = "blobs";
    ds.n = n;
    ds.k = static_cast<std::uint32_t>(k);
    ds.labels.reserve(n);
    if (imbalance_ratio == 1.0) {
        for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<std::uint32_t>(i % k));
    } else {
        const auto sizes = class_sizes(n, k, imbalance_ratio);
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t i = 0; i < sizes[c]; ++i) ds.labels.push_back(static_cast<std::uint32_t>(c));
        }
    }

    ds.dims.assign(V, dim);
    ds.views.assign(V, std::vector<float>(n * dim));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t v = 0; v < V; ++v) {
            const std::size_t c = ds.labels[i] % view_kv[v];
            for (std::size_t j = 0; j < dim; ++j) {
                const double val = centers[v][c * dim + j] + rng.normal(0.0, cluster_sigma);
                ds.views[v][i * dim + j] = clip01(val);
            }
        }
    }
    return ds;
}

MultiViewDataset generate_random_pairing(const Tensor& base, const std::vector<std::uint32_t>& labels,
                                         std::uint32_t k, double noise_sigma, std::uint64_t seed) {
    const std::size_t n = base.rows(), d = base.cols();
    if (labels.size() != n) throw DimensionError("generate_random_pairing: labels length != n");
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= k) throw ContractViolation("generate_random_pairing: label out of range");
        members[labels[i]].push_back(i);
    }
    for (std::uint32_t c = 0; c < k; ++c) {
        if (members[c].size() == 1) {
            throw ContractViolation("generate_random_pairing: class " + std::to_string(c) +
                                    " is a singleton");
        }
    }

    Rng rng(seed);
    MultiViewDataset ds;
    ds.name = "random_pairing";
    ds.n = n;
    ds.k = k;
    ds.labels = labels;
    ds.dims = {d, d};
    ds.views.assign(2, std::vector<float>(n * d));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) ds.views[0][i * d + j] = clip01(base.at(i, j));
        const auto& cls = members[labels[i]];
        std::size_t partner = i;
        while (partner == i) partner = cls[rng.uniform_index(cls.size())];
        for (std::size_t j = 0; j < d; ++j) {
            ds.views[1][i * d + j] = clip01(base.at(partner, j) + rng.normal(0.0, noise_sigma));
        }
    }
    return ds;
}

MultiViewDataset generate_patched(const Tensor& images, std::size_t H, std::size_t W,
                                  std::size_t grid_rows, std::size_t grid_cols, bool drop_corners,
                                  std::uint64_t /*seed*/, std::vector<std::uint32_t> labels,
                                  std::uint32_t k) {
    const std::size_t n = images.rows();
    if (images.cols() != H * W) {
        throw DimensionError("generate_patched: image width " + std::to_string(images.cols()) +
                             " != H*W = " + std::to_string(H * W));
    }
    if (grid_rows == 0 || grid_cols == 0 || H % grid_rows != 0 || W % grid_cols != 0) {
        throw DimensionError("generate_patched: " + std::to_string(H) + "x" + std::to_string(W) +
                             " not divisible by " + std::to_string(grid_rows) + "x" +
                             std::to_string(grid_cols) + " grid");
    }
    const std::size_t ph = H / grid_rows, pw = W / grid_cols;

    MultiViewDataset ds;
    ds.name = "patched";
    ds.n = n;
    ds.labels = std::move(labels);
    ds.k = k;
    for (std::size_t gr = 0; gr < grid_rows; ++gr) {
        for (std::size_t gc = 0; gc < grid_cols; ++gc) {
            const bool corner = (gr == 0 || gr == grid_rows - 1) && (gc == 0 || gc == grid_cols - 1);
            if (drop_corners && corner) continue;
            std::vector<float> view(n * ph * pw);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t py = 0; py < ph; ++py) {
                    for (std::size_t px = 0; px < pw; ++px) {
                        const std::size_t src = (gr * ph + py) * W + gc * pw + px;
                        view[i * ph * pw + py * pw + px] = static_cast<float>(images.at(i, src));
                    }
                }
            }
            ds.views.push_back(std::move(view));
            ds.dims.push_back(ph * pw);
        }
    }
    return ds;
}

Tensor reassemble_patches(const MultiViewDataset& ds, std::size_t H, std::size_t W,
                          std::size_t grid_rows, std::size_t grid_cols) {
    if (ds.view_count() != grid_rows * grid_cols) {
        throw DimensionError("reassemble_patches: " + std::to_string(ds.view_count()) +
                             " views cannot fill a " + std::to_string(grid_rows) + "x" +
                             std::to_string(grid_cols) + " grid");
    }
    const std::size_t ph = H / grid_rows, pw = W / grid_cols;
    std::vector<double> out(ds.n * H * W);
    std::size_t v = 0;
    for (std::size_t gr = 0; gr < grid_rows; ++gr) {
        for (std::size_t gc = 0; gc < grid_cols; ++gc, ++v) {
            for (std::size_t i = 0; i < ds.n; ++i) {
                for (std::size_t py = 0; py < ph; ++py) {
                    for (std::size_t px = 0; px < pw; ++px) {
                        out[i * H * W + (gr * ph + py) * W + gc * pw + px] =
                            ds.views[v][i * ph * pw + py * pw + px];
                    }
                }
            }
        }
    }
    return Tensor::matrix(ds.n, H * W, std::move(out));
}

MultiViewDataset append_uninformative_view(const MultiViewDataset& ds, std::size_t dim,
                                           std::uint64_t seed) {
    MultiViewDataset out = ds;
    Rng rng(seed);
    std::vector<float> view(ds.n * dim);
    for (float& v : view) v = static_cast<float>(rng.uniform());
    out.views.push_back(std::move(view));
    out.dims.push_back(dim);
    return out;
}

std::vector<float> normalize_view(const std::vector<float>& x) {
    if (x.empty()) throw ContractViolation("normalize_view: empty view");
    float lo = x[0], hi = x[0];
    for (float v : x) {
        if (!std::isfinite(v)) throw ContractViolation("normalize_view: non-finite entry");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) throw DegenerateInputError("normalize_view: constant view (min == max)");
    std::vector<float> out(x.size());
    const double range = static_cast<double>(hi) - static_cast<double>(lo);
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = static_cast<float>((static_cast<double>(x[i]) - lo) / range);
    }
    return out;
}

void normalize_views(MultiViewDataset& ds) {
    for (auto& v : ds.views) v = normalize_view(v);
}

// --- MVD container -----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'M', 'V', 'D', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>((v >> 8) & 0xff),
                                static_cast<unsigned char>((v >> 16) & 0xff),
                                static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& os, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(os, bits);
}

struct Reader {
    std::ifstream in;
    std::size_t offset = 0;
    std::string path;

    void need(std::size_t bytes, const char* what) {
        if (!in.good()) fail(what);
        (void)bytes;
    }

    [[noreturn]] void fail(const std::string& what) {
        throw FormatError(path + ": " + what + " at byte offset " + std::to_string(offset));
    }

    std::uint32_t u32(const char* what) {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (in.gcount() != 4) fail(std::string("truncated ") + what);
        offset += 4;
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    float f32(const char* what) {
        const std::uint32_t bits = u32(what);
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }

    std::uint8_t u8(const char* what) {
        char c;
        in.read(&c, 1);
        if (in.gcount() != 1) fail(std::string("truncated ") + what);
        offset += 1;
        return static_cast<std::uint8_t>(c);
    }
};

} // namespace

void save_mvd(const MultiViewDataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError(path + ": cannot open for writing");
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(ds.n));
    put_u32(os, static_cast<std::uint32_t>(ds.view_count()));
    for (std::size_t v = 0; v < ds.view_count(); ++v) {
        put_u32(os, static_cast<std::uint32_t>(ds.dims[v]));
        for (float f : ds.views[v]) put_f32(os, f);
    }
    os.put(ds.has_labels() ? 1 : 0);
    if (ds.has_labels()) {
        put_u32(os, ds.k);
        for (std::uint32_t l : ds.labels) put_u32(os, l);
    }
    if (!os) throw FormatError(path + ": write failed");
}

MultiViewDataset load_mvd(const std::string& path) {
    Reader r;
    r.path = path;
    r.in.open(path, std::ios::binary);
    if (!r.in) throw FormatError(path + ": cannot open");

    char magic[4];
    r.in.read(magic, 4);
    if (r.in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        r.fail("bad magic (expected 'MVD1')");
    }
    r.offset = 4;
    const std::uint32_t version = r.u32("version");
    if (version != kVersion) r.fail("unsupported version " + std::to_string(version));

    MultiViewDataset ds;
    ds.n = r.u32("instance count");
    const std::uint32_t V = r.u32("view count");
    for (std::uint32_t v = 0; v < V; ++v) {
        const std::uint32_t d = r.u32("view dim");
        if (d == 0) r.fail("zero view dim");
        std::vector<float> view(static_cast<std::size_t>(ds.n) * d);
        for (float& f : view) f = r.f32("view data");
        ds.dims.push_back(d);
        ds.views.push_back(std::move(view));
    }
    const std::uint8_t has_labels = r.u8("label flag");
    if (has_labels > 1) r.fail("label flag must be 0 or 1");
    if (has_labels) {
        ds.k = r.u32("cluster count");
        ds.labels.resize(ds.n);
        for (auto& l : ds.labels) {
            l = r.u32("label");
            if (l >= ds.k) r.fail("label " + std::to_string(l) + " >= k = " + std::to_string(ds.k));
        }
    }
    char extra;
    r.in.read(&extra, 1);
    if (r.in.gcount() != 0) r.fail("trailing bytes after dataset");
    return ds;
}

MultiViewDataset load_csv_views(const std::vector<std::string>& view_paths,
                                const std::string& labels_path, std::uint32_t k) {
    if (view_paths.empty()) throw ContractViolation("load_csv_views: no view files");
    MultiViewDataset ds;
    ds.name = "csv";
    for (const std::string& path : view_paths) {
        std::ifstream in(path);
        if (!in) throw FormatError(path + ": cannot open");
        std::vector<float> values;
        std::size_t cols = 0, row = 0;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ++row;
            std::stringstream ss(line);
            std::string cell;
            std::size_t c = 0;
            while (std::getline(ss, cell, ',')) {
                try {
                    values.push_back(std::stof(cell));
                } catch (const std::exception&) {
                    throw FormatError(path + ": line " + std::to_string(row) +
                                      ": not a number: '" + cell + "'");
                }
                ++c;
            }
            if (cols == 0) cols = c;
            if (c != cols) {
                throw FormatError(path + ": line " + std::to_string(row) + " has " +
                                  std::to_string(c) + " columns, expected " + std::to_string(cols));
            }
        }
        if (cols == 0) throw FormatError(path + ": empty file");
        const std::size_t rows = values.size() / cols;
        if (ds.views.empty()) {
            ds.n = rows;
        } else if (rows != ds.n) {
            throw FormatError(path + ": " + std::to_string(rows) + " rows, expected " +
                              std::to_string(ds.n));
        }
        ds.views.push_back(std::move(values));
        ds.dims.push_back(cols);
    }

    if (!labels_path.empty()) {
        std::ifstream in(labels_path);
        if (!in) throw FormatError(labels_path + ": cannot open");
        std::string line;
        std::uint32_t maxl = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                const long l = std::stol(line);
                if (l < 0) throw FormatError(labels_path + ": negative label");
                ds.labels.push_back(static_cast<std::uint32_t>(l));
                maxl = std::max(maxl, ds.labels.back());
            } catch (const FormatError&) {
                throw;
            } catch (const std::exception&) {
                throw FormatError(labels_path + ": not an integer label: '" + line + "'");
            }
        }
        if (ds.labels.size() != ds.n) {
            throw FormatError(labels_path + ": " + std::to_string(ds.labels.size()) +
                              " labels for " + std::to_string(ds.n) + " instances");
        }
        ds.k = k > 0 ? k : maxl + 1;
    }
    return ds;
}

} // namespace deepmvc
