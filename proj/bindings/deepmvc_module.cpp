#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "deepmvc/clustering.hpp"
#include "deepmvc/dataset.hpp"
#include "deepmvc/errors.hpp"
#include "deepmvc/evaluation.hpp"
#include "deepmvc/instances.hpp"
#include "deepmvc/losses.hpp"
#include "deepmvc/tensor.hpp"
#include "deepmvc/theory.hpp"

namespace py = pybind11;
using namespace deepmvc;

namespace {

using Rows = std::vector<std::vector<double>>;

Tensor rows_to_tensor(const Rows& rows) {
    if (rows.empty()) throw ContractViolation("empty matrix");
    std::vector<double> flat;
    flat.reserve(rows.size() * rows[0].size());
    for (const auto& r : rows) {
        if (r.size() != rows[0].size()) throw DimensionError("ragged matrix");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return Tensor::matrix(rows.size(), rows[0].size(), std::move(flat));
}

Rows tensor_to_rows(const Tensor& t) {
    Rows out(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.cols(); ++j) out[i][j] = t.at(i, j);
    }
    return out;
}

std::vector<Tensor> views_to_tensors(const std::vector<Rows>& views) {
    std::vector<Tensor> out;
    out.reserve(views.size());
    for (const auto& v : views) out.push_back(rows_to_tensor(v));
    return out;
}

py::dict record_dict(const RunRecord& r) {
    py::dict d;
    d["seed"] = r.seed;
    d["final_loss"] = r.final_loss;
    d["acc"] = r.acc;
    d["nmi"] = r.nmi;
    d["failed"] = r.failed;
    if (r.failed) d["error"] = r.error;
    return d;
}

} // namespace

PYBIND11_MODULE(_deepmvc, m) {
    m.doc() = "Composable deep multi-view clustering: losses, metrics, theory checks, training";

    py::register_exception<DimensionError>(m, "DimensionError");
    py::register_exception<ContractViolation>(m, "ContractViolation");
    py::register_exception<DegenerateInputError>(m, "DegenerateInputError");
    py::register_exception<FormatError>(m, "FormatError");
    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<TrainingError>(m, "TrainingError");

    py::class_<MultiViewDataset>(m, "MultiViewDataset")
        .def_readonly("n", &MultiViewDataset::n)
        .def_readonly("k", &MultiViewDataset::k)
        .def_readonly("name", &MultiViewDataset::name)
        .def_property_readonly("views",
                               [](const MultiViewDataset& ds) { return ds.view_count(); })
        .def_property_readonly("dims", [](const MultiViewDataset& ds) { return ds.dims; })
        .def_property_readonly("labels",
                               [](const MultiViewDataset& ds) {
                                   return std::vector<int>(ds.labels.begin(), ds.labels.end());
                               })
        .def("view", [](const MultiViewDataset& ds, std::size_t v) {
            return tensor_to_rows(ds.view_tensor(v));
        });

    m.def("generate_blobs", &generate_blobs, py::arg("n"), py::arg("views"), py::arg("k"),
          py::arg("dim"), py::arg("cluster_sigma"), py::arg("seed"),
          py::arg("imbalance_ratio") = 1.0, py::arg("view_kv") = std::vector<std::size_t>{});
    m.def(
        "generate_random_pairing",
        [](const Rows& base, const std::vector<std::uint32_t>& labels, std::uint32_t k,
           double noise_sigma, std::uint64_t seed) {
            return generate_random_pairing(rows_to_tensor(base), labels, k, noise_sigma, seed);
        },
        py::arg("base"), py::arg("labels"), py::arg("k"), py::arg("noise_sigma"), py::arg("seed"));
    m.def("append_uninformative_view", &append_uninformative_view, py::arg("dataset"),
          py::arg("dim"), py::arg("seed"));
    m.def("save_mvd", &save_mvd, py::arg("dataset"), py::arg("path"));
    m.def("load_mvd", &load_mvd, py::arg("path"));

    m.def(
        "reconstruction_loss",
        [](const std::vector<Rows>& x, const std::vector<Rows>& x_hat) {
            return reconstruction_loss(views_to_tensors(x), views_to_tensors(x_hat)).value();
        },
        py::arg("x"), py::arg("x_hat"));
    m.def(
        "contrastive_loss",
        [](const std::vector<Rows>& z, double tau) {
            return contrastive_loss(views_to_tensors(z), tau).value();
        },
        py::arg("z"), py::arg("tau") = 0.1);
    m.def(
        "pairwise_cosine_logits",
        [](const Rows& a, const Rows& b, double tau) {
            return tensor_to_rows(pairwise_cosine_logits(rows_to_tensor(a), rows_to_tensor(b), tau));
        },
        py::arg("z_u"), py::arg("z_v"), py::arg("tau") = 0.1);
    m.def(
        "mi_loss",
        [](const std::vector<Rows>& z, double lambda) {
            return mi_loss_all_pairs(views_to_tensors(z), lambda).value();
        },
        py::arg("z"), py::arg("lambda_") = 1.0);
    m.def(
        "ddc_loss",
        [](const Rows& alpha, const Rows& hidden) {
            DdcLossTerms t = ddc_loss(rows_to_tensor(alpha), rows_to_tensor(hidden));
            return py::make_tuple(t.l1.value(), t.l2.value(), t.l3.value());
        },
        py::arg("alpha"), py::arg("hidden"));

    m.def(
        "kmeans",
        [](const Rows& x, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
            KmeansResult r = kmeans(rows_to_tensor(x), k, seed, max_iters);
            py::dict d;
            d["labels"] = r.labels;
            d["inertia"] = r.inertia;
            d["centroids"] = tensor_to_rows(r.centroids);
            return d;
        },
        py::arg("x"), py::arg("k"), py::arg("seed") = 0, py::arg("max_iters") = 100);

    m.def("accuracy", &accuracy, py::arg("pred"), py::arg("truth"), py::arg("k"));
    m.def("nmi", &nmi, py::arg("pred"), py::arg("truth"));
    m.def("hungarian", &hungarian, py::arg("cost"));

    m.def("kappa_aligned", &kappa_aligned, py::arg("k"), py::arg("k_vs"));
    m.def("exact_expected_min", &exact_expected_min, py::arg("pmf"), py::arg("views"));
    m.def(
        "simulate_min",
        [](const std::vector<double>& pmf, std::size_t V, std::size_t trials, std::uint64_t seed) {
            MinSimulation s = simulate_min(pmf, V, trials, seed);
            py::dict d;
            d["mean"] = s.mean;
            d["std_error"] = s.std_error;
            d["nesting_violations"] = s.nesting_violations;
            return d;
        },
        py::arg("pmf"), py::arg("views"), py::arg("trials"), py::arg("seed") = 0);
    m.def("monotonicity_report", &monotonicity_report, py::arg("pmf"), py::arg("v_max"));

    m.def("instance_names", [] { return instance_names(); });
    m.def(
        "train",
        [](const std::string& name, const MultiViewDataset& ds, std::size_t runs,
           std::uint64_t seed, std::size_t epochs, std::size_t batch_size, double lr,
           std::size_t jobs) {
            InstanceSpec spec = instance_preset(name);
            if (epochs > 0) spec.epochs = epochs;
            if (batch_size > 0) spec.batch_size = batch_size;
            if (lr > 0) spec.lr = lr;
            const auto records = run_protocol(spec, ds, runs, seed, jobs);
            py::list out;
            for (const auto& r : records) out.append(record_dict(r));
            return out;
        },
        py::arg("name"), py::arg("dataset"), py::arg("runs") = 5, py::arg("seed") = 0,
        py::arg("epochs") = 0, py::arg("batch_size") = 0, py::arg("lr") = 0.0, py::arg("jobs") = 1);
}
