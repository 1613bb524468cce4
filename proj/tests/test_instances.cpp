#include <doctest.h>

#include "deepmvc/errors.hpp"
#include "deepmvc/instances.hpp"
#include "deepmvc/rng.hpp"

#include <cmath>

using namespace deepmvc;

namespace {

MultiViewDataset easy_blobs(std::size_t n = 120, std::uint64_t seed = 3, double sigma = 0.03) {
    return generate_blobs(n, 2, 3, 6, sigma, seed);
}

struct ComponentTuple {
    SvSsl sv;
    MvSsl mv;
    FusionKind fusion;
    CmKind cm;
};

ComponentTuple tuple_of(const InstanceSpec& s) { return {s.sv_ssl, s.mv_ssl, s.fusion, s.cm}; }

bool operator==(const ComponentTuple& a, const ComponentTuple& b) {
    return a.sv == b.sv && a.mv == b.mv && a.fusion == b.fusion && a.cm == b.cm;
}

} // namespace

TEST_CASE("component audit: every named instance matches its description") {
    const auto check = [](const char* name, SvSsl sv, MvSsl mv, FusionKind f, CmKind cm) {
        const InstanceSpec s = instance_preset(name);
        CHECK(s.sv_ssl == sv);
        CHECK(s.mv_ssl == mv);
        CHECK(s.fusion == f);
        CHECK(s.cm == cm);
    };
    check("AE-KM", SvSsl::Reconstruction, MvSsl::None, FusionKind::Concat, CmKind::Kmeans);
    check("AE-DDC", SvSsl::Reconstruction, MvSsl::None, FusionKind::WeightedSum, CmKind::Ddc);
    check("CAE-KM", SvSsl::Reconstruction, MvSsl::Contrastive, FusionKind::Concat, CmKind::Kmeans);
    check("CAE-DDC", SvSsl::Reconstruction, MvSsl::Contrastive, FusionKind::WeightedSum, CmKind::Ddc);
    check("InfoDDC", SvSsl::None, MvSsl::MutualInformation, FusionKind::WeightedSum, CmKind::Ddc);
    check("MV-IIC", SvSsl::None, MvSsl::MiOverClustering, FusionKind::Concat,
          CmKind::ConcatAssignmentsKmeans);
    CHECK(instance_preset("InfoDDC").lambda == 10.0);
    CHECK(instance_preset("MV-IIC").lambda == 1.5);
    CHECK(instance_preset("CAE-DDC").tau == 0.1);
    CHECK_THROWS_AS(instance_preset("nope"), ConfigError);
}

TEST_CASE("build audits") {
    MultiViewDataset ds = easy_blobs();

    InstanceModel aekm = build_instance(instance_preset("AE-KM"), ds);
    CHECK(aekm.encoders.size() == 2);
    CHECK(aekm.decoders.size() == 2);
    CHECK(aekm.cluster_heads.empty());
    CHECK_FALSE(aekm.has_ddc);
    CHECK(aekm.fusion_spec.kind == FusionKind::Concat);

    InstanceModel mviic = build_instance(instance_preset("MV-IIC"), ds);
    CHECK(mviic.cluster_heads.size() == 2); // one main head per view, dim k
    for (const auto& h : mviic.cluster_heads) CHECK(h.weights.back().cols() == 3);
    CHECK(mviic.over_heads.size() == 2);
    for (const auto& hv : mviic.over_heads) {
        CHECK(hv.size() == 5); // 5 over-clustering heads, dim 5k
        for (const auto& h : hv) CHECK(h.weights.back().cols() == 15);
    }

    InstanceModel info = build_instance(instance_preset("InfoDDC"), ds);
    CHECK(info.has_ddc);
    CHECK(info.fusion_spec.kind == FusionKind::WeightedSum);
    for (const auto& e : info.encoders) {
        CHECK(e.spec.output_activation == OutputActivation::Softmax); // simplex outputs
        CHECK(e.spec.layer_dims.back() == 3);
    }
    // encoder output dim equals InstanceSpec::repr_dim for every view
    InstanceModel cae = build_instance(instance_preset("CAE-DDC"), ds);
    for (const auto& e : cae.encoders) CHECK(e.spec.layer_dims.back() == 64);
}

TEST_CASE("ablate") {
    const InstanceSpec cae = instance_preset("CAE-DDC");
    const InstanceSpec no_mv = ablate(cae, "mv_ssl", "none");
    CHECK(tuple_of(no_mv) == tuple_of(instance_preset("AE-DDC"))); // slot algebra

    const InstanceSpec two_stage = ablate(instance_preset("AE-DDC"), "cm", "kmeans");
    CHECK(two_stage.cm == CmKind::Kmeans);
    CHECK(two_stage.sv_ssl == SvSsl::Reconstruction);

    CHECK_THROWS_AS(ablate(cae, "cm", "spectral"), ConfigError);
    CHECK_THROWS_AS(ablate(cae, "flux", "none"), ConfigError);

    // InfoDDC with concat fusion still trains and assigns
    MultiViewDataset ds = easy_blobs(60);
    InstanceSpec info = ablate(instance_preset("InfoDDC"), "fusion", "concat");
    info.epochs = 3;
    info.batch_size = 30;
    TrainedInstance t = train_instance(build_instance(info, ds), ds);
    CHECK(t.assignment.hard_labels.size() == ds.n);
}

TEST_CASE("all-zero loss weights leave parameters untouched") {
    MultiViewDataset ds = easy_blobs(60);
    InstanceSpec spec = instance_preset("CAE-DDC");
    spec.weights = LossWeights{0, 0, 0};
    spec.epochs = 3;
    spec.batch_size = 30;
    InstanceModel model = build_instance(spec, ds);
    const double before = model.parameter_checksum();
    TrainedInstance t = train_instance(std::move(model), ds);
    CHECK(t.model.parameter_checksum() == before);
    CHECK(t.final_loss == 0.0);
}

TEST_CASE("AE-KM reaches perfect accuracy on near-noiseless blobs") {
    MultiViewDataset ds = easy_blobs(120, 5, 0.005);
    InstanceSpec spec = instance_preset("AE-KM");
    spec.epochs = 15;
    spec.batch_size = 60;
    spec.seed = 1;
    TrainedInstance t = train_instance(build_instance(spec, ds), ds);
    std::vector<int> truth(ds.labels.begin(), ds.labels.end());
    CHECK(accuracy(t.assignment.hard_labels, truth, ds.k) == doctest::Approx(1.0));
}

TEST_CASE("AE-DDC loss trajectory is finite and descends") {
    MultiViewDataset ds = easy_blobs(120);
    InstanceSpec spec = instance_preset("AE-DDC");
    spec.epochs = 12;
    spec.batch_size = 60;
    spec.seed = 2;
    TrainedInstance t = train_instance(build_instance(spec, ds), ds);
    REQUIRE(t.loss_trajectory.size() == 12);
    for (double v : t.loss_trajectory) CHECK(std::isfinite(v));
    CHECK(t.loss_trajectory.back() < t.loss_trajectory.front());
}

TEST_CASE("two-stage clustering never touches parameters") {
    MultiViewDataset ds = easy_blobs(60);
    InstanceSpec spec = instance_preset("CAE-KM");
    spec.epochs = 2;
    spec.batch_size = 30;
    TrainedInstance t = train_instance(build_instance(spec, ds), ds);
    const double before = t.model.parameter_checksum();
    ClusterAssignment again = assign_full(t.model, ds);
    CHECK(t.model.parameter_checksum() == before);
    CHECK(again.hard_labels == t.assignment.hard_labels); // deterministic with the run seed
}

TEST_CASE("MV-IIC concatenated assignments have width V*k") {
    MultiViewDataset ds = easy_blobs(60);
    InstanceSpec spec = instance_preset("MV-IIC");
    spec.epochs = 2;
    spec.batch_size = 30;
    InstanceModel m = build_instance(spec, ds);

    std::vector<std::size_t> all(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) all[i] = i;
    std::vector<Tensor> assigns;
    for (std::size_t v = 0; v < 2; ++v) {
        Tensor z = mlp_forward(m.encoders[v], ds.view_rows(v, all));
        assigns.push_back(mlp_forward(m.cluster_heads[v], z));
    }
    CHECK(concat(assigns, 1).cols() == 2 * 3);

    TrainedInstance t = train_instance(std::move(m), ds);
    CHECK(t.assignment.hard_labels.size() == ds.n);
}

TEST_CASE("every instance's total loss descends over training") {
    MultiViewDataset ds = generate_blobs(60, 2, 3, 4, 0.08, 7);
    for (const std::string& name : instance_names()) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            InstanceSpec spec = instance_preset(name);
            spec.epochs = 100;
            spec.batch_size = 30;
            spec.seed = seed;
            TrainedInstance t = train_instance(build_instance(spec, ds), ds);
            REQUIRE(t.loss_trajectory.size() == 100);
            for (double v : t.loss_trajectory) CHECK(std::isfinite(v));
            CHECK(t.loss_trajectory.back() < t.loss_trajectory.front());
        }
    }

    // null objective: non-strict
    InstanceSpec null_spec = instance_preset("AE-KM");
    null_spec.weights = LossWeights{0, 0, 0};
    null_spec.epochs = 5;
    null_spec.batch_size = 30;
    TrainedInstance t = train_instance(build_instance(null_spec, ds), ds);
    CHECK(t.loss_trajectory.back() <= t.loss_trajectory.front());
}

TEST_CASE("run_protocol is reproducible and orders records by seed") {
    MultiViewDataset ds = easy_blobs(60);
    InstanceSpec spec = instance_preset("AE-KM");
    spec.epochs = 2;
    spec.batch_size = 30;
    const auto a = run_protocol(spec, ds, 3, 10, 1);
    const auto b = run_protocol(spec, ds, 3, 10, 2); // parallel run, same records
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a[i].seed == 10 + i);
        CHECK(a[i].final_loss == b[i].final_loss);
        CHECK(a[i].acc == b[i].acc);
        CHECK(a[i].nmi == b[i].nmi);
    }
}

TEST_CASE("views_sweep produces one row per requested count") {
    MultiViewDataset ds = easy_blobs(60);
    InstanceSpec spec = instance_preset("AE-KM");
    spec.epochs = 2;
    spec.batch_size = 30;
    const auto points = views_sweep(ds, spec, {1, 2}, 2, 100, 7, 1);
    REQUIRE(points.size() == 2);
    CHECK(points[0].views == 1);
    CHECK(points[1].views == 2);

    // full prefix reproduces the standard single evaluation
    const auto records = run_protocol(spec, ds, 2, spec.seed, 1);
    const RunRecord& best = select_best_run(records);
    CHECK(points[1].acc == doctest::Approx(best.acc));

    CHECK_THROWS_AS(views_sweep(ds, spec, {5}, 1, 10, 0, 1), ContractViolation);
}

TEST_CASE("composite AE-DDC loss gradient matches finite differences") {
    // 8-sample batch through encoders, decoders, weighted fusion and the DDC
    // head, with sigma frozen at the base point.
    MultiViewDataset ds = generate_blobs(8, 2, 2, 3, 0.08, 21);
    InstanceSpec spec = instance_preset("AE-DDC");
    spec.encoder_layers = {{5, 4}, {5, 4}};
    spec.ddc_hidden = 6;
    spec.seed = 4;
    InstanceModel model = build_instance(spec, ds);

    std::vector<std::size_t> all(8);
    for (std::size_t i = 0; i < 8; ++i) all[i] = i;
    const Tensor x0 = ds.view_rows(0, all);
    const Tensor x1 = ds.view_rows(1, all);

    double sigma = -1.0;
    auto loss_tensor = [&]() {
        std::vector<Tensor> z{mlp_forward(model.encoders[0], x0), mlp_forward(model.encoders[1], x1)};
        std::vector<Tensor> xh{mlp_forward(model.decoders[0], z[0]),
                               mlp_forward(model.decoders[1], z[1])};
        Tensor l_sv = reconstruction_loss({x0, x1}, xh);
        Tensor fused = fuse(model.fusion_spec, z);
        auto [hidden, alpha] = ddc_forward(model.ddc, fused);
        if (sigma < 0.0) sigma = kernel_bandwidth(hidden.detach());
        Tensor l_cm = ddc_loss(alpha, hidden, sigma).sum();
        return total_loss(spec.weights, l_sv, Tensor(), l_cm);
    };

    std::vector<Tensor*> params = model.trainable();
    zero_grads(params);
    backward(loss_tensor());

    const double eps = 1e-5;
    double max_err = 0.0;
    for (Tensor* p : params) {
        const std::vector<double> analytic =
            p->has_grad() ? p->grad() : std::vector<double>(p->size(), 0.0);
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double orig = p->data_mut()[i];
            p->data_mut()[i] = orig + eps;
            const double hi = loss_tensor().value();
            p->data_mut()[i] = orig - eps;
            const double lo = loss_tensor().value();
            p->data_mut()[i] = orig;
            const double numeric = (hi - lo) / (2 * eps);
            max_err = std::max(max_err, std::abs(analytic[i] - numeric) /
                                            (std::abs(analytic[i]) + std::abs(numeric) + 1e-12));
        }
    }
    CHECK(max_err < 1e-4);
}

TEST_CASE("training failure carries the epoch and loss breakdown") {
    MultiViewDataset ds = easy_blobs(60);
    // Reconstruction-only path: the blow-up must surface as a non-finite
    // total with its component breakdown.
    InstanceSpec spec = instance_preset("AE-KM");
    spec.epochs = 4;
    spec.batch_size = 30;
    spec.lr = 1e300;
    try {
        train_instance(build_instance(spec, ds), ds);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
        CHECK(std::string(e.what()).find("sv=") != std::string::npos);
    }

    // DDC path: the dead-kernel degenerate case is wrapped the same way
    InstanceSpec ddc_spec = instance_preset("AE-DDC");
    ddc_spec.epochs = 4;
    ddc_spec.batch_size = 30;
    ddc_spec.lr = 1e300;
    try {
        train_instance(build_instance(ddc_spec, ds), ds);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}
