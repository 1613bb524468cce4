// Acceptance suite: each criterion prints one PASS/FAIL line; the process
// exits nonzero if any selected criterion fails.

#include "deepmvc/clustering.hpp"
#include "deepmvc/dataset.hpp"
#include "deepmvc/errors.hpp"
#include "deepmvc/evaluation.hpp"
#include "deepmvc/experiment.hpp"
#include "deepmvc/instances.hpp"
#include "deepmvc/losses.hpp"
#include "deepmvc/rng.hpp"
#include "deepmvc/tensor.hpp"
#include "deepmvc/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <vector>

using namespace deepmvc;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::size_t env_jobs() {
    if (const char* env = std::getenv("DEEPMVC_JOBS")) {
        try {
            return std::max<std::size_t>(1, std::stoul(env));
        } catch (...) {
        }
    }
    return 2;
}

Tensor rand_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1, double hi = 1) {
    std::vector<double> data(r * c);
    for (double& v : data) v = rng.uniform(lo, hi);
    return Tensor::matrix(r, c, std::move(data));
}

// Two tight groups, the regime the DDC kernel operates in. Every point has a
// near neighbor, so kernel gradients stay within central-difference
// resolution at float64; isolated uniform points give e^-20-scale kernel
// entries whose true gradients sit below what the FD oracle can resolve.
Tensor clustered_hidden(std::size_t n, std::size_t d, Rng& rng) {
    std::vector<double> c0(d), c1(d);
    for (std::size_t j = 0; j < d; ++j) {
        c0[j] = rng.uniform(-1, 1);
        c1[j] = c0[j] + rng.uniform(0.8, 1.2);
    }
    std::vector<double> data(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = i % 2 == 0 ? c0 : c1;
        for (std::size_t j = 0; j < d; ++j) data[i * d + j] = c[j] + rng.uniform(-0.1, 0.1);
    }
    return Tensor::matrix(n, d, std::move(data));
}

double cosine_of(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t c = 0; c < a.cols(); ++c) {
        dot += a.at(i, c) * b.at(j, c);
        na += a.at(i, c) * a.at(i, c);
        nb += b.at(j, c) * b.at(j, c);
    }
    return dot / (std::max(std::sqrt(na), 1e-12) * std::max(std::sqrt(nb), 1e-12));
}

double contrastive_brute_force(const std::vector<Tensor>& z, double tau) {
    const std::size_t V = z.size(), n = z[0].rows();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t u = 0; u < V; ++u) {
            for (std::size_t v = 0; v < V; ++v) {
                if (u == v) continue;
                const double pos = std::exp(cosine_of(z[u], i, z[v], i) / tau);
                double den = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    den += std::exp(cosine_of(z[u], i, z[v], j) / tau);
                    den += std::exp(cosine_of(z[u], i, z[u], j) / tau);
                    den += std::exp(cosine_of(z[v], i, z[v], j) / tau);
                }
                total += -std::log(pos / den);
            }
        }
    }
    return total / (double(n) * double(V) * double(V - 1));
}

// --- criterion 1: gradient suite -------------------------------------------------

Check criterion_gradients() {
    Check c;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed * 977 + 13);

        Tensor x = rand_matrix(4, 5, rng), xh = rand_matrix(4, 5, rng);
        auto f_rec = [](const std::vector<Tensor>& t) { return reconstruction_loss({t[0]}, {t[1]}); };
        const double e_rec = grad_check(f_rec, {x, xh}, 1e-5);
        c.expect(e_rec < 1e-4, "reconstruction grad err " + std::to_string(e_rec));

        Tensor z1 = rand_matrix(4, 5, rng), z2 = rand_matrix(4, 5, rng);
        auto f_con = [](const std::vector<Tensor>& t) { return contrastive_loss({t[0], t[1]}, 0.2); };
        const double e_con = grad_check(f_con, {z1, z2}, 1e-5);
        c.expect(e_con < 1e-4, "contrastive grad err " + std::to_string(e_con));

        auto f_mi = [](const std::vector<Tensor>& t) {
            return mi_loss_all_pairs({softmax(t[0], 1), softmax(t[1], 1)}, 1.5);
        };
        const double e_mi = grad_check(f_mi, {z1, z2}, 1e-5);
        c.expect(e_mi < 1e-4, "mi grad err " + std::to_string(e_mi));

        Tensor hidden0 = clustered_hidden(5, 3, rng);
        const double sigma = kernel_bandwidth(hidden0);
        for (int term = 0; term < 3; ++term) {
            auto f_ddc = [&](const std::vector<Tensor>& t) {
                DdcLossTerms terms = ddc_loss(softmax(t[0], 1), t[1], sigma);
                return term == 0 ? terms.l1 : term == 1 ? terms.l2 : terms.l3;
            };
            const double e = grad_check(f_ddc, {rand_matrix(5, 3, rng), hidden0}, 1e-5);
            c.expect(e < 1e-4, "ddc l" + std::to_string(term + 1) + " grad err " + std::to_string(e));
        }

        auto f_total = [&](const std::vector<Tensor>& t) {
            Tensor l_sv = reconstruction_loss({t[0]}, {t[1]});
            Tensor l_mv = contrastive_loss({t[0], t[1]}, 0.3);
            DdcLossTerms terms = ddc_loss(softmax(t[2], 1), t[3], sigma);
            return total_loss(LossWeights{1.0, 0.5, 2.0}, l_sv, l_mv, terms.sum());
        };
        const double e_tot =
            grad_check(f_total, {rand_matrix(4, 5, rng), rand_matrix(4, 5, rng),
                                 rand_matrix(5, 3, rng), hidden0},
                       1e-5);
        c.expect(e_tot < 1e-4, "total grad err " + std::to_string(e_tot));
    }
    return c;
}

// --- criterion 2: loss oracles ----------------------------------------------------

Check criterion_loss_oracles() {
    Check c;
    Rng rng(31);
    for (int trial = 0; trial < 8; ++trial) {
        const std::size_t n = 3 + trial % 4;     // up to 6
        const std::size_t V = 2 + trial % 3;     // up to 4
        std::vector<Tensor> z;
        for (std::size_t v = 0; v < V; ++v) z.push_back(rand_matrix(n, 5, rng));
        const double got = contrastive_loss(z, 0.1).value();
        const double want = contrastive_brute_force(z, 0.1);
        c.expect(std::abs(got - want) < 1e-10,
                 "contrastive oracle gap " + std::to_string(std::abs(got - want)));
    }

    for (int trial = 0; trial < 5; ++trial) {
        Tensor hidden = rand_matrix(6, 4, rng);
        Tensor alpha = softmax(rand_matrix(6, 3, rng, -2, 2), 1);
        const double sigma = kernel_bandwidth(hidden);
        DdcLossTerms t = ddc_loss(alpha, hidden, sigma);
        // scripted recomputation
        const std::size_t n = 6, k = 3;
        std::vector<std::vector<double>> kap(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double d = 0;
                for (std::size_t q = 0; q < 4; ++q) {
                    const double diff = hidden.at(i, q) - hidden.at(j, q);
                    d += diff * diff;
                }
                kap[i][j] = std::exp(-d / (2 * sigma * sigma));
            }
        }
        auto cs = [&](std::function<double(std::size_t, std::size_t)> val) {
            double total = 0;
            for (std::size_t a = 0; a < k; ++a) {
                for (std::size_t b = a + 1; b < k; ++b) {
                    double num = 0, da = 0, db = 0;
                    for (std::size_t i = 0; i < n; ++i) {
                        for (std::size_t j = 0; j < n; ++j) {
                            num += val(i, a) * kap[i][j] * val(j, b);
                            da += val(i, a) * kap[i][j] * val(j, a);
                            db += val(i, b) * kap[i][j] * val(j, b);
                        }
                    }
                    total += num / std::max(std::sqrt(da * db), 1e-9);
                }
            }
            return total / 3.0;
        };
        const double l1 = cs([&](std::size_t i, std::size_t a) { return alpha.at(i, a); });
        double dot = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                for (std::size_t q = 0; q < k; ++q) dot += alpha.at(i, q) * alpha.at(j, q);
            }
        }
        const double l2 = 2.0 * dot / (double(n) * double(n - 1));
        const double l3 = cs([&](std::size_t i, std::size_t a) {
            double d = 0;
            for (std::size_t q = 0; q < k; ++q) {
                const double diff = alpha.at(i, q) - (q == a ? 1.0 : 0.0);
                d += diff * diff;
            }
            return std::exp(-d);
        });
        c.expect(std::abs(t.l1.value() - l1) < 1e-10, "ddc l1 oracle gap");
        c.expect(std::abs(t.l2.value() - l2) < 1e-10, "ddc l2 oracle gap");
        c.expect(std::abs(t.l3.value() - l3) < 1e-10, "ddc l3 oracle gap");
    }

    Tensor diag = Tensor::matrix(2, 2, {0.5, 0, 0, 0.5});
    for (double lambda : {1.0, 2.5, 10.0}) {
        const double want = -(2 * lambda - 1) * std::log(2.0);
        c.expect(std::abs(mi_entropy_loss(diag, lambda).value() - want) < 1e-9,
                 "mi perfect-correlation closed form");
    }
    for (std::size_t D : {2u, 4u}) {
        Tensor uniform = Tensor::matrix(D, D, std::vector<double>(D * D, 1.0 / double(D * D)));
        for (double lambda : {1.0, 3.0}) {
            const double want = -(lambda - 1) * 2.0 * std::log(double(D));
            c.expect(std::abs(mi_entropy_loss(uniform, lambda).value() - want) < 1e-9,
                     "mi independence closed form");
        }
    }
    return c;
}

// --- criterion 3: metric oracles ----------------------------------------------------

Check criterion_metric_oracles() {
    Check c;
    Rng rng(47);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + trial % 4; // <= 5
        std::vector<int> a(12), b(12);
        for (int i = 0; i < 12; ++i) {
            a[i] = int(rng.uniform_index(k));
            b[i] = int(rng.uniform_index(k));
        }
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        std::size_t best = 0;
        do {
            std::size_t hits = 0;
            for (int i = 0; i < 12; ++i) {
                if (perm[a[i]] == std::size_t(b[i])) ++hits;
            }
            best = std::max(best, hits);
        } while (std::next_permutation(perm.begin(), perm.end()));
        c.expect(std::abs(accuracy(a, b, k) - best / 12.0) < 1e-12, "accuracy vs permutations");
    }

    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t k = 2 + trial % 5; // <= 6
        std::vector<std::vector<double>> cost(k, std::vector<double>(k));
        for (auto& row : cost) {
            for (double& x : row) x = std::floor(rng.uniform(0, 30));
        }
        const auto got = hungarian(cost);
        double got_v = 0;
        for (std::size_t i = 0; i < k; ++i) got_v += cost[i][got[i]];
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e300;
        do {
            double v = 0;
            for (std::size_t i = 0; i < k; ++i) v += cost[i][perm[i]];
            best = std::min(best, v);
        } while (std::next_permutation(perm.begin(), perm.end()));
        c.expect(got_v == best, "hungarian vs enumeration");
    }

    for (int trial = 0; trial < 40; ++trial) {
        std::vector<int> a(18), b(18);
        for (int i = 0; i < 18; ++i) {
            a[i] = int(rng.uniform_index(3));
            b[i] = int(rng.uniform_index(4));
        }
        // scripted plogp oracle
        double joint[3][4] = {};
        double pa[3] = {}, pb[4] = {};
        for (int i = 0; i < 18; ++i) {
            joint[a[i]][b[i]] += 1.0 / 18;
            pa[a[i]] += 1.0 / 18;
            pb[b[i]] += 1.0 / 18;
        }
        double mi = 0, ha = 0, hb = 0;
        for (int i = 0; i < 3; ++i) {
            if (pa[i] > 0) ha -= pa[i] * std::log(pa[i]);
            for (int j = 0; j < 4; ++j) {
                if (joint[i][j] > 0) mi += joint[i][j] * std::log(joint[i][j] / (pa[i] * pb[j]));
            }
        }
        for (int j = 0; j < 4; ++j) {
            if (pb[j] > 0) hb -= pb[j] * std::log(pb[j]);
        }
        const double want = (ha + hb) == 0 ? 1.0 : mi / (0.5 * (ha + hb));
        c.expect(std::abs(nmi(a, b) - want) < 1e-12, "nmi vs plogp oracle");
    }
    return c;
}

// --- criterion 4: theory ---------------------------------------------------------------

Check criterion_theory() {
    Check c;
    const std::vector<double> uniform3 = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    c.expect(std::abs(exact_expected_min(uniform3, 2) - 14.0 / 9.0) <= 1e-12, "E(M_2) != 14/9");

    Rng rng(53);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + trial % 7;
        std::vector<double> pmf(k);
        double total = 0;
        for (double& p : pmf) {
            p = rng.uniform(0.01, 1.0);
            total += p;
        }
        for (double& p : pmf) p /= total;
        double s = 0;
        for (std::size_t i = 0; i + 1 < k; ++i) s += pmf[i];
        pmf[k - 1] = 1.0 - s;
        const auto seq = monotonicity_report(pmf, 10);
        for (std::size_t i = 1; i < seq.size(); ++i) {
            c.expect(seq[i] <= seq[i - 1], "E(M_V) increased");
        }
    }

    for (std::size_t V : {1u, 2u, 4u, 8u}) {
        const MinSimulation sim = simulate_min(uniform3, V, 100000, 7 + V);
        const double exact = exact_expected_min(uniform3, V);
        c.expect(sim.nesting_violations == 0, "nesting violation observed");
        if (sim.std_error > 0) {
            c.expect(std::abs(sim.mean - exact) <= 3.0 * sim.std_error,
                     "MC mean off by >3 stderr at V=" + std::to_string(V));
        }
    }
    return c;
}

// --- criterion 5: end-to-end clusterability -----------------------------------------------

Check criterion_end_to_end() {
    Check c;
    const MultiViewDataset ds = generate_blobs(300, 2, 3, 8, 0.05, 1);
    for (const char* name : {"AE-KM", "AE-DDC", "CAE-DDC"}) {
        InstanceSpec spec = instance_preset(name);
        const auto records = run_protocol(spec, ds, 5, 0, env_jobs());
        std::vector<RunRecord> ok;
        for (const auto& r : records) {
            if (!r.failed) ok.push_back(r);
        }
        if (ok.empty()) {
            c.expect(false, std::string(name) + ": all runs failed");
            continue;
        }
        const RunRecord best = select_best_run(ok);
        std::ostringstream os;
        os << name << " selected ACC " << best.acc;
        c.expect(best.acc >= 0.95, os.str());
        std::cout << "    " << name << ": selected ACC = " << best.acc << " (loss " << best.final_loss
                  << ")\n";
    }
    return c;
}

// --- criterion 6: directional views sweep ---------------------------------------------------

Check criterion_views_sweep() {
    Check c;
    // Two informative low-dimensional views (small margins leave the encoders
    // no spare directions to absorb the contrastive uniformity pressure) plus
    // six appended iid-noise views.
    MultiViewDataset ds = generate_blobs(420, 2, 4, 2, 0.1, 1);
    for (std::size_t i = 0; i < 6; ++i) {
        ds = append_uninformative_view(ds, 2, mix_seed(99, i));
    }
    const std::vector<std::size_t> counts = {2, 4, 6, 8};

    auto sweep_of = [&](const char* name) {
        InstanceSpec spec = instance_preset(name);
        // Desk-scale schedule: small batches give the 100 pinned epochs
        // enough optimizer steps for the cross-view terms to move.
        spec.lr = 3e-3;
        spec.batch_size = 30;
        return views_sweep(ds, spec, counts, 5, 1000, 17, env_jobs());
    };

    const auto cae = sweep_of("CAE-DDC");
    const auto ae = sweep_of("AE-DDC");
    const auto info = sweep_of("InfoDDC");
    auto at = [&](const std::vector<SweepPoint>& pts, std::size_t V) {
        for (const auto& p : pts) {
            if (p.views == V) return p.acc;
        }
        return -1.0;
    };
    std::cout << "    V:        2      4      6      8\n";
    auto print_curve = [&](const char* name, const std::vector<SweepPoint>& pts) {
        std::cout << "    " << name << ":";
        for (const auto& p : pts) std::cout << "  " << p.acc;
        std::cout << "\n";
    };
    print_curve("CAE-DDC", cae);
    print_curve("AE-DDC ", ae);
    print_curve("InfoDDC", info);

    const double cae_drop = at(cae, 2) - at(cae, 8);
    c.expect(cae_drop >= 0.10,
             "CAE-DDC drop from V=2 to V=8 is " + std::to_string(cae_drop) + " < 0.10");
    c.expect(at(ae, 8) > at(cae, 8), "AE-DDC does not beat CAE-DDC at V=8");
    const double info_gap = std::abs(at(info, 8) - at(info, 2));
    c.expect(info_gap <= 0.05, "InfoDDC V=8 vs V=2 gap " + std::to_string(info_gap) + " > 0.05");
    return c;
}

// --- criterion 7: ablation mechanics ---------------------------------------------------------

Check criterion_ablations() {
    Check c;
    const MultiViewDataset quick = generate_blobs(120, 2, 3, 6, 0.05, 5);

    // w/- vs w/o SSL grid, concat-vs-weighted, kmeans-vs-DDC: all must build
    // and run without configuration errors.
    std::size_t combos = 0;
    for (const std::string& name : instance_names()) {
        for (const std::string sv : {"none", "reconstruction"}) {
            for (const std::string mv : {"none", "keep"}) {
                for (const std::string fusionv : {"concat", "weighted_sum"}) {
                    for (const std::string cm : {"kmeans", "ddc"}) {
                        try {
                            InstanceSpec spec = instance_preset(name);
                            spec = ablate(spec, "sv_ssl", sv);
                            if (mv == "none") spec = ablate(spec, "mv_ssl", "none");
                            spec = ablate(spec, "fusion", fusionv);
                            spec = ablate(spec, "cm", cm);
                            spec.epochs = 2;
                            spec.batch_size = 60;
                            TrainedInstance t = train_instance(build_instance(spec, quick), quick);
                            if (t.assignment.hard_labels.size() != quick.n) {
                                c.expect(false, name + " ablation produced no assignment");
                            }
                            ++combos;
                        } catch (const ConfigError& e) {
                            c.expect(false, name + " ablation raised config error: " + e.what());
                        } catch (const std::exception&) {
                            // numerical hiccups are not configuration errors
                            ++combos;
                        }
                    }
                }
            }
        }
    }
    std::cout << "    ablation grid: " << combos << " combinations ran\n";

    // Removing all SSL from CAE-DDC (bare DDC) must cost accuracy on the
    // noisy-pairing blob variant: tight low-dimensional clusters paired
    // within class under strong noise.
    MultiViewDataset base = generate_blobs(420, 1, 4, 2, 0.12, 11);
    MultiViewDataset noisy =
        generate_random_pairing(base.view_tensor(0), base.labels, base.k, 0.3, 13);

    InstanceSpec with_ssl = instance_preset("CAE-DDC");
    InstanceSpec bare = ablate(ablate(with_ssl, "sv_ssl", "none"), "mv_ssl", "none");
    auto selected_acc = [&](InstanceSpec spec) {
        spec.lr = 3e-3;
        spec.batch_size = 30;
        const auto records = run_protocol(spec, noisy, 5, 0, env_jobs());
        std::vector<RunRecord> ok;
        for (const auto& r : records) {
            if (!r.failed) ok.push_back(r);
        }
        return ok.empty() ? 0.0 : select_best_run(ok).acc;
    };
    const double acc_ssl = selected_acc(with_ssl);
    const double acc_bare = selected_acc(bare);
    std::cout << "    CAE-DDC with SSL: ACC " << acc_ssl << "; bare DDC: ACC " << acc_bare << "\n";
    c.expect(acc_ssl > acc_bare, "SSL removal did not reduce ACC (with=" + std::to_string(acc_ssl) +
                                     ", bare=" + std::to_string(acc_bare) + ")");
    return c;
}

// --- criterion 8: protocol statistics ----------------------------------------------------------

Check criterion_protocol_stats() {
    Check c;
    std::vector<RunRecord> two = {{0, 1.0, 1.0, 1.0}, {1, 2.0, 0.0, 0.0}};
    const BootstrapResult rb = bootstrap_std(two, 100000, 3);
    c.expect(std::abs(rb.acc.std_hat - std::sqrt(3.0) / 4.0) <= 0.01,
             "bootstrap Bernoulli case: " + std::to_string(rb.acc.std_hat));

    std::vector<RunRecord> same(5, RunRecord{0, 1.0, 0.8, 0.7});
    const BootstrapResult rs = bootstrap_std(same, 1000, 5);
    c.expect(rs.acc.std_hat == 0.0 && rs.nmi.std_hat == 0.0, "identical runs must give exactly 0");

    Rng rng(71);
    ResultsTable table;
    for (int m = 0; m < 7; ++m) {
        table["m" + std::to_string(m)]["ds"] = {rng.uniform(0, 1), rng.uniform(0, 1)};
    }
    const ZscoreReport zr = zscores(table);
    for (int metric = 0; metric < 2; ++metric) {
        double mean = 0, var = 0;
        for (const auto& [m, per] : zr.z) mean += per.at("ds")[metric];
        mean /= 7.0;
        for (const auto& [m, per] : zr.z) {
            var += (per.at("ds")[metric] - mean) * (per.at("ds")[metric] - mean);
        }
        c.expect(std::abs(mean) <= 1e-9, "Z cell mean");
        c.expect(std::abs(std::sqrt(var / 7.0) - 1.0) <= 1e-9, "Z cell std");
    }

    ResultsTable pair;
    pair["a"]["ds"] = {0.4, 0.3};
    pair["b"]["ds"] = {0.6, 0.5};
    const ZscoreReport zp = zscores(pair);
    c.expect(std::abs(zp.z.at("a").at("ds")[0] + 1.0) <= 1e-12 &&
                 std::abs(zp.z.at("b").at("ds")[0] - 1.0) <= 1e-12,
             "two-model cells must give -1/+1");
    return c;
}

// --- criterion 9: determinism & formats ----------------------------------------------------------

Check criterion_determinism() {
    Check c;
    const fs::path dir = fs::temp_directory_path() / "deepmvc_acceptance9";
    fs::remove_all(dir);
    fs::create_directories(dir);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    KvConfig gen;
    gen.set("dataset.kind", "blobs");
    gen.set("dataset.n", "40");
    gen.set("dataset.views", "2");
    gen.set("dataset.k", "3");
    gen.set("dataset.dim", "4");
    gen.set("dataset.sigma", "0.05");
    gen.set("dataset.name", "det");
    gen.set("out", dir.string());
    const auto g1 = cmd_generate(gen);
    const std::string bytes1 = slurp(g1.mvd_path);
    const std::string side1 = slurp(g1.sidecar_path);
    const auto g2 = cmd_generate(gen);
    c.expect(slurp(g2.mvd_path) == bytes1, "cmd_generate rerun differs");
    c.expect(slurp(g2.sidecar_path) == side1, "cmd_generate sidecar rerun differs");

    KvConfig train = gen;
    train.set("instance.name", "AE-KM");
    train.set("instance.epochs", "2");
    train.set("instance.batch_size", "20");
    train.set("runs", "2");
    train.set("seed", "5");
    const auto t1 = cmd_train(train);
    const std::string rows1 = slurp(t1.jsonl_path);
    const auto t2 = cmd_train(train);
    c.expect(slurp(t2.jsonl_path) == rows1, "cmd_train rerun differs");
    c.expect(t1.failures == 0, "training failed unexpectedly");

    // MVD round-trip bit-exactness
    const MultiViewDataset ds = generate_blobs(30, 2, 2, 3, 0.1, 9);
    const fs::path mvd = dir / "rt.mvd";
    save_mvd(ds, mvd.string());
    const MultiViewDataset back = load_mvd(mvd.string());
    c.expect(back.views == ds.views && back.labels == ds.labels && back.dims == ds.dims,
             "MVD round-trip not bit-exact");

    // corruption is rejected fail-closed
    {
        std::fstream f(mvd, std::ios::in | std::ios::out | std::ios::binary);
        f.put('Z');
    }
    bool rejected = false;
    try {
        load_mvd(mvd.string());
    } catch (const FormatError&) {
        rejected = true;
    }
    c.expect(rejected, "corrupted MVD was not rejected");

    fs::remove_all(dir);
    return c;
}

struct Criterion {
    int id;
    const char* title;
    std::function<Check()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "gradient suite (all losses, 20 seeds, rel err < 1e-4)", criterion_gradients},
        {2, "loss oracles (brute force + closed forms)", criterion_loss_oracles},
        {3, "metric oracles (accuracy/NMI/Hungarian vs enumeration)", criterion_metric_oracles},
        {4, "theory (exact values, monotonicity, Monte-Carlo, nesting)", criterion_theory},
        {5, "end-to-end clusterability (ACC >= 0.95, 5-seed protocol)", criterion_end_to_end},
        {6, "views sweep directional reproduction", criterion_views_sweep},
        {7, "ablation mechanics and SSL benefit", criterion_ablations},
        {8, "protocol statistics (bootstrap, Z-scores)", criterion_protocol_stats},
        {9, "determinism and formats", criterion_determinism},
    };

    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[i + 1]);
        }
    }

    bool all_ok = true;
    for (const auto& crit : criteria) {
        if (only != 0 && crit.id != only) continue;
        Check result;
        try {
            result = crit.run();
        } catch (const std::exception& e) {
            result.ok = false;
            result.detail = std::string("exception: ") + e.what();
        }
        std::cout << (result.ok ? "[PASS]" : "[FAIL]") << " criterion " << crit.id << ": "
                  << crit.title;
        if (!result.ok) std::cout << " -- " << result.detail;
        std::cout << std::endl;
        all_ok = all_ok && result.ok;
    }
    return all_ok ? 0 : 1;
}
