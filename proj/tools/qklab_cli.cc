// Copyright 2026 The QKLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qklab: command-line front end for dataset generation, Gram construction,
// SVR training and evaluation, and figure reproduction.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include <unistd.h>

#include <CLI11.hpp>

#include "qklab/config.h"
#include "qklab/datasets.h"
#include "qklab/dephasing.h"
#include "qklab/errors.h"
#include "qklab/feature_maps.h"
#include "qklab/harness.h"
#include "qklab/kernels.h"
#include "qklab/propagate.h"
#include "qklab/rydberg.h"
#include "qklab/special_functions.h"
#include "qklab/state_vector.h"
#include "qklab/svr.h"
#include "qklab/text_util.h"

namespace fs = std::filesystem;
using namespace qklab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

// Config file plus one --<key> flag per ExperimentConfig field.
struct ConfigFlags {
    std::string config_file;
    std::string preset;
    std::map<std::string, std::string> values;

    void attach(CLI::App *app, const std::vector<std::string> &skip = {}) {
        app->add_option("--config", config_file, "flat key = value config file")->check(CLI::ExistingFile);
        app->add_option("--preset", preset, "desk or paper");
        for (const auto &key : ExperimentConfig::keys()) {
            values[key];
            if (std::find(skip.begin(), skip.end(), key) != skip.end()) continue;
            app->add_option("--" + key, values[key], "config key " + key);
        }
    }

    ExperimentConfig build(ExperimentConfig base) const {
        std::vector<ConfigEntry> entries;
        if (!config_file.empty()) entries = read_config_file(config_file);
        if (!preset.empty()) base.apply_preset(preset);
        base.apply(entries);
        for (const auto &key : ExperimentConfig::keys()) {
            const auto &v = values.at(key);
            if (!v.empty()) base.set(key, v);
        }
        return base;
    }
};

// QKGM stores no sample ids: rows follow the split order of the dataset.
std::vector<double> split_labels_checked(const LabeledDataset &ds, Split which, int rows) {
    auto y = ds.split_labels(which);
    if (static_cast<int>(y.size()) != rows) {
        throw ValidationError("Gram has " + std::to_string(rows) + " rows but the dataset " +
                              (which == Split::kTrain ? "train" : "test") + " split has " + std::to_string(y.size()) +
                              " samples");
    }
    return y;
}

void print_report_summary(const RunReport &r) {
    std::printf("%-28s %10s %8s %12s %12s %10s\n", "model", "C", "eps", "test_mse", "test_r2", "|w|^2");
    for (const auto &m : r.models) {
        std::printf("%-28s %10g %8g %12.5g %12.5g %10.4g\n", m.label.c_str(), m.C, m.epsilon, m.test_mse, m.test_r2,
                    m.weight_norm);
    }
    std::printf("report: %s\n", (r.config.output_dir / "report.txt").string().c_str());
}

ExperimentConfig figure_config(const std::string &fig) {
    using K = KernelKind;
    ExperimentConfig c;
    c.output_dir = fs::path("qklab_out") / fig;
    if (fig == "fig2") {
        c.task = Task::kBenchmark;
    } else if (fig == "fig3") {
        c.task = Task::kNonmarkov;
    } else if (fig == "fig4") {
        c.task = Task::kNonmarkov;
        c.a_over_rb = {0.95, 1.0, 1.05, 1.1};
    } else if (fig == "fig5") {
        c.task = Task::kNonmarkov;
        c.kinds = {K::kAnalog, K::kHybrid};
        c.noisy_kinds = {K::kAnalog, K::kHybrid};
        c.a_over_rb = {0.95, 1.0, 1.05, 1.1};
    } else {
        throw ValidationError("unknown figure '" + fig + "' (expected fig2, fig3, fig4 or fig5)");
    }
    return c;
}

// Fast library-level checks; the acceptance binary holds the full suite.
int selftest() {
    int failures = 0;
    auto check = [&](const char *name, bool ok, const std::string &detail) {
        std::printf("selftest %-32s %s  %s\n", name, ok ? "pass" : "FAIL", detail.c_str());
        if (!ok) ++failures;
    };
    std::mt19937_64 rng(2026);
    std::normal_distribution<double> g;

    {
        StateVector a(3);
        for (auto &z : a.mutable_amplitudes()) z = {g(rng), g(rng)};
        a.normalize();
        StateVector b = a;
        a.cnot(1, 3);
        b.noisy_cnot(1, 3, std::numbers::pi / 4);
        double dev = 0.0;
        for (std::size_t i = 0; i < a.dim(); ++i) dev = std::max(dev, std::abs(a[i] - b[i]));
        check("noisy_cnot_identity", dev < 1e-12, "max dev " + format_double(dev));
    }
    {
        const double e1 = std::abs(hurwitz_zeta(2.0, 1.0) - std::numbers::pi * std::numbers::pi / 6);
        const double e2 = std::abs(gamma_fn(0.5) - std::sqrt(std::numbers::pi));
        check("special_values", e1 < 1e-12 && e2 < 1e-12, "zeta err " + format_double(e1) + ", gamma err " +
                                                              format_double(e2));
    }
    {
        EnvParams p;
        p.s = 2.7;
        p.T = 1.3;
        const auto a = dephasing_factor(p, 2.1), b = dephasing_factor_quad(p, 2.1);
        const double rel = std::abs(a - b) / std::abs(b);
        check("dephasing_closed_form", rel < 1e-6, "rel err " + format_double(rel));
    }
    {
        const auto geom = RydbergGeometry::chain(5, 1.05);
        const std::vector<double> x{0.1, 0.5, 0.9, 0.3, 0.7};
        const HermitianMatrix h = build_rydberg_hamiltonian(geom, x);
        StateVector psi(5);
        PropagationOptions dense, krylov;
        dense.backend = Backend::kDenseEigen;
        krylov.backend = Backend::kKrylov;
        const StateVector a = evolve(psi, h, geom.time, dense), b = evolve(psi, h, geom.time, krylov);
        double diff = 0.0;
        for (std::size_t i = 0; i < a.dim(); ++i) diff += std::norm(a[i] - b[i]);
        check("krylov_vs_dense", std::sqrt(diff) < 1e-8, "2-norm diff " + format_double(std::sqrt(diff)));
    }
    {
        Eigen::MatrixXd x(8, 3);
        for (int i = 0; i < x.size(); ++i) x.data()[i] = std::uniform_real_distribution<double>(0, 1)(rng);
        KernelConfig kc;
        kc.kind = KernelKind::kHybrid;
        kc.noisy = true;
        kc.noise.ensemble_size = 4;
        kc.seed = 3;
        const GramMatrix gm = gram(FeatureSet::from_matrix(x), kc);
        const PsdReport psd = psd_check(gm);
        const double asym = (gm.values - gm.values.transpose()).cwiseAbs().maxCoeff();
        check("noisy_gram_psd", psd.passes() && asym == 0.0, "min eig " + format_double(psd.min_eigenvalue));

        std::vector<double> y(8);
        for (int i = 0; i < 8; ++i) y[i] = std::sin(3 * x(i, 0)) + x(i, 1);
        SvrOptions so;
        so.C = 10;
        so.epsilon = 0.01;
        const SvrModel m = train_svr(gm, y, so);
        check("smo_kkt", m.converged && m.kkt_violation <= 1e-3, "violation " + format_double(m.kkt_violation));

        const fs::path tmp = fs::temp_directory_path() / ("qklab_selftest_" + std::to_string(::getpid()) + ".qkgm");
        write_gram(tmp, gm);
        const GramMatrix back = read_gram(tmp);
        fs::remove(tmp);
        check("qkgm_round_trip", back.values == gm.values && back.digest.bytes == gm.digest.bytes &&
                                     back.row_ids == gm.row_ids,
              gm.digest.hex().substr(0, 16));
    }
    std::printf("selftest: %s\n", failures == 0 ? "all checks passed" : "FAILED");
    return failures == 0 ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"qklab: quantum kernel regression laboratory"};
    app.require_subcommand(1);

    // gen
    auto *gen = app.add_subcommand("gen", "generate a dataset CSV");
    std::string gen_task, gen_out;
    std::uint64_t gen_seed = 0;
    bool gen_seed_set = false;
    ConfigFlags gen_flags;
    gen->add_option("task", gen_task, "benchmark or nonmarkov")->required()->check(CLI::IsMember({"benchmark", "nonmarkov"}));
    gen->add_option("-o,--out", gen_out, "output CSV")->required();
    gen->add_option("--seed", gen_seed, "dataset seed (default: first of seeds)")->each([&](const std::string &) {
        gen_seed_set = true;
    });
    gen_flags.attach(gen, {"task"});

    // gram
    auto *gcmd = app.add_subcommand("gram", "build train and test Gram matrices (QKGM)");
    std::string g_dataset, g_kind = "analog", g_out_train, g_out_test, g_cache;
    bool g_noisy = false;
    double g_a = 1.05;
    std::uint64_t g_seed = 1;
    ConfigFlags g_flags;
    gcmd->add_option("--dataset", g_dataset, "dataset CSV")->required()->check(CLI::ExistingFile);
    gcmd->add_option("--kind", g_kind, "digital, analog, hybrid, zz or rbf");
    gcmd->add_flag("--noisy", g_noisy, "noise ensemble kernel");
    gcmd->add_option("--a", g_a, "interatomic distance in units of R_b");
    gcmd->add_option("--seed", g_seed, "noise seed");
    gcmd->add_option("--out-train", g_out_train, "train Gram output")->required();
    gcmd->add_option("--out-test", g_out_test, "test-by-train Gram output");
    gcmd->add_option("--gram-cache", g_cache, "Gram cache directory");
    g_flags.attach(gcmd, {"dataset"});

    // train
    auto *tcmd = app.add_subcommand("train", "train an epsilon-SVR on a Gram matrix");
    std::string t_gram, t_dataset, t_out;
    double t_C = 0.0, t_eps = -1.0;
    std::uint64_t t_seed = 1;
    ConfigFlags t_flags;
    tcmd->add_option("--gram", t_gram, "train Gram (QKGM)")->required()->check(CLI::ExistingFile);
    tcmd->add_option("--dataset", t_dataset, "dataset CSV with the labels")->required()->check(CLI::ExistingFile);
    tcmd->add_option("-o,--out", t_out, "model output")->required();
    tcmd->add_option("--C", t_C, "box constraint; cross-validated over C_grid when omitted");
    tcmd->add_option("--epsilon", t_eps, "tube width; cross-validated over epsilon_grid when omitted");
    tcmd->add_option("--cv-seed", t_seed, "fold assignment seed");
    t_flags.attach(tcmd, {"dataset"});

    // eval
    auto *ecmd = app.add_subcommand("eval", "evaluate a model on a test Gram");
    std::string e_model, e_gram, e_dataset, e_train_gram, e_out;
    ecmd->add_option("--model", e_model, "model file")->required()->check(CLI::ExistingFile);
    ecmd->add_option("--gram", e_gram, "test-by-train Gram (QKGM)")->required()->check(CLI::ExistingFile);
    ecmd->add_option("--dataset", e_dataset, "dataset CSV with the labels")->required()->check(CLI::ExistingFile);
    ecmd->add_option("--train-gram", e_train_gram, "train Gram, to report the weight norm")->check(CLI::ExistingFile);
    ecmd->add_option("-o,--out", e_out, "predictions CSV");

    // reproduce
    auto *rcmd = app.add_subcommand("reproduce", "run a figure pipeline");
    std::string r_fig;
    ConfigFlags r_flags;
    rcmd->add_option("figure", r_fig, "fig2, fig3, fig4 or fig5")->required()->check(
        CLI::IsMember({"fig2", "fig3", "fig4", "fig5"}));
    r_flags.attach(rcmd);

    auto *scmd = app.add_subcommand("selftest", "run fast internal consistency checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (gen->parsed()) {
            ExperimentConfig cfg = gen_flags.build({});
            cfg.task = parse_task(gen_task);
            cfg.validate();
            const std::uint64_t seed = gen_seed_set ? gen_seed : cfg.seeds.front();
            const LabeledDataset ds = make_dataset(cfg, seed);
            write_dataset_csv(gen_out, ds);
            std::printf("wrote %d samples (%d features) to %s\n", ds.size(), ds.dim(), gen_out.c_str());
        } else if (gcmd->parsed()) {
            ExperimentConfig cfg = g_flags.build({});
            cfg.validate();
            const LabeledDataset ds = model_inputs(cfg, read_dataset_csv(g_dataset));
            const KernelConfig kc = kernel_config(cfg, parse_kernel_kind(g_kind), g_noisy, g_a, g_seed);
            std::optional<GramCache> cache;
            if (!g_cache.empty()) {
                fs::create_directories(g_cache);
                cache.emplace(g_cache);
            }
            const FeatureSet train = ds.feature_set(Split::kTrain);
            const GramCache *cp = cache ? &*cache : nullptr;
            if (!g_out_test.empty()) {
                const GramPair gp = cached_gram_pair(cp, train, ds.feature_set(Split::kTest), kc);
                write_gram(g_out_train, gp.train);
                write_gram(g_out_test, gp.test);
                std::printf("train %dx%d digest %s\ntest %dx%d digest %s\n", gp.train.rows(), gp.train.cols(),
                            gp.train.digest.hex().c_str(), gp.test.rows(), gp.test.cols(),
                            gp.test.digest.hex().c_str());
            } else {
                const GramMatrix gm = cached_gram(cp, train, kc);
                write_gram(g_out_train, gm);
                std::printf("train %dx%d digest %s\n", gm.rows(), gm.cols(), gm.digest.hex().c_str());
            }
            const PsdReport psd = psd_check(read_gram(g_out_train));
            std::printf("train min eigenvalue %g, max %g\n", psd.min_eigenvalue, psd.max_eigenvalue);
        } else if (tcmd->parsed()) {
            ExperimentConfig cfg = t_flags.build({});
            cfg.validate();
            const GramMatrix gm = read_gram(t_gram);
            const auto y = split_labels_checked(read_dataset_csv(t_dataset), Split::kTrain, gm.rows());
            SvrOptions so = svr_options(cfg);
            if (t_C > 0.0 && t_eps >= 0.0) {
                so.C = t_C;
                so.epsilon = t_eps;
            } else {
                const std::vector<double> cs = t_C > 0.0 ? std::vector<double>{t_C} : cfg.C_grid;
                const std::vector<double> es = t_eps >= 0.0 ? std::vector<double>{t_eps} : cfg.epsilon_grid;
                const CvResult cv = cross_validate(Eigen::MatrixXd(gm.values), y, cs, es, cfg.cv_folds, t_seed, so);
                so.C = cv.best_C;
                so.epsilon = cv.best_epsilon;
                std::printf("cross-validation: C = %g, epsilon = %g, mse = %g\n", cv.best_C, cv.best_epsilon,
                            cv.best_mse);
            }
            const SvrModel m = train_svr(gm, y, so);
            write_model(t_out, m);
            std::printf("trained: %zu support vectors, %lld iterations, KKT violation %g, weight norm %g\n",
                        m.support_indices.size(), m.iterations, m.kkt_violation, weight_norm(m, gm));
        } else if (ecmd->parsed()) {
            const SvrModel m = read_model(e_model);
            const GramMatrix gm = read_gram(e_gram);
            const LabeledDataset ds = read_dataset_csv(e_dataset);
            const auto y = split_labels_checked(ds, Split::kTest, gm.rows());
            const auto test_ids = ds.indices(Split::kTest);
            const auto pred = predict_all(m, gm);
            std::printf("n = %d\nmse = %s\nr2 = %s\n", gm.rows(), format_double(mse(pred, y)).c_str(),
                        format_double(r2_score(pred, y)).c_str());
            if (!e_train_gram.empty()) {
                std::printf("weight_norm = %s\n", format_double(weight_norm(m, read_gram(e_train_gram))).c_str());
            }
            if (!e_out.empty()) {
                std::ofstream f(e_out);
                if (!f) throw ValidationError("cannot write " + e_out);
                f << "sample_id,truth,prediction\n";
                for (int i = 0; i < gm.rows(); ++i) {
                    f << test_ids[i] << "," << format_double(y[i]) << "," << format_double(pred[i]) << "\n";
                }
            }
        } else if (rcmd->parsed()) {
            const ExperimentConfig cfg = r_flags.build(figure_config(r_fig));
            const RunReport r = run_pipeline(cfg, [](std::string_view s) { std::fprintf(stderr, "%.*s\n", (int)s.size(), s.data()); });
            print_report_summary(r);
        } else if (scmd->parsed()) {
            return selftest();
        }
    } catch (const NumericalError &e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumerical;
    } catch (const ValidationError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const fs::filesystem_error &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitOk;
}
