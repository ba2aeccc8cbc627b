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

#include "qklab/harness.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "qklab/errors.h"
#include "qklab/nm_dataset.h"
#include "qklab/text_util.h"

namespace qklab {
namespace {

namespace fs = std::filesystem;

// Exclusive advisory lock held for the lifetime of the pipeline run.
class OutputLock {
   public:
    explicit OutputLock(const fs::path &path) {
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0) throw ValidationError("cannot create lock file " + path.string());
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            throw ValidationError("output directory is locked by another run: " + path.parent_path().string());
        }
    }
    ~OutputLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    OutputLock(const OutputLock &) = delete;
    OutputLock &operator=(const OutputLock &) = delete;

   private:
    int fd_ = -1;
};

template <typename Fn>
auto run_stage(const std::string &name, Fn &&fn) {
    try {
        return fn();
    } catch (const NumericalError &e) {
        throw NumericalError("stage '" + name + "': " + e.what());
    } catch (const ValidationError &e) {
        throw ValidationError("stage '" + name + "': " + e.what());
    } catch (const fs::filesystem_error &e) {
        throw ValidationError("stage '" + name + "': " + e.what());
    }
}

void write_text_atomic(const fs::path &path, const std::string &text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ValidationError("cannot write " + tmp.string());
        f << text;
        if (!f) throw ValidationError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw ValidationError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_text(const fs::path &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string file_digest_text(const std::string &path) {
    if (path.empty()) return "";
    return sha256(read_text(path)).hex();
}

bool depends_on_distance(KernelKind k) { return k == KernelKind::kAnalog || k == KernelKind::kHybrid; }

struct ModelSpec {
    KernelKind kind;
    bool noisy;
    double a;
};

std::vector<ModelSpec> model_specs(const ExperimentConfig &cfg) {
    std::vector<ModelSpec> out;
    for (auto kind : cfg.kinds) {
        const bool noisy = std::find(cfg.noisy_kinds.begin(), cfg.noisy_kinds.end(), kind) != cfg.noisy_kinds.end();
        const std::vector<double> as = depends_on_distance(kind) ? cfg.a_over_rb : std::vector<double>{0.0};
        for (double a : as) {
            out.push_back({kind, false, a});
            if (noisy) out.push_back({kind, true, a});
        }
    }
    return out;
}

std::string model_label(const ExperimentConfig &cfg, const ModelSpec &m, std::uint64_t seed) {
    std::string s = std::string(kernel_kind_name(m.kind)) + (m.noisy ? "_noisy" : "_ideal");
    if (depends_on_distance(m.kind) && cfg.a_over_rb.size() > 1) s += "_a" + format_double(m.a);
    if (cfg.seeds.size() > 1) s += "_s" + std::to_string(seed);
    return s;
}

struct CvChoice {
    double C = 0.0;
    double epsilon = 0.0;
    double mse = 0.0;
};

std::string svr_key(const SvrOptions &o) {
    return "tol=" + format_double(o.tol) + ";max_iter=" + std::to_string(o.max_iter) +
           ";standardize=" + std::to_string(o.standardize_labels);
}

CvChoice cached_cv(const fs::path &cache_dir, const GramMatrix &train, const std::vector<double> &y,
                   const ExperimentConfig &cfg, const Digest &data, std::uint64_t seed, bool *hit) {
    const SvrOptions base = svr_options(cfg);
    std::ostringstream key;
    key << "cv;gram=" << train.digest.hex() << ";data=" << data.hex() << ";C=";
    for (double c : cfg.C_grid) key << format_double(c) << ",";
    key << ";eps=";
    for (double e : cfg.epsilon_grid) key << format_double(e) << ",";
    key << ";folds=" << cfg.cv_folds << ";seed=" << seed << ";" << svr_key(base);
    const fs::path path = cache_dir / ("cv-" + sha256(key.str()).hex() + ".txt");
    if (fs::exists(path)) {
        std::map<std::string, std::string> kv;
        for (const auto &e : parse_config_text(read_text(path))) kv[e.key] = e.value;
        if (kv.count("C") && kv.count("epsilon") && kv.count("mse")) {
            *hit = true;
            return {parse_double(kv["C"]), parse_double(kv["epsilon"]), parse_double(kv["mse"])};
        }
    }
    *hit = false;
    const CvResult r =
        cross_validate(Eigen::MatrixXd(train.values), y, cfg.C_grid, cfg.epsilon_grid, cfg.cv_folds, seed, base);
    write_text_atomic(path, "C = " + format_double(r.best_C) + "\nepsilon = " + format_double(r.best_epsilon) +
                                "\nmse = " + format_double(r.best_mse) + "\n");
    return {r.best_C, r.best_epsilon, r.best_mse};
}

SvrModel cached_model(const fs::path &cache_dir, const GramMatrix &train, const std::vector<double> &y,
                      SvrOptions opts, double C, double eps, const Digest &data, bool *hit) {
    opts.C = C;
    opts.epsilon = eps;
    const std::string key = "model;gram=" + train.digest.hex() + ";data=" + data.hex() + ";C=" + format_double(C) +
                            ";eps=" + format_double(eps) + ";" + svr_key(opts);
    const fs::path path = cache_dir / ("model-" + sha256(key).hex() + ".txt");
    if (fs::exists(path)) {
        *hit = true;
        return read_model(path);
    }
    *hit = false;
    SvrModel m = train_svr(train, y, opts);
    write_text_atomic(path, model_to_text(m));
    return m;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

const ModelResult *RunReport::find(KernelKind kind, bool noisy, double a_over_rb, std::uint64_t seed) const {
    for (const auto &m : models) {
        if (m.kind == kind && m.noisy == noisy && m.seed == seed &&
            (!depends_on_distance(kind) || m.a_over_rb == a_over_rb)) {
            return &m;
        }
    }
    return nullptr;
}

LabeledDataset make_dataset(const ExperimentConfig &cfg, std::uint64_t seed) {
    if (!cfg.dataset.empty()) return read_dataset_csv(cfg.dataset);
    if (cfg.task == Task::kNonmarkov) {
        NmOptions o;
        o.n_train = cfg.n_train;
        o.n_test = cfg.n_test;
        o.seed = seed;
        o.base.eta = cfg.eta;
        return gen_nm_dataset(o);
    }
    BenchmarkOptions o;
    o.n_train = cfg.n_train;
    o.n_test = cfg.n_test;
    o.d = cfg.d;
    o.theta_seed = seed;
    o.split_seed = seed + 1;
    o.train_only_preprocessing = cfg.train_only_preprocessing;
    const ImageSet images = cfg.idx_images.empty() ? synth_images(cfg.n_train + cfg.n_test, seed)
                                                   : read_idx(cfg.idx_images, cfg.idx_labels);
    return gen_benchmark(images, o);
}

LabeledDataset model_inputs(const ExperimentConfig &cfg, const LabeledDataset &raw) {
    raw.validate();
    if (cfg.task == Task::kNonmarkov) {
        if (raw.dim() < cfg.d) throw ValidationError("dataset has fewer than d features");
        return preprocess(raw, {cfg.d, cfg.train_only_preprocessing});
    }
    if (raw.dim() != cfg.d) {
        throw ValidationError("benchmark dataset has " + std::to_string(raw.dim()) + " features but d = " +
                              std::to_string(cfg.d));
    }
    return raw;
}

Digest dataset_digest(const ExperimentConfig &cfg, std::uint64_t seed) {
    std::ostringstream o;
    o << "dataset/1;task=" << task_name(cfg.task);
    if (!cfg.dataset.empty()) {
        o << ";file=" << file_digest_text(cfg.dataset);
        return sha256(o.str());
    }
    o << ";n_train=" << cfg.n_train << ";n_test=" << cfg.n_test << ";seed=" << seed;
    if (cfg.task == Task::kNonmarkov) {
        o << ";eta=" << format_double(cfg.eta);
    } else {
        o << ";d=" << cfg.d << ";train_only=" << cfg.train_only_preprocessing
          << ";images=" << file_digest_text(cfg.idx_images) << ";labels=" << file_digest_text(cfg.idx_labels);
    }
    return sha256(o.str());
}

KernelConfig kernel_config(const ExperimentConfig &cfg, KernelKind kind, bool noisy, double a_over_rb,
                           std::uint64_t seed) {
    KernelConfig k;
    k.kind = kind;
    k.noisy = noisy;
    k.noise = cfg.effective_noise();
    k.seed = seed;
    if (depends_on_distance(kind)) k.a_over_rb = a_over_rb;
    k.rbf_gamma = cfg.rbf_gamma;
    k.normalize = noisy && cfg.normalize_noisy;
    return k;
}

SvrOptions svr_options(const ExperimentConfig &cfg) {
    SvrOptions o;
    o.tol = cfg.svr_tol;
    o.standardize_labels = cfg.effective_standardize();
    return o;
}

RunReport run_pipeline(const ExperimentConfig &cfg, const LogFn &log) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    auto say = [&](const std::string &s) {
        if (log) log(s);
    };
    const fs::path cache_dir = cfg.effective_cache_dir();
    run_stage("setup", [&] {
        fs::create_directories(cfg.output_dir);
        fs::create_directories(cache_dir);
        return 0;
    });
    OutputLock lock(cfg.output_dir / ".qklab.lock");
    const GramCache cache(cache_dir);

    RunReport report;
    report.config = cfg;
    const auto specs = model_specs(cfg);
    for (const std::uint64_t seed : cfg.seeds) {
        const std::string ds_stage = "dataset s" + std::to_string(seed);
        auto t0 = std::chrono::steady_clock::now();
        bool ds_hit = false;
        const Digest ds_digest = run_stage(ds_stage, [&] { return dataset_digest(cfg, seed); });
        const LabeledDataset raw = run_stage(ds_stage, [&] {
            const fs::path path = cache_dir / ("dataset-" + ds_digest.hex() + ".csv");
            if (fs::exists(path)) {
                ds_hit = true;
                return read_dataset_csv(path);
            }
            say("generating " + std::string(task_name(cfg.task)) + " dataset for seed " + std::to_string(seed));
            LabeledDataset ds = make_dataset(cfg, seed);
            const fs::path tmp = path.string() + ".tmp";
            write_dataset_csv(tmp, ds);
            fs::rename(tmp, path);
            // The cached copy is what later runs will read; use it now too.
            return read_dataset_csv(path);
        });
        report.timings.push_back({ds_stage, seconds_since(t0), ds_hit});
        report.dataset_digests.emplace_back(seed, ds_digest);

        const LabeledDataset ds = run_stage("preprocess s" + std::to_string(seed), [&] { return model_inputs(cfg, raw); });
        const FeatureSet train = ds.feature_set(Split::kTrain);
        const FeatureSet test = ds.feature_set(Split::kTest);
        if (train.size() < cfg.cv_folds) throw ValidationError("stage '" + ds_stage + "': fewer train samples than folds");
        if (test.size() < 1) throw ValidationError("stage '" + ds_stage + "': no test samples");
        const auto ytr = ds.split_labels(Split::kTrain);
        const auto yte = ds.split_labels(Split::kTest);

        for (const auto &spec : specs) {
            ModelResult r;
            r.label = model_label(cfg, spec, seed);
            r.kind = spec.kind;
            r.noisy = spec.noisy;
            r.a_over_rb = spec.a;
            r.seed = seed;
            const KernelConfig kc = kernel_config(cfg, spec.kind, spec.noisy, spec.a, seed);

            const std::string g_stage = "gram " + r.label;
            t0 = std::chrono::steady_clock::now();
            say("building Grams for " + r.label);
            const GramPair gp = run_stage(g_stage, [&] { return cached_gram_pair(&cache, train, test, kc); });
            report.timings.push_back({g_stage, seconds_since(t0), gp.train_hit && gp.test_hit});
            r.train_digest = gp.train.digest;
            r.test_digest = gp.test.digest;
            r.train_psd = run_stage(g_stage, [&] { return psd_check(gp.train); });

            const std::string t_stage = "train " + r.label;
            t0 = std::chrono::steady_clock::now();
            bool cv_hit = false, model_hit = false;
            run_stage(t_stage, [&] {
                const CvChoice cv = cached_cv(cache_dir, gp.train, ytr, cfg, ds_digest, seed, &cv_hit);
                r.C = cv.C;
                r.epsilon = cv.epsilon;
                r.cv_mse = cv.mse;
                const SvrModel m =
                    cached_model(cache_dir, gp.train, ytr, svr_options(cfg), cv.C, cv.epsilon, ds_digest, &model_hit);
                r.n_support = static_cast<int>(m.support_indices.size());
                r.iterations = m.iterations;
                r.converged = m.converged;
                r.kkt_violation = m.kkt_violation;
                r.weight_norm = weight_norm(m, gp.train);
                std::vector<double> fit(gp.train.rows());
                for (int i = 0; i < gp.train.rows(); ++i) {
                    fit[i] = predict(m, std::span<const double>(gp.train.values.data() + i * gp.train.cols(),
                                                                gp.train.cols()));
                }
                r.train_mse = mse(fit, ytr);
                r.prediction = predict_all(m, gp.test);
                r.truth = yte;
                r.test_ids = test.ids;
                r.test_mse = mse(r.prediction, yte);
                r.test_r2 = r2_score(r.prediction, yte);
                r.paired_weight_norm = std::numeric_limits<double>::quiet_NaN();
                if (spec.noisy) {
                    const ModelResult *ideal = report.find(spec.kind, false, spec.a, seed);
                    if (ideal) {
                        bool hit = false;
                        const SvrModel pm = cached_model(cache_dir, gp.train, ytr, svr_options(cfg), ideal->C,
                                                         ideal->epsilon, ds_digest, &hit);
                        r.paired_weight_norm = weight_norm(pm, gp.train);
                    }
                }
                return 0;
            });
            report.timings.push_back({t_stage, seconds_since(t0), cv_hit && model_hit});
            report.models.push_back(std::move(r));
        }
    }

    run_stage("write", [&] {
        std::ostringstream p;
        p << "model,sample_id,truth,prediction\n";
        for (const auto &m : report.models) {
            for (std::size_t i = 0; i < m.truth.size(); ++i) {
                p << m.label << "," << m.test_ids[i] << "," << format_double(m.truth[i]) << ","
                  << format_double(m.prediction[i]) << "\n";
            }
        }
        write_text_atomic(cfg.output_dir / "predictions.csv", p.str());
        const PlotOutput plots = emit_plots(report, cfg.output_dir / "plots");
        if (!plots.notice.empty()) say(plots.notice);
        report.wall_seconds = seconds_since(t_start);
        write_text_atomic(cfg.output_dir / "report.txt", report_to_text(report));
        return 0;
    });
    return report;
}

std::string report_to_text(const RunReport &r, bool include_runtime) {
    std::ostringstream o;
    o << "format = qklab-report/1\n";
    o << "task = " << task_name(r.config.task) << "\n";
    o << "config_digest = " << r.config.digest().hex() << "\n";
    o << "n_models = " << r.models.size() << "\n";
    o << "\n[config]\n" << r.config.to_text();
    o << "\n[datasets]\n";
    for (const auto &[seed, d] : r.dataset_digests) o << "seed_" << seed << " = " << d.hex() << "\n";
    for (const auto &m : r.models) {
        o << "\n[model " << m.label << "]\n";
        o << "kind = " << kernel_kind_name(m.kind) << "\n";
        o << "variant = " << (m.noisy ? "noisy" : "ideal") << "\n";
        if (depends_on_distance(m.kind)) o << "a_over_rb = " << format_double(m.a_over_rb) << "\n";
        o << "seed = " << m.seed << "\n";
        o << "C = " << format_double(m.C) << "\n";
        o << "epsilon = " << format_double(m.epsilon) << "\n";
        o << "cv_mse = " << format_double(m.cv_mse) << "\n";
        o << "train_mse = " << format_double(m.train_mse) << "\n";
        o << "test_mse = " << format_double(m.test_mse) << "\n";
        o << "test_r2 = " << format_double(m.test_r2) << "\n";
        o << "weight_norm = " << format_double(m.weight_norm) << "\n";
        if (m.noisy) o << "paired_weight_norm = " << format_double(m.paired_weight_norm) << "\n";
        o << "n_support = " << m.n_support << "\n";
        o << "iterations = " << m.iterations << "\n";
        o << "converged = " << (m.converged ? "true" : "false") << "\n";
        o << "kkt_violation = " << format_double(m.kkt_violation) << "\n";
        o << "psd_min_eigenvalue = " << format_double(m.train_psd.min_eigenvalue) << "\n";
        o << "psd_max_eigenvalue = " << format_double(m.train_psd.max_eigenvalue) << "\n";
        o << "train_gram_digest = " << m.train_digest.hex() << "\n";
        o << "test_gram_digest = " << m.test_digest.hex() << "\n";
    }
    if (include_runtime) {
        o << "\n[runtime]\n";
        o << "wall_seconds = " << format_double(r.wall_seconds) << "\n";
        for (const auto &t : r.timings) {
            std::string key = t.stage;
            std::replace(key.begin(), key.end(), ' ', '.');
            o << key << " = " << format_double(t.seconds) << (t.cache_hit ? " cached" : "") << "\n";
        }
    }
    return o.str();
}

}  // namespace qklab
