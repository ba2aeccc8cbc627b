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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "qklab/config.h"
#include "qklab/errors.h"
#include "qklab/text_util.h"

using namespace qklab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("qklab_harness_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path &p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path &p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream f(p);
    std::string line;
    while (std::getline(f, line)) rows.push_back(split(line, ','));
    return rows;
}

ExperimentConfig tiny(const fs::path &out) {
    ExperimentConfig c;
    c.task = Task::kNonmarkov;
    c.n_train = 20;
    c.n_test = 8;
    c.d = 3;
    c.M = 4;
    c.cv_folds = 3;
    c.output_dir = out;
    return c;
}

std::string without_runtime(const std::string &report) { return report.substr(0, report.find("\n[runtime]")); }

}  // namespace

TEST(ConfigText, comments_blanks_and_order) {
    const auto e = parse_config_text("# header\n\n task = benchmark  # trailing\nM=8\r\nkinds = rbf, analog\n");
    ASSERT_EQ(e.size(), 3u);
    EXPECT_EQ(e[0].key, "task");
    EXPECT_EQ(e[0].value, "benchmark");
    EXPECT_EQ(e[0].line, 3);
    EXPECT_EQ(e[1].value, "8");
    EXPECT_EQ(e[2].value, "rbf, analog");
}

TEST(ConfigText, malformed_lines) {
    try {
        parse_config_text("M = 4\nnot a pair\n");
        FAIL();
    } catch (const ValidationError &err) {
        EXPECT_NE(std::string(err.what()).find("line 2"), std::string::npos);
    }
    EXPECT_THROW(parse_config_text("M = 4\nM = 5\n"), ValidationError);
    EXPECT_THROW(parse_config_text(" = 5\n"), ValidationError);
}

TEST(ExperimentConfigTest, presets_and_overrides) {
    ExperimentConfig c;
    c.apply(parse_config_text("M = 16\npreset = paper\n"));
    EXPECT_EQ(c.M, 16);  // preset first, explicit keys after
    EXPECT_EQ(c.d, 10);
    EXPECT_EQ(c.n_train, 400);
    EXPECT_EQ(c.n_test, 200);
    const ExperimentConfig desk = ExperimentConfig::desk();
    EXPECT_EQ(desk.d, 6);
    EXPECT_EQ(desk.M, 64);
    EXPECT_EQ(desk.n_train, 100);
    EXPECT_EQ(desk.n_test, 50);
    EXPECT_EQ(ExperimentConfig::paper().M, 1000);
    EXPECT_THROW(c.apply_preset("huge"), ValidationError);
}

TEST(ExperimentConfigTest, text_round_trip) {
    ExperimentConfig c;
    c.set("a_over_rb", "0.95, 1.0,1.05");
    c.set("seeds", "1,2,3");
    c.set("kinds", "analog,rbf,analog");
    c.set("standardize_labels", "false");
    c.set("sigma_position", "0.25");
    ExperimentConfig back;
    back.apply(parse_config_text(c.to_text()));
    EXPECT_EQ(back.to_text(), c.to_text());
    EXPECT_EQ(back.digest().hex(), c.digest().hex());
    EXPECT_EQ(back.kinds.size(), 2u);
    EXPECT_EQ(back.a_over_rb, (std::vector<double>{0.95, 1.0, 1.05}));
    EXPECT_FALSE(back.effective_standardize());
    back.set("standardize_labels", "auto");
    EXPECT_TRUE(back.effective_standardize());
    back.set("task", "benchmark");
    EXPECT_FALSE(back.effective_standardize());
    EXPECT_EQ(ExperimentConfig::keys().size(), c.entries().size());
}

TEST(ExperimentConfigTest, invariants) {
    auto bad = [](const std::string &key, const std::string &value) {
        ExperimentConfig c;
        c.set(key, value);
        EXPECT_THROW(c.validate(), ValidationError) << key << " = " << value;
    };
    bad("a_over_rb", "1.0,0");
    bad("a_over_rb", "-1");
    bad("M", "0");
    bad("d", "0");
    bad("noisy_kinds", "rbf");
    bad("cv_folds", "1");
    bad("sigma_detuning", "-0.1");
    ExperimentConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_THROW(c.set("nonsense", "1"), ValidationError);
    EXPECT_THROW(c.set("M", "four"), ValidationError);
    EXPECT_THROW(c.set("kinds", "photonic"), ValidationError);
    EXPECT_THROW(c.set("normalize_noisy", "maybe"), ValidationError);
}

TEST(Pipeline, rbf_only_computes_no_quantum_grams) {
    const fs::path out = scratch_dir("rbf");
    ExperimentConfig c = tiny(out);
    c.kinds = {KernelKind::kRbf};
    const RunReport r = run_pipeline(c);
    ASSERT_EQ(r.models.size(), 1u);
    EXPECT_EQ(r.models[0].label, "rbf_ideal");
    EXPECT_EQ(r.models[0].truth.size(), 8u);
    int grams = 0;
    for (const auto &e : fs::directory_iterator(c.effective_cache_dir())) {
        if (e.path().extension() == ".qkgm") {
            ++grams;
            EXPECT_EQ(read_gram(e.path()).kind(), KernelKind::kRbf);
        }
    }
    EXPECT_EQ(grams, 2);
    EXPECT_TRUE(fs::exists(out / "report.txt"));
    EXPECT_TRUE(fs::exists(out / "predictions.csv"));
    const std::string text = slurp(out / "report.txt");
    EXPECT_EQ(text.rfind("format = qklab-report/1\ntask = nonmarkov\nconfig_digest = ", 0), 0u);
    EXPECT_NE(text.find("[model rbf_ideal]\nkind = rbf\nvariant = ideal\nseed = 1\nC = "), std::string::npos);
    fs::remove_all(out);
}

TEST(Pipeline, rerun_and_cold_cache_give_identical_reports) {
    const fs::path out = scratch_dir("rerun");
    ExperimentConfig c = tiny(out);
    c.kinds = {KernelKind::kAnalog, KernelKind::kRbf};
    c.noisy_kinds = {KernelKind::kAnalog};
    const RunReport first = run_pipeline(c);
    const std::string fresh = without_runtime(slurp(out / "report.txt"));
    const std::string fresh_pred = slurp(out / "predictions.csv");
    for (const auto &t : first.timings) EXPECT_FALSE(t.cache_hit) << t.stage;

    const RunReport second = run_pipeline(c);
    for (const auto &t : second.timings) EXPECT_TRUE(t.cache_hit) << t.stage;
    EXPECT_EQ(without_runtime(slurp(out / "report.txt")), fresh);
    EXPECT_EQ(slurp(out / "predictions.csv"), fresh_pred);

    fs::remove_all(c.effective_cache_dir());
    run_pipeline(c);
    EXPECT_EQ(without_runtime(slurp(out / "report.txt")), fresh);
    EXPECT_EQ(without_runtime(report_to_text(second)), fresh);
    fs::remove_all(out);
}

TEST(Pipeline, distance_sweep_pairs_ideal_and_noisy_analog) {
    const fs::path out = scratch_dir("sweep");
    ExperimentConfig c = tiny(out);
    c.kinds = {KernelKind::kAnalog};
    c.noisy_kinds = {KernelKind::kAnalog};
    c.a_over_rb = {0.95, 1.0, 1.05};
    const RunReport r = run_pipeline(c);
    ASSERT_EQ(r.models.size(), 6u);
    const std::vector<std::string> want{"analog_ideal_a0.95", "analog_noisy_a0.95", "analog_ideal_a1",
                                        "analog_noisy_a1",    "analog_ideal_a1.05", "analog_noisy_a1.05"};
    for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_EQ(r.models[i].label, want[i]);
        EXPECT_EQ(r.models[i].noisy, i % 2 == 1);
        EXPECT_EQ(r.models[i].a_over_rb, c.a_over_rb[i / 2]);
        EXPECT_TRUE(r.models[i].train_psd.passes());
    }
    for (double a : c.a_over_rb) {
        const ModelResult *ideal = r.find(KernelKind::kAnalog, false, a, 1);
        const ModelResult *noisy = r.find(KernelKind::kAnalog, true, a, 1);
        ASSERT_TRUE(ideal && noisy);
        EXPECT_NE(ideal->train_digest.hex(), noisy->train_digest.hex());
        EXPECT_TRUE(std::isfinite(noisy->paired_weight_norm));
        if (noisy->C == ideal->C && noisy->epsilon == ideal->epsilon) {
            EXPECT_EQ(noisy->paired_weight_norm, noisy->weight_norm);
        }
    }
    // Distinct distances give distinct kernels.
    EXPECT_NE(r.models[0].train_digest.hex(), r.models[2].train_digest.hex());
    EXPECT_TRUE(fs::exists(out / "plots" / "weight_norm.svg"));
    fs::remove_all(out);
}

TEST(Pipeline, stage_failures_name_the_stage) {
    const fs::path out = scratch_dir("fail");
    ExperimentConfig c = tiny(out);
    c.kinds = {KernelKind::kRbf};
    c.dataset = (out / "missing.csv").string();
    try {
        run_pipeline(c);
        FAIL();
    } catch (const ValidationError &e) {
        EXPECT_NE(std::string(e.what()).find("stage 'dataset s1'"), std::string::npos) << e.what();
    }
    c = tiny(out);
    c.d = 0;
    EXPECT_THROW(run_pipeline(c), ValidationError);
    fs::remove_all(out);
}

TEST(Pipeline, locked_output_directory_is_rejected) {
    const fs::path out = scratch_dir("lock");
    fs::create_directories(out);
    const int fd = ::open((out / ".qklab.lock").c_str(), O_RDWR | O_CREAT, 0644);
    ASSERT_GE(fd, 0);
    ASSERT_EQ(::flock(fd, LOCK_EX | LOCK_NB), 0);
    ExperimentConfig c = tiny(out);
    c.kinds = {KernelKind::kRbf};
    try {
        run_pipeline(c);
        FAIL();
    } catch (const ValidationError &e) {
        EXPECT_NE(std::string(e.what()).find("locked"), std::string::npos);
    }
    ::flock(fd, LOCK_UN);
    ::close(fd);
    EXPECT_NO_THROW(run_pipeline(c));
    fs::remove_all(out);
}

TEST(Plots, empty_report_writes_nothing) {
    const fs::path dir = scratch_dir("plots_empty");
    RunReport r;
    const PlotOutput p = emit_plots(r, dir);
    EXPECT_TRUE(p.files.empty());
    EXPECT_FALSE(p.notice.empty());
    EXPECT_FALSE(fs::exists(dir));
}

TEST(Plots, one_model_and_exact_csv_values) {
    const fs::path dir = scratch_dir("plots_one");
    RunReport r;
    ModelResult m;
    m.label = "rbf_ideal";
    m.kind = KernelKind::kRbf;
    m.test_mse = 0.1 + 0.2;  // not exactly representable as a short decimal
    m.truth = {0.1, 0.7, 1.0 / 3.0};
    m.prediction = {0.15, 0.6, 2.0 / 7.0};
    m.test_ids = {10, 11, 12};
    r.models.push_back(m);
    const PlotOutput p = emit_plots(r, dir);
    ASSERT_EQ(p.files.size(), 4u);
    int svgs = 0;
    for (const auto &f : p.files) svgs += f.extension() == ".svg";
    EXPECT_EQ(svgs, 2);
    EXPECT_FALSE(fs::exists(dir / "weight_norm.svg"));

    const auto sc = read_csv(dir / "scatter_rbf_ideal.csv");
    ASSERT_EQ(sc.size(), 4u);
    EXPECT_EQ(sc[0], (std::vector<std::string>{"sample_id", "truth", "prediction"}));
    const std::string svg = slurp(dir / "scatter_rbf_ideal.svg");
    const std::regex point("data-x=\"([^\"]+)\" data-y=\"([^\"]+)\"");
    std::vector<std::pair<std::string, std::string>> pts;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), point); it != std::sregex_iterator(); ++it) {
        pts.emplace_back((*it)[1], (*it)[2]);
    }
    ASSERT_EQ(pts.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(parse_double(sc[i + 1][1]), m.truth[i]);
        EXPECT_EQ(parse_double(sc[i + 1][2]), m.prediction[i]);
        EXPECT_EQ(pts[i].first, sc[i + 1][1]);
        EXPECT_EQ(pts[i].second, sc[i + 1][2]);
    }
    EXPECT_NE(svg.find("class=\"identity\""), std::string::npos);

    const auto bars = read_csv(dir / "mse.csv");
    ASSERT_EQ(bars.size(), 2u);
    EXPECT_EQ(parse_double(bars[1].back()), m.test_mse);
    const std::string bsvg = slurp(dir / "mse.svg");
    EXPECT_NE(bsvg.find("data-value=\"" + bars[1].back() + "\""), std::string::npos);
    fs::remove_all(dir);
}
