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

#include "qklab/datasets.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "qklab/errors.h"
#include "qklab/nm_dataset.h"
#include "test_util.h"

using namespace qklab;
using namespace qklab::testing;

namespace {

std::filesystem::path temp_file(const std::string &name, const std::string &content) {
    auto p = std::filesystem::temp_directory_path() / ("qklab_" + name + "_" + std::to_string(::getpid()));
    std::ofstream f(p, std::ios::binary);
    f << content;
    return p;
}

std::string be(std::uint32_t v) {
    return {static_cast<char>(v >> 24), static_cast<char>(v >> 16 & 0xff), static_cast<char>(v >> 8 & 0xff),
            static_cast<char>(v & 0xff)};
}

Eigen::MatrixXd random_matrix(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) x(i, k) = g(rng) * (k + 1);
    return x;
}

}  // namespace

TEST(ReadIdx, hand_built_fixture) {
    std::string img = be(0x803) + be(2) + be(2) + be(2);
    for (unsigned char c : {0, 255, 51, 102, 255, 0, 0, 153}) img.push_back(static_cast<char>(c));
    std::string lab = be(0x801) + be(2);
    lab.push_back(7);
    lab.push_back(3);
    const auto pi = temp_file("img", img), pl = temp_file("lab", lab);
    const ImageSet s = read_idx(pi, pl);
    ASSERT_EQ(s.size(), 2);
    ASSERT_EQ(s.pixels.cols(), 4);
    EXPECT_EQ(s.pixels(0, 1), 1.0);
    EXPECT_EQ(s.pixels(0, 2), 0.2);
    EXPECT_EQ(s.pixels(1, 3), 0.6);
    EXPECT_EQ(s.labels, (std::vector<int>{7, 3}));
    std::filesystem::remove(pi);
    std::filesystem::remove(pl);
}

TEST(ReadIdx, malformed_inputs) {
    const std::string good = be(0x803) + be(1) + be(2) + be(2) + std::string(4, '\1');
    std::string bad = good;
    bad[3] = 0x01;
    const auto p1 = temp_file("badmagic", bad);
    try {
        read_idx(p1);
        FAIL();
    } catch (const ParseError &e) {
        EXPECT_EQ(e.offset(), 0u);
        EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
    }
    const auto p2 = temp_file("empty", "");
    EXPECT_THROW(read_idx(p2), ParseError);
    const auto p3 = temp_file("trunc", good.substr(0, good.size() - 1));
    EXPECT_THROW(read_idx(p3), ParseError);
    const auto pg = temp_file("good", good);
    const auto pl = temp_file("labcount", be(0x801) + be(3) + "abc");
    EXPECT_THROW(read_idx(pg, pl), ParseError);
    for (const auto &p : {p1, p2, p3, pg, pl}) std::filesystem::remove(p);
}

TEST(SynthImages, deterministic_and_nondegenerate) {
    const ImageSet a = synth_images(600, 4), b = synth_images(600, 4);
    EXPECT_EQ(a.pixels, b.pixels);
    EXPECT_EQ(a.size(), 600);
    EXPECT_EQ(a.pixels.cols(), 784);
    EXPECT_GE(a.pixels.minCoeff(), 0.0);
    EXPECT_LE(a.pixels.maxCoeff(), 1.0);
    const double mean = a.pixels.mean();
    EXPECT_GT((a.pixels.array() - mean).square().mean(), 1e-3);
    EXPECT_NE(synth_images(3, 5).pixels, synth_images(3, 4).pixels);
}

TEST(Pca, full_rank_reconstruction) {
    const Eigen::MatrixXd x = random_matrix(30, 5, 1);
    const PcaModel m = pca_fit(x, 5);
    EXPECT_LT((pca_inverse(m, pca_transform(m, x)) - x).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((m.components * m.components.transpose() - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
    for (int j = 1; j < 5; ++j) EXPECT_LE(m.eigenvalues[j], m.eigenvalues[j - 1]);
    for (int j = 0; j < 5; ++j) {
        Eigen::Index arg;
        m.components.row(j).cwiseAbs().maxCoeff(&arg);
        EXPECT_GT(m.components(j, arg), 0.0);
    }
}

TEST(Pca, line_data_has_unit_explained_ratio) {
    Eigen::MatrixXd x(10, 2);
    for (int i = 0; i < 10; ++i) x.row(i) << i * 0.3, -0.6 * i + 1.0;
    EXPECT_NEAR(pca_fit(x, 1).explained_variance_ratio(), 1.0, 1e-10);
}

TEST(Pca, projected_variance_equals_top_eigenvalues) {
    const Eigen::MatrixXd x = random_matrix(200, 20, 2);
    const PcaModel m = pca_fit(x, 10);
    const Eigen::MatrixXd z = pca_transform(m, x);
    const Eigen::MatrixXd zc = z.rowwise() - z.colwise().mean();
    const double projected = zc.squaredNorm() / (x.rows() - 1);
    // Eigen oracle on the covariance.
    const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((c.transpose() * c) / (x.rows() - 1));
    double top = 0.0;
    for (int j = 0; j < 10; ++j) top += es.eigenvalues()[19 - j];
    EXPECT_NEAR(projected, top, 1e-8 * top);
    EXPECT_THROW(pca_fit(x, 21), ValidationError);
    EXPECT_THROW(pca_fit(x, 0), ValidationError);
}

TEST(Pca, refit_on_reduced_data_is_identity_up_to_centering) {
    const Eigen::MatrixXd z = pca_transform(pca_fit(random_matrix(50, 6, 3), 4), random_matrix(50, 6, 3));
    const PcaModel again = pca_fit(z, 4);
    EXPECT_LT((again.components.cwiseAbs() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((pca_transform(again, z) - z).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MinMax, extremes_degenerate_and_inverse) {
    Eigen::MatrixXd x(3, 3);
    x << 1, 5, 2, 3, 5, -1, 2, 5, 0.5;
    const MinMaxModel m = minmax_fit(x);
    const Eigen::MatrixXd z = minmax_apply(m, x);
    EXPECT_EQ(z(0, 0), 0.0);
    EXPECT_EQ(z(1, 0), 1.0);
    EXPECT_EQ(z(1, 2), 0.0);
    EXPECT_EQ(z(0, 2), 1.0);
    EXPECT_TRUE(m.degenerate[1]);
    EXPECT_TRUE(m.any_degenerate());
    EXPECT_EQ(z.col(1), Eigen::VectorXd::Zero(3));
    EXPECT_LT((minmax_inverse(m, z) - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Benchmark, label_matches_dense_circuit) {
    const std::vector<double> x{0.3, 0.8}, theta{0.55, 0.1};
    auto zz = [](const std::vector<double> &v) {
        MatrixXcd u = MatrixXcd::Identity(4, 4);
        for (int q = 1; q <= 2; ++q) u = embed(hadamard(), q, 2) * u;
        for (int q = 1; q <= 2; ++q) u = embed(phase_matrix(2 * v[q - 1]), q, 2) * u;
        u = cnot_matrix(1, 2, 2) * u;
        u = embed(phase_matrix(2 * (M_PI - v[0]) * (M_PI - v[1])), 2, 2) * u;
        return MatrixXcd(cnot_matrix(1, 2, 2) * u);
    };
    const VectorXcd psi = zz(theta) * zz(x) * zero_state(2);
    const double oracle = (psi.adjoint() * embed(pauli_z(), 1, 2) * psi)(0, 0).real();
    EXPECT_NEAR(benchmark_label(x, theta), oracle, 1e-12);
}

TEST(Benchmark, deterministic_bounded_and_split) {
    const ImageSet imgs = synth_images(80, 7);
    BenchmarkOptions o;
    o.n_train = 40;
    o.n_test = 20;
    o.d = 4;
    const LabeledDataset a = gen_benchmark(imgs, o), b = gen_benchmark(imgs, o);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_EQ(a.indices(Split::kTrain).size(), 40u);
    EXPECT_EQ(a.indices(Split::kTest).size(), 20u);
    EXPECT_EQ(a.dim(), 4);
    for (double y : a.labels) {
        EXPECT_GE(y, -1.0);
        EXPECT_LE(y, 1.0);
    }
    EXPECT_EQ(a.features.minCoeff(), 0.0);
    EXPECT_EQ(a.features.maxCoeff(), 1.0);
    o.n_train = 70;
    EXPECT_THROW(gen_benchmark(imgs, o), ValidationError);
}

TEST(DatasetCsv, round_trip) {
    NmOptions o;
    o.n_train = 3;
    o.n_test = 2;
    const LabeledDataset ds = gen_nm_dataset(o);
    const auto p = std::filesystem::temp_directory_path() / ("qklab_ds_" + std::to_string(::getpid()) + ".csv");
    write_dataset_csv(p, ds);
    const LabeledDataset r = read_dataset_csv(p);
    EXPECT_EQ(r.features, ds.features);
    EXPECT_EQ(r.labels, ds.labels);
    EXPECT_EQ(r.s, ds.s);
    EXPECT_EQ(r.T, ds.T);
    EXPECT_EQ(r.split, ds.split);
    std::ifstream f(p);
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header.substr(0, 12), "s,T,f1,f2,f3");
    EXPECT_TRUE(header.ends_with(",f19,f20,label,split"));
    std::filesystem::remove(p);
}

TEST(NmDataset, single_sample_bounds) {
    NmOptions o;
    o.n_train = 1;
    o.n_test = 0;
    const LabeledDataset ds = gen_nm_dataset(o);
    ASSERT_EQ(ds.size(), 1);
    ASSERT_EQ(ds.dim(), 20);
    for (int j = 0; j < 10; ++j) EXPECT_LE(std::hypot(ds.features(0, 2 * j), ds.features(0, 2 * j + 1)), 1.0 + 1e-12);
    EXPECT_GE(ds.labels[0], 0.0);
}

TEST(NmDataset, deterministic_and_labels_converged) {
    NmOptions o;
    o.n_train = 4;
    o.n_test = 2;
    o.seed = 9;
    const LabeledDataset a = gen_nm_dataset(o), b = gen_nm_dataset(o);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.labels, b.labels);
    for (int i = 0; i < a.size(); ++i) {
        EXPECT_GE(a.s[i], 1.1);
        EXPECT_LE(a.s[i], 6.5);
        EXPECT_GE(a.T[i], 0.5);
        EXPECT_LE(a.T[i], 4.5);
        EnvParams p = o.base;
        p.s = a.s[i];
        p.T = a.T[i];
        BlpOptions fine = o.blp;
        fine.n_grid = 4 * o.blp.n_grid;
        EXPECT_NEAR(blp_measure(p, fine).value, a.labels[i], 1e-4);
    }
    o.times = {1, 2, 3};
    EXPECT_THROW(gen_nm_dataset(o), ValidationError);
}
