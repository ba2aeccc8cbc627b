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

#include "qklab/kernels.h"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "qklab/errors.h"
#include "test_util.h"

using namespace qklab;
using namespace qklab::testing;

namespace {

Eigen::MatrixXd random_features(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) x(i, k) = u(rng);
    return x;
}

KernelConfig analog_config(bool noisy, int m, std::uint64_t seed = 5) {
    KernelConfig c;
    c.kind = KernelKind::kAnalog;
    c.noisy = noisy;
    c.noise.ensemble_size = m;
    c.seed = seed;
    return c;
}

std::filesystem::path temp_dir(const std::string &name) {
    auto p = std::filesystem::temp_directory_path() / ("qklab_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

MatrixXcd density(const NoiseEnsemble &e) {
    const MatrixXcd m = e.matrix();
    return m * m.adjoint() / static_cast<double>(e.size());
}

}  // namespace

TEST(KernelIdeal, examples) {
    std::mt19937_64 rng(1);
    const StateVector a = random_state(3, rng);
    EXPECT_NEAR(kernel_ideal(a, a), 1.0, 1e-14);
    EXPECT_EQ(kernel_ideal(StateVector::basis(2, 0), StateVector::basis(2, 3)), 0.0);
    EXPECT_THROW(kernel_ideal(StateVector(2), StateVector(3)), ValidationError);
}

TEST(KernelIdeal, analog_matches_dense_circuit) {
    RydbergGeometry g = RydbergGeometry::chain(2, 1.05);
    const std::vector<double> xk{0.3, 0.8}, xj{0.6, 0.1};
    const MatrixXcd uk = expm_hermitian(brute_force_hamiltonian(g, xk), g.time);
    const MatrixXcd uj = expm_hermitian(brute_force_hamiltonian(g, xj), g.time);
    const cdouble amp = (uk.adjoint() * uj)(0, 0);
    EXPECT_NEAR(kernel_ideal(encode_analog(xk, g), encode_analog(xj, g)), std::norm(amp), 1e-12);
}

TEST(KernelNoisy, pure_and_degenerate_cases) {
    const FeatureMap map(MapKind::kAnalog, 2);
    const std::vector<double> x{0.2, 0.9}, y{0.7, 0.4};
    NoiseSpec spec;
    spec.ensemble_size = 1;
    const NoiseEnsemble e = build_ensemble(x, 0, map, spec, 3);
    EXPECT_NEAR(kernel_noisy(e, e), 1.0, 1e-14);
    const NoiseEnsemble ex = build_ensemble(x, 0, map, NoiseSpec::none(6), 3);
    const NoiseEnsemble ey = build_ensemble(y, 1, map, NoiseSpec::none(6), 3);
    EXPECT_NEAR(kernel_noisy(ex, ey), kernel_ideal(map.encode(x), map.encode(y)), 1e-12);
    const NoiseEnsemble short_ens = build_ensemble(y, 1, map, NoiseSpec::none(5), 3);
    EXPECT_THROW(kernel_noisy(ex, short_ens), ValidationError);
}

TEST(KernelNoisy, matches_density_matrix_trace) {
    const FeatureMap map(MapKind::kAnalog, 2);
    NoiseSpec spec;
    spec.ensemble_size = 4;
    spec.sigma_detuning = 2.0;  // exaggerated so the mixture is far from pure
    spec.sigma_position = 0.5;
    const std::vector<double> x{0.1, 0.5}, y{0.9, 0.3};
    const NoiseEnsemble ek = build_ensemble(x, 0, map, spec, 11);
    const NoiseEnsemble ej = build_ensemble(y, 1, map, spec, 11);
    const double oracle = (density(ek) * density(ej)).trace().real();
    EXPECT_NEAR(kernel_noisy(ek, ej), oracle, 1e-12);
    EXPECT_EQ(kernel_noisy(ek, ej), kernel_noisy(ej, ek));
    EXPECT_LT(kernel_noisy(ek, ek), 1.0);
}

TEST(KernelRbf, examples) {
    const std::vector<double> a{0.0, 0.0}, b{1.0, 1.0};
    EXPECT_EQ(kernel_rbf(a, a, 3.0), 1.0);
    EXPECT_NEAR(kernel_rbf(a, b, 0.5), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(kernel_rbf(a, b, 1e-12), 1.0, 1e-11);
    EXPECT_THROW(kernel_rbf(a, b, 0.0), ValidationError);
    EXPECT_THROW(kernel_rbf(a, std::vector<double>{1.0}, 1.0), ValidationError);
    Eigen::MatrixXd x(2, 2);
    x << 0, 1, 1, 0;
    EXPECT_NEAR(default_rbf_gamma(x), 1.0 / (2 * 0.25), 1e-15);
}

TEST(Gram, single_feature) {
    KernelConfig c;
    c.kind = KernelKind::kDigital;
    const GramMatrix g = gram(FeatureSet::from_matrix(random_features(1, 3, 2)), c);
    ASSERT_EQ(g.rows(), 1);
    EXPECT_NEAR(g(0, 0), 1.0, 1e-14);
}

TEST(Gram, digital_matches_serial_recomputation) {
    KernelConfig c;
    c.kind = KernelKind::kDigital;
    const auto x = random_features(5, 3, 3);
    const GramMatrix g = gram(FeatureSet::from_matrix(x), c);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            std::vector<double> a(3), b(3);
            for (int k = 0; k < 3; ++k) a[k] = x(i, k), b[k] = x(j, k);
            EXPECT_NEAR(g(i, j), kernel_ideal(encode_digital(a), encode_digital(b)), 1e-14);
        }
    }
    EXPECT_EQ(g.kind(), KernelKind::kDigital);
    EXPECT_FALSE(g.noisy());
}

TEST(Gram, permutation_equivariance) {
    for (KernelKind kind : {KernelKind::kHybrid, KernelKind::kRbf}) {
        KernelConfig c;
        c.kind = kind;
        const auto x = random_features(6, 3, 4);
        const std::vector<int> perm{3, 0, 5, 1, 4, 2};
        Eigen::MatrixXd xp(6, 3);
        for (int i = 0; i < 6; ++i) xp.row(i) = x.row(perm[i]);
        const GramMatrix g = gram(FeatureSet::from_matrix(x), c);
        const GramMatrix gp = gram(FeatureSet::from_matrix(xp), c);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) EXPECT_NEAR(gp(i, j), g(perm[i], perm[j]), 1e-13);
    }
}

TEST(Gram, symmetry_bounds_and_psd_for_every_kind) {
    const auto x = random_features(10, 3, 5);
    for (KernelKind kind : {KernelKind::kDigital, KernelKind::kAnalog, KernelKind::kHybrid, KernelKind::kRbf}) {
        for (bool noisy : {false, true}) {
            if (kind == KernelKind::kRbf && noisy) continue;
            KernelConfig c;
            c.kind = kind;
            c.noisy = noisy;
            c.noise.ensemble_size = 8;
            const GramMatrix g = gram(FeatureSet::from_matrix(x), c);
            for (int i = 0; i < 10; ++i) {
                for (int j = 0; j < 10; ++j) {
                    EXPECT_EQ(g(i, j), g(j, i));
                    EXPECT_GE(g(i, j), -1e-12);
                    EXPECT_LE(g(i, j), 1.0 + 1e-12);
                }
                if (!noisy) EXPECT_NEAR(g(i, i), 1.0, 1e-10);
                if (noisy) EXPECT_GT(g(i, i), 0.0);
            }
            EXPECT_TRUE(psd_check(g).passes()) << kernel_kind_name(kind) << noisy;
        }
    }
}

TEST(Gram, zero_noise_reproduces_ideal) {
    const auto x = random_features(6, 3, 6);
    const FeatureSet set = FeatureSet::from_matrix(x);
    for (KernelKind kind : {KernelKind::kDigital, KernelKind::kAnalog, KernelKind::kHybrid}) {
        KernelConfig ideal;
        ideal.kind = kind;
        KernelConfig noisy = ideal;
        noisy.noisy = true;
        noisy.noise = NoiseSpec::none(4);
        const GramMatrix a = gram(set, ideal), b = gram(set, noisy);
        EXPECT_LE((a.values - b.values).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Gram, noisy_entries_match_density_oracle_on_both_paths) {
    // d = 2, M = 8 takes the density path; d = 3, M = 2 (dim > M^2) the ensemble path.
    for (auto [d, m] : {std::pair{2, 8}, std::pair{3, 2}}) {
        const FeatureSet train = FeatureSet::from_matrix(random_features(4, d, 11));
        const FeatureSet test = FeatureSet::from_matrix(random_features(2, d, 12), {50, 51});
        const KernelConfig c = analog_config(true, m);
        const GramMatrix g = gram(train, c);
        const GramMatrix cg = cross_gram(test, train, c);
        const FeatureMap map(MapKind::kAnalog, d, c.a_over_rb);
        auto ens = [&](const FeatureSet &s, int i) {
            return build_ensemble(s.row(i), s.ids[i], map, c.effective_noise(), c.seed);
        };
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                const double oracle = (density(ens(train, i)) * density(ens(train, j))).trace().real();
                EXPECT_NEAR(g(i, j), oracle, 1e-13) << d << " " << m;
                EXPECT_EQ(g(i, j), g(j, i));
            }
            for (int t = 0; t < 2; ++t) {
                const double oracle = (density(ens(test, t)) * density(ens(train, i))).trace().real();
                EXPECT_NEAR(cg(t, i), oracle, 1e-13) << d << " " << m;
            }
        }
    }
}

TEST(Gram, cross_gram_and_pair_consistency) {
    const FeatureSet train = FeatureSet::from_matrix(random_features(5, 2, 7));
    const FeatureSet test = FeatureSet::from_matrix(random_features(3, 2, 8), {100, 101, 102});
    for (bool normalize : {false, true}) {
        KernelConfig c = analog_config(true, 4);
        c.normalize = normalize;
        const GramMatrix g = gram(train, c);
        const GramMatrix cg = cross_gram(test, train, c);
        const GramPair p = cached_gram_pair(nullptr, train, test, c);
        EXPECT_EQ(g.values, p.train.values);
        EXPECT_EQ(cg.values, p.test.values);
        EXPECT_EQ(cg.digest, p.test.digest);
        if (normalize) {
            for (int i = 0; i < 5; ++i) EXPECT_EQ(g(i, i), 1.0);
        }
    }
    // A test sample equal to a train sample: ideal cross entry is 1.
    Eigen::MatrixXd tx = train.x.topRows(1);
    const GramMatrix cg = cross_gram(FeatureSet::from_matrix(tx), train, analog_config(false, 1));
    EXPECT_NEAR(cg(0, 0), 1.0, 1e-12);
}

TEST(PsdCheck, examples) {
    EXPECT_NEAR(psd_check(Eigen::MatrixXd::Identity(4, 4)).min_eigenvalue, 1.0, 1e-15);
    EXPECT_NEAR(psd_check(Eigen::MatrixXd::Ones(3, 3)).min_eigenvalue, 0.0, 1e-12);
    const GramMatrix g = gram(FeatureSet::from_matrix(random_features(8, 3, 9)), analog_config(false, 1));
    EXPECT_GE(psd_check(g).min_eigenvalue, -1e-10);
    EXPECT_THROW(psd_check(Eigen::MatrixXd::Ones(2, 3)), ValidationError);
}

TEST(EffectiveRank, trivial_and_degenerate) {
    const FeatureMap map(MapKind::kAnalog, 2);
    const std::vector<double> x{0.3, 0.3};
    const RankReport one = effective_rank(build_ensemble(x, 0, map, NoiseSpec(), 1));
    EXPECT_EQ(one.rank, 1);
    EXPECT_NEAR(one.purity, 1.0, 1e-12);
    const RankReport flat = effective_rank(build_ensemble(x, 0, map, NoiseSpec::none(16), 1));
    EXPECT_EQ(flat.rank, 1);
    EXPECT_NEAR(flat.purity, 1.0, 1e-12);
}

TEST(EffectiveRank, noisy_analog_matches_density_matrix) {
    const FeatureMap map(MapKind::kAnalog, 2);
    NoiseSpec spec;
    spec.ensemble_size = 8;
    const std::vector<double> x{0.6, 0.2};
    const NoiseEnsemble e = build_ensemble(x, 3, map, spec, 21);
    const RankReport r = effective_rank(e);
    EXPECT_GT(r.rank, 1);
    EXPECT_LT(r.purity, 1.0);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(density(e));
    const auto &ev = es.eigenvalues();
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(r.eigenvalues[k], ev[3 - k], 1e-12);
    for (std::size_t k = 4; k < r.eigenvalues.size(); ++k) EXPECT_NEAR(r.eigenvalues[k], 0.0, 1e-12);
    EXPECT_NEAR(kernel_noisy(e, e), r.purity, 1e-10);
}

TEST(QkgmFormat, bit_exact_round_trip) {
    const auto dir = temp_dir("qkgm");
    GramMatrix g = gram(FeatureSet::from_matrix(random_features(4, 2, 10)), analog_config(true, 3));
    g.values(0, 1) = -0.0;
    g.values(1, 2) = std::nextafter(1.0, 2.0);
    write_gram(dir / "a.qkgm", g);
    const GramMatrix r = read_gram(dir / "a.qkgm");
    ASSERT_EQ(r.rows(), 4);
    ASSERT_EQ(r.cols(), 4);
    EXPECT_EQ(r.kind_tag, g.kind_tag);
    EXPECT_EQ(r.digest, g.digest);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            EXPECT_EQ(std::bit_cast<std::uint64_t>(r(i, j)), std::bit_cast<std::uint64_t>(g(i, j)));
    // Header layout.
    std::ifstream f(dir / "a.qkgm", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    EXPECT_EQ(bytes.substr(0, 4), "QKGM");
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(static_cast<std::uint8_t>(bytes[8]), 0x12);
    EXPECT_EQ(bytes[9], 4);
    EXPECT_EQ(bytes.size(), 49u + 16 * 8);
    std::filesystem::remove_all(dir);
}

TEST(QkgmFormat, malformed_files) {
    const auto dir = temp_dir("qkgm_bad");
    GramMatrix g = gram(FeatureSet::from_matrix(random_features(2, 2, 11)), analog_config(false, 1));
    write_gram(dir / "g.qkgm", g);
    std::ifstream f(dir / "g.qkgm", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    auto write = [&](const std::string &name, const std::string &content) {
        std::ofstream o(dir / name, std::ios::binary);
        o << content;
        return dir / name;
    };
    std::string bad = bytes;
    bad[0] = 'X';
    try {
        read_gram(write("magic", bad));
        FAIL();
    } catch (const ParseError &e) {
        EXPECT_EQ(e.offset(), 0u);
    }
    EXPECT_THROW(read_gram(write("short", bytes.substr(0, bytes.size() - 3))), ParseError);
    EXPECT_THROW(read_gram(write("empty", "")), ParseError);
    EXPECT_THROW(read_gram(write("long", bytes + "x")), ParseError);
    std::string ver = bytes;
    ver[4] = 2;
    EXPECT_THROW(read_gram(write("ver", ver)), ParseError);
    std::filesystem::remove_all(dir);
}

TEST(GramCache, reuses_matching_digest) {
    const auto dir = temp_dir("cache");
    const GramCache cache(dir);
    const FeatureSet train = FeatureSet::from_matrix(random_features(4, 2, 12));
    const FeatureSet test = FeatureSet::from_matrix(random_features(2, 2, 13), {50, 51});
    const KernelConfig c = analog_config(true, 2);
    bool hit = true;
    const GramMatrix a = cached_gram(&cache, train, c, &hit);
    EXPECT_FALSE(hit);
    const GramMatrix b = cached_gram(&cache, train, c, &hit);
    EXPECT_TRUE(hit);
    EXPECT_EQ(a.values, b.values);
    const GramPair p = cached_gram_pair(&cache, train, test, c);
    EXPECT_TRUE(p.train_hit);
    EXPECT_FALSE(p.test_hit);
    const GramPair q = cached_gram_pair(&cache, train, test, c);
    EXPECT_TRUE(q.test_hit);
    EXPECT_EQ(p.test.values, q.test.values);
    // Different seed, different digest.
    EXPECT_NE(gram_digest(train, c), gram_digest(train, analog_config(true, 2, 6)));
    EXPECT_EQ(gram_digest(train, analog_config(false, 2, 6)), gram_digest(train, analog_config(false, 9, 7)));
    std::filesystem::remove_all(dir);
}

TEST(Digest, sha256_known_vector) {
    EXPECT_EQ(sha256("abc").hex(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const Digest d = sha256("x");
    EXPECT_EQ(Digest::parse_hex(d.hex()), d);
    EXPECT_THROW(Digest::parse_hex("zz"), ValidationError);
}
