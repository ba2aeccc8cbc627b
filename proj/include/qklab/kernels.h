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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qklab/feature_maps.h"

namespace qklab {

enum class KernelKind : std::uint8_t { kDigital = 1, kAnalog = 2, kHybrid = 3, kZz = 4, kRbf = 5 };

std::string_view kernel_kind_name(KernelKind kind);
/// "digital", "analog", "hybrid", "zz" or "rbf".
KernelKind parse_kernel_kind(std::string_view name);
bool is_quantum(KernelKind kind);
MapKind to_map_kind(KernelKind kind);

/// SHA-256 digest.
struct Digest {
    std::array<std::uint8_t, 32> bytes{};
    std::string hex() const;
    static Digest parse_hex(std::string_view hex);
    bool operator==(const Digest &) const = default;
};

Digest sha256(std::string_view data);

/// Everything that determines a Gram matrix apart from the features.
struct KernelConfig {
    KernelKind kind = KernelKind::kAnalog;
    bool noisy = false;
    NoiseSpec noise;
    std::uint64_t seed = 0;
    double a_over_rb = 1.05;
    /// <= 0 selects 1 / (d * variance of the training features).
    double rbf_gamma = 0.0;
    /// Divide by sqrt(k(x,x) k(y,y)); only changes noisy kernels.
    bool normalize = false;
    PropagationOptions propagation;

    void validate() const;
    /// Effective noise spec: NoiseSpec::none(1) when the kernel is ideal.
    NoiseSpec effective_noise() const;
    /// Stable one-line description used for hashing and reports.
    std::string canonical() const;
};

/// Samples as rows, with a stable id per sample (used to seed noise).
struct FeatureSet {
    Eigen::MatrixXd x;
    std::vector<std::uint64_t> ids;

    int size() const { return static_cast<int>(x.rows()); }
    int dim() const { return static_cast<int>(x.cols()); }
    std::vector<double> row(int i) const;
    void validate() const;
    /// ids 0..n-1 unless given.
    static FeatureSet from_matrix(Eigen::MatrixXd x, std::vector<std::uint64_t> ids = {});
};

struct GramMatrix {
    std::vector<std::uint64_t> row_ids;
    std::vector<std::uint64_t> col_ids;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values;
    /// Low nibble: KernelKind. 0x10: noisy. 0x20: normalized.
    std::uint8_t kind_tag = 0;
    Digest digest;

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
    double operator()(int i, int j) const { return values(i, j); }
    KernelKind kind() const { return static_cast<KernelKind>(kind_tag & 0x0f); }
    bool noisy() const { return (kind_tag & 0x10) != 0; }
};

std::uint8_t kind_tag(const KernelConfig &cfg);

/// |<psi_k|psi_j>|^2.
double kernel_ideal(const StateVector &psi_k, const StateVector &psi_j);
/// (1/M^2) sum_{m,m'} |<psi_k,m|psi_j,m'>|^2 = Tr[rho_k rho_j].
double kernel_noisy(const NoiseEnsemble &ens_k, const NoiseEnsemble &ens_j);
/// Same on member matrices (dim x M columns).
double kernel_noisy(const Eigen::MatrixXcd &ens_k, const Eigen::MatrixXcd &ens_j);
double kernel_rbf(std::span<const double> x_k, std::span<const double> x_j, double gamma);
/// 1 / (d * variance over all components of `train`).
double default_rbf_gamma(const Eigen::MatrixXd &train);

/// Encoded members for every sample of `set` (dim x M per sample).
std::vector<Eigen::MatrixXcd> encode_set(const FeatureSet &set, const KernelConfig &cfg);

/// Square Gram over `train`.
GramMatrix gram(const FeatureSet &train, const KernelConfig &cfg);
/// Rectangular Gram with rows `test` and columns `train`.
GramMatrix cross_gram(const FeatureSet &test, const FeatureSet &train, const KernelConfig &cfg);

/// Digests that `gram` and `cross_gram` would stamp on their result.
Digest gram_digest(const FeatureSet &train, const KernelConfig &cfg);
Digest cross_gram_digest(const FeatureSet &test, const FeatureSet &train, const KernelConfig &cfg);

struct PsdReport {
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    bool passes(double rel_tol = 1e-8) const { return min_eigenvalue >= -rel_tol * std::max(max_eigenvalue, 0.0); }
};

/// Extreme eigenvalues of a square Gram.
PsdReport psd_check(const GramMatrix &g);
PsdReport psd_check(const Eigen::MatrixXd &g);

struct RankReport {
    int rank = 0;
    std::vector<double> eigenvalues;  // descending
    double purity = 0.0;
};

/// Spectrum of the ensemble density operator from its M x M overlap matrix.
RankReport effective_rank(const NoiseEnsemble &ens, double tol = 1e-10);

// QKGM binary cache file.
void write_gram(const std::filesystem::path &path, const GramMatrix &g);
GramMatrix read_gram(const std::filesystem::path &path);

/// Content-addressed Gram store: <dir>/<digest>.qkgm.
class GramCache {
   public:
    explicit GramCache(std::filesystem::path dir);
    std::filesystem::path path_for(const Digest &d) const;
    std::optional<GramMatrix> load(const Digest &d) const;
    void store(const GramMatrix &g) const;

   private:
    std::filesystem::path dir_;
};

/// gram() through the cache; `hit` reports whether it was reused.
GramMatrix cached_gram(const GramCache *cache, const FeatureSet &train, const KernelConfig &cfg, bool *hit = nullptr);
GramMatrix cached_cross_gram(const GramCache *cache, const FeatureSet &test, const FeatureSet &train,
                             const KernelConfig &cfg, bool *hit = nullptr);

struct GramPair {
    GramMatrix train;  // square
    GramMatrix test;   // test x train
    bool train_hit = false;
    bool test_hit = false;
};

/// Both Grams of a train/test split, encoding each sample at most once.
GramPair cached_gram_pair(const GramCache *cache, const FeatureSet &train, const FeatureSet &test,
                          const KernelConfig &cfg);

}  // namespace qklab
