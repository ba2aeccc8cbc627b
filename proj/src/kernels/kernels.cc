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

#include <openssl/evp.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "common/parallel.h"
#include "qklab/errors.h"
#include "qklab/text_util.h"

namespace qklab {
namespace {

constexpr char kMagic[4] = {'Q', 'K', 'G', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 1 + 4 + 4 + 32;

void put_u32(std::string &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char *p) {
    return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

std::uint64_t get_u64(const unsigned char *p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void append_features(std::string &s, const FeatureSet &set) {
    s += "n=" + std::to_string(set.size()) + ";d=" + std::to_string(set.dim()) + "\n";
    for (int i = 0; i < set.size(); ++i) {
        s += std::to_string(set.ids[i]);
        for (int k = 0; k < set.dim(); ++k) {
            s += ',';
            s += format_double(set.x(i, k));
        }
        s += '\n';
    }
}

double resolved_gamma(const KernelConfig &cfg, const FeatureSet &train) {
    return cfg.rbf_gamma > 0.0 ? cfg.rbf_gamma : default_rbf_gamma(train.x);
}

Eigen::Map<const Eigen::Matrix<cdouble, Eigen::Dynamic, 1>> column(const Eigen::MatrixXcd &m, int j) {
    return {m.data() + static_cast<Eigen::Index>(j) * m.rows(), m.rows()};
}

// Fills `g` with k(rows_i, cols_j). Symmetric mode evaluates the upper
// triangle and mirrors it.
// Above this many bytes of density matrices the ensemble path is used.
constexpr double kDensityBudgetBytes = 1024.0 * 1024.0 * 1024.0;

// rho = E E^H / M, stored as dim x dim.
std::vector<Eigen::MatrixXcd> densities(const std::vector<Eigen::MatrixXcd> &e) {
    std::vector<Eigen::MatrixXcd> out(e.size());
    internal::parallel_for(static_cast<std::int64_t>(e.size()), [&](std::int64_t i) {
        out[i] = e[i] * e[i].adjoint() / static_cast<double>(e[i].cols());
    });
    return out;
}

// Tr(rho_a rho_b) = sum Re(conj(rho_a) rho_b) for Hermitian rho, as a real dot
// product whose terms are symmetric in (a, b).
double density_overlap(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b) {
    const Eigen::Map<const Eigen::VectorXd> va(reinterpret_cast<const double *>(a.data()), 2 * a.size());
    const Eigen::Map<const Eigen::VectorXd> vb(reinterpret_cast<const double *>(b.data()), 2 * b.size());
    return va.dot(vb);
}

// The density path costs dim^2 per entry against M^2 dim for the ensemble
// overlap, so it wins whenever dim < M^2 and the matrices fit in memory.
bool use_densities(const std::vector<Eigen::MatrixXcd> &rows, const std::vector<Eigen::MatrixXcd> &cols,
                   bool symmetric) {
    if (rows.empty() || cols.empty()) return false;
    const double dim = static_cast<double>(rows.front().rows());
    const double m = static_cast<double>(rows.front().cols());
    const double count = static_cast<double>(rows.size() + (symmetric ? 0 : cols.size()));
    return m > 1 && dim < m * m && count * dim * dim * 16.0 <= kDensityBudgetBytes;
}

void fill(GramMatrix &g, const std::vector<Eigen::MatrixXcd> &rows, const std::vector<Eigen::MatrixXcd> &cols,
          bool symmetric) {
    const int nr = static_cast<int>(rows.size());
    const int nc = static_cast<int>(cols.size());
    g.values.resize(nr, nc);
    if (use_densities(rows, cols, symmetric)) {
        for (const auto &e : cols) {
            if (e.rows() != rows.front().rows() || e.cols() != rows.front().cols()) {
                throw ValidationError("kernel_noisy: ensemble shape mismatch");
            }
        }
        const auto dr = densities(rows);
        const auto dc = symmetric ? std::vector<Eigen::MatrixXcd>{} : densities(cols);
        const auto &cd = symmetric ? dr : dc;
        internal::parallel_for(nr, [&](std::int64_t i) {
            for (int j = symmetric ? static_cast<int>(i) : 0; j < nc; ++j) {
                g.values(i, j) = density_overlap(dr[i], cd[j]);
            }
        });
        if (symmetric) {
            for (int i = 0; i < nr; ++i)
                for (int j = 0; j < i; ++j) g.values(i, j) = g.values(j, i);
        }
        return;
    }
    internal::parallel_for(nr, [&](std::int64_t i) {
        for (int j = symmetric ? static_cast<int>(i) : 0; j < nc; ++j) {
            g.values(i, j) = kernel_noisy(rows[i], cols[j]);
        }
    });
    if (symmetric) {
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < i; ++j) g.values(i, j) = g.values(j, i);
    }
}

// Same evaluation path as the symmetric Gram of `e`, so its diagonal and
// these values agree bit for bit.
std::vector<double> self_kernels(const std::vector<Eigen::MatrixXcd> &e) {
    std::vector<double> d(e.size());
    const bool dens = use_densities(e, e, true);
    internal::parallel_for(static_cast<std::int64_t>(e.size()), [&](std::int64_t i) {
        if (dens) {
            const Eigen::MatrixXcd rho = e[i] * e[i].adjoint() / static_cast<double>(e[i].cols());
            d[i] = density_overlap(rho, rho);
        } else {
            d[i] = kernel_noisy(e[i], e[i]);
        }
    });
    return d;
}

void normalize_rows_cols(GramMatrix &g, const std::vector<double> &row_self, const std::vector<double> &col_self) {
    for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) g.values(i, j) /= std::sqrt(row_self[i] * col_self[j]);
}

}  // namespace

std::string_view kernel_kind_name(KernelKind kind) {
    switch (kind) {
        case KernelKind::kDigital:
            return "digital";
        case KernelKind::kAnalog:
            return "analog";
        case KernelKind::kHybrid:
            return "hybrid";
        case KernelKind::kZz:
            return "zz";
        case KernelKind::kRbf:
            return "rbf";
    }
    return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
    if (name == "rbf") return KernelKind::kRbf;
    return static_cast<KernelKind>(parse_map_kind(name));
}

bool is_quantum(KernelKind kind) { return kind != KernelKind::kRbf; }

MapKind to_map_kind(KernelKind kind) {
    if (!is_quantum(kind)) throw ValidationError("rbf kernel has no feature map");
    return static_cast<MapKind>(kind);
}

std::string Digest::hex() const {
    static const char *h = "0123456789abcdef";
    std::string s;
    for (auto b : bytes) {
        s.push_back(h[b >> 4]);
        s.push_back(h[b & 15]);
    }
    return s;
}

Digest Digest::parse_hex(std::string_view hex) {
    if (hex.size() != 64) throw ValidationError("digest must be 64 hex characters");
    Digest d;
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw ValidationError("bad hex digit in digest");
    };
    for (int i = 0; i < 32; ++i) d.bytes[i] = static_cast<std::uint8_t>(nib(hex[2 * i]) << 4 | nib(hex[2 * i + 1]));
    return d;
}

Digest sha256(std::string_view data) {
    Digest d;
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), d.bytes.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32) {
        throw NumericalError("SHA-256 failed");
    }
    return d;
}

void KernelConfig::validate() const {
    noise.validate();
    if (!(a_over_rb > 0.0) || !std::isfinite(a_over_rb)) throw ValidationError("a_over_rb must be > 0");
    if (!std::isfinite(rbf_gamma)) throw ValidationError("rbf_gamma must be finite");
    if (kind == KernelKind::kRbf && noisy) throw ValidationError("the rbf kernel has no noisy variant");
}

NoiseSpec KernelConfig::effective_noise() const { return noisy ? noise : NoiseSpec::none(1); }

std::string KernelConfig::canonical() const {
    std::ostringstream o;
    o << "kind=" << kernel_kind_name(kind) << ";noisy=" << noisy << ";normalize=" << normalize;
    if (kind == KernelKind::kRbf) {
        o << ";gamma=" << format_double(rbf_gamma);
        return o.str();
    }
    if (kind == KernelKind::kAnalog || kind == KernelKind::kHybrid) {
        o << ";a_over_rb=" << format_double(a_over_rb) << ";rabi=" << format_double(kDefaultRabi)
          << ";detuning=" << format_double(kDefaultDetuningRatio * kDefaultRabi) << ";c6=" << format_double(kDefaultC6)
          << ";t=" << format_double(kDefaultEvolutionTime);
    }
    if (noisy) {
        o << ";seed=" << seed << ";M=" << noise.ensemble_size << ";s_det=" << format_double(noise.sigma_detuning)
          << ";s_rabi=" << format_double(noise.sigma_rabi_rel) << ";s_pos=" << format_double(noise.sigma_position)
          << ";s_cnot=" << format_double(noise.sigma_cnot_theta);
    }
    return o.str();
}

std::vector<double> FeatureSet::row(int i) const {
    std::vector<double> r(dim());
    for (int k = 0; k < dim(); ++k) r[k] = x(i, k);
    return r;
}

void FeatureSet::validate() const {
    if (size() < 1 || dim() < 1) throw ValidationError("feature set is empty");
    if (static_cast<int>(ids.size()) != size()) throw ValidationError("feature id count does not match sample count");
    if (!x.allFinite()) throw ValidationError("feature set has non-finite entries");
}

FeatureSet FeatureSet::from_matrix(Eigen::MatrixXd x, std::vector<std::uint64_t> ids) {
    FeatureSet s;
    s.x = std::move(x);
    if (ids.empty()) {
        ids.resize(s.x.rows());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    }
    s.ids = std::move(ids);
    return s;
}

std::uint8_t kind_tag(const KernelConfig &cfg) {
    return static_cast<std::uint8_t>(static_cast<std::uint8_t>(cfg.kind) | (cfg.noisy ? 0x10 : 0) |
                                     (cfg.normalize ? 0x20 : 0));
}

double kernel_ideal(const StateVector &psi_k, const StateVector &psi_j) {
    if (psi_k.dim() != psi_j.dim()) throw ValidationError("kernel_ideal: dimension mismatch");
    return std::norm(inner_product(psi_k, psi_j));
}

double kernel_noisy(const Eigen::MatrixXcd &ens_k, const Eigen::MatrixXcd &ens_j) {
    if (ens_k.cols() != ens_j.cols()) throw ValidationError("kernel_noisy: ensemble size mismatch");
    if (ens_k.rows() != ens_j.rows()) throw ValidationError("kernel_noisy: dimension mismatch");
    if (ens_k.cols() == 0) throw ValidationError("kernel_noisy: empty ensemble");
    if (ens_k.cols() == 1) {
        const auto a = column(ens_k, 0);
        const auto b = column(ens_j, 0);
        return std::norm(inner_product(std::span<const cdouble>(a.data(), a.size()),
                                       std::span<const cdouble>(b.data(), b.size())));
    }
    const double m = static_cast<double>(ens_k.cols());
    const Eigen::MatrixXcd overlap = ens_k.adjoint() * ens_j;
    return overlap.cwiseAbs2().sum() / (m * m);
}

double kernel_noisy(const NoiseEnsemble &ens_k, const NoiseEnsemble &ens_j) {
    if (ens_k.size() != ens_j.size()) throw ValidationError("kernel_noisy: ensemble size mismatch");
    // Fixed orientation so that k(a, b) and k(b, a) are the same expression.
    const bool swap = ens_j.feature_id < ens_k.feature_id;
    const NoiseEnsemble &a = swap ? ens_j : ens_k;
    const NoiseEnsemble &b = swap ? ens_k : ens_j;
    return kernel_noisy(a.matrix(), b.matrix());
}

double kernel_rbf(std::span<const double> x_k, std::span<const double> x_j, double gamma) {
    if (x_k.size() != x_j.size()) throw ValidationError("kernel_rbf: length mismatch");
    if (!(gamma > 0.0)) throw ValidationError("kernel_rbf: gamma must be > 0");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x_k.size(); ++i) {
        const double d = x_k[i] - x_j[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

double default_rbf_gamma(const Eigen::MatrixXd &train) {
    if (train.size() == 0) throw ValidationError("rbf gamma needs training features");
    const double mean = train.mean();
    const double var = (train.array() - mean).square().mean();
    if (!(var > 0.0)) throw ValidationError("training features have zero variance; set rbf_gamma explicitly");
    return 1.0 / (static_cast<double>(train.cols()) * var);
}

std::vector<Eigen::MatrixXcd> encode_set(const FeatureSet &set, const KernelConfig &cfg) {
    set.validate();
    const FeatureMap map(to_map_kind(cfg.kind), set.dim(), cfg.a_over_rb, cfg.propagation);
    const NoiseSpec spec = cfg.effective_noise();
    std::vector<Eigen::MatrixXcd> out(set.size());
    internal::parallel_for(set.size(), [&](std::int64_t i) {
        try {
            out[i] = build_ensemble(set.row(static_cast<int>(i)), set.ids[i], map, spec, cfg.seed).matrix();
        } catch (const NumericalError &e) {
            throw NumericalError("sample " + std::to_string(set.ids[i]) + ": " + e.what());
        } catch (const ValidationError &e) {
            throw ValidationError("sample " + std::to_string(set.ids[i]) + ": " + e.what());
        }
    });
    return out;
}

Digest gram_digest(const FeatureSet &train, const KernelConfig &cfg) {
    std::string s = "gram\n" + cfg.canonical() + "\n";
    if (cfg.kind == KernelKind::kRbf) s += "resolved_gamma=" + format_double(resolved_gamma(cfg, train)) + "\n";
    append_features(s, train);
    return sha256(s);
}

Digest cross_gram_digest(const FeatureSet &test, const FeatureSet &train, const KernelConfig &cfg) {
    std::string s = "cross\n" + cfg.canonical() + "\n";
    if (cfg.kind == KernelKind::kRbf) s += "resolved_gamma=" + format_double(resolved_gamma(cfg, train)) + "\n";
    append_features(s, test);
    append_features(s, train);
    return sha256(s);
}

GramMatrix gram(const FeatureSet &train, const KernelConfig &cfg) {
    cfg.validate();
    train.validate();
    GramMatrix g;
    g.row_ids = g.col_ids = train.ids;
    g.kind_tag = kind_tag(cfg);
    g.digest = gram_digest(train, cfg);
    const int n = train.size();
    if (cfg.kind == KernelKind::kRbf) {
        const double gamma = resolved_gamma(cfg, train);
        g.values.resize(n, n);
        for (int i = 0; i < n; ++i) {
            const auto xi = train.row(i);
            for (int j = i; j < n; ++j) g.values(i, j) = g.values(j, i) = kernel_rbf(xi, train.row(j), gamma);
        }
        return g;
    }
    const auto enc = encode_set(train, cfg);
    fill(g, enc, enc, true);
    if (cfg.normalize) {
        const Eigen::VectorXd dg = g.values.diagonal();
        const std::vector<double> self(dg.data(), dg.data() + dg.size());
        normalize_rows_cols(g, self, self);
        for (int i = 0; i < n; ++i) g.values(i, i) = 1.0;
    }
    return g;
}

GramMatrix cross_gram(const FeatureSet &test, const FeatureSet &train, const KernelConfig &cfg) {
    cfg.validate();
    test.validate();
    train.validate();
    if (test.dim() != train.dim()) throw ValidationError("cross_gram: feature dimension mismatch");
    GramMatrix g;
    g.row_ids = test.ids;
    g.col_ids = train.ids;
    g.kind_tag = kind_tag(cfg);
    g.digest = cross_gram_digest(test, train, cfg);
    if (cfg.kind == KernelKind::kRbf) {
        const double gamma = resolved_gamma(cfg, train);
        g.values.resize(test.size(), train.size());
        for (int i = 0; i < test.size(); ++i) {
            const auto xi = test.row(i);
            for (int j = 0; j < train.size(); ++j) g.values(i, j) = kernel_rbf(xi, train.row(j), gamma);
        }
        return g;
    }
    const auto enc_test = encode_set(test, cfg);
    const auto enc_train = encode_set(train, cfg);
    fill(g, enc_test, enc_train, false);
    if (cfg.normalize) normalize_rows_cols(g, self_kernels(enc_test), self_kernels(enc_train));
    return g;
}

PsdReport psd_check(const Eigen::MatrixXd &g) {
    if (g.rows() != g.cols() || g.rows() == 0) throw ValidationError("psd_check needs a nonempty square matrix");
    const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("psd_check: eigensolver failed");
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

PsdReport psd_check(const GramMatrix &g) { return psd_check(Eigen::MatrixXd(g.values)); }

RankReport effective_rank(const NoiseEnsemble &ens, double tol) {
    if (ens.size() < 1) throw ValidationError("effective_rank: empty ensemble");
    const Eigen::MatrixXcd e = ens.matrix();
    const Eigen::MatrixXcd overlap = (e.adjoint() * e) / static_cast<double>(ens.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(overlap, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("effective_rank: eigensolver failed");
    RankReport r;
    const auto &ev = es.eigenvalues();
    for (Eigen::Index k = ev.size() - 1; k >= 0; --k) {
        r.eigenvalues.push_back(ev[k]);
        if (ev[k] > tol) ++r.rank;
        r.purity += ev[k] * ev[k];
    }
    return r;
}

void write_gram(const std::filesystem::path &path, const GramMatrix &g) {
    if (g.rows() < 0 || g.cols() < 0) throw ValidationError("write_gram: bad shape");
    std::string buf(kMagic, 4);
    put_u32(buf, kVersion);
    buf.push_back(static_cast<char>(g.kind_tag));
    put_u32(buf, static_cast<std::uint32_t>(g.rows()));
    put_u32(buf, static_cast<std::uint32_t>(g.cols()));
    buf.append(reinterpret_cast<const char *>(g.digest.bytes.data()), 32);
    for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) put_u64(buf, std::bit_cast<std::uint64_t>(g.values(i, j)));
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ValidationError("cannot write " + tmp.string());
        f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!f) throw ValidationError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

GramMatrix read_gram(const std::filesystem::path &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open " + path.string());
    const std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto *p = reinterpret_cast<const unsigned char *>(buf.data());
    if (buf.size() < kHeaderBytes) throw ParseError("QKGM header truncated", buf.size());
    if (std::memcmp(p, kMagic, 4) != 0) throw ParseError("bad QKGM magic", 0);
    if (get_u32(p + 4) != kVersion) throw ParseError("unsupported QKGM version", 4);
    GramMatrix g;
    g.kind_tag = p[8];
    const std::uint32_t rows = get_u32(p + 9);
    const std::uint32_t cols = get_u32(p + 13);
    std::memcpy(g.digest.bytes.data(), p + 17, 32);
    const std::uint64_t want = kHeaderBytes + 8ull * rows * cols;
    if (buf.size() < want) throw ParseError("QKGM payload truncated", buf.size());
    if (buf.size() > want) throw ParseError("trailing bytes after QKGM payload", want);
    g.values.resize(rows, cols);
    const unsigned char *v = p + kHeaderBytes;
    for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j, v += 8) g.values(i, j) = std::bit_cast<double>(get_u64(v));
    g.row_ids.resize(rows);
    g.col_ids.resize(cols);
    for (std::uint32_t i = 0; i < rows; ++i) g.row_ids[i] = i;
    for (std::uint32_t j = 0; j < cols; ++j) g.col_ids[j] = j;
    return g;
}

GramCache::GramCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

std::filesystem::path GramCache::path_for(const Digest &d) const { return dir_ / (d.hex() + ".qkgm"); }

std::optional<GramMatrix> GramCache::load(const Digest &d) const {
    const auto p = path_for(d);
    if (!std::filesystem::exists(p)) return std::nullopt;
    GramMatrix g = read_gram(p);
    if (!(g.digest == d)) return std::nullopt;
    return g;
}

void GramCache::store(const GramMatrix &g) const { write_gram(path_for(g.digest), g); }

GramMatrix cached_gram(const GramCache *cache, const FeatureSet &train, const KernelConfig &cfg, bool *hit) {
    if (hit) *hit = false;
    if (cache) {
        if (auto g = cache->load(gram_digest(train, cfg))) {
            g->row_ids = g->col_ids = train.ids;
            if (hit) *hit = true;
            return *g;
        }
    }
    GramMatrix g = gram(train, cfg);
    if (cache) cache->store(g);
    return g;
}

GramMatrix cached_cross_gram(const GramCache *cache, const FeatureSet &test, const FeatureSet &train,
                             const KernelConfig &cfg, bool *hit) {
    if (hit) *hit = false;
    if (cache) {
        if (auto g = cache->load(cross_gram_digest(test, train, cfg))) {
            g->row_ids = test.ids;
            g->col_ids = train.ids;
            if (hit) *hit = true;
            return *g;
        }
    }
    GramMatrix g = cross_gram(test, train, cfg);
    if (cache) cache->store(g);
    return g;
}

GramPair cached_gram_pair(const GramCache *cache, const FeatureSet &train, const FeatureSet &test,
                          const KernelConfig &cfg) {
    cfg.validate();
    train.validate();
    test.validate();
    if (test.dim() != train.dim()) throw ValidationError("feature dimension mismatch between train and test");
    GramPair out;
    std::optional<GramMatrix> tr, te;
    if (cache) {
        tr = cache->load(gram_digest(train, cfg));
        te = cache->load(cross_gram_digest(test, train, cfg));
    }
    out.train_hit = tr.has_value();
    out.test_hit = te.has_value();
    if (!is_quantum(cfg.kind) || (tr && te)) {
        out.train = tr ? *tr : gram(train, cfg);
        out.test = te ? *te : cross_gram(test, train, cfg);
    } else {
        const auto enc_train = encode_set(train, cfg);
        const std::vector<double> train_self = self_kernels(enc_train);
        if (tr) {
            out.train = *tr;
        } else {
            GramMatrix &g = out.train;
            g.kind_tag = kind_tag(cfg);
            g.digest = gram_digest(train, cfg);
            fill(g, enc_train, enc_train, true);
            if (cfg.normalize) {
                normalize_rows_cols(g, train_self, train_self);
                for (int i = 0; i < g.rows(); ++i) g.values(i, i) = 1.0;
            }
        }
        if (te) {
            out.test = *te;
        } else {
            const auto enc_test = encode_set(test, cfg);
            GramMatrix &g = out.test;
            g.kind_tag = kind_tag(cfg);
            g.digest = cross_gram_digest(test, train, cfg);
            fill(g, enc_test, enc_train, false);
            if (cfg.normalize) normalize_rows_cols(g, self_kernels(enc_test), train_self);
        }
    }
    out.train.row_ids = out.train.col_ids = train.ids;
    out.test.row_ids = test.ids;
    out.test.col_ids = train.ids;
    if (cache && !out.train_hit) cache->store(out.train);
    if (cache && !out.test_hit) cache->store(out.test);
    return out;
}

}  // namespace qklab
