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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "common/parallel.h"
#include "qklab/errors.h"
#include "qklab/text_util.h"

namespace qklab {
namespace {

std::string slurp(const std::filesystem::path &p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw ValidationError("cannot open " + p.string());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

std::uint32_t be32(const std::string &b, std::size_t off) {
    if (off + 4 > b.size()) throw ParseError("IDX header truncated", b.size());
    const auto *p = reinterpret_cast<const unsigned char *>(b.data() + off);
    return std::uint32_t{p[0]} << 24 | std::uint32_t{p[1]} << 16 | std::uint32_t{p[2]} << 8 | std::uint32_t{p[3]};
}

const char *split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

}  // namespace

ImageSet read_idx(const std::filesystem::path &images, const std::filesystem::path &labels) {
    const std::string b = slurp(images);
    if (be32(b, 0) != 0x00000803u) throw ParseError("bad IDX image magic", 0);
    const std::uint32_t n = be32(b, 4), rows = be32(b, 8), cols = be32(b, 12);
    const std::uint64_t need = 16 + std::uint64_t{n} * rows * cols;
    if (b.size() < need) throw ParseError("IDX image payload truncated", b.size());
    ImageSet out;
    out.height = static_cast<int>(rows);
    out.width = static_cast<int>(cols);
    out.pixels.resize(n, static_cast<Eigen::Index>(rows) * cols);
    const auto *p = reinterpret_cast<const unsigned char *>(b.data() + 16);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t k = 0; k < rows * cols; ++k) out.pixels(i, k) = p[std::size_t{i} * rows * cols + k] / 255.0;
    if (!labels.empty()) {
        const std::string l = slurp(labels);
        if (be32(l, 0) != 0x00000801u) throw ParseError("bad IDX label magic", 0);
        const std::uint32_t m = be32(l, 4);
        if (m != n) throw ParseError("label count " + std::to_string(m) + " does not match image count " + std::to_string(n), 4);
        if (l.size() < 8 + std::uint64_t{m}) throw ParseError("IDX label payload truncated", l.size());
        out.labels.resize(m);
        for (std::uint32_t i = 0; i < m; ++i) out.labels[i] = static_cast<unsigned char>(l[8 + i]);
    }
    return out;
}

ImageSet synth_images(int n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("synth_images needs n >= 1");
    constexpr int side = 28;
    ImageSet out;
    out.height = out.width = side;
    out.pixels.resize(n, side * side);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> centre(6.0, 22.0), width(1.5, 4.0), amp(0.4, 1.0);
    std::uniform_int_distribution<int> count(2, 5);
    for (int i = 0; i < n; ++i) {
        const int blobs = count(rng);
        std::vector<double> r0(blobs), c0(blobs), w(blobs), a(blobs), stretch(blobs);
        for (int k = 0; k < blobs; ++k) {
            r0[k] = centre(rng);
            c0[k] = centre(rng);
            w[k] = width(rng);
            a[k] = amp(rng);
            stretch[k] = 0.5 + amp(rng);
        }
        double peak = 0.0;
        for (int r = 0; r < side; ++r) {
            for (int c = 0; c < side; ++c) {
                double v = 0.0;
                for (int k = 0; k < blobs; ++k) {
                    const double dr = (r - r0[k]) / w[k], dc = (c - c0[k]) / (w[k] * stretch[k]);
                    v += a[k] * std::exp(-0.5 * (dr * dr + dc * dc));
                }
                out.pixels(i, r * side + c) = v;
                peak = std::max(peak, v);
            }
        }
        if (peak > 0.0) out.pixels.row(i) /= peak;
    }
    return out;
}

double PcaModel::explained_variance_ratio() const {
    return total_variance > 0.0 ? eigenvalues.sum() / total_variance : 0.0;
}

PcaModel pca_fit(const Eigen::MatrixXd &x, int k) {
    if (x.rows() < 2) throw ValidationError("pca_fit needs at least two samples");
    if (k < 1 || k > std::min<Eigen::Index>(x.rows(), x.cols())) {
        throw ValidationError("pca component count " + std::to_string(k) + " out of range");
    }
    if (!x.allFinite()) throw ValidationError("pca_fit: non-finite input");
    PcaModel m;
    m.mean = x.colwise().mean();
    const Eigen::MatrixXd c = x.rowwise() - m.mean.transpose();
    const Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(x.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw NumericalError("pca_fit: eigensolver failed");
    const Eigen::Index d = cov.rows();
    m.components.resize(k, d);
    m.eigenvalues.resize(k);
    m.total_variance = cov.trace();
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd v = es.eigenvectors().col(d - 1 - j);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0.0) v = -v;
        m.components.row(j) = v.transpose();
        m.eigenvalues[j] = std::max(0.0, es.eigenvalues()[d - 1 - j]);
    }
    return m;
}

Eigen::MatrixXd pca_transform(const PcaModel &m, const Eigen::MatrixXd &x) {
    if (x.cols() != m.mean.size()) throw ValidationError("pca_transform: dimension mismatch");
    return (x.rowwise() - m.mean.transpose()) * m.components.transpose();
}

Eigen::MatrixXd pca_inverse(const PcaModel &m, const Eigen::MatrixXd &z) {
    if (z.cols() != m.k()) throw ValidationError("pca_inverse: dimension mismatch");
    return (z * m.components).rowwise() + m.mean.transpose();
}

bool MinMaxModel::any_degenerate() const { return std::any_of(degenerate.begin(), degenerate.end(), [](bool b) { return b; }); }

MinMaxModel minmax_fit(const Eigen::MatrixXd &x) {
    if (x.rows() < 1) throw ValidationError("minmax_fit needs data");
    MinMaxModel m;
    m.min = x.colwise().minCoeff();
    m.max = x.colwise().maxCoeff();
    m.degenerate.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) m.degenerate[j] = !(m.max[j] > m.min[j]);
    return m;
}

Eigen::MatrixXd minmax_apply(const MinMaxModel &m, const Eigen::MatrixXd &x) {
    if (x.cols() != m.min.size()) throw ValidationError("minmax_apply: dimension mismatch");
    Eigen::MatrixXd z(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (m.degenerate[j]) {
            z.col(j).setZero();
        } else {
            z.col(j) = (x.col(j).array() - m.min[j]) / (m.max[j] - m.min[j]);
        }
    }
    return z;
}

Eigen::MatrixXd minmax_inverse(const MinMaxModel &m, const Eigen::MatrixXd &z) {
    if (z.cols() != m.min.size()) throw ValidationError("minmax_inverse: dimension mismatch");
    Eigen::MatrixXd x(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        if (m.degenerate[j]) {
            x.col(j).setConstant(m.min[j]);
        } else {
            x.col(j) = z.col(j).array() * (m.max[j] - m.min[j]) + m.min[j];
        }
    }
    return x;
}

void LabeledDataset::validate() const {
    const auto n = static_cast<std::size_t>(size());
    if (n == 0 || dim() == 0) throw ValidationError("dataset is empty");
    if (labels.size() != n || split.size() != n) throw ValidationError("dataset columns have different lengths");
    if (!s.empty() && (s.size() != n || T.size() != n)) throw ValidationError("dataset env columns have wrong length");
    if (!features.allFinite()) throw ValidationError("dataset has non-finite features");
    for (double v : labels) {
        if (!std::isfinite(v)) throw ValidationError("dataset has non-finite labels");
    }
}

std::vector<int> LabeledDataset::indices(Split which) const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i) {
        if (split[i] == which) out.push_back(i);
    }
    return out;
}

FeatureSet LabeledDataset::feature_set(Split which) const {
    const auto idx = indices(which);
    FeatureSet f;
    f.x.resize(static_cast<Eigen::Index>(idx.size()), dim());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        f.x.row(static_cast<Eigen::Index>(r)) = features.row(idx[r]);
        f.ids.push_back(static_cast<std::uint64_t>(idx[r]));
    }
    return f;
}

std::vector<double> LabeledDataset::split_labels(Split which) const {
    std::vector<double> out;
    for (int i : indices(which)) out.push_back(labels[i]);
    return out;
}

LabeledDataset preprocess(const LabeledDataset &raw, const PreprocessOptions &opts, bool *degenerate) {
    raw.validate();
    Eigen::MatrixXd fit_rows = raw.features;
    if (opts.train_only) {
        const auto idx = raw.indices(Split::kTrain);
        fit_rows.resize(static_cast<Eigen::Index>(idx.size()), raw.dim());
        for (std::size_t r = 0; r < idx.size(); ++r) fit_rows.row(static_cast<Eigen::Index>(r)) = raw.features.row(idx[r]);
    }
    const PcaModel pca = pca_fit(fit_rows, opts.k);
    const MinMaxModel mm = minmax_fit(pca_transform(pca, fit_rows));
    if (degenerate) *degenerate = mm.any_degenerate();
    LabeledDataset out = raw;
    out.features = minmax_apply(mm, pca_transform(pca, raw.features));
    return out;
}

double benchmark_label(std::span<const double> x, std::span<const double> theta) {
    if (x.size() != theta.size()) throw ValidationError("benchmark_label: theta and x lengths differ");
    StateVector psi = encode_zz(x);
    apply_zz_layer(psi, theta);
    return expectation_z(psi, 1);
}

std::vector<double> benchmark_theta(int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> theta(d);
    for (auto &t : theta) t = u(rng);
    return theta;
}

LabeledDataset gen_benchmark(const ImageSet &images, const BenchmarkOptions &opts) {
    if (opts.n_train < 1 || opts.n_test < 0) throw ValidationError("benchmark split sizes must be positive");
    const int n = opts.n_train + opts.n_test;
    if (images.size() < n) {
        throw ValidationError("benchmark needs " + std::to_string(n) + " images, got " + std::to_string(images.size()));
    }
    std::vector<int> perm(images.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(opts.split_seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    LabeledDataset raw;
    raw.features.resize(n, images.pixels.cols());
    for (int i = 0; i < n; ++i) raw.features.row(i) = images.pixels.row(perm[i]);
    raw.labels.assign(n, 0.0);
    raw.split.resize(n);
    for (int i = 0; i < n; ++i) raw.split[i] = i < opts.n_train ? Split::kTrain : Split::kTest;
    LabeledDataset ds = preprocess(raw, {opts.d, opts.train_only_preprocessing});
    const auto theta = benchmark_theta(opts.d, opts.theta_seed);
    internal::parallel_for(n, [&](std::int64_t i) {
        std::vector<double> x(opts.d);
        for (int k = 0; k < opts.d; ++k) x[k] = ds.features(i, k);
        ds.labels[i] = benchmark_label(x, theta);
    });
    return ds;
}

void write_dataset_csv(const std::filesystem::path &path, const LabeledDataset &ds) {
    ds.validate();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ValidationError("cannot write " + path.string());
    if (ds.has_env()) f << "s,T,";
    for (int k = 1; k <= ds.dim(); ++k) f << 'f' << k << ',';
    f << "label,split\n";
    for (int i = 0; i < ds.size(); ++i) {
        if (ds.has_env()) f << format_double(ds.s[i]) << ',' << format_double(ds.T[i]) << ',';
        for (int k = 0; k < ds.dim(); ++k) f << format_double(ds.features(i, k)) << ',';
        f << format_double(ds.labels[i]) << ',' << split_name(ds.split[i]) << '\n';
    }
    if (!f) throw ValidationError("short write to " + path.string());
}

LabeledDataset read_dataset_csv(const std::filesystem::path &path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw ValidationError(path.string() + ": empty dataset file");
    const auto header = split(line, ',');
    int col_s = -1, col_t = -1, col_label = -1, col_split = -1;
    std::vector<int> fcols;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        const auto &h = header[c];
        if (h == "s") col_s = c;
        else if (h == "T") col_t = c;
        else if (h == "label") col_label = c;
        else if (h == "split") col_split = c;
        else if (h.size() > 1 && h[0] == 'f') {
            const long long k = parse_int(std::string_view(h).substr(1));
            if (k != static_cast<long long>(fcols.size()) + 1) throw ValidationError("feature columns out of order");
            fcols.push_back(c);
        } else {
            throw ValidationError("unknown dataset column '" + h + "'");
        }
    }
    if (col_label < 0 || col_split < 0 || fcols.empty()) throw ValidationError("dataset header lacks label/split/f1");
    if ((col_s < 0) != (col_t < 0)) throw ValidationError("dataset must have both s and T or neither");
    std::vector<std::vector<double>> rows;
    LabeledDataset ds;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": wrong number of columns");
        }
        std::vector<double> r;
        for (int c : fcols) r.push_back(parse_double(cells[c]));
        rows.push_back(std::move(r));
        ds.labels.push_back(parse_double(cells[col_label]));
        if (cells[col_split] == "train") ds.split.push_back(Split::kTrain);
        else if (cells[col_split] == "test") ds.split.push_back(Split::kTest);
        else throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad split value");
        if (col_s >= 0) {
            ds.s.push_back(parse_double(cells[col_s]));
            ds.T.push_back(parse_double(cells[col_t]));
        }
    }
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(fcols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < fcols.size(); ++k) ds.features(i, k) = rows[i][k];
    ds.validate();
    return ds;
}

}  // namespace qklab
