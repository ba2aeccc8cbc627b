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

#include "qklab/svr.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "common/parallel.h"
#include "qklab/errors.h"
#include "qklab/text_util.h"

namespace qklab {
namespace {

constexpr double kTau = 1e-12;

void check_labels(std::span<const double> y, Eigen::Index n) {
    if (static_cast<Eigen::Index>(y.size()) != n) throw ValidationError("label count does not match the Gram size");
    for (double v : y) {
        if (!std::isfinite(v)) throw ValidationError("labels must be finite");
    }
}

// LIBSVM-style solver on [alpha; alpha*] with y = [+1...; -1...].
class Smo {
   public:
    Smo(const Eigen::MatrixXd &k, std::span<const double> z, double C, double eps)
        : k_(k), n_(static_cast<int>(k.rows())), C_(C), alpha_(2 * n_, 0.0), grad_(2 * n_), p_(2 * n_) {
        for (int i = 0; i < n_; ++i) {
            p_[i] = eps - z[i];
            p_[i + n_] = eps + z[i];
        }
        grad_ = p_;
    }

    double q(int i, int j) const { return sign(i) * sign(j) * k_(i % n_, j % n_); }
    double sign(int t) const { return t < n_ ? 1.0 : -1.0; }
    bool in_up(int t) const { return t < n_ ? alpha_[t] < C_ : alpha_[t] > 0.0; }
    bool in_low(int t) const { return t < n_ ? alpha_[t] > 0.0 : alpha_[t] < C_; }

    /// Returns the violation m - M and the selected pair.
    double select(int &i, int &j) const {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        i = j = -1;
        for (int t = 0; t < 2 * n_; ++t) {
            const double v = -sign(t) * grad_[t];
            if (in_up(t) && v > gmax) gmax = v, i = t;
            if (in_low(t) && v < gmin) gmin = v, j = t;
        }
        if (i < 0 || j < 0) return 0.0;
        return gmax - gmin;
    }

    void update(int i, int j) {
        const double old_i = alpha_[i], old_j = alpha_[j];
        double &ai = alpha_[i];
        double &aj = alpha_[j];
        const double qii = q(i, i), qjj = q(j, j), qij = q(i, j);
        if (sign(i) != sign(j)) {
            double quad = qii + qjj + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad_[i] - grad_[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) aj = 0.0, ai = diff;
            } else if (ai < 0.0) {
                ai = 0.0, aj = -diff;
            }
            if (diff > 0.0) {
                if (ai > C_) ai = C_, aj = C_ - diff;
            } else if (aj > C_) {
                aj = C_, ai = C_ + diff;
            }
        } else {
            double quad = qii + qjj - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad_[i] - grad_[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > C_) {
                if (ai > C_) ai = C_, aj = sum - C_;
            } else if (aj < 0.0) {
                aj = 0.0, ai = sum;
            }
            if (sum > C_) {
                if (aj > C_) aj = C_, ai = sum - C_;
            } else if (ai < 0.0) {
                ai = 0.0, aj = sum;
            }
        }
        const double di = ai - old_i, dj = aj - old_j;
        for (int t = 0; t < 2 * n_; ++t) grad_[t] += q(t, i) * di + q(t, j) * dj;
    }

    /// 1/2 a^T Q a + p^T a.
    double primal_form() const {
        double f = 0.0;
        for (int t = 0; t < 2 * n_; ++t) f += alpha_[t] * (grad_[t] + p_[t]);
        return 0.5 * f;
    }

    double rho() const {
        double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
        int n_free = 0;
        for (int t = 0; t < 2 * n_; ++t) {
            const double yg = sign(t) * grad_[t];
            if (alpha_[t] >= C_) {
                if (sign(t) < 0) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else if (alpha_[t] <= 0.0) {
                if (sign(t) > 0) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else {
                ++n_free;
                sum_free += yg;
            }
        }
        return n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
    }

    std::vector<double> beta() const {
        std::vector<double> b(n_);
        for (int i = 0; i < n_; ++i) b[i] = alpha_[i] - alpha_[i + n_];
        return b;
    }

   private:
    const Eigen::MatrixXd &k_;
    int n_;
    double C_;
    std::vector<double> alpha_, grad_, p_;
};

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

SvrModel train_svr(const Eigen::MatrixXd &k_in, std::span<const double> y, const SvrOptions &opts,
                   const Digest &digest) {
    if (k_in.rows() != k_in.cols() || k_in.rows() == 0) throw ValidationError("training Gram must be square");
    if (!k_in.allFinite()) throw ValidationError("training Gram has non-finite entries");
    check_labels(y, k_in.rows());
    if (!(opts.C > 0.0) || !std::isfinite(opts.C)) throw ValidationError("C must be > 0");
    if (!(opts.epsilon >= 0.0) || !std::isfinite(opts.epsilon)) throw ValidationError("epsilon must be >= 0");
    if (!(opts.tol > 0.0)) throw ValidationError("tol must be > 0");
    const int n = static_cast<int>(k_in.rows());

    SvrModel m;
    m.C = opts.C;
    m.epsilon = opts.epsilon;
    m.kernel_digest = digest;

    Eigen::MatrixXd k = 0.5 * (k_in + k_in.transpose());
    const PsdReport psd = psd_check(k);
    if (psd.min_eigenvalue < -1e-6 * std::max(psd.max_eigenvalue, 0.0)) {
        throw ValidationError("training Gram is not positive semidefinite (min eigenvalue " +
                              format_double(psd.min_eigenvalue) + ")");
    }
    if (psd.min_eigenvalue < 0.0) {
        m.diag_shift = -psd.min_eigenvalue + 1e-10;
        k.diagonal().array() += m.diag_shift;
    }

    std::vector<double> z(y.begin(), y.end());
    if (opts.standardize_labels) {
        const double mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
        double var = 0.0;
        for (double v : z) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / n);
        m.label_mean = mean;
        m.label_scale = sd > 0.0 ? sd : 1.0;
        for (double &v : z) v = (v - m.label_mean) / m.label_scale;
    }

    Smo smo(k, z, opts.C, opts.epsilon);
    const long long max_iter = opts.max_iter > 0 ? opts.max_iter : 100000LL * n;
    int i = -1, j = -1;
    double violation = smo.select(i, j);
    long long it = 0;
    while (violation > opts.tol && it < max_iter) {
        smo.update(i, j);
        ++it;
        if (opts.objective_trace) opts.objective_trace->push_back(-smo.primal_form());
        violation = smo.select(i, j);
    }
    m.iterations = it;
    m.kkt_violation = std::max(violation, 0.0);
    m.converged = violation <= opts.tol;
    m.beta = smo.beta();
    m.b = -smo.rho();
    m.dual_objective = -smo.primal_form();
    for (int t = 0; t < n; ++t) {
        if (m.beta[t] != 0.0) m.support_indices.push_back(t);
    }
    return m;
}

SvrModel train_svr(const GramMatrix &gram, std::span<const double> y, const SvrOptions &opts) {
    if (gram.rows() != gram.cols()) throw ValidationError("training Gram must be square");
    return train_svr(Eigen::MatrixXd(gram.values), y, opts, gram.digest);
}

double predict(const SvrModel &model, std::span<const double> row) {
    if (static_cast<int>(row.size()) != model.size()) throw ValidationError("kernel row length does not match model");
    double f = model.b;
    for (int j : model.support_indices) f += model.beta[j] * row[j];
    return model.label_scale * f + model.label_mean;
}

std::vector<double> predict_all(const SvrModel &model, const GramMatrix &cross) {
    if (cross.cols() != model.size()) throw ValidationError("cross Gram width does not match model");
    std::vector<double> out(cross.rows());
    for (int i = 0; i < cross.rows(); ++i) {
        out[i] = predict(model, std::span<const double>(cross.values.row(i).data(), cross.cols()));
    }
    return out;
}

double weight_norm(const SvrModel &model, const GramMatrix &gram) {
    if (!(gram.digest == model.kernel_digest)) throw ValidationError("model was not trained on this Gram");
    if (gram.rows() != model.size() || gram.cols() != model.size()) throw ValidationError("Gram size mismatch");
    const Eigen::Map<const Eigen::VectorXd> b(model.beta.data(), model.size());
    const double w = b.dot(Eigen::MatrixXd(gram.values) * b);
    if (w < 0.0 && w >= -1e-10) return 0.0;
    if (w < 0.0) throw NumericalError("negative weight norm " + format_double(w));
    return w;
}

double svr_dual_objective(const Eigen::MatrixXd &k, std::span<const double> y, std::span<const double> beta,
                          double epsilon) {
    const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(beta.size()));
    const Eigen::Map<const Eigen::VectorXd> yy(y.data(), static_cast<Eigen::Index>(y.size()));
    return -0.5 * b.dot(k * b) - epsilon * b.cwiseAbs().sum() + yy.dot(b);
}

double mse(std::span<const double> p, std::span<const double> t) {
    if (p.size() != t.size() || p.empty()) throw ValidationError("mse needs equal nonempty sequences");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
    return s / static_cast<double>(p.size());
}

double r2_score(std::span<const double> p, std::span<const double> t) {
    if (p.size() != t.size() || p.empty()) throw ValidationError("r2 needs equal nonempty sequences");
    const double mean = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
    double tot = 0.0;
    for (double v : t) tot += (v - mean) * (v - mean);
    if (!(tot > 0.0)) throw ValidationError("r2 undefined for constant ground truth");
    return 1.0 - mse(p, t) * static_cast<double>(t.size()) / tot;
}

CvResult cross_validate(const Eigen::MatrixXd &k, std::span<const double> y, std::vector<double> C_grid,
                        std::vector<double> eps_grid, int k_folds, std::uint64_t seed, const SvrOptions &base) {
    if (k.rows() != k.cols()) throw ValidationError("cross_validate needs a square Gram");
    check_labels(y, k.rows());
    C_grid = sorted_unique(std::move(C_grid));
    eps_grid = sorted_unique(std::move(eps_grid));
    if (C_grid.empty() || eps_grid.empty()) throw ValidationError("hyperparameter grids must be nonempty");
    if (k_folds < 2) throw ValidationError("k_folds must be >= 2");
    const int n = static_cast<int>(k.rows());
    if (k_folds > n) throw ValidationError("more folds than samples");

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<int>> test_idx(k_folds), train_idx(k_folds);
    for (int r = 0; r < n; ++r) test_idx[r % k_folds].push_back(perm[r]);
    for (int f = 0; f < k_folds; ++f) {
        std::sort(test_idx[f].begin(), test_idx[f].end());
        for (int i = 0; i < n; ++i) {
            if (!std::binary_search(test_idx[f].begin(), test_idx[f].end(), i)) train_idx[f].push_back(i);
        }
    }

    const int n_cells = static_cast<int>(C_grid.size() * eps_grid.size());
    std::vector<double> sse(static_cast<std::size_t>(n_cells) * k_folds, 0.0);
    internal::parallel_for(static_cast<std::int64_t>(n_cells) * k_folds, [&](std::int64_t job) {
        const int cell = static_cast<int>(job / k_folds), f = static_cast<int>(job % k_folds);
        const auto &tr = train_idx[f];
        const auto &te = test_idx[f];
        Eigen::MatrixXd ks(tr.size(), tr.size());
        std::vector<double> ys(tr.size());
        for (std::size_t a = 0; a < tr.size(); ++a) {
            ys[a] = y[tr[a]];
            for (std::size_t b = 0; b < tr.size(); ++b) ks(a, b) = k(tr[a], tr[b]);
        }
        SvrOptions o = base;
        o.objective_trace = nullptr;
        o.C = C_grid[cell / eps_grid.size()];
        o.epsilon = eps_grid[cell % eps_grid.size()];
        const SvrModel m = train_svr(ks, ys, o);
        std::vector<double> row(tr.size());
        double s = 0.0;
        for (int t : te) {
            for (std::size_t b = 0; b < tr.size(); ++b) row[b] = k(t, tr[b]);
            const double d = predict(m, row) - y[t];
            s += d * d;
        }
        sse[job] = s;
    });

    CvResult r;
    r.best_mse = std::numeric_limits<double>::infinity();
    for (int cell = 0; cell < n_cells; ++cell) {
        double s = 0.0;
        for (int f = 0; f < k_folds; ++f) s += sse[static_cast<std::size_t>(cell) * k_folds + f];
        CvCell c{C_grid[cell / eps_grid.size()], eps_grid[cell % eps_grid.size()], s / n};
        r.cells.push_back(c);
        if (c.mse < r.best_mse) {
            r.best_mse = c.mse;
            r.best_C = c.C;
            r.best_epsilon = c.epsilon;
        }
    }
    return r;
}

std::string model_to_text(const SvrModel &m) {
    std::vector<std::string> beta, sv;
    for (double v : m.beta) beta.push_back(format_double(v));
    for (int i : m.support_indices) sv.push_back(std::to_string(i));
    std::ostringstream o;
    o << "# qklab svr model\n"
      << "format = 1\n"
      << "n = " << m.size() << "\n"
      << "C = " << format_double(m.C) << "\n"
      << "epsilon = " << format_double(m.epsilon) << "\n"
      << "b = " << format_double(m.b) << "\n"
      << "diag_shift = " << format_double(m.diag_shift) << "\n"
      << "label_mean = " << format_double(m.label_mean) << "\n"
      << "label_scale = " << format_double(m.label_scale) << "\n"
      << "iterations = " << m.iterations << "\n"
      << "converged = " << (m.converged ? "true" : "false") << "\n"
      << "kkt_violation = " << format_double(m.kkt_violation) << "\n"
      << "dual_objective = " << format_double(m.dual_objective) << "\n"
      << "kernel_digest = " << m.kernel_digest.hex() << "\n"
      << "support = " << join(sv, ", ") << "\n"
      << "beta = " << join(beta, ", ") << "\n";
    return o.str();
}

SvrModel model_from_text(const std::string &text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw ValidationError("model line " + std::to_string(lineno) + ": no '='");
        kv[std::string(trim(t.substr(0, eq)))] = std::string(trim(t.substr(eq + 1)));
    }
    auto get = [&](const std::string &key) -> const std::string & {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ValidationError("model file is missing '" + key + "'");
        return it->second;
    };
    if (get("format") != "1") throw ValidationError("unsupported model format");
    SvrModel m;
    const long long n = parse_int(get("n"));
    m.C = parse_double(get("C"));
    m.epsilon = parse_double(get("epsilon"));
    m.b = parse_double(get("b"));
    m.diag_shift = parse_double(get("diag_shift"));
    m.label_mean = parse_double(get("label_mean"));
    m.label_scale = parse_double(get("label_scale"));
    m.iterations = parse_int(get("iterations"));
    const auto &conv = get("converged");
    if (conv != "true" && conv != "false") throw ValidationError("converged must be true or false");
    m.converged = conv == "true";
    m.kkt_violation = parse_double(get("kkt_violation"));
    m.dual_objective = parse_double(get("dual_objective"));
    m.kernel_digest = Digest::parse_hex(get("kernel_digest"));
    for (const auto &s : split(get("support"), ',')) m.support_indices.push_back(static_cast<int>(parse_int(s)));
    for (const auto &s : split(get("beta"), ',')) m.beta.push_back(parse_double(s));
    if (static_cast<long long>(m.beta.size()) != n) throw ValidationError("beta length does not match n");
    for (int i : m.support_indices) {
        if (i < 0 || i >= n) throw ValidationError("support index out of range");
    }
    return m;
}

void write_model(const std::filesystem::path &path, const SvrModel &m) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ValidationError("cannot write " + path.string());
    f << model_to_text(m);
    if (!f) throw ValidationError("short write to " + path.string());
}

SvrModel read_model(const std::filesystem::path &path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return model_from_text(ss.str());
}

}  // namespace qklab
