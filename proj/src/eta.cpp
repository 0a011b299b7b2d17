#include "exchnet/eta.hpp"

#include <algorithm>
#include <cmath>

#include "exchnet/dataset.hpp"
#include "exchnet/error.hpp"
#include "exchnet/rng.hpp"

namespace exchnet {

PairConfig classify_pair(const Dyad& a, const Dyad& b) {
    if (a.first == a.second || b.first == b.second) throw data_error("self-loop dyad in classify_pair");
    if (a == b) return PairConfig::Same;
    if (a.first == b.second && a.second == b.first) return PairConfig::Reciprocal;
    if (a.first == b.first) return PairConfig::SameSender;
    if (a.second == b.second) return PairConfig::SameReceiver;
    if (a.first == b.second || a.second == b.first) return PairConfig::SenderReceiver;
    return PairConfig::Disjoint;
}

namespace {

// xi in edge_index order as an n x n matrix with zero diagonal
Eigen::MatrixXd dyad_matrix(const Eigen::VectorXd& v, int n) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int idx = 0; idx < v.size(); ++idx) {
        auto [i, j] = edge_index_inverse(idx, n);
        M(i - 1, j - 1) = v[idx];
    }
    return M;
}

} // namespace

EtaVector estimate_eta_offdiag(const Eigen::VectorXd& xi, int n) {
    if (n < 3) throw data_error("eta2..eta5 require at least 3 nodes");
    const double N = static_cast<double>(n) * n - n;
    if (xi.size() != static_cast<Eigen::Index>(N)) throw data_error("xi has wrong length");
    Eigen::MatrixXd M = dyad_matrix(xi, n);
    Eigen::VectorXd row = M.rowwise().sum();
    Eigen::VectorXd col = M.colwise().sum();
    const double total = xi.sum();
    const double xbar = total / N;
    const double sum_sq = M.array().square().sum();
    const double sum_recip = (M.array() * M.transpose().array()).sum();

    const double s3_size = static_cast<double>(n) * (n - 1) * (n - 2);
    const double s5_size = 2.0 * s3_size;

    // Each centering term reduces to the square of the grand mean of xi once
    // the sums are taken over the configuration set.
    EtaVector eta;
    eta[1] = sum_recip / N - xbar * xbar;
    eta[2] = (row.squaredNorm() - sum_sq) / s3_size - xbar * xbar;
    eta[3] = (col.squaredNorm() - sum_sq) / s3_size - xbar * xbar;
    eta[4] = 2.0 * (row.dot(col) - sum_recip) / s5_size - xbar * xbar;
    eta[0] = 0.0;
    return eta;
}

double estimate_eta1_naive(const Eigen::VectorXd& xi, const Eigen::VectorXd& fitted_means) {
    const double N = static_cast<double>(xi.size());
    double mean = xi.mean();
    return xi.squaredNorm() / N - mean * mean - fitted_means.cwiseInverse().mean();
}

Eigen::VectorXd zeta_values(const Eigen::VectorXd& xi, const Eigen::VectorXd& fitted_means) {
    return xi.array().square() - 1.0 - fitted_means.array().inverse();
}

std::optional<double> kshorth(std::vector<double> points, int k, bool positive_center_only) {
    if (points.empty()) throw data_error("kshorth: empty input");
    const int N = static_cast<int>(points.size());
    if (k < 1 || k > N) throw data_error("kshorth: k must be in [1, N]");
    std::sort(points.begin(), points.end());
    bool found = false;
    double best_width = 0.0, best_center = 0.0;
    for (int a = 0; a + k - 1 < N; ++a) {
        double width = points[a + k - 1] - points[a];
        double center = 0.5 * (points[a] + points[a + k - 1]);
        if (positive_center_only && !(center > 0.0)) continue;
        // scanning in increasing left-endpoint order, so on a width tie the
        // earlier interval (smaller left endpoint) is kept
        if (!found || width < best_width ||
            (width == best_width && center < best_center)) {
            found = true;
            best_width = width;
            best_center = center;
        }
    }
    if (!found) return std::nullopt;
    return best_center;
}

CvTuneResult cv_tune_c(const Eigen::VectorXd& zeta, std::uint64_t seed) {
    const int N = static_cast<int>(zeta.size());
    if (N < 20) throw data_error("cv_tune_c requires at least 20 points");
    const double logN = std::log(static_cast<double>(N));
    CvTuneResult result;
    result.grid_lo = 2.0 / logN;
    const double neg_max = -zeta.maxCoeff();
    result.grid_hi = static_cast<double>((zeta.array() > neg_max).count()) / logN;
    if (!(result.grid_hi > result.grid_lo)) {
        result.c = result.grid_lo;
        result.degenerate_grid = true;
        return result;
    }

    constexpr int kGridPoints = 50;
    constexpr int kFolds = 10;
    std::vector<double> grid(kGridPoints);
    const double ratio = std::log(result.grid_hi / result.grid_lo) / (kGridPoints - 1);
    for (int t = 0; t < kGridPoints; ++t) grid[t] = result.grid_lo * std::exp(ratio * t);

    // seeded fold assignment (Fisher-Yates on the index vector)
    std::vector<int> order(N);
    for (int a = 0; a < N; ++a) order[a] = a;
    RngStream rng = RngStream(seed).derive(0x63762d666f6c6473ull);
    for (int a = N - 1; a > 0; --a)
        std::swap(order[a], order[rng.next_u64() % static_cast<std::uint64_t>(a + 1)]);

    std::vector<std::vector<double>> train(kFolds);
    std::vector<std::vector<double>> held(kFolds);
    for (int f = 0; f < kFolds; ++f) {
        train[f].reserve(N);
        for (int a = 0; a < N; ++a)
            (a % kFolds == f ? held[f] : train[f]).push_back(zeta[order[a]]);
        std::sort(train[f].begin(), train[f].end());
    }

    double best_mse = 0.0;
    bool have_best = false;
    result.c = result.grid_lo;
    for (double c : grid) {
        int k = static_cast<int>(std::ceil(c * logN));
        double mse_sum = 0.0;
        int mse_count = 0;
        for (int f = 0; f < kFolds; ++f) {
            int kf = std::min<int>(k, static_cast<int>(train[f].size()));
            auto est = kshorth(train[f], std::max(kf, 1), /*positive_center_only=*/true);
            if (!est) continue;
            double acc = 0.0;
            for (double v : held[f]) acc += (v - *est) * (v - *est);
            mse_sum += acc / static_cast<double>(held[f].size());
            ++mse_count;
        }
        if (mse_count == 0) continue;
        double mse = mse_sum / mse_count;
        if (!have_best || mse < best_mse) { // strict: ties keep the smaller c
            have_best = true;
            best_mse = mse;
            result.c = c;
        }
    }
    return result;
}

std::pair<double, bool> estimate_eta1_hybrid(double naive_eta1, const Eigen::VectorXd& zeta,
                                             double c) {
    if (naive_eta1 > 0.0) return {naive_eta1, false};
    const int N = static_cast<int>(zeta.size());
    int k = static_cast<int>(std::ceil(c * std::log(static_cast<double>(N))));
    k = std::clamp(k, 1, N);
    std::vector<double> pts(zeta.data(), zeta.data() + N);
    auto est = kshorth(std::move(pts), k, /*positive_center_only=*/true);
    if (!est)
        throw estimation_error(
            "k-shorth found no interval with a positive center; "
            "try a larger c or check the residual ratios");
    return {*est, true};
}

ParameterSpaceCheck check_parameter_space(const EtaVector& eta, int n) {
    if (n < 4) throw data_error("parameter space check requires n >= 4");
    const double e1 = eta[0], e2 = eta[1], e3 = eta[2], e4 = eta[3], e5 = eta[4];
    const double mag = std::max({1.0, std::fabs(e1), std::fabs(e2), std::fabs(e3),
                                 std::fabs(e4), std::fabs(e5)});

    ParameterSpaceCheck check;
    auto require = [&](double margin, double scale, const std::string& what) {
        if (margin < -1e-12 * std::max(1.0, scale)) {
            check.valid = false;
            check.violations.push_back(what);
        }
    };

    require(e1, mag, "eta1 >= 0");
    require(e1 - std::fabs(e2), mag, "-eta1 <= eta2 <= eta1");
    require(e5 + (e3 + e4) / 2.0 + (e2 + e1) / (2.0 * n - 4.0), mag,
            "eta5 >= -(eta3+eta4)/2 - (eta2+eta1)/(2n-4)");
    require((e1 + e2 - e3 - e4) / 2.0 - e5, mag, "eta5 <= (eta1+eta2-eta3-eta4)/2");
    require(e5 - (-e1 + e2 + e3 + e4) / 2.0, mag, "eta5 >= (-eta1+eta2+eta3+eta4)/2");

    const double nn = static_cast<double>(n);
    const double lhs = (nn - 3.0) * (e3 + e4) - 2.0 * e5 + 2.0 * e1;
    const double iota = (e4 * e4 + e3 * e3) * (nn * nn - 2.0 * nn + 1.0) +
                        4.0 * e5 * e5 * (nn * nn - 6.0 * nn + 9.0) +
                        2.0 * e3 * e4 * (1.0 - nn * nn + 2.0 * nn);
    const double kappa = e2 * e5 * (8.0 * nn - 24.0) + (e3 + e4) * e5 * (12.0 - 4.0 * nn) +
                         4.0 * e2 * (e2 - (e3 + e4));
    require(lhs * lhs - (iota + kappa), mag * mag * nn * nn,
            "{(n-3)(eta3+eta4)-2eta5+2eta1}^2 >= iota + kappa");
    return check;
}

StructuredOmegaE::StructuredOmegaE(EtaVector eta, int n) : eta_(eta), n_(n) {
    if (n < 3) throw data_error("Omega_e requires at least 3 nodes");
}

double StructuredOmegaE::entry(int idx_a, int idx_b) const {
    Dyad a = edge_index_inverse(idx_a, n_);
    Dyad b = edge_index_inverse(idx_b, n_);
    switch (classify_pair(a, b)) {
        case PairConfig::Same: return eta_[0];
        case PairConfig::Reciprocal: return eta_[1];
        case PairConfig::SameSender: return eta_[2];
        case PairConfig::SameReceiver: return eta_[3];
        case PairConfig::SenderReceiver: return eta_[4];
        case PairConfig::Disjoint: return 0.0;
    }
    return 0.0;
}

Eigen::MatrixXd StructuredOmegaE::materialize() const {
    const int N = n_ * n_ - n_;
    Eigen::MatrixXd O(N, N);
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) O(a, b) = entry(a, b);
    return O;
}

Eigen::VectorXd StructuredOmegaE::multiply(const Eigen::VectorXd& v) const {
    const int N = n_ * n_ - n_;
    if (v.size() != N) throw internal_error("Omega_e multiply: wrong vector length");
    Eigen::MatrixXd V = dyad_matrix(v, n_);
    Eigen::VectorXd row = V.rowwise().sum();
    Eigen::VectorXd col = V.colwise().sum();
    Eigen::VectorXd out(N);
    for (int idx = 0; idx < N; ++idx) {
        auto [i1, j1] = edge_index_inverse(idx, n_);
        int i = i1 - 1, j = j1 - 1;
        out[idx] = eta_[0] * V(i, j) + eta_[1] * V(j, i) + eta_[2] * (row[i] - V(i, j)) +
                   eta_[3] * (col[j] - V(i, j)) +
                   eta_[4] * (col[i] + row[j] - 2.0 * V(j, i));
    }
    return out;
}

namespace {

// power iteration on a symmetric operator; returns the dominant eigenvalue
// (signed, by Rayleigh quotient)
double dominant_eig(const StructuredOmegaE& omega, double shift, double tol, int max_iter) {
    const int N = omega.n_nodes() * omega.n_nodes() - omega.n_nodes();
    RngStream rng(0x65696721ull);
    Eigen::VectorXd v(N);
    for (int a = 0; a < N; ++a) v[a] = rng.next_normal();
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd w = (shift != 0.0) ? Eigen::VectorXd(shift * v - omega.multiply(v))
                                           : omega.multiply(v);
        double norm = w.norm();
        if (norm == 0.0) return 0.0;
        double rq = v.dot(w);
        w /= norm;
        if (it > 0 && std::fabs(rq - lambda) <= tol * std::max(1.0, std::fabs(rq))) {
            lambda = rq;
            break;
        }
        lambda = rq;
        v = w;
    }
    return lambda;
}

} // namespace

double StructuredOmegaE::lambda_max(double tol, int max_iter) const {
    const int N = n_ * n_ - n_;
    if (N <= 1600) return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(materialize())
                       .eigenvalues().maxCoeff();
    return dominant_eig(*this, 0.0, tol, max_iter);
}

double StructuredOmegaE::lambda_min(double tol, int max_iter) const {
    const int N = n_ * n_ - n_;
    if (N <= 1600) // dense up to n = 40; beyond that the matrix no longer fits comfortably
        return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(materialize())
            .eigenvalues().minCoeff();
    // Gershgorin upper bound as the spectral shift
    const double row_mag = std::fabs(eta_[0]) + std::fabs(eta_[1]) +
                           (n_ - 2) * (std::fabs(eta_[2]) + std::fabs(eta_[3])) +
                           (2 * n_ - 4) * std::fabs(eta_[4]);
    const double shift = row_mag + 1.0;
    return shift - dominant_eig(*this, shift, tol, max_iter);
}

EtaVector psd_correct(const EtaVector& eta, int n, double* correction_applied) {
    StructuredOmegaE omega(eta, n);
    double lmin = omega.lambda_min();
    EtaVector out = eta;
    double amount = 0.0;
    if (lmin < 0.0) {
        amount = -lmin + 1e-12;
        out[0] += amount;
    }
    if (correction_applied) *correction_applied = amount;
    return out;
}

double omega0_entry(int idx_a, int idx_b, int n, const EtaVector& eta,
                    const Eigen::VectorXd& fitted_means) {
    StructuredOmegaE omega(eta, n);
    double base = omega.entry(idx_a, idx_b) * fitted_means[idx_a] * fitted_means[idx_b];
    if (idx_a == idx_b) base += fitted_means[idx_a];
    return base;
}

Eigen::MatrixXd materialize_omega0(int n, const EtaVector& eta,
                                   const Eigen::VectorXd& fitted_means) {
    const int N = n * n - n;
    StructuredOmegaE omega(eta, n);
    Eigen::MatrixXd O(N, N);
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            O(a, b) = omega.entry(a, b) * fitted_means[a] * fitted_means[b] + (a == b ? fitted_means[a] : 0.0);
    return O;
}

EtaEstimate estimate_eta(const Eigen::VectorXd& xi, const Eigen::VectorXd& fitted_means, int n,
                         std::uint64_t seed, std::optional<double> c_override) {
    EtaEstimate est;
    est.eta = estimate_eta_offdiag(xi, n);
    est.naive_eta1 = estimate_eta1_naive(xi, fitted_means);
    if (est.naive_eta1 > 0.0) {
        est.eta[0] = est.naive_eta1;
    } else {
        Eigen::VectorXd zeta = zeta_values(xi, fitted_means);
        double c;
        if (c_override) {
            c = *c_override;
        } else {
            CvTuneResult cv = cv_tune_c(zeta, seed);
            c = cv.c;
            if (cv.degenerate_grid)
                est.warnings.push_back("degenerate CV grid; fell back to c = lower bound");
        }
        est.tuned_c = c;
        auto [eta1, shorth] = estimate_eta1_hybrid(est.naive_eta1, zeta, c);
        est.eta[0] = eta1;
        est.shorth_branch = shorth;
    }
    est.eta = psd_correct(est.eta, n, &est.psd_correction);
    return est;
}

} // namespace exchnet
