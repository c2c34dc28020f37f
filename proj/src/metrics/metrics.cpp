#include "arit/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arit/common/rng.hpp"

namespace arit::metrics {

using img::FloatMap;
using img::ImageTensor;

double psnr(const ImageTensor& a, const ImageTensor& b, double cap) {
    if (!a.same_shape(b)) throw DataError("psnr: shape mismatch");
    double se = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = double(a.data[i]) - double(b.data[i]);
        se += d * d;
    }
    double mse = se / double(a.size());
    if (mse < 1e-10) return cap;
    return -10.0 * std::log10(mse);
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(size_t(size) * size);
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double d2 = (y - c) * (y - c) + (x - c) * (x - c);
            double v = std::exp(-d2 / (2.0 * sigma * sigma));
            w[size_t(y) * size + x] = v;
            sum += v;
        }
    for (double& v : w) v /= sum;
    return w;
}

} // namespace

double ssim(const ImageTensor& a, const ImageTensor& b) {
    if (!a.same_shape(b)) throw DataError("ssim: shape mismatch");
    const int win = 11;
    if (a.height < win || a.width < win)
        throw DataError("ssim: image smaller than the 11x11 window");
    static const std::vector<double> w = gaussian_window(win, 1.5);
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

    double total = 0.0;
    std::int64_t count = 0;
    for (int c = 0; c < a.channels; ++c)
        for (int y = 0; y + win <= a.height; ++y)
            for (int x = 0; x + win <= a.width; ++x) {
                double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
                for (int dy = 0; dy < win; ++dy)
                    for (int dx = 0; dx < win; ++dx) {
                        double wv = w[size_t(dy) * win + dx];
                        double va = a.at(y + dy, x + dx, c);
                        double vb = b.at(y + dy, x + dx, c);
                        mx += wv * va;
                        my += wv * vb;
                        sxx += wv * va * va;
                        syy += wv * vb * vb;
                        sxy += wv * va * vb;
                    }
                double vx = sxx - mx * mx;
                double vy = syy - my * my;
                double cov = sxy - mx * my;
                double s = ((2 * mx * my + c1) * (2 * cov + c2)) /
                           ((mx * mx + my * my + c1) * (vx + vy + c2));
                total += s;
                ++count;
            }
    return total / double(count);
}

Moments moments_of(const Eigen::MatrixXd& feats) {
    const auto n = feats.rows();
    if (n < 2) throw DataError("distribution metrics need at least 2 samples");
    Moments m;
    m.mu = feats.colwise().mean();
    Eigen::MatrixXd centered = feats.rowwise() - m.mu.transpose();
    m.cov = centered.transpose() * centered / double(n - 1);
    return m;
}

namespace {

// Symmetric PSD square root with negative eigenvalues clipped at 0.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) ev[i] = ev[i] > 0.0 ? std::sqrt(ev[i]) : 0.0;
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

double fid_from_moments(const Moments& a, const Moments& b) {
    if (a.mu.size() != b.mu.size()) throw DataError("fid: feature dimension mismatch");
    const double mean_term = (a.mu - b.mu).squaredNorm();
    // Tr((Ca Cb)^{1/2}) = sum of sqrt eigenvalues of Ca^{1/2} Cb Ca^{1/2}
    Eigen::MatrixXd ra = psd_sqrt(a.cov);
    Eigen::MatrixXd inner = ra * b.cov * ra;
    inner = 0.5 * (inner + inner.transpose()); // symmetrize against fp drift
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner);
    double tr_sqrt = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        double ev = es.eigenvalues()[i];
        if (ev < -1e-8 * std::max(1.0, std::abs(es.eigenvalues().maxCoeff())))
            ev = 0.0; // clip genuine negatives
        tr_sqrt += ev > 0.0 ? std::sqrt(ev) : 0.0;
    }
    double value = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt;
    if (!std::isfinite(value)) throw NumericError("fid: non-finite result");
    return value;
}

double fid(const Eigen::MatrixXd& feats_a, const Eigen::MatrixXd& feats_b) {
    if (feats_a.cols() != feats_b.cols()) throw DataError("fid: feature dimension mismatch");
    return fid_from_moments(moments_of(feats_a), moments_of(feats_b));
}

namespace {

double poly3_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    double v = x.dot(y) / double(x.size()) + 1.0;
    return v * v * v;
}

// lexicographic canonical order of feature rows
std::vector<int> sorted_order(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
    std::vector<int> order = rows;
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        for (int c = 0; c < m.cols(); ++c) {
            if (m(i, c) < m(j, c)) return true;
            if (m(i, c) > m(j, c)) return false;
        }
        return false;
    });
    return order;
}

std::vector<int> sample_rows(int n, int m, Rng& rng) {
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < m; ++i) {
        int j = i + int(rng.uniform_int(0, n - 1 - i));
        std::swap(idx[size_t(i)], idx[size_t(j)]);
    }
    idx.resize(size_t(m));
    return idx;
}

} // namespace

double kid(const Eigen::MatrixXd& feats_a, const Eigen::MatrixXd& feats_b, int subset_size,
           int n_subsets, std::uint64_t seed) {
    if (feats_a.cols() != feats_b.cols()) throw DataError("kid: feature dimension mismatch");
    if (subset_size < 2) throw DataError("kid: subset_size must be >= 2");
    if (feats_a.rows() < subset_size || feats_b.rows() < subset_size)
        throw DataError("kid: fewer samples than subset_size");
    if (n_subsets < 1) throw DataError("kid: n_subsets must be >= 1");

    const int m = subset_size;
    double total = 0.0;
    for (int s = 0; s < n_subsets; ++s) {
        Rng rng(hash64({seed, std::uint64_t(s)}));
        std::vector<int> ia = sample_rows(int(feats_a.rows()), m, rng);
        std::vector<int> ib = sample_rows(int(feats_b.rows()), m, rng);
        ia = sorted_order(feats_a, ia);
        ib = sorted_order(feats_b, ib);

        double acc = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                if (i == j) continue;
                acc += poly3_kernel(feats_a.row(ia[size_t(i)]), feats_a.row(ia[size_t(j)]));
                acc += poly3_kernel(feats_b.row(ib[size_t(i)]), feats_b.row(ib[size_t(j)]));
                acc -= poly3_kernel(feats_a.row(ia[size_t(i)]), feats_b.row(ib[size_t(j)]));
                acc -= poly3_kernel(feats_a.row(ia[size_t(j)]), feats_b.row(ib[size_t(i)]));
            }
        total += acc / (double(m) * double(m - 1));
    }
    return total / double(n_subsets);
}

double kid_default(const Eigen::MatrixXd& feats_a, const Eigen::MatrixXd& feats_b,
                   std::uint64_t seed) {
    int n = int(std::min(feats_a.rows(), feats_b.rows()));
    return kid(feats_a, feats_b, std::min(100, n), 10, seed);
}

DepthErrors depth_errors(const FloatMap& pred, const FloatMap& gt,
                         const std::vector<std::uint8_t>& valid) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw DataError("depth_errors: shape mismatch");
    if (!valid.empty() && valid.size() != gt.data.size())
        throw DataError("depth_errors: mask size mismatch");
    double abs_rel = 0, sq_rel = 0, se = 0;
    std::int64_t n = 0;
    for (size_t i = 0; i < gt.data.size(); ++i) {
        if (!valid.empty() && !valid[i]) continue;
        double g = gt.data[i];
        if (!(g > 0.0)) throw DataError("depth_errors: non-positive ground truth in mask");
        double d = double(pred.data[i]) - g;
        abs_rel += std::abs(d) / g;
        sq_rel += d * d / g;
        se += d * d;
        ++n;
    }
    if (n == 0) throw DataError("depth_errors: empty mask");
    return {abs_rel / double(n), sq_rel / double(n), std::sqrt(se / double(n))};
}

double recall_at(const std::vector<Eigen::Vector3d>& query_positions,
                 const std::vector<Eigen::Vector3d>& retrieved_positions, double threshold_mm) {
    if (query_positions.empty()) throw DataError("recall_at: empty query list");
    if (query_positions.size() != retrieved_positions.size())
        throw DataError("recall_at: list length mismatch");
    int hits = 0;
    for (size_t i = 0; i < query_positions.size(); ++i)
        if ((query_positions[i] - retrieved_positions[i]).norm() <= threshold_mm) ++hits;
    return double(hits) / double(query_positions.size());
}

double feature_map_distance(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw DataError("feature_map_distance: shape mismatch");
    if (a.empty()) throw DataError("feature_map_distance: empty maps");
    double se = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = double(a[i]) - double(b[i]);
        se += d * d;
    }
    return std::sqrt(se) / std::sqrt(double(a.size()));
}

namespace {

// C - D over all pairs; also tie statistics for tau-b.
struct PairCounts {
    double t = 0; // C - D
    double n1 = 0, n2 = 0; // tie corrections sum t(t-1)/2 per tied group
};

double concordance(const std::vector<double>& xs, const std::vector<double>& ys) {
    double t = 0;
    const size_t n = xs.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            double sx = xs[i] < xs[j] ? -1 : (xs[i] > xs[j] ? 1 : 0);
            double sy = ys[i] < ys[j] ? -1 : (ys[i] > ys[j] ? 1 : 0);
            t += sx * sy;
        }
    return t;
}

double tie_sum(const std::vector<double>& v, double (*f)(double)) {
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    double acc = 0;
    size_t i = 0;
    while (i < s.size()) {
        size_t j = i;
        while (j < s.size() && s[j] == s[i]) ++j;
        acc += f(double(j - i));
        i = j;
    }
    return acc;
}

double f_pairs(double t) { return t * (t - 1) / 2.0; }
double f_var(double t) { return t * (t - 1) * (2 * t + 5); }
double f_v1(double t) { return t * (t - 1); }
double f_v2(double t) { return t * (t - 1) * (t - 2); }

} // namespace

KendallResult kendall_tau(const std::vector<double>& xs, const std::vector<double>& ys) {
    const size_t n = xs.size();
    if (n != ys.size()) throw DataError("kendall_tau: length mismatch");
    if (n < 3) throw DataError("kendall_tau: need at least 3 points");

    const double n0 = double(n) * double(n - 1) / 2.0;
    const double n1 = tie_sum(xs, f_pairs);
    const double n2 = tie_sum(ys, f_pairs);
    if (n1 >= n0 || n2 >= n0) throw DataError("kendall_tau: an input list is entirely tied");

    const double t_obs = concordance(xs, ys);
    KendallResult r;
    r.tau = t_obs / std::sqrt((n0 - n1) * (n0 - n2));

    if (n <= 10) {
        // exact permutation test on |C - D| (the tau-b denominator is
        // invariant under permutations of ys)
        std::vector<double> perm = ys;
        std::sort(perm.begin(), perm.end());
        std::int64_t count = 0, total = 0;
        do {
            if (std::abs(concordance(xs, perm)) >= std::abs(t_obs) - 1e-12) ++count;
            ++total;
        } while (std::next_permutation(perm.begin(), perm.end()));
        // next_permutation over a sorted multiset enumerates each distinct
        // permutation once; with ties the statistic is constant within
        // duplicate arrangements, so the fraction is unchanged.
        r.p_value = double(count) / double(total);
    } else {
        const double dn = double(n);
        const double v0 = f_var(dn);
        const double vt = tie_sum(xs, f_var);
        const double vu = tie_sum(ys, f_var);
        const double v1 = tie_sum(xs, f_v1) * tie_sum(ys, f_v1) / (2.0 * dn * (dn - 1.0));
        const double v2 = tie_sum(xs, f_v2) * tie_sum(ys, f_v2) /
                          (9.0 * dn * (dn - 1.0) * (dn - 2.0));
        const double var = (v0 - vt - vu) / 18.0 + v1 + v2;
        if (var <= 0) throw NumericError("kendall_tau: non-positive null variance");
        double z = t_obs / std::sqrt(var);
        r.p_value = std::erfc(std::abs(z) / std::sqrt(2.0));
    }
    return r;
}

double welch_t(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) throw DataError("welch_t: need at least 2 samples each");
    auto stats = [](const std::vector<double>& v) {
        double m = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
        double s2 = 0;
        for (double x : v) s2 += (x - m) * (x - m);
        s2 /= double(v.size() - 1);
        return std::pair{m, s2};
    };
    auto [ma, va] = stats(a);
    auto [mb, vb] = stats(b);
    double denom = std::sqrt(va / double(a.size()) + vb / double(b.size()));
    if (denom == 0.0) throw NumericError("welch_t: zero pooled variance");
    return (ma - mb) / denom;
}

} // namespace arit::metrics
