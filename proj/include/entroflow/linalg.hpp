#ifndef ENTROFLOW_LINALG_HPP
#define ENTROFLOW_LINALG_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace entroflow {

// All spaces in this project have chart dimension <= 4, so vectors and
// matrices are fixed-capacity with an explicit runtime dimension.
constexpr int kMaxDim = 4;

using Chart = std::array<double, kMaxDim>;

inline Chart chart_zero() { return {0.0, 0.0, 0.0, 0.0}; }

inline double norm(const Chart& v, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

inline double dot(const Chart& a, const Chart& b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += a[i] * b[i];
    return s;
}

inline Chart axpy(double a, const Chart& x, const Chart& y, int dim) {
    Chart r = chart_zero();
    for (int i = 0; i < dim; ++i) r[i] = a * x[i] + y[i];
    return r;
}

inline Chart scale(const Chart& x, double a, int dim) {
    Chart r = chart_zero();
    for (int i = 0; i < dim; ++i) r[i] = a * x[i];
    return r;
}

/// Dense row-major matrix with runtime dimension n <= 4.
struct Mat {
    int n = 0;
    std::array<std::array<double, kMaxDim>, kMaxDim> a{};

    static Mat identity(int n) {
        Mat m;
        m.n = n;
        for (int i = 0; i < n; ++i) m.a[i][i] = 1.0;
        return m;
    }

    static Mat zero(int n) {
        Mat m;
        m.n = n;
        return m;
    }

    double& operator()(int i, int j) { return a[i][j]; }
    double operator()(int i, int j) const { return a[i][j]; }

    Chart apply(const Chart& v) const {
        Chart r = chart_zero();
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += a[i][j] * v[j];
            r[i] = s;
        }
        return r;
    }

    Mat mul(const Mat& o) const {
        Mat r = Mat::zero(n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                const double aik = a[i][k];
                if (aik == 0.0) continue;
                for (int j = 0; j < n; ++j) r.a[i][j] += aik * o.a[k][j];
            }
        return r;
    }
};

/// Operator norm (largest singular value) by power iteration on M^T M.
/// Dimensions are tiny, so a fixed iteration budget is plenty.
inline double operator_norm(const Mat& m) {
    const int n = m.n;
    Chart v = chart_zero();
    for (int i = 0; i < n; ++i) v[i] = 1.0 / std::sqrt(double(n)) + 1e-3 * double(i + 1);
    double nv = norm(v, n);
    for (int i = 0; i < n; ++i) v[i] /= nv;
    double sigma = 0.0;
    for (int it = 0; it < 200; ++it) {
        Chart w = m.apply(v);
        // v <- M^T w
        Chart u = chart_zero();
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += m.a[i][j] * w[i];
            u[j] = s;
        }
        double nu = norm(u, n);
        if (nu == 0.0) return 0.0;
        for (int i = 0; i < n; ++i) v[i] = u[i] / nu;
        double snew = std::sqrt(nu);
        if (it > 8 && std::abs(snew - sigma) <= 1e-14 * (1.0 + snew)) return snew;
        sigma = snew;
    }
    return sigma;
}

/// Modified Gram-Schmidt. Columns of `frame` (frame[j] is the j-th column
/// vector) are orthonormalized in place; returns the diagonal of R.
/// Throws if a column degenerates.
template <std::size_t K>
inline std::array<double, K> mgs_orthonormalize(std::array<Chart, K>& frame, int dim, int k) {
    std::array<double, K> rdiag{};
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < j; ++i) {
            const double proj = dot(frame[i], frame[j], dim);
            for (int d = 0; d < dim; ++d) frame[j][d] -= proj * frame[i][d];
        }
        const double r = norm(frame[j], dim);
        if (!(r > 0.0) || !std::isfinite(r))
            throw std::runtime_error("frame degenerated during orthonormalization");
        rdiag[j] = r;
        for (int d = 0; d < dim; ++d) frame[j][d] /= r;
    }
    return rdiag;
}

/// Least-squares line fit y ~ slope*x + intercept; also reports the RMS
/// residual of the fit.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
    int points = 0;
};

template <typename XS, typename YS>
inline LineFit fit_line(const XS& xs, const YS& ys) {
    const int n = int(xs.size());
    if (n == 0 || int(ys.size()) != n) throw std::invalid_argument("fit_line: bad input sizes");
    LineFit f;
    f.points = n;
    if (n == 1) {
        f.intercept = ys[0];
        return f;
    }
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) { mx += xs[i]; my += ys[i]; }
    mx /= n; my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = ys[i] - (f.slope * xs[i] + f.intercept);
        rss += e * e;
    }
    f.rms_residual = std::sqrt(rss / n);
    return f;
}

}  // namespace entroflow

#endif
