#include "carbontag/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace carbontag::linalg {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

namespace {

double norm2(std::span<const double> v) {
    // scaled to avoid overflow on raw-scale interaction columns
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return 0.0;
    double s = 0.0;
    for (double x : v) {
        double t = x / scale;
        s += t * t;
    }
    return scale * std::sqrt(s);
}

}  // namespace

LeastSquaresSolution least_squares(const Matrix& x, std::span<const double> y,
                                   double relative_pivot_tol) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (y.size() != n) throw std::invalid_argument("least_squares: row count mismatch");

    Matrix a = x;
    std::vector<double> scale(p, 1.0);
    for (std::size_t j = 0; j < p; ++j) {
        double s = norm2(a.col(j));
        scale[j] = s > 0.0 ? s : 1.0;
        for (double& v : a.col(j)) v /= scale[j];
    }

    std::vector<double> qty(y.begin(), y.end());
    std::vector<std::size_t> perm(p);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> col_norm(p);
    for (std::size_t j = 0; j < p; ++j) col_norm[j] = norm2(a.col(j));

    const std::size_t steps = std::min(n, p);
    std::size_t rank = 0;
    double lead = 0.0;
    std::vector<double> diag(steps, 0.0);

    for (std::size_t k = 0; k < steps; ++k) {
        // pivot: largest remaining column norm over rows k..n-1
        std::size_t best = k;
        for (std::size_t j = k; j < p; ++j) {
            col_norm[j] = norm2(a.col(j).subspan(k));
            if (col_norm[j] > col_norm[best]) best = j;
        }
        if (best != k) {
            std::swap_ranges(a.col(k).begin(), a.col(k).end(), a.col(best).begin());
            std::swap(perm[k], perm[best]);
            std::swap(col_norm[k], col_norm[best]);
        }
        double alpha = col_norm[k];
        if (k == 0) lead = alpha;
        if (lead == 0.0 || alpha <= relative_pivot_tol * lead) break;

        auto v = a.col(k).subspan(k);
        if (v[0] > 0) alpha = -alpha;
        v[0] -= alpha;
        double vnorm2 = dot(v, v);
        if (vnorm2 > 0.0) {
            for (std::size_t j = k + 1; j < p; ++j) {
                auto c = a.col(j).subspan(k);
                double f = 2.0 * dot(v, c) / vnorm2;
                for (std::size_t i = 0; i < c.size(); ++i) c[i] -= f * v[i];
            }
            std::span<double> t(qty.data() + k, n - k);
            double f = 2.0 * dot(v, t) / vnorm2;
            for (std::size_t i = 0; i < t.size(); ++i) t[i] -= f * v[i];
        }
        diag[k] = alpha;
        ++rank;
    }

    // back substitution on the leading rank x rank block of R
    std::vector<double> z(rank, 0.0);
    for (std::size_t i = rank; i-- > 0;) {
        double s = qty[i];
        for (std::size_t j = i + 1; j < rank; ++j) s -= a(i, j) * z[j];
        z[i] = s / diag[i];
    }

    LeastSquaresSolution out;
    out.rank = rank;
    out.coefficients.assign(p, 0.0);
    for (std::size_t i = 0; i < rank; ++i) out.coefficients[perm[i]] = z[i] / scale[perm[i]];
    for (std::size_t i = rank; i < p; ++i) out.dependent.push_back(perm[i]);
    std::sort(out.dependent.begin(), out.dependent.end());

    out.residuals.assign(y.begin(), y.end());
    for (std::size_t j = 0; j < p; ++j) {
        double b = out.coefficients[j];
        if (b == 0.0) continue;
        auto c = x.col(j);
        for (std::size_t i = 0; i < n; ++i) out.residuals[i] -= b * c[i];
    }
    return out;
}

}  // namespace carbontag::linalg
