#pragma once

// Reference computations used only by the tests. Nothing here calls into the
// stride kernels or the adjoint sweep it is used to check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using DenseMatrix = std::vector<std::vector<cplx>>;

inline DenseMatrix identity(std::size_t dim) {
    DenseMatrix m(dim, std::vector<cplx>(dim, 0.0));
    for (std::size_t i = 0; i < dim; ++i) {
        m[i][i] = 1.0;
    }
    return m;
}

/// Kronecker product a (x) b.
inline DenseMatrix kron(const DenseMatrix &a, const DenseMatrix &b) {
    const std::size_t ra = a.size();
    const std::size_t rb = b.size();
    DenseMatrix out(ra * rb, std::vector<cplx>(ra * rb, 0.0));
    for (std::size_t i = 0; i < ra; ++i)
        for (std::size_t j = 0; j < ra; ++j)
            for (std::size_t k = 0; k < rb; ++k)
                for (std::size_t l = 0; l < rb; ++l)
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
    return out;
}

/// Full 2^n x 2^n RY on `qubit`, built as I (x) ... (x) RY (x) ... (x) I with
/// qubit 0 as the right-most (least-significant) factor.
inline DenseMatrix ry_matrix(std::size_t n, std::size_t qubit, double theta) {
    const double c = std::cos(theta / 2);
    const double s = std::sin(theta / 2);
    const DenseMatrix ry{{c, -s}, {s, c}};
    DenseMatrix m{{1.0}};
    for (std::size_t q = n; q-- > 0;) {
        m = kron(m, q == qubit ? ry : identity(2));
    }
    return m;
}

/// Diagonal CZ: -1 where both bits are set.
inline DenseMatrix cz_matrix(std::size_t n, std::size_t a, std::size_t b) {
    auto m = identity(std::size_t{1} << n);
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (((i >> a) & 1U) && ((i >> b) & 1U)) {
            m[i][i] = -1.0;
        }
    }
    return m;
}

inline std::vector<cplx> matvec(const DenseMatrix &m, const std::vector<cplx> &v) {
    std::vector<cplx> out(v.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j)
            out[i] += m[i][j] * v[j];
    return out;
}

/// Central difference of a scalar function along coordinate k.
inline double central_difference(const std::function<double(const std::vector<double> &)> &f,
                                 std::vector<double> x, std::size_t k, double h) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double up = f(x);
    x[k] = x0 - h;
    const double down = f(x);
    return (up - down) / (2 * h);
}

inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double> &)> &f,
                                       const std::vector<double> &x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        g[k] = central_difference(f, x, k, h);
    }
    return g;
}

/// Mutual information (bits) between two binary sequences.
inline double mutual_information(const std::vector<int> &a, const std::vector<int> &b) {
    double joint[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[a[i]][b[i]] += 1.0;
    }
    const double n = static_cast<double>(a.size());
    double mi = 0.0;
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            const double pxy = joint[x][y] / n;
            const double px = (joint[x][0] + joint[x][1]) / n;
            const double py = (joint[0][y] + joint[1][y]) / n;
            if (pxy > 0) {
                mi += pxy * std::log2(pxy / (px * py));
            }
        }
    }
    return mi;
}

inline double rel_err(double a, double b, double floor = 1e-3) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

} // namespace oracle
