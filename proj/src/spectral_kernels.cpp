#include "evgraph/errors.hpp"
#include "evgraph/filters.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace evgraph {

Matrix cubic_spline_kernel(const Vector& eigenvalues, Index num_knots) {
    if (num_knots < 2) throw InvalidArgument("cubic_spline_kernel: need at least 2 knots");
    if (eigenvalues.size() == 0 || !eigenvalues.allFinite())
        throw InvalidArgument("cubic_spline_kernel: eigenvalues must be finite and non-empty");
    const double lo = eigenvalues.minCoeff();
    const double hi = eigenvalues.maxCoeff();
    if (!(hi > lo))
        throw InvalidArgument("cubic_spline_kernel: all eigenvalues are equal, knot span is empty");
    const Index b = num_knots;
    const double h = (hi - lo) / static_cast<double>(b - 1);

    // Second derivatives at the knots for the cardinal data e_j (column j), with the
    // natural end conditions M_0 = M_{b-1} = 0. Interior system is tridiag(1, 4, 1).
    Matrix second = Matrix::Zero(b, b);
    const Index m = b - 2;
    if (m > 0) {
        Matrix rhs = Matrix::Zero(m, b);
        for (Index i = 1; i <= m; ++i) {
            rhs(i - 1, i - 1) += 6.0 / (h * h);
            rhs(i - 1, i) -= 12.0 / (h * h);
            rhs(i - 1, i + 1) += 6.0 / (h * h);
        }
        Matrix tri = Matrix::Zero(m, m);
        for (Index i = 0; i < m; ++i) {
            tri(i, i) = 4.0;
            if (i > 0) tri(i, i - 1) = 1.0;
            if (i + 1 < m) tri(i, i + 1) = 1.0;
        }
        second.middleRows(1, m) = tri.partialPivLu().solve(rhs);
    }

    Matrix out(eigenvalues.size(), b);
    for (Index n = 0; n < eigenvalues.size(); ++n) {
        const double lam = eigenvalues(n);
        Index i = static_cast<Index>(std::floor((lam - lo) / h));
        i = std::clamp<Index>(i, 0, b - 2);
        const double a = (lo + (i + 1) * h - lam) / h;
        const double cc = 1.0 - a;
        const double wa = (a * a * a - a) * h * h / 6.0;
        const double wc = (cc * cc * cc - cc) * h * h / 6.0;
        for (Index j = 0; j < b; ++j) {
            double v = wa * second(i, j) + wc * second(i + 1, j);
            if (j == i) v += a;
            if (j == i + 1) v += cc;
            out(n, j) = v;
        }
    }
    return out;
}

SpectralEVBasis spectral_ev_basis(const Spectrum& sp, const Graph& g) {
    if (g.max_asymmetry() > 1e-12)
        throw UnsupportedGraph("spectral_ev_basis: shift is not symmetric");
    const Index n = g.num_nodes();
    if (sp.size() != n) throw InvalidArgument("spectral_ev_basis: spectrum size differs from graph");
    const auto& support = *g.support_with_diag();
    SpectralEVBasis out;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (!support.contains(i, j)) out.zero_index_set.emplace_back(i, j);

    if (out.zero_index_set.empty()) {
        out.basis = Matrix::Identity(n, n);
        return out;
    }
    const Matrix& u = sp.eigenvectors;
    // Row (i, j) of C_I (U * U): entry n is U(i, n) U(j, n).
    Matrix a(static_cast<Index>(out.zero_index_set.size()), n);
    for (Index r = 0; r < a.rows(); ++r) {
        const auto [i, j] = out.zero_index_set[r];
        a.row(r) = u.row(i).cwiseProduct(u.row(j));
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double cutoff = 1e-9 * (sv.size() > 0 ? sv(0) : 0.0);
    Index numerical_rank = 0;
    for (Index k = 0; k < sv.size(); ++k)
        if (sv(k) > cutoff) ++numerical_rank;
    out.basis = svd.matrixV().rightCols(n - numerical_rank);
    return out;
}

} // namespace evgraph
