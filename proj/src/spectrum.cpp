#include "evgraph/spectrum.hpp"

#include "evgraph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evgraph {

Spectrum symmetric_eigen(const Matrix& input, const JacobiOptions& opts) {
    if (input.rows() != input.cols()) throw InvalidArgument("symmetric_eigen: matrix not square");
    if (!input.allFinite()) throw NumericFailure("symmetric_eigen: non-finite entries");
    const Index n = input.rows();
    Matrix a = 0.5 * (input + input.transpose());
    Matrix v = Matrix::Identity(n, n);
    const double scale = a.norm();

    auto off_norm = [&] {
        double s = 0.0;
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < n; ++i)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    double off = off_norm();
    int sweep = 0;
    while (off > opts.tolerance * scale && off > 0.0) {
        if (sweep++ >= opts.max_sweeps)
            throw NumericFailure("symmetric_eigen: no convergence after " +
                                     std::to_string(opts.max_sweeps) + " sweeps",
                                 off);
        for (Index p = 0; p < n - 1; ++p)
            for (Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Negligible against both diagonal entries: annihilate without rotating.
                const double g = 100.0 * std::abs(apq);
                if (sweep > 4 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
                    std::abs(a(q, q)) + g == std::abs(a(q, q))) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        off = off_norm();
    }

    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Index x, Index y) { return a(x, x) < a(y, y); });
    Spectrum sp;
    sp.eigenvalues.resize(n);
    sp.eigenvectors.resize(n, n);
    for (Index k = 0; k < n; ++k) {
        sp.eigenvalues(k) = a(order[k], order[k]);
        sp.eigenvectors.col(k) = v.col(order[k]);
    }
    return sp;
}

Spectrum eigendecompose(const Graph& g, const JacobiOptions& opts) {
    const double asym = g.max_asymmetry();
    if (asym > 1e-12)
        throw UnsupportedGraph("eigendecompose: shift is not symmetric (max asymmetry " +
                               format_double(asym) + ")");
    return symmetric_eigen(g.shift().to_dense(), opts);
}

GraphSignal gft(const Spectrum& sp, const GraphSignal& x) {
    if (x.rows() != sp.size())
        throw InvalidArgument("gft: signal has " + std::to_string(x.rows()) + " rows, spectrum " +
                              std::to_string(sp.size()));
    return sp.eigenvectors.transpose() * x;
}

GraphSignal igft(const Spectrum& sp, const GraphSignal& x_hat) {
    if (x_hat.rows() != sp.size())
        throw InvalidArgument("igft: coefficients have " + std::to_string(x_hat.rows()) +
                              " rows, spectrum " + std::to_string(sp.size()));
    return sp.eigenvectors * x_hat;
}

} // namespace evgraph
