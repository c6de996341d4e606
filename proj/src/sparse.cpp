#include "evgraph/sparse.hpp"

#include "evgraph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace evgraph {

Index CsrPattern::find(Index i, Index j) const {
    if (i < 0 || i >= rows) return -1;
    auto first = col_idx.begin() + row_ptr[i];
    auto last = col_idx.begin() + row_ptr[i + 1];
    auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return -1;
    return static_cast<Index>(it - col_idx.begin());
}

void CsrPattern::validate() const {
    if (rows < 0 || cols < 0) throw InvalidArgument("csr: negative dimension");
    if (static_cast<Index>(row_ptr.size()) != rows + 1 || row_ptr.front() != 0 ||
        row_ptr.back() != nnz())
        throw InvalidArgument("csr: row_ptr inconsistent with dimensions");
    for (Index i = 0; i < rows; ++i) {
        if (row_ptr[i + 1] < row_ptr[i]) throw InvalidArgument("csr: row_ptr not monotone");
        for (Index p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
            if (col_idx[p] < 0 || col_idx[p] >= cols)
                throw InvalidArgument("csr: column index out of range in row " + std::to_string(i));
            if (p > row_ptr[i] && col_idx[p] <= col_idx[p - 1])
                throw InvalidArgument("csr: row " + std::to_string(i) + " not strictly sorted");
        }
    }
}

CsrMatrix::CsrMatrix(std::shared_ptr<const CsrPattern> p, std::vector<double> v)
    : pattern(std::move(p)), values(std::move(v)) {
    if (!pattern) throw InvalidArgument("csr: null pattern");
    if (static_cast<Index>(values.size()) != pattern->nnz())
        throw InvalidArgument("csr: value count does not match pattern");
}

CsrMatrix CsrMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> triplets) {
    if (rows < 0 || cols < 0) throw InvalidArgument("csr: negative dimension");
    for (const auto& t : triplets)
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
            throw InvalidArgument("csr: triplet (" + std::to_string(t.row) + ", " +
                                  std::to_string(t.col) + ") out of range");
    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    auto pat = std::make_shared<CsrPattern>();
    pat->rows = rows;
    pat->cols = cols;
    pat->row_ptr.assign(rows + 1, 0);
    std::vector<double> vals;
    for (std::size_t k = 0; k < triplets.size(); ++k) {
        const auto& t = triplets[k];
        if (!pat->col_idx.empty() && k > 0 && triplets[k - 1].row == t.row &&
            triplets[k - 1].col == t.col) {
            vals.back() += t.value;
            continue;
        }
        pat->col_idx.push_back(t.col);
        vals.push_back(t.value);
        ++pat->row_ptr[t.row + 1];
    }
    for (Index i = 0; i < rows; ++i) pat->row_ptr[i + 1] += pat->row_ptr[i];
    return CsrMatrix(std::move(pat), std::move(vals));
}

CsrMatrix CsrMatrix::zeros_like(const CsrMatrix& other) {
    return CsrMatrix(other.pattern, std::vector<double>(other.values.size(), 0.0));
}

double CsrMatrix::at(Index i, Index j) const {
    Index p = pattern->find(i, j);
    return p < 0 ? 0.0 : values[p];
}

Matrix CsrMatrix::to_dense() const {
    Matrix d = Matrix::Zero(rows(), cols());
    for (Index i = 0; i < rows(); ++i)
        for (Index p = pattern->row_ptr[i]; p < pattern->row_ptr[i + 1]; ++p)
            d(i, pattern->col_idx[p]) += values[p];
    return d;
}

CsrMatrix CsrMatrix::transpose() const {
    std::vector<Triplet> t;
    t.reserve(values.size());
    for (Index i = 0; i < rows(); ++i)
        for (Index p = pattern->row_ptr[i]; p < pattern->row_ptr[i + 1]; ++p)
            t.push_back({pattern->col_idx[p], i, values[p]});
    return from_triplets(cols(), rows(), std::move(t));
}

double CsrMatrix::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

void spmm(const CsrMatrix& a, const Matrix& x, Matrix& out) {
    if (x.rows() != a.cols())
        throw InvalidArgument("spmm: operand has " + std::to_string(x.rows()) +
                              " rows, matrix has " + std::to_string(a.cols()) + " columns");
    const auto& pat = *a.pattern;
    out.setZero(a.rows(), x.cols());
    for (Index f = 0; f < x.cols(); ++f) {
        const double* xf = x.col(f).data();
        double* of = out.col(f).data();
        for (Index i = 0; i < pat.rows; ++i) {
            double acc = 0.0;
            for (Index p = pat.row_ptr[i]; p < pat.row_ptr[i + 1]; ++p)
                acc += a.values[p] * xf[pat.col_idx[p]];
            of[i] = acc;
        }
    }
}

Matrix spmm(const CsrMatrix& a, const Matrix& x) {
    Matrix out;
    spmm(a, x, out);
    return out;
}

void spmm_transpose_add(const CsrMatrix& a, const Matrix& x, Matrix& out) {
    if (x.rows() != a.rows() || out.rows() != a.cols() || out.cols() != x.cols())
        throw InvalidArgument("spmm_transpose_add: dimension mismatch");
    const auto& pat = *a.pattern;
    for (Index f = 0; f < x.cols(); ++f) {
        const double* xf = x.col(f).data();
        double* of = out.col(f).data();
        for (Index i = 0; i < pat.rows; ++i) {
            const double xi = xf[i];
            if (xi == 0.0) continue;
            for (Index p = pat.row_ptr[i]; p < pat.row_ptr[i + 1]; ++p)
                of[pat.col_idx[p]] += a.values[p] * xi;
        }
    }
}

void accumulate_outer_on_pattern(const CsrPattern& pattern, const Matrix& left, const Matrix& right,
                                 std::vector<double>& grad) {
    if (left.rows() != pattern.rows || right.rows() != pattern.cols || left.cols() != right.cols() ||
        static_cast<Index>(grad.size()) != pattern.nnz())
        throw InvalidArgument("accumulate_outer_on_pattern: dimension mismatch");
    for (Index f = 0; f < left.cols(); ++f) {
        const double* lf = left.col(f).data();
        const double* rf = right.col(f).data();
        for (Index i = 0; i < pattern.rows; ++i) {
            const double li = lf[i];
            if (li == 0.0) continue;
            for (Index p = pattern.row_ptr[i]; p < pattern.row_ptr[i + 1]; ++p)
                grad[p] += li * rf[pattern.col_idx[p]];
        }
    }
}

} // namespace evgraph
