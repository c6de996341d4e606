#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <vector>

namespace evgraph {

using Index = std::ptrdiff_t;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Compressed-row nonzero structure. Column indices within a row are strictly
/// increasing. Shared between matrices that live on the same support.
struct CsrPattern {
    Index rows = 0;
    Index cols = 0;
    std::vector<Index> row_ptr{0};
    std::vector<Index> col_idx;

    Index nnz() const { return static_cast<Index>(col_idx.size()); }
    Index row_nnz(Index i) const { return row_ptr[i + 1] - row_ptr[i]; }

    /// Position of (i, j) in the value array, or -1 when not stored.
    Index find(Index i, Index j) const;
    bool contains(Index i, Index j) const { return find(i, j) >= 0; }

    /// Checks row_ptr/col_idx consistency; throws InvalidArgument.
    void validate() const;

    bool operator==(const CsrPattern& other) const = default;
};

/// Values over a shared pattern.
struct CsrMatrix {
    std::shared_ptr<const CsrPattern> pattern;
    std::vector<double> values;

    CsrMatrix() = default;
    CsrMatrix(std::shared_ptr<const CsrPattern> p, std::vector<double> v);

    /// Duplicate (row, col) entries are summed. Explicit zeros are kept.
    static CsrMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> triplets);
    static CsrMatrix zeros_like(const CsrMatrix& other);

    Index rows() const { return pattern ? pattern->rows : 0; }
    Index cols() const { return pattern ? pattern->cols : 0; }
    Index nnz() const { return pattern ? pattern->nnz() : 0; }

    double at(Index i, Index j) const;
    Matrix to_dense() const;
    CsrMatrix transpose() const;
    double max_abs() const;
};

/// out = A * x (overwrites out).
void spmm(const CsrMatrix& a, const Matrix& x, Matrix& out);
Matrix spmm(const CsrMatrix& a, const Matrix& x);

/// out += A^T * x.
void spmm_transpose_add(const CsrMatrix& a, const Matrix& x, Matrix& out);

/// grad[p] += sum_f left(i, f) * right(j, f) for every stored (i, j) at position p.
/// This is the gradient of <left, A right> with respect to the stored values of A.
void accumulate_outer_on_pattern(const CsrPattern& pattern, const Matrix& left, const Matrix& right,
                                 std::vector<double>& grad);

} // namespace evgraph
