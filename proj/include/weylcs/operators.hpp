#pragma once

// Finite-difference Dirichlet discretizations of -Laplace and of
// H = -d^2/dx1^2 - exp(2 x1) (d^2/dx2^2 + ... + d^2/dxd^2) on a GridDomain.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <iomanip>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "weylcs/common.hpp"
#include "weylcs/domain.hpp"

namespace weylcs {

/// Compressed sparse rows with a symmetric pattern and symmetric values.
class SparseSymmetricMatrix {
public:
    SparseSymmetricMatrix() = default;
    SparseSymmetricMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::size_t> cols,
                          std::vector<double> values)
        : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), values_(std::move(values)) {}

    std::size_t size() const { return n_; }
    std::size_t nonzeros() const { return values_.size(); }
    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::size_t> cols() const { return cols_; }
    std::span<const double> values() const { return values_; }

    double diagonal(std::size_t i) const {
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            if (cols_[k] == i) return values_[k];
        return 0.0;
    }

    double entry(std::size_t i, std::size_t j) const {
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            if (cols_[k] == j) return values_[k];
        return 0.0;
    }

    void multiply(std::span<const double> x, std::span<double> y) const {
        if (x.size() != n_ || y.size() != n_) throw ConfigError("dimension mismatch");
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += values_[k] * x[cols_[k]];
            y[i] = acc;
        }
    }

    /// Largest |a_ij - a_ji| (zero for every assembled operator).
    double symmetry_defect() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                worst = std::max(worst, std::abs(values_[k] - entry(cols_[k], i)));
        return worst;
    }

    /// Gershgorin enclosure [lo, hi] of the spectrum.
    std::pair<double, double> gershgorin() const {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = 0; i < n_; ++i) {
            double centre = 0.0, radius = 0.0;
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                if (cols_[k] == i) centre = values_[k];
                else radius += std::abs(values_[k]);
            }
            lo = std::min(lo, centre - radius);
            hi = std::max(hi, centre + radius);
        }
        return {lo, hi};
    }

    /// Infinity norm.
    double norm_inf() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            double row = 0.0;
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) row += std::abs(values_[k]);
            worst = std::max(worst, row);
        }
        return worst;
    }

    Eigen::SparseMatrix<double> to_eigen(double shift = 0.0) const {
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(values_.size() + n_);
        for (std::size_t i = 0; i < n_; ++i) {
            bool has_diag = false;
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                double v = values_[k];
                if (cols_[k] == i) {
                    v -= shift;
                    has_diag = true;
                }
                t.emplace_back(static_cast<int>(i), static_cast<int>(cols_[k]), v);
            }
            if (!has_diag) t.emplace_back(static_cast<int>(i), static_cast<int>(i), -shift);
        }
        Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
        m.setFromTriplets(t.begin(), t.end());
        return m;
    }

    Eigen::MatrixXd to_dense() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols_[k])) = values_[k];
        return m;
    }

    friend bool operator==(const SparseSymmetricMatrix&, const SparseSymmetricMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> cols_;
    std::vector<double> values_;
};

/// Weight of the second difference along axis j (j >= 1) at a node with the
/// given x1. The hyperbolic operator uses exp(2 x1).
using TildeCoefficient = std::function<double(double x1)>;

inline double hyperbolic_coefficient(double x1) { return std::exp(2.0 * x1); }

class DiscreteOperator {
public:
    DiscreteOperator(SparseSymmetricMatrix matrix, std::shared_ptr<const GridDomain> grid, OperatorKind kind,
                     std::vector<std::size_t> node_index, std::vector<std::int64_t> row_of_node)
        : matrix_(std::move(matrix)),
          grid_(std::move(grid)),
          kind_(kind),
          node_index_(std::move(node_index)),
          row_of_node_(std::move(row_of_node)) {}

    const SparseSymmetricMatrix& matrix() const { return matrix_; }
    const GridDomain& grid() const { return *grid_; }
    std::shared_ptr<const GridDomain> grid_ptr() const { return grid_; }
    OperatorKind kind() const { return kind_; }
    std::size_t size() const { return matrix_.size(); }
    /// Grid node (flat index) of each matrix row.
    std::span<const std::size_t> node_index() const { return node_index_; }
    /// Matrix row of a grid node, or -1 when the node is exterior.
    std::int64_t row_of_node(std::size_t flat) const { return row_of_node_[flat]; }

private:
    SparseSymmetricMatrix matrix_;
    std::shared_ptr<const GridDomain> grid_;
    OperatorKind kind_;
    std::vector<std::size_t> node_index_;
    std::vector<std::int64_t> row_of_node_;
};

namespace detail {

// Sums, over every edge between an interior node and its axis neighbours,
// w_e (v_p - v_q)^2 / h^2 with exterior values zero. Each edge is written in
// divergence form D^T W D, so the result is symmetric by construction.
inline DiscreteOperator assemble(const GridDomain& dom, OperatorKind kind, const TildeCoefficient& tilde) {
    auto grid = std::make_shared<const GridDomain>(dom);
    const std::size_t d = dom.dim();
    const double inv_h2 = 1.0 / (dom.h() * dom.h());

    std::vector<std::size_t> node_index;
    node_index.reserve(dom.interior_count());
    std::vector<std::int64_t> row_of(dom.node_count(), -1);
    for (std::size_t i = 0; i < dom.node_count(); ++i) {
        if (!dom.inside(i)) continue;
        row_of[i] = static_cast<std::int64_t>(node_index.size());
        node_index.push_back(i);
    }

    std::vector<std::size_t> row_ptr{0};
    std::vector<std::size_t> cols;
    std::vector<double> values;
    cols.reserve(node_index.size() * (2 * d + 1));
    values.reserve(node_index.size() * (2 * d + 1));

    std::vector<std::pair<std::size_t, double>> entries;
    for (std::size_t row = 0; row < node_index.size(); ++row) {
        const std::size_t flat = node_index[row];
        const double x1 = dom.coordinate(flat, 0);
        entries.clear();
        double diag = 0.0;
        for (std::size_t axis = 0; axis < d; ++axis) {
            const double w = (axis == 0 ? 1.0 : tilde(x1)) * inv_h2;
            const std::size_t stride = dom.strides()[axis];
            const std::size_t pos = (flat / stride) % dom.shape()[axis];
            // Edge to the lower neighbour, then to the upper neighbour.
            diag += w;
            if (pos > 0 && row_of[flat - stride] >= 0)
                entries.emplace_back(static_cast<std::size_t>(row_of[flat - stride]), -w);
            diag += w;
            if (pos + 1 < dom.shape()[axis] && row_of[flat + stride] >= 0)
                entries.emplace_back(static_cast<std::size_t>(row_of[flat + stride]), -w);
        }
        entries.emplace_back(row, diag);
        std::sort(entries.begin(), entries.end());
        for (const auto& [c, v] : entries) {
            cols.push_back(c);
            values.push_back(v);
        }
        row_ptr.push_back(cols.size());
    }
    SparseSymmetricMatrix m(node_index.size(), std::move(row_ptr), std::move(cols), std::move(values));
    return DiscreteOperator(std::move(m), std::move(grid), kind, std::move(node_index), std::move(row_of));
}

}  // namespace detail

inline DiscreteOperator assemble_euclidean(const GridDomain& dom) {
    return detail::assemble(dom, OperatorKind::euclidean, [](double) { return 1.0; });
}

/// `tilde` replaces exp(2 x1) as the coefficient of the x~ second differences.
inline DiscreteOperator assemble_hyperbolic(const GridDomain& dom,
                                            const TildeCoefficient& tilde = hyperbolic_coefficient) {
    return detail::assemble(dom, OperatorKind::hyperbolic, tilde);
}

inline DiscreteOperator assemble(const GridDomain& dom, OperatorKind kind) {
    return kind == OperatorKind::euclidean ? assemble_euclidean(dom) : assemble_hyperbolic(dom);
}

inline std::vector<double> apply(const DiscreteOperator& op, std::span<const double> v) {
    if (v.size() != op.size())
        throw ConfigError("dimension mismatch: vector has " + std::to_string(v.size()) + " entries, operator " +
                          std::to_string(op.size()));
    std::vector<double> out(v.size());
    op.matrix().multiply(v, out);
    return out;
}

/// Writes "row col value" lines (0-based, 17 significant digits).
inline void write_coordinate(std::ostream& os, const DiscreteOperator& op) {
    const auto& m = op.matrix();
    os << "# weylcs matrix kind=" << to_string(op.kind()) << " n=" << m.size() << " nnz=" << m.nonzeros()
       << " h=" << std::setprecision(17) << op.grid().h() << '\n';
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k)
            os << i << ' ' << m.cols()[k] << ' ' << m.values()[k] << '\n';
}

}  // namespace weylcs
