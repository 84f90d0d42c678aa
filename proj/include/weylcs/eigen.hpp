#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "weylcs/common.hpp"
#include "weylcs/operators.hpp"

namespace weylcs {

/// Eigenvalues in nondecreasing order, repeated according to multiplicity.
/// With a cutoff, `values` holds every eigenvalue strictly below it.
struct Spectrum {
    std::vector<double> values;
    std::optional<double> cutoff;
    bool certified = false;
};

inline constexpr std::size_t kDefaultDenseLimit = 5000;

inline Spectrum dense_spectrum(const DiscreteOperator& op, std::size_t dense_limit = kDefaultDenseLimit) {
    if (op.size() > dense_limit)
        throw ConfigError("operator of size " + std::to_string(op.size()) + " exceeds the dense limit " +
                          std::to_string(dense_limit));
    Spectrum s;
    s.certified = true;
    if (op.size() == 0) return s;
    const Eigen::MatrixXd a = op.matrix().to_dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw CertificationError("dense eigensolver did not converge");
    s.values.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(s.values.begin(), s.values.end());
    return s;
}

struct InertiaCount {
    std::size_t count = 0;  // eigenvalues strictly below `shift`
    double shift = 0.0;     // shift actually factorized
    bool perturbed = false;
};

namespace detail {

using SparseLDLT = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>>;

/// LDL^T factorization of A - shift I. A zero or non-finite pivot moves the
/// shift down by 1e-12 ||A|| (repeatedly, a few times) and flags it.
struct ShiftedFactorization {
    SparseLDLT solver;
    InertiaCount inertia;

    ShiftedFactorization(const SparseSymmetricMatrix& a, double shift) {
        const double delta = 1e-12 * std::max(a.norm_inf(), 1.0);
        for (int attempt = 0; attempt < 8; ++attempt) {
            const double s = shift - attempt * delta;
            solver.compute(a.to_eigen(s));
            bool ok = solver.info() == Eigen::Success;
            std::size_t negative = 0;
            if (ok) {
                const auto d = solver.vectorD();
                for (Eigen::Index i = 0; i < d.size(); ++i) {
                    if (!std::isfinite(d(i)) || std::abs(d(i)) <= 1e-3 * delta) {
                        ok = false;
                        break;
                    }
                    if (d(i) < 0.0) ++negative;
                }
            }
            if (ok) {
                inertia = {negative, s, attempt > 0};
                return;
            }
        }
        throw CertificationError("LDL^T factorization broke down near shift " + std::to_string(shift));
    }
};

}  // namespace detail

/// Number of eigenvalues < lam, by Sylvester's law of inertia.
inline InertiaCount count_below(const DiscreteOperator& op, double lam) {
    const auto [lo, hi] = op.matrix().gershgorin();
    if (lam <= lo) return {0, lam, false};
    if (lam > hi) return {op.size(), lam, false};
    return detail::ShiftedFactorization(op.matrix(), lam).inertia;
}

struct SliceOptions {
    std::size_t max_count = 20000;      // refuse requests expecting more eigenvalues
    std::size_t max_per_slice = 48;     // bisect slices holding more than this
    double residual_tol = 1e-10;        // relative Ritz residual in the inverted spectrum
    std::uint64_t seed = 20240601;
};

namespace detail {

// Eigenvalues of A in [lo, hi) via shift-invert Lanczos around the slice
// midpoint, with full reorthogonalization and locking. Each restart starts
// orthogonal to the locked vectors, which recovers repeated eigenvalues.
inline std::vector<double> slice_eigenvalues(const SparseSymmetricMatrix& a, double lo, double hi,
                                             std::size_t expected, const SliceOptions& opt, std::mt19937_64& rng) {
    const auto n = static_cast<Eigen::Index>(a.size());
    ShiftedFactorization fact(a, 0.5 * (lo + hi));
    const double sigma = fact.inertia.shift;
    std::normal_distribution<double> normal;

    std::vector<Eigen::VectorXd> locked;
    std::vector<double> found;
    auto orthogonalize = [&](Eigen::VectorXd& v, const Eigen::MatrixXd& q, Eigen::Index cols) {
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& x : locked) v -= x.dot(v) * x;
            if (cols > 0) v -= q.leftCols(cols) * (q.leftCols(cols).transpose() * v);
        }
    };
    auto apply_a = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd y(n);
        a.multiply(std::span<const double>(x.data(), x.size()), std::span<double>(y.data(), y.size()));
        return y;
    };

    Eigen::Index steps = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(2 * expected + 24));
    int stalls = 0;
    while (found.size() < expected && stalls < 6) {
        const Eigen::Index room = n - static_cast<Eigen::Index>(locked.size());
        if (room <= 0) break;
        const Eigen::Index m = std::min(steps, room);
        Eigen::MatrixXd q(n, m + 1);
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m), beta = Eigen::VectorXd::Zero(m);

        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
        orthogonalize(v, q, 0);
        q.col(0) = v / v.norm();
        Eigen::Index built = m;
        for (Eigen::Index j = 0; j < m; ++j) {
            Eigen::VectorXd w = fact.solver.solve(q.col(j));
            alpha(j) = q.col(j).dot(w);
            orthogonalize(w, q, j + 1);
            beta(j) = w.norm();
            if (beta(j) <= 1e-13 * std::abs(alpha(j)) || j + 1 == m) {
                built = j + 1;
                break;
            }
            q.col(j + 1) = w / beta(j);
        }

        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(built, built);
        for (Eigen::Index j = 0; j < built; ++j) {
            t(j, j) = alpha(j);
            if (j + 1 < built) t(j, j + 1) = t(j + 1, j) = beta(j);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(t);
        const double tail = beta(built - 1);
        std::size_t added = 0;
        for (Eigen::Index i = 0; i < built; ++i) {
            const double theta = ritz.eigenvalues()(i);
            if (theta == 0.0) continue;
            const double lam = sigma + 1.0 / theta;
            if (lam < lo || lam >= hi) continue;
            const double residual = std::abs(tail * ritz.eigenvectors()(built - 1, i));
            if (residual > opt.residual_tol * std::abs(theta)) continue;
            Eigen::VectorXd x = q.leftCols(built) * ritz.eigenvectors().col(i);
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& y : locked) x -= y.dot(x) * y;
            const double norm = x.norm();
            if (norm < 0.5) continue;
            x /= norm;
            const double rq = x.dot(apply_a(x));
            if (rq < lo || rq >= hi) continue;
            locked.push_back(std::move(x));
            found.push_back(rq);
            ++added;
        }
        if (added == 0) {
            ++stalls;
            steps = std::min<Eigen::Index>(n, 2 * steps);
        }
    }
    return found;
}

inline void slice_recursive(const SparseSymmetricMatrix& a, double lo, double hi, std::size_t count_lo,
                            std::size_t count_hi, const SliceOptions& opt, std::mt19937_64& rng,
                            std::vector<double>& out, std::size_t& certified_total) {
    const std::size_t expected = count_hi - count_lo;
    if (expected == 0) return;
    if (expected > opt.max_per_slice && hi - lo > 1e-9 * std::max(1.0, std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        const std::size_t count_mid = ShiftedFactorization(a, mid).inertia.count;
        slice_recursive(a, lo, mid, count_lo, count_mid, opt, rng, out, certified_total);
        slice_recursive(a, mid, hi, count_mid, count_hi, opt, rng, out, certified_total);
        return;
    }
    const auto values = slice_eigenvalues(a, lo, hi, expected, opt, rng);
    out.insert(out.end(), values.begin(), values.end());
    certified_total += expected;
}

}  // namespace detail

/// All eigenvalues < lam, each slice certified against its inertia count.
inline Spectrum spectrum_below(const DiscreteOperator& op, double lam, const SliceOptions& opt = {}) {
    Spectrum s;
    s.cutoff = lam;
    const auto total = count_below(op, lam);
    if (total.count > opt.max_count)
        throw ConfigError("expected " + std::to_string(total.count) + " eigenvalues, above the limit " +
                          std::to_string(opt.max_count));
    const double top = total.shift;
    const double bottom = std::min(op.matrix().gershgorin().first, 0.0) - 1.0;
    std::mt19937_64 rng(opt.seed);
    std::size_t expected = 0;
    detail::slice_recursive(op.matrix(), bottom, top, 0, total.count, opt, rng, s.values, expected);
    std::sort(s.values.begin(), s.values.end());
    s.certified = s.values.size() == total.count;
    if (!s.certified)
        throw CertificationError("spectrum slicing found " + std::to_string(s.values.size()) +
                                 " eigenvalues below " + std::to_string(lam) + " but inertia counts " +
                                 std::to_string(total.count));
    return s;
}

/// Restriction of a spectrum to values strictly below lam.
inline Spectrum truncate(const Spectrum& s, double lam) {
    Spectrum out;
    out.certified = s.certified;
    out.cutoff = s.cutoff ? std::min(*s.cutoff, lam) : lam;
    for (double v : s.values)
        if (v < lam) out.values.push_back(v);
    return out;
}

inline void write_spectrum(std::ostream& os, const Spectrum& s, OperatorKind kind, double h) {
    os << std::setprecision(17) << "# kind=" << to_string(kind) << " h=" << h << " cutoff=";
    if (s.cutoff) os << *s.cutoff;
    else os << "none";
    os << " certified=" << (s.certified ? 1 : 0) << " count=" << s.values.size() << '\n';
    for (double v : s.values) os << v << '\n';
}

}  // namespace weylcs
