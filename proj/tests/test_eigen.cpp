#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>

#include "weylcs/eigen.hpp"

using namespace weylcs;

namespace {

// (4 / h^2) sin^2(k pi h / (2 L)) for the n = L/h - 1 interior nodes of (0, L).
std::vector<double> second_difference_spectrum(double length, double h) {
    const auto n = static_cast<std::size_t>(std::llround(length / h)) - 1;
    std::vector<double> out;
    for (std::size_t k = 1; k <= n; ++k)
        out.push_back(4.0 / (h * h) * std::pow(std::sin(k * M_PI * h / (2.0 * length)), 2));
    return out;
}

std::vector<double> kronecker_sum(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out;
    for (double x : a)
        for (double y : b) out.push_back(x + y);
    std::sort(out.begin(), out.end());
    return out;
}

void expect_close(const std::vector<double>& got, const std::vector<double>& want, double rel) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], rel * std::max(1.0, want[i])) << i;
}

// Smallest eigenvalue by inverse iteration with conjugate-gradient solves.
double smallest_by_inverse_iteration(const DiscreteOperator& op) {
    const Eigen::SparseMatrix<double> a = op.matrix().to_eigen();
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-14);
    cg.setMaxIterations(100000);
    cg.compute(a);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(a.rows());
    double rq = 0.0;
    for (int it = 0; it < 200; ++it) {
        const Eigen::VectorXd y = cg.solve(x);
        x = y;
        x.normalize();
        const double next = x.dot(a * x);
        if (std::abs(next - rq) < 1e-14 * next) return next;
        rq = next;
    }
    return rq;
}

}  // namespace

TEST(Eigen, Dense1DClosedForm) {
    const double h = 1.0 / 64;
    const auto op = assemble_euclidean(rectangle_domain({{0, 1}}, h));
    expect_close(dense_spectrum(op).values, second_difference_spectrum(1.0, h), 1e-11);
}

TEST(Eigen, Dense2DKroneckerSum) {
    const double h = 1.0 / 20;
    const auto op = assemble_euclidean(rectangle_domain({{0, 1}, {0, 1.5}}, h));
    const auto want = kronecker_sum(second_difference_spectrum(1.0, h), second_difference_spectrum(1.5, h));
    expect_close(dense_spectrum(op).values, want, 1e-9);
}

TEST(Eigen, DenseLimit) {
    const auto op = assemble_euclidean(rectangle_domain({{0, 1}}, 0.01));
    EXPECT_THROW(dense_spectrum(op, 50), ConfigError);
}

TEST(Eigen, InertiaCountsMatchDense) {
    const auto op = assemble_hyperbolic(rectangle_domain({{0, 1}, {0, 1}}, 1.0 / 24));
    const auto dense = dense_spectrum(op).values;
    for (double lam : {-1.0, 10.0, 50.0, 120.0, 500.0, 2000.0, 1e6}) {
        const auto count = static_cast<std::size_t>(std::lower_bound(dense.begin(), dense.end(), lam) - dense.begin());
        EXPECT_EQ(count_below(op, lam).count, count) << lam;
    }
}

TEST(Eigen, InertiaAtAnEigenvalueIsPerturbed) {
    const double h = 0.1;
    const auto op = assemble_euclidean(rectangle_domain({{0, 1}}, h));
    const double lam = second_difference_spectrum(1.0, h)[3];
    const auto c = count_below(op, lam);
    EXPECT_TRUE(c.count == 3 || c.count == 4);
    EXPECT_LE(c.shift, lam);
}

TEST(Eigen, SlicingMatchesDenseWithMultiplicity) {
    // The square has many double eigenvalues; locking must recover both copies.
    const double h = 1.0 / 30;
    const auto op = assemble_euclidean(rectangle_domain({{0, 1}, {0, 1}}, h));
    const auto dense = dense_spectrum(op).values;
    const double lam = 1500.0;
    const auto sliced = spectrum_below(op, lam);
    std::vector<double> want;
    for (double v : dense)
        if (v < lam) want.push_back(v);
    EXPECT_TRUE(sliced.certified);
    ASSERT_TRUE(sliced.cutoff.has_value());
    expect_close(sliced.values, want, 1e-10);
}

TEST(Eigen, SlicingHyperbolic) {
    const auto op = assemble_hyperbolic(rectangle_domain({{0, 1}, {0, 1}}, 1.0 / 28));
    const auto dense = dense_spectrum(op).values;
    const double lam = 800.0;
    const auto sliced = spectrum_below(op, lam);
    std::vector<double> want;
    for (double v : dense)
        if (v < lam) want.push_back(v);
    expect_close(sliced.values, want, 1e-10);
}

TEST(Eigen, SmallestHyperbolicEigenvalueMatchesInverseIteration) {
    const auto op = assemble_hyperbolic(rectangle_domain({{0, 1}, {0, 1}}, 1.0 / 40));
    const double oracle = smallest_by_inverse_iteration(op);
    const auto s = spectrum_below(op, oracle * 1.05);
    ASSERT_FALSE(s.values.empty());
    EXPECT_NEAR(s.values.front(), oracle, 1e-9 * oracle);
}

TEST(Eigen, EmptyBelowGround) {
    const auto op = assemble_euclidean(rectangle_domain({{0, 1}}, 0.05));
    const auto s = spectrum_below(op, 1.0);
    EXPECT_TRUE(s.values.empty());
    EXPECT_TRUE(s.certified);
}

TEST(Eigen, MaxCountGuard) {
    const auto op = assemble_euclidean(rectangle_domain({{0, 1}}, 0.01));
    SliceOptions opt;
    opt.max_count = 10;
    EXPECT_THROW(spectrum_below(op, 1e5, opt), ConfigError);
}

TEST(Eigen, TruncateAndExport) {
    Spectrum s{{1.0, 2.0, 3.0}, 4.0, true};
    const auto t = truncate(s, 2.5);
    EXPECT_EQ(t.values, (std::vector<double>{1.0, 2.0}));
    EXPECT_DOUBLE_EQ(*t.cutoff, 2.5);
    std::stringstream ss;
    write_spectrum(ss, t, OperatorKind::euclidean, 0.5);
    std::string line;
    std::getline(ss, line);
    EXPECT_EQ(line, "# kind=euclidean h=0.5 cutoff=2.5 certified=1 count=2");
    std::getline(ss, line);
    EXPECT_EQ(line, "1");
}
