// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weylcs/weylcs.hpp"

using namespace weylcs;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Riesz means by direct summation over k^2 and m^2 + n^2.
double riesz_interval_direct(double lam) {
    double acc = 0.0;
    for (long k = 1; k * k < lam; ++k) acc += lam - static_cast<double>(k * k);
    return acc;
}

double riesz_square_direct(double lam) {
    double acc = 0.0;
    for (long m = 1; m * m < lam; ++m)
        for (long n = 1; m * m + n * n < lam; ++n) acc += lam - static_cast<double>(m * m + n * n);
    return acc;
}

Outcome frame_tightness() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::normal_distribution<double> g;
    double worst = 0.0;
    const std::vector<CoherentFrame> frames{
        build_frame({{0, 6.4}}, 0.05, scale(make_cosine_window(1), 0.2)),
        build_frame({{0, 1}, {0, 1}}, 1.0 / 32, scale(make_cosine_window(2), 0.3)),
    };
    for (const auto& frame : frames)
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<Complex> f(frame.size());
            for (auto& v : f) v = Complex(g(rng), g(rng));
            const double a = grid_norm_squared(frame, f);
            worst = std::max(worst, std::abs(norm_squared(frame, forward(frame, f)) - a) / a);
        }
    const double t = seconds_since(t0);
    return {frames[0].size() == 128 && frames[1].size() == 1024 && worst <= 1e-10 && t < 10.0,
            fmt("max relative defect %.3e over 200 vectors (N=128, N=32^2), %.2f s", worst, t)};
}

Outcome trace_formula() {
    const double h = kPi / 201;
    const auto op = assemble_euclidean(rectangle_domain({{0, kPi}}, h));
    const auto frame = build_frame({{0, 256 * h}}, h, scale(make_cosine_window(1), 0.2));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix().to_dense());
    const Eigen::VectorXd ev = es.eigenvalues();
    const double lam = 0.5 * (ev(99) + ev(100));
    const Eigen::VectorXd p = (lam - ev.array()).max(0.0).matrix();
    const Eigen::MatrixXd t = es.eigenvectors() * p.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::MatrixXd ts = 0.5 * (t + t.transpose());
    // Independent reference: the trace of T in the grid basis.
    const double reference = ts.trace();
    const double via = trace_via_frame(frame, embed(frame, op, ts));
    const double defect = std::abs(via - reference) / reference;
    return {op.size() == 200 && defect <= 1e-10,
            fmt("n=%zu, lambda=%.6g (median), relative defect %.3e", op.size(), lam, defect)};
}

Outcome symbol_convergence() {
    const Window w = scale(make_cosine_window(2), 0.2 * std::sqrt(2.0));
    const Box box{{0, 1}, {0, 1}};
    const auto coarse = assemble_hyperbolic(rectangle_domain(box, 1.0 / 40));
    const auto fine = assemble_hyperbolic(rectangle_domain(box, 1.0 / 80));
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<int> node(8, 32);
    std::uniform_real_distribution<double> freq(-5.0, 5.0);
    bool ok = true;
    double lo = 1e300, hi = 0.0;
    for (int s = 0; s < 5; ++s) {
        const std::vector<double> y{node(rng) / 40.0, node(rng) / 40.0};
        const std::vector<double> xi{freq(rng), freq(rng)};
        // Closed form written out here: |xi1|^2 + c1 + e^{2 y1}(c3 |xi~|^2 + c2).
        const CConstants c = c_constants(w);
        const double exact = xi[0] * xi[0] + c.c1 + std::exp(2.0 * y[0]) * (c.c3 * xi[1] * xi[1] + c.c2);
        const double lib = analytic_symbol(OperatorKind::hyperbolic, w, xi, y);
        const auto a = symbol(w, coarse, xi, y);
        const auto b = symbol(w, fine, xi, y);
        const double ratio = std::abs(a.value - exact) / std::abs(b.value - exact);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        ok = ok && !a.truncated && !b.truncated && ratio >= 3.0 && ratio <= 5.0 &&
             std::abs(lib - exact) <= 1e-10 * exact;
    }
    return {ok, fmt("error ratios h=1/40 -> 1/80 in [%.4f, %.4f] at 5 points", lo, hi)};
}

Outcome euclidean_1d() {
    const auto spec = exact_spectrum_interval(kPi, 1e4);
    const auto lambdas = lambda_grid(1.0, 1e4, 200, LambdaSpacing::log);
    bool li_yau = true;
    for (double lam : lambdas) {
        const double r = riesz_mean(spec, lam);
        li_yau = li_yau && std::abs(r - riesz_interval_direct(lam)) <= 1e-9 * std::max(1.0, r) &&
                 r <= li_yau_bound(kPi, 1, lam);
    }
    // Leading term (2/3) lambda^{3/2} / pi * pi = (2/3) lambda^{3/2} on an interval of length pi.
    const double ratio = riesz_interval_direct(1e4) / (2.0 / 3.0 * std::pow(1e4, 1.5));
    const double lib_ratio = riesz_mean(spec, 1e4) / euclidean_leading(kPi, 1, 1e4);
    return {ratio >= 0.98 && ratio <= 1.0 && std::abs(lib_ratio - ratio) <= 1e-12 && li_yau,
            fmt("ratio %.6f at lambda=1e4; Li-Yau %s at 200 lambdas", ratio, li_yau ? "holds" : "violated")};
}

Outcome euclidean_2d() {
    const auto spec = exact_spectrum_box({kPi, kPi}, 2000.0);
    const auto lambdas = lambda_grid(1.0, 2000.0, 200, LambdaSpacing::log);
    bool li_yau = true;
    for (double lam : lambdas) {
        const double r = riesz_mean(spec, lam);
        li_yau = li_yau && std::abs(r - riesz_square_direct(lam)) <= 1e-9 * std::max(1.0, r) &&
                 r <= li_yau_bound(kPi * kPi, 2, lam);
    }
    // Leading term: area / (8 pi) lambda^2 = pi lambda^2 / 8.
    const double ratio = riesz_square_direct(2000.0) / (kPi * 2000.0 * 2000.0 / 8.0);
    return {ratio >= 0.93 && ratio <= 1.0 && li_yau,
            fmt("ratio %.6f at lambda=2000; Li-Yau %s at 200 lambdas", ratio, li_yau ? "holds" : "violated")};
}

Outcome remainder_exponents() {
    const auto lambdas = lambda_grid(1e2, 1e4, 25, LambdaSpacing::log);
    CurveMeta meta;
    meta.dim = 1;
    const auto c1 = build_curve(exact_spectrum_interval(kPi, 1e4), kPi * weyl_constant(1), lambdas, meta);
    meta.dim = 2;
    const auto c2 = build_curve(exact_spectrum_box({kPi, kPi}, 1e4), kPi * kPi * weyl_constant(2), lambdas, meta);
    const double s1 = fit_remainder_exponent(c1, 1e2, 1e4).slope;
    const double s2 = fit_remainder_exponent(c2, 1e2, 1e4).slope;
    const bool bound = s1 <= 7.0 / 6.0 + 0.05 && s2 <= 5.0 / 3.0 + 0.05;
    const bool expected = std::abs(s1 - 1.0) <= 0.1 && std::abs(s2 - 1.5) <= 0.1;
    return {bound && expected, fmt("slope d=1 %.4f (bound %.4f), d=2 %.4f (bound %.4f)", s1, 7.0 / 6.0 + 0.05, s2,
                                   5.0 / 3.0 + 0.05)};
}

Outcome hyperbolic_2d() {
    const auto t0 = Clock::now();
    const double lam = 250.0;
    // Closed-form leading term on (0,1)^2: (1 - e^{-1}) lambda^2 / (8 pi).
    const double leading = (1.0 - std::exp(-1.0)) * lam * lam / (8.0 * kPi);
    std::vector<double> ratio, deviation;
    for (int n : {35, 70}) {
        const auto dom = rectangle_domain({{0, 1}, {0, 1}}, 1.0 / n);
        const auto spec = dense_spectrum(assemble_hyperbolic(dom));
        const double r = riesz_mean(spec, lam);
        if (std::abs(hyperbolic_leading(dom, lam) - leading) > 1e-9 * leading)
            return {false, "library leading term disagrees with the closed form"};
        ratio.push_back(r / leading);
        deviation.push_back(std::abs(r - leading));
    }
    const double t = seconds_since(t0);
    const bool ok = ratio[1] >= 0.85 && ratio[1] <= 1.05 && deviation[1] < deviation[0] && t < 600.0;
    return {ok, fmt("ratio h=1/35 %.4f, h=1/70 %.4f; |riesz-leading| %.2f -> %.2f; %.1f s", ratio[0], ratio[1],
                    deviation[0], deviation[1], t)};
}

Outcome c_constant_scalings() {
    const std::vector<double> eps{0.4, 0.2, 0.1};
    std::vector<CConstants> c;
    for (double e : eps) c.push_back(c_constants(scale(make_cosine_window(2), e)));
    double c1_spread = 0.0, c3_max = 0.0, c2_lo = 1e300, c2_hi = 0.0;
    const double c1_ref = c[0].c1 * eps[0] * eps[0];
    for (std::size_t i = 0; i < eps.size(); ++i) {
        c1_spread = std::max(c1_spread, std::abs(c[i].c1 * eps[i] * eps[i] - c1_ref) / c1_ref);
        c3_max = std::max(c3_max, std::abs(c[i].c3 - 1.0) / eps[i]);
    }
    for (std::size_t i = 1; i < eps.size(); ++i) {
        c2_lo = std::min(c2_lo, c[i].c2 / c[i - 1].c2);
        c2_hi = std::max(c2_hi, c[i].c2 / c[i - 1].c2);
    }
    const double c3_first = std::abs(c[0].c3 - 1.0) / eps[0];
    const bool ok = c1_spread <= 1e-8 && c3_max <= 1.5 * c3_first && c2_lo >= 3.5 && c2_hi <= 4.5;
    return {ok, fmt("c1 eps^2 spread %.2e; max |c3-1|/eps %.4f vs %.4f at eps=0.4; c2 halving ratios [%.4f, %.4f]",
                    c1_spread, c3_max, c3_first, c2_lo, c2_hi)};
}

Outcome hyperbolic_1d_consistency() {
    const auto dom = rectangle_domain({{0, 1}}, 1.0 / 200);
    const auto lambdas = lambda_grid(10.0, 1e4, 25, LambdaSpacing::log);
    CurveMeta meta;
    meta.dim = 1;
    CurveOptions opt;
    opt.window = make_cosine_window(1);
    std::vector<std::string> out;
    std::vector<double> values[2];
    int slot = 0;
    for (auto kind : {OperatorKind::euclidean, OperatorKind::hyperbolic}) {
        const auto spec = dense_spectrum(assemble(dom, kind));
        values[slot++] = spec.values;
        const auto curve = build_curve(spec, reduced_leading(kind, dom), lambdas, meta, opt);
        std::ostringstream os;
        write_curve(os, curve);
        out.push_back(os.str());
    }
    const bool ok = out[0] == out[1] && values[0] == values[1];
    return {ok, fmt("%zu eigenvalues and %zu-byte curve %s", values[0].size(), out[0].size(),
                    ok ? "identical" : "differ")};
}

Outcome jensen_direction() {
    std::mt19937_64 rng(1010);
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> size(2, 32);
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = size(rng);
        Eigen::MatrixXd a(n, n);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
        a = (0.5 * (a + a.transpose())).eval();
        Eigen::VectorXd e(n);
        for (auto& v : e) v = g(rng);
        e.normalize();
        const double lam = 3.0 * g(rng);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
        const Eigen::VectorXd p = (lam - es.eigenvalues().array()).max(0.0).matrix();
        const Eigen::MatrixXd f = es.eigenvectors() * p.asDiagonal() * es.eigenvectors().transpose();
        const double lhs = e.dot(f * e);
        const double rhs = positive_part(lam - e.dot(a * e));
        if (lhs < rhs - 1e-12) ++violations;
    }
    return {violations == 0, fmt("%d violations in 1000 trials", violations)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"frame tightness", frame_tightness},
        {"trace formula", trace_formula},
        {"symbol convergence", symbol_convergence},
        {"euclidean weyl law d=1", euclidean_1d},
        {"euclidean weyl law d=2", euclidean_2d},
        {"remainder exponents", remainder_exponents},
        {"hyperbolic weyl law d=2", hyperbolic_2d},
        {"c-constant scalings", c_constant_scalings},
        {"hyperbolic d=1 consistency", hyperbolic_1d_consistency},
        {"jensen direction", jensen_direction},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
