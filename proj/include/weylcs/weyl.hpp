#pragma once

// Riesz means, Weyl leading terms and remainder fits.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "weylcs/common.hpp"
#include "weylcs/domain.hpp"
#include "weylcs/eigen.hpp"
#include "weylcs/window.hpp"

namespace weylcs {

/// sum_k (lam - lam_k)_+ over a spectrum certified up to at least lam.
inline double riesz_mean(const Spectrum& spec, double lam) {
    if (spec.cutoff && *spec.cutoff < lam)
        throw CertificationError("uncertified tail: spectrum known below " + std::to_string(*spec.cutoff) +
                                 ", requested " + std::to_string(lam));
    double acc = 0.0;
    for (double v : spec.values) {
        if (v >= lam) break;
        acc += lam - v;
    }
    return acc;
}

/// Dirichlet eigenvalues (k pi / L)^2 of (0, L) strictly below lam.
inline Spectrum exact_spectrum_interval(double length, double lam) {
    if (!(length > 0.0)) throw ConfigError("interval length must be positive");
    Spectrum s;
    s.cutoff = lam;
    s.certified = true;
    for (std::size_t k = 1;; ++k) {
        const double v = std::pow(static_cast<double>(k) * kPi / length, 2);
        if (!(v < lam)) break;
        s.values.push_back(v);
    }
    return s;
}

/// Dirichlet eigenvalues of a box with the given side lengths strictly below lam.
inline Spectrum exact_spectrum_box(const std::vector<double>& lengths, double lam) {
    if (lengths.empty()) throw ConfigError("box needs at least one side");
    std::vector<Spectrum> sides;
    for (double l : lengths) {
        sides.push_back(exact_spectrum_interval(l, lam));
        if (sides.back().values.empty()) return {{}, lam, true};
    }
    Spectrum s;
    s.cutoff = lam;
    s.certified = true;
    // Depth-first over index tuples; tail[a] is the smallest sum over axes a.. .
    std::vector<double> tail(lengths.size() + 1, 0.0);
    for (std::size_t a = lengths.size(); a-- > 0;) tail[a] = tail[a + 1] + sides[a].values.front();
    auto visit = [&](auto&& self, std::size_t axis, double partial) -> void {
        if (axis == lengths.size()) {
            if (partial < lam) s.values.push_back(partial);
            return;
        }
        for (double v : sides[axis].values) {
            if (!(partial + v + tail[axis + 1] < lam)) break;
            self(self, axis + 1, partial + v);
        }
    };
    visit(visit, 0, 0.0);
    std::sort(s.values.begin(), s.values.end());
    return s;
}

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(std::size_t d) {
    const double half = 0.5 * static_cast<double>(d);
    return std::pow(kPi, half) / std::tgamma(half + 1.0);
}

/// (2 pi)^{-d} int (1 - |xi|^2)_+ d xi.
inline double weyl_constant(std::size_t d) {
    if (d == 0) throw ConfigError("dimension must be positive");
    const double cd = unit_ball_volume(d) * 2.0 / (static_cast<double>(d) + 2.0);
    return cd / std::pow(2.0 * kPi, static_cast<double>(d));
}

/// reduced * lam^{1 + d/2}.
inline double leading_from_reduced(double reduced, std::size_t d, double lam) {
    if (lam <= 0.0) return 0.0;
    return reduced * std::pow(lam, 1.0 + 0.5 * static_cast<double>(d));
}

inline double euclidean_leading(double vol, std::size_t d, double lam) {
    return leading_from_reduced(vol * weyl_constant(d), d, lam);
}

/// The Riesz mean of the Dirichlet Laplacian never exceeds this value.
inline double li_yau_bound(double vol, std::size_t d, double lam) { return euclidean_leading(vol, d, lam); }

/// int_Omega exp(-(d - 1) y1) dy; closed form for rectangles, mask sum otherwise.
inline double hyperbolic_y_integral(const GridDomain& dom) {
    const std::size_t d = dom.dim();
    if (d == 1) return dom.volume();
    const double k = static_cast<double>(d - 1);
    if (const auto& box = dom.exact_box()) {
        double acc = (std::exp(-k * (*box)[0].lo) - std::exp(-k * (*box)[0].hi)) / k;
        for (std::size_t a = 1; a < d; ++a) acc *= (*box)[a].length();
        return acc;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < dom.node_count(); ++i)
        if (dom.inside(i)) acc += std::exp(-k * dom.coordinate(i, 0));
    return acc * std::pow(dom.h(), static_cast<double>(d));
}

/// lam-independent factor of the leading term (the value at lam = 1).
inline double reduced_leading(OperatorKind kind, const GridDomain& dom) {
    const double y = kind == OperatorKind::euclidean ? dom.volume() : hyperbolic_y_integral(dom);
    return y * weyl_constant(dom.dim());
}

inline double hyperbolic_leading(const GridDomain& dom, double lam) {
    return leading_from_reduced(reduced_leading(OperatorKind::hyperbolic, dom), dom.dim(), lam);
}

/// Midpoint-rule quadrature of (2 pi)^{-d} int int (lam - p(xi, y))_+ with p the
/// principal symbol (|xi|^2, or xi1^2 + exp(2 y1)|xi~|^2). The xi box is
/// |xi1| <= sqrt(lam), |xi~_j| <= sqrt(lam) exp(-r), r = inf y1. Rectangles use
/// `resolution` cells in y1; other domains use their mask nodes.
inline double phase_space_volume(OperatorKind kind, const GridDomain& dom, double lam, std::size_t resolution) {
    if (resolution < 16) throw ConfigError("resolution must be at least 16");
    if (lam <= 0.0) return 0.0;
    const std::size_t d = dom.dim();

    // The integrand depends on y only through y1: collect (y1, weight) pairs.
    std::vector<std::pair<double, double>> levels;
    double r = 0.0;
    if (const auto& box = dom.exact_box()) {
        const Interval y1 = (*box)[0];
        double other = 1.0;
        for (std::size_t a = 1; a < d; ++a) other *= (*box)[a].length();
        const double dy = y1.length() / static_cast<double>(resolution);
        for (std::size_t i = 0; i < resolution; ++i)
            levels.emplace_back(y1.lo + (static_cast<double>(i) + 0.5) * dy, dy * other);
        r = y1.lo;
    } else {
        std::map<std::size_t, std::size_t> rows;
        for (std::size_t i = 0; i < dom.node_count(); ++i)
            if (dom.inside(i)) ++rows[(i / dom.strides()[0])];
        const double cell = std::pow(dom.h(), static_cast<double>(d));
        for (const auto& [row, count] : rows)
            levels.emplace_back(dom.origin()[0] + static_cast<double>(row) * dom.h(),
                                static_cast<double>(count) * cell);
        r = dom.y1_min();
    }

    const double a1 = std::sqrt(lam);
    const double at = kind == OperatorKind::euclidean ? a1 : a1 * std::exp(-r);
    const double step1 = 2.0 * a1 / static_cast<double>(resolution);
    const double stept = 2.0 * at / static_cast<double>(resolution);
    std::vector<double> mid1(resolution), midt(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        mid1[i] = -a1 + (static_cast<double>(i) + 0.5) * step1;
        midt[i] = -at + (static_cast<double>(i) + 0.5) * stept;
    }
    const double cell = step1 * std::pow(stept, static_cast<double>(d - 1));

    // Sum over the tilde cells of (budget - growth |xi~|^2)_+, recursively by axis.
    auto tilde_sum = [&](auto&& self, std::size_t axes, double budget, double growth) -> double {
        if (axes == 0) return positive_part(budget);
        double acc = 0.0;
        for (double t : midt) {
            const double rest = budget - growth * t * t;
            if (rest <= 0.0) continue;
            acc += self(self, axes - 1, rest, growth);
        }
        return acc;
    };

    double total = 0.0;
    for (const auto& [y1, weight] : levels) {
        const double growth = kind == OperatorKind::euclidean ? 1.0 : std::exp(2.0 * y1);
        double acc = 0.0;
        for (double x : mid1) {
            const double budget = lam - x * x;
            if (budget <= 0.0) continue;
            acc += tilde_sum(tilde_sum, d - 1, budget, growth);
        }
        total += acc * cell * weight;
    }
    return total / std::pow(2.0 * kPi, static_cast<double>(d));
}

enum class LambdaSpacing { linear, log };

inline LambdaSpacing parse_lambda_spacing(std::string_view s) {
    if (s == "linear") return LambdaSpacing::linear;
    if (s == "log") return LambdaSpacing::log;
    throw ConfigError("unknown lambda spacing '" + std::string(s) + "'");
}

inline std::string_view to_string(LambdaSpacing s) { return s == LambdaSpacing::linear ? "linear" : "log"; }

inline std::vector<double> lambda_grid(double lo, double hi, std::size_t count, LambdaSpacing spacing) {
    if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("lambda range must satisfy 0 < min <= max");
    if (count == 0) throw ConfigError("lambda count must be positive");
    if (count == 1) return {lo};
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(count - 1);
        out[i] = spacing == LambdaSpacing::linear ? lo + t * (hi - lo)
                                                  : std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

struct CurveMeta {
    OperatorKind kind = OperatorKind::euclidean;
    std::size_t dim = 1;
    std::string domain;
    double h = 0.0;  // zero for analytic spectra
    double alpha = 1.0 / 3.0;
};

struct RieszCurve {
    std::vector<double> lambdas;
    std::vector<double> riesz;
    std::vector<double> leading;
    std::vector<double> remainder;
    std::vector<double> epsilon;  // lam^{-alpha}
    std::vector<CConstants> constants;
    CurveMeta meta;
};

struct CurveOptions {
    double alpha = 1.0 / 3.0;
    std::optional<Window> window;  // unscaled window for the c-constant columns
    unsigned threads = 1;
};

/// Riesz mean against reduced * lam^{1 + d/2} at each lam. The spectrum must be
/// certified up to max(lambdas).
inline RieszCurve build_curve(const Spectrum& spec, double reduced, const std::vector<double>& lambdas,
                              CurveMeta meta, const CurveOptions& opt = {}) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0)) throw ConfigError("lambda samples must be positive");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw ConfigError("lambda samples must increase");
    }
    if (!spec.certified) throw CertificationError("spectrum is not certified");
    if (!lambdas.empty()) riesz_mean(spec, lambdas.back());

    RieszCurve c;
    meta.alpha = opt.alpha;
    c.meta = std::move(meta);
    const std::size_t n = lambdas.size();
    c.lambdas = lambdas;
    c.riesz.resize(n);
    c.leading.resize(n);
    c.remainder.resize(n);
    c.epsilon.resize(n);
    c.constants.resize(n);
    parallel_for(n, opt.threads, [&](std::size_t i) {
        const double lam = lambdas[i];
        c.riesz[i] = riesz_mean(spec, lam);
        c.leading[i] = leading_from_reduced(reduced, c.meta.dim, lam);
        c.remainder[i] = c.riesz[i] - c.leading[i];
        c.epsilon[i] = std::pow(lam, -opt.alpha);
        if (opt.window) c.constants[i] = c_constants(opt.window->scaled(c.epsilon[i]));
    });
    return c;
}

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // root mean square of the log residuals
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    std::size_t samples = 0;
};

/// Least-squares fit of log|remainder| = intercept + slope log(lam) over
/// samples in [lo, hi] with nonzero remainder.
inline ExponentFit fit_remainder_exponent(const RieszCurve& curve, double lo, double hi) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < curve.lambdas.size(); ++i) {
        const double lam = curve.lambdas[i];
        const double rem = std::abs(curve.remainder[i]);
        if (lam < lo || lam > hi || !(rem > 0.0) || !std::isfinite(rem)) continue;
        xs.push_back(std::log(lam));
        ys.push_back(std::log(rem));
    }
    if (xs.size() < 5)
        throw ConfigError("remainder fit needs at least 5 nonzero samples, found " + std::to_string(xs.size()));
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw ConfigError("remainder fit needs distinct lambda samples");
    ExponentFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - f.intercept - f.slope * xs[i];
        ss += e * e;
    }
    f.residual = std::sqrt(ss / n);
    f.lambda_min = std::exp(xs.front());
    f.lambda_max = std::exp(xs.back());
    f.samples = xs.size();
    return f;
}

inline constexpr std::string_view kCurveHeader = "lambda,riesz,leading,remainder,ratio,epsilon,c1,c2,c3";

/// CSV with `#` comment lines first, the fixed header, one row per lambda and
/// an optional trailing `# fit` line.
inline void write_curve(std::ostream& os, const RieszCurve& c, const std::vector<std::string>& comments = {},
                        const std::optional<ExponentFit>& fit = std::nullopt) {
    for (const auto& line : comments) os << "# " << line << '\n';
    os << kCurveHeader << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
        const double ratio = c.leading[i] > 0.0 ? c.riesz[i] / c.leading[i] : 0.0;
        os << c.lambdas[i] << ',' << c.riesz[i] << ',' << c.leading[i] << ',' << c.remainder[i] << ',' << ratio
           << ',' << c.epsilon[i] << ',' << c.constants[i].c1 << ',' << c.constants[i].c2 << ','
           << c.constants[i].c3 << '\n';
    }
    if (fit)
        os << "# fit slope=" << fit->slope << " intercept=" << fit->intercept << " residual=" << fit->residual
           << " lambda_min=" << fit->lambda_min << " lambda_max=" << fit->lambda_max << " samples=" << fit->samples
           << '\n';
}

}  // namespace weylcs
