#pragma once

// Windows g for coherent states e_{xi,y}(x) = exp(i xi.x) g(x - y), and the
// constants c1, c2, c3 that appear in the symbol of the hyperbolic operator.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "weylcs/common.hpp"

namespace weylcs {

enum class WindowShape { cosine, bump };

inline std::string_view to_string(WindowShape shape) {
    return shape == WindowShape::cosine ? "cosine" : "bump";
}

inline WindowShape parse_window_shape(std::string_view s) {
    if (s == "cosine") return WindowShape::cosine;
    if (s == "bump") return WindowShape::bump;
    throw ConfigError("unknown window '" + std::string(s) + "'");
}

/// Adaptive Gauss-Kronrod (15 point) integral of a smooth function on [a, b].
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-13) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    return GK::integrate(std::forward<F>(f), a, b, 20, rel_tol);
}

/// One even factor of a separable window, already scaled by epsilon:
/// p(u) = eps^{-1/2} q(u / eps) with q supported on |v| < half_width.
class Profile {
public:
    Profile(WindowShape shape, double half_width, double amplitude, double eps)
        : shape_(shape), half_width_(half_width), amplitude_(amplitude), eps_(eps) {}

    WindowShape shape() const { return shape_; }
    double eps() const { return eps_; }
    /// Half width of the support after scaling.
    double support() const { return half_width_ * eps_; }

    double operator()(double u) const {
        const double t = u / (eps_ * half_width_);
        if (std::abs(t) >= 1.0) return 0.0;
        const double scale = amplitude_ / std::sqrt(eps_);
        if (shape_ == WindowShape::cosine) return scale * std::cos(0.5 * kPi * t);
        return scale * std::exp(-1.0 / (1.0 - t * t));
    }

    double derivative(double u) const {
        const double width = eps_ * half_width_;
        const double t = u / width;
        if (std::abs(t) >= 1.0) return 0.0;
        const double scale = amplitude_ / std::sqrt(eps_);
        if (shape_ == WindowShape::cosine)
            return -scale * 0.5 * kPi / width * std::sin(0.5 * kPi * t);
        const double s = 1.0 - t * t;
        return scale * std::exp(-1.0 / s) * (-2.0 * t / (s * s)) / width;
    }

    Profile scaled(double factor) const {
        return Profile(shape_, half_width_, amplitude_, eps_ * factor);
    }

    /// Integral of f over the support of this profile.
    template <class F>
    double integrate_over_support(F&& f) const {
        return integrate(std::forward<F>(f), -support(), support());
    }

private:
    WindowShape shape_;
    double half_width_;
    double amplitude_;
    double eps_;
};

/// A window g on R^d. Separable windows are products of even unit-norm
/// profiles; custom windows are arbitrary evaluable functions (used to
/// exercise frame machinery) and carry no derivative information.
class Window {
public:
    using Evaluator = std::function<double(std::span<const double>)>;

    static Window separable(std::vector<Profile> factors) {
        if (factors.empty()) throw ConfigError("window needs at least one factor");
        Window w;
        w.dim_ = factors.size();
        w.eps_ = factors.front().eps();
        double radius2 = 0.0;
        for (const auto& p : factors) radius2 += p.support() * p.support();
        w.support_radius_ = std::sqrt(radius2);
        w.factors_ = std::move(factors);
        return w;
    }

    /// A non-separable window; `fn` must vanish for |z| >= support_radius.
    static Window custom(std::size_t dim, double support_radius, Evaluator fn) {
        if (dim == 0) throw ConfigError("window dimension must be positive");
        Window w;
        w.dim_ = dim;
        w.eps_ = support_radius;
        w.support_radius_ = support_radius;
        w.custom_ = std::move(fn);
        return w;
    }

    std::size_t dim() const { return dim_; }
    double eps() const { return eps_; }
    double support_radius() const { return support_radius_; }
    bool is_separable() const { return !custom_; }
    std::span<const Profile> factors() const { return factors_; }

    double operator()(std::span<const double> z) const {
        if (custom_) return custom_(z);
        double v = 1.0;
        for (std::size_t j = 0; j < dim_ && v != 0.0; ++j) v *= factors_[j](z[j]);
        return v;
    }

    /// g^eps(z) = eps^{-d/2} g(z / eps) relative to the current window.
    Window scaled(double factor) const {
        if (!(factor > 0.0)) throw ConfigError("scale factor must be positive");
        if (custom_) {
            const double amp = std::pow(factor, -0.5 * static_cast<double>(dim_));
            auto inner = custom_;
            const std::size_t d = dim_;
            return custom(dim_, support_radius_ * factor,
                          [inner, amp, factor, d](std::span<const double> z) {
                              std::vector<double> u(z.begin(), z.end());
                              for (std::size_t j = 0; j < d; ++j) u[j] /= factor;
                              return amp * inner(u);
                          });
        }
        std::vector<Profile> f;
        f.reserve(dim_);
        for (const auto& p : factors_) f.push_back(p.scaled(factor));
        return separable(std::move(f));
    }

private:
    Window() = default;

    std::size_t dim_ = 0;
    double eps_ = 1.0;
    double support_radius_ = 1.0;
    std::vector<Profile> factors_;
    Evaluator custom_;
};

/// Window whose factors are d^{1/4} cos(pi sqrt(d) u / 2) on |u| <= 1/sqrt(d).
inline Window make_cosine_window(std::size_t d) {
    if (d == 0) throw ConfigError("window dimension must be positive");
    const double half = 1.0 / std::sqrt(static_cast<double>(d));
    const double amp = 1.0 / std::sqrt(half);
    return Window::separable(std::vector<Profile>(d, Profile(WindowShape::cosine, half, amp, 1.0)));
}

/// C-infinity window with factors proportional to exp(-1/(1 - d u^2)).
inline Window make_bump_window(std::size_t d) {
    if (d == 0) throw ConfigError("window dimension must be positive");
    const double half = 1.0 / std::sqrt(static_cast<double>(d));
    const double unit = integrate([](double t) { return std::exp(-2.0 / (1.0 - t * t)); }, -1.0, 1.0);
    const double amp = 1.0 / std::sqrt(half * unit);
    return Window::separable(std::vector<Profile>(d, Profile(WindowShape::bump, half, amp, 1.0)));
}

inline Window make_window(WindowShape shape, std::size_t d) {
    return shape == WindowShape::cosine ? make_cosine_window(d) : make_bump_window(d);
}

inline Window scale(const Window& w, double eps) { return w.scaled(eps); }

struct CConstants {
    double c1 = 0.0;  // int (d_{z1} g)^2
    double c2 = 0.0;  // int e^{2 z1} |grad_{z~} g|^2
    double c3 = 0.0;  // int e^{2 z1} g^2
};

namespace detail {

inline const Profile& require_factor(const Window& w, std::size_t j) {
    if (!w.is_separable()) throw ConfigError("separability required");
    return w.factors()[j];
}

inline double factor_norm2(const Profile& p) {
    return p.integrate_over_support([&](double u) { return p(u) * p(u); });
}

inline double factor_energy(const Profile& p) {
    return p.integrate_over_support([&](double u) {
        const double dp = p.derivative(u);
        return dp * dp;
    });
}

}  // namespace detail

/// Every window integral factorizes, so each constant is a product of 1-D
/// quadratures over the factor supports.
inline CConstants c_constants(const Window& w) {
    const Profile& p1 = detail::require_factor(w, 0);
    double rest_norm = 1.0;
    double tilde_energy = 0.0;
    for (std::size_t j = 1; j < w.dim(); ++j) {
        const Profile& pj = detail::require_factor(w, j);
        const double nj = detail::factor_norm2(pj);
        tilde_energy = tilde_energy * nj + rest_norm * detail::factor_energy(pj);
        rest_norm *= nj;
    }
    const double weighted_norm =
        p1.integrate_over_support([&](double u) { return std::exp(2.0 * u) * p1(u) * p1(u); });
    CConstants c;
    c.c1 = detail::factor_energy(p1) * rest_norm;
    c.c2 = weighted_norm * tilde_energy;
    c.c3 = weighted_norm * rest_norm;
    return c;
}

/// int |grad g|^2.
inline double gradient_energy(const Window& w) {
    detail::require_factor(w, 0);
    double total = 0.0;
    for (std::size_t j = 0; j < w.dim(); ++j) {
        double term = detail::factor_energy(w.factors()[j]);
        for (std::size_t i = 0; i < w.dim(); ++i)
            if (i != j) term *= detail::factor_norm2(w.factors()[i]);
        total += term;
    }
    return total;
}

/// int g^2 (equal to one up to quadrature error for library windows).
inline double norm_squared(const Window& w) {
    double total = 1.0;
    for (std::size_t j = 0; j < w.dim(); ++j) total *= detail::factor_norm2(detail::require_factor(w, j));
    return total;
}

}  // namespace weylcs
