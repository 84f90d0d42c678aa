#pragma once

// Discrete coherent-state transform.
//
// The embedding grid is a periodic box of N^d nodes with spacing h (side
// L = N h). Coherent states are e_{k,j}(x) = exp(i xi_k . x) g(x - y_j) / sqrt(s)
// with xi_k the discrete Fourier frequencies of the grid, y_j the grid nodes
// themselves, and s = h^d sum_m g(m h)^2 the lattice sum of the window. With
// phase-space weight (2 pi / L)^d h^d (2 pi)^{-d} the family is an exactly
// tight frame for the grid inner product <f, g> = h^d sum conj(f) g.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include <Eigen/Dense>

#include "weylcs/common.hpp"
#include "weylcs/domain.hpp"
#include "weylcs/operators.hpp"
#include "weylcs/window.hpp"

namespace weylcs {

using Complex = std::complex<double>;

/// The window support would overlap itself on the periodic grid.
class WrapError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftPlans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    FftPlans(std::size_t dim, int n) {
        std::vector<int> dims(dim, n);
        std::size_t total = 1;
        for (std::size_t j = 0; j < dim; ++j) total *= static_cast<std::size_t>(n);
        std::lock_guard lock(fftw_planner_mutex());
        fftw_complex* scratch = fftw_alloc_complex(total);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward = fftw_plan_dft(static_cast<int>(dim), dims.data(), scratch, scratch, FFTW_FORWARD, flags);
        backward = fftw_plan_dft(static_cast<int>(dim), dims.data(), scratch, scratch, FFTW_BACKWARD, flags);
        fftw_free(scratch);
    }
    ~FftPlans() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(forward);
        fftw_destroy_plan(backward);
    }
    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;

    // New-array execution is thread safe; buffers are per invocation.
    void run(fftw_plan plan, std::vector<Complex>& buf) const {
        auto* p = reinterpret_cast<fftw_complex*>(buf.data());
        fftw_execute_dft(plan, p, p);
    }
};

inline std::uint64_t next_frame_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter++;
}

}  // namespace detail

class CoherentFrame {
public:
    std::uint64_t id() const { return id_; }
    std::size_t dim() const { return dim_; }
    std::size_t nodes_per_axis() const { return n_; }
    /// N^d, the number of grid nodes (and of frequencies).
    std::size_t size() const { return total_; }
    double h() const { return h_; }
    double side() const { return h_ * static_cast<double>(n_); }
    const std::vector<double>& origin() const { return origin_; }
    const Window& window() const { return window_; }
    double lattice_sum() const { return s_; }

    double weight_xi() const { return std::pow(2.0 * kPi / side(), static_cast<double>(dim_)); }
    double weight_y() const { return std::pow(h_, static_cast<double>(dim_)); }
    double measure_normalizer() const { return std::pow(2.0 * kPi, -static_cast<double>(dim_)); }
    /// Phase-space weight of one (xi_k, y_j) sample.
    double weight() const { return weight_xi() * weight_y() * measure_normalizer(); }

    std::size_t axis_index(std::size_t flat, std::size_t axis) const { return multi_[flat * dim_ + axis]; }

    /// Node / centre coordinate.
    double y(std::size_t flat, std::size_t axis) const {
        return origin_[axis] + static_cast<double>(axis_index(flat, axis)) * h_;
    }

    /// Frequency component 2 pi k' / L with k' in (-N/2, N/2].
    double xi(std::size_t flat, std::size_t axis) const { return freq_[axis_index(flat, axis)]; }

    /// Window value at the periodic offset between node n and centre j.
    double window_at(std::size_t node, std::size_t centre) const { return gtab_[offset(node, centre)]; }

    /// Flat node index of a point on the embedding lattice.
    std::optional<std::size_t> node_at(std::span<const double> x) const {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < dim_; ++a) {
            const double t = (x[a] - origin_[a]) / h_;
            const double k = std::round(t);
            if (std::abs(t - k) > 1e-3 || k < 0.0 || k >= static_cast<double>(n_)) return std::nullopt;
            flat = flat * n_ + static_cast<std::size_t>(k);
        }
        return flat;
    }

    friend CoherentFrame build_frame(const Box& box, double h, const Window& window);
    friend class PhaseSpaceFunction;

    const detail::FftPlans& plans() const { return *plans_; }
    Complex origin_phase(std::size_t k) const { return phase_[k]; }

private:
    CoherentFrame(std::size_t dim, std::size_t n, double h, std::vector<double> origin, Window window)
        : id_(detail::next_frame_id()),
          dim_(dim),
          n_(n),
          h_(h),
          origin_(std::move(origin)),
          window_(std::move(window)) {}

    std::size_t offset(std::size_t node, std::size_t centre) const {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < dim_; ++a) {
            const std::size_t i = multi_[node * dim_ + a];
            const std::size_t j = multi_[centre * dim_ + a];
            flat = flat * n_ + (i + n_ - j) % n_;
        }
        return flat;
    }

    std::uint64_t id_;
    std::size_t dim_;
    std::size_t n_;
    std::size_t total_ = 0;
    double h_;
    std::vector<double> origin_;
    Window window_;
    double s_ = 0.0;
    std::vector<std::size_t> multi_;
    std::vector<double> freq_;
    std::vector<double> gtab_;
    std::vector<Complex> phase_;  // exp(-i xi_k . origin)
    std::shared_ptr<const detail::FftPlans> plans_;
};

/// Build a frame on the periodic box `box` (equal sides, each a multiple of h).
inline CoherentFrame build_frame(const Box& box, double h, const Window& window) {
    if (box.empty() || box.size() != window.dim()) throw ConfigError("frame box and window dimensions differ");
    if (!(h > 0.0)) throw ConfigError("frame spacing must be positive");
    const double side = box.front().length();
    const double steps = side / h;
    const auto n = static_cast<std::size_t>(std::llround(steps));
    if (n < 2 || std::abs(steps - static_cast<double>(n)) > 1e-8 * steps)
        throw ConfigError("frame box side must be a multiple of h");
    for (const auto& iv : box)
        if (std::abs(iv.length() - side) > 1e-12 * side) throw ConfigError("frame box must have equal sides");
    const double length = static_cast<double>(n) * h;
    if (!(2.0 * window.support_radius() < length))
        throw WrapError("window support " + std::to_string(window.support_radius()) +
                        " wraps around the periodic box of side " + std::to_string(length));

    const std::size_t d = box.size();
    std::vector<double> origin(d);
    for (std::size_t a = 0; a < d; ++a) origin[a] = box[a].lo;
    CoherentFrame f(d, n, h, std::move(origin), window);
    f.total_ = 1;
    for (std::size_t a = 0; a < d; ++a) f.total_ *= n;

    f.multi_.resize(f.total_ * d);
    for (std::size_t flat = 0; flat < f.total_; ++flat) {
        std::size_t rest = flat;
        for (std::size_t a = d; a-- > 0;) {
            f.multi_[flat * d + a] = rest % n;
            rest /= n;
        }
    }
    f.freq_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double signed_k = (2 * k <= n) ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
        f.freq_[k] = 2.0 * kPi * signed_k / length;
    }

    f.gtab_.resize(f.total_);
    std::vector<double> z(d);
    double lattice = 0.0;
    for (std::size_t flat = 0; flat < f.total_; ++flat) {
        for (std::size_t a = 0; a < d; ++a) {
            const std::size_t o = f.multi_[flat * d + a];
            z[a] = (2 * o <= n ? static_cast<double>(o) : static_cast<double>(o) - static_cast<double>(n)) * h;
        }
        f.gtab_[flat] = window(z);
        lattice += f.gtab_[flat] * f.gtab_[flat];
    }
    f.s_ = lattice * std::pow(h, static_cast<double>(d));
    if (!(f.s_ > 0.0)) throw ConfigError("window vanishes on the lattice");

    f.phase_.resize(f.total_);
    for (std::size_t k = 0; k < f.total_; ++k) {
        double angle = 0.0;
        for (std::size_t a = 0; a < d; ++a) angle += f.xi(k, a) * f.origin_[a];
        f.phase_[k] = std::polar(1.0, -angle);
    }
    f.plans_ = std::make_shared<const detail::FftPlans>(d, static_cast<int>(n));
    return f;
}

/// Samples Phi f(xi_k, y_j), stored y-major, xi-minor: values[j * N^d + k].
class PhaseSpaceFunction {
public:
    PhaseSpaceFunction(const CoherentFrame& frame)
        : frame_id_(frame.id()), size_(frame.size()), values_(frame.size() * frame.size()) {}

    std::uint64_t frame_id() const { return frame_id_; }
    std::size_t points_per_side() const { return size_; }
    Complex& at(std::size_t y, std::size_t xi) { return values_[y * size_ + xi]; }
    Complex at(std::size_t y, std::size_t xi) const { return values_[y * size_ + xi]; }
    std::span<Complex> values() { return values_; }
    std::span<const Complex> values() const { return values_; }

private:
    std::uint64_t frame_id_;
    std::size_t size_;
    std::vector<Complex> values_;
};

inline double grid_norm_squared(const CoherentFrame& frame, std::span<const Complex> f) {
    double acc = 0.0;
    for (const auto& v : f) acc += std::norm(v);
    return acc * frame.weight_y();
}

/// Phi f(xi_k, y_j) = h^d sum_x exp(-i xi_k . x) g(x - y_j) f(x) / sqrt(s).
inline PhaseSpaceFunction forward(const CoherentFrame& frame, std::span<const Complex> f) {
    if (f.size() != frame.size())
        throw ConfigError("grid vector has " + std::to_string(f.size()) + " entries, frame expects " +
                          std::to_string(frame.size()));
    PhaseSpaceFunction out(frame);
    const std::size_t total = frame.size();
    const double scale = frame.weight_y() / std::sqrt(frame.lattice_sum());
    std::vector<Complex> buf(total);
    for (std::size_t j = 0; j < total; ++j) {
        for (std::size_t x = 0; x < total; ++x) buf[x] = frame.window_at(x, j) * f[x];
        frame.plans().run(frame.plans().forward, buf);
        for (std::size_t k = 0; k < total; ++k) out.at(j, k) = scale * frame.origin_phase(k) * buf[k];
    }
    return out;
}

inline PhaseSpaceFunction forward(const CoherentFrame& frame, std::span<const double> f) {
    std::vector<Complex> c(f.begin(), f.end());
    return forward(frame, std::span<const Complex>(c));
}

/// Weighted synthesis sum; adjoint(forward(f)) == f.
inline std::vector<Complex> adjoint(const CoherentFrame& frame, const PhaseSpaceFunction& F) {
    if (F.frame_id() != frame.id()) throw ConfigError("phase-space function belongs to a different frame");
    const std::size_t total = frame.size();
    const double scale = frame.weight() / std::sqrt(frame.lattice_sum());
    std::vector<Complex> out(total), buf(total);
    for (std::size_t j = 0; j < total; ++j) {
        for (std::size_t k = 0; k < total; ++k) buf[k] = F.at(j, k) * std::conj(frame.origin_phase(k));
        frame.plans().run(frame.plans().backward, buf);
        for (std::size_t x = 0; x < total; ++x) out[x] += scale * frame.window_at(x, j) * buf[x];
    }
    return out;
}

/// sum_{k,j} weight * conj(F) G.
inline Complex inner(const CoherentFrame& frame, const PhaseSpaceFunction& F, const PhaseSpaceFunction& G) {
    if (F.frame_id() != frame.id() || G.frame_id() != frame.id())
        throw ConfigError("phase-space function belongs to a different frame");
    Complex acc = 0.0;
    for (std::size_t i = 0; i < F.values().size(); ++i) acc += std::conj(F.values()[i]) * G.values()[i];
    return acc * frame.weight();
}

/// sum_{k,j} weight * m(k, j) |F(k, j)|^2 for a real phase-space multiplier m.
inline double weighted_norm_squared(const CoherentFrame& frame, const PhaseSpaceFunction& F,
                                    const std::function<double(std::size_t xi, std::size_t y)>& multiplier) {
    if (F.frame_id() != frame.id()) throw ConfigError("phase-space function belongs to a different frame");
    double acc = 0.0;
    for (std::size_t j = 0; j < frame.size(); ++j)
        for (std::size_t k = 0; k < frame.size(); ++k) acc += multiplier(k, j) * std::norm(F.at(j, k));
    return acc * frame.weight();
}

inline double norm_squared(const CoherentFrame& frame, const PhaseSpaceFunction& F) {
    return weighted_norm_squared(frame, F, [](std::size_t, std::size_t) { return 1.0; });
}

/// sum_{k,j} weight * <e_{k,j}, T e_{k,j}> for a symmetric PSD matrix T acting
/// on embedding-grid vectors. Equals trace(T) because the frame is tight.
inline double trace_via_frame(const CoherentFrame& frame, const Eigen::MatrixXd& t) {
    const auto total = static_cast<Eigen::Index>(frame.size());
    if (t.rows() != total || t.cols() != total) throw ConfigError("matrix does not match the frame grid");
    const double scale_t = std::max(t.cwiseAbs().maxCoeff(), 1e-300);
    if ((t - t.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale_t) throw ConfigError("matrix is not symmetric");

    const std::size_t n = frame.nodes_per_axis();
    const std::size_t d = frame.dim();
    std::vector<Complex> roots(n);
    for (std::size_t m = 0; m < n; ++m) roots[m] = std::polar(1.0, 2.0 * kPi * static_cast<double>(m) / static_cast<double>(n));

    const double norm = frame.weight_y() / frame.lattice_sum();
    double total_sum = 0.0;
    std::vector<std::size_t> support;
    std::vector<double> amp;
    Eigen::MatrixXd local;
    Eigen::VectorXcd v;
    for (std::size_t j = 0; j < frame.size(); ++j) {
        support.clear();
        amp.clear();
        for (std::size_t x = 0; x < frame.size(); ++x) {
            const double g = frame.window_at(x, j);
            if (g != 0.0) {
                support.push_back(x);
                amp.push_back(g);
            }
        }
        const auto s = static_cast<Eigen::Index>(support.size());
        local.resize(s, s);
        for (Eigen::Index a = 0; a < s; ++a)
            for (Eigen::Index b = 0; b < s; ++b)
                local(a, b) = amp[a] * amp[b] * t(static_cast<Eigen::Index>(support[a]), static_cast<Eigen::Index>(support[b]));
        v.resize(s);
        double centre_sum = 0.0;
        for (std::size_t k = 0; k < frame.size(); ++k) {
            // exp(i xi_k . x) up to the common origin phase, which cancels.
            for (Eigen::Index a = 0; a < s; ++a) {
                Complex e = 1.0;
                for (std::size_t ax = 0; ax < d; ++ax)
                    e *= roots[(frame.axis_index(k, ax) * frame.axis_index(support[a], ax)) % n];
                v(a) = e;
            }
            centre_sum += (v.adjoint() * local * v)(0, 0).real();
        }
        total_sum += centre_sum;
    }
    return total_sum * norm * frame.weight();
}

/// Frame node of each operator row, matched by coordinates.
inline std::vector<std::size_t> embedding(const CoherentFrame& frame, const DiscreteOperator& op) {
    if (op.grid().dim() != frame.dim()) throw ConfigError("operator and frame dimensions differ");
    if (std::abs(op.grid().h() - frame.h()) > 1e-12 * frame.h()) throw ConfigError("operator and frame spacings differ");
    std::vector<std::size_t> out(op.size());
    std::vector<double> x(frame.dim());
    for (std::size_t row = 0; row < op.size(); ++row) {
        op.grid().coordinates(op.node_index()[row], x);
        const auto node = frame.node_at(x);
        if (!node) throw ConfigError("operator node lies outside the frame grid");
        out[row] = *node;
    }
    return out;
}

/// Extends a vector on the operator rows by zero to the frame grid.
inline std::vector<Complex> embed(const CoherentFrame& frame, const DiscreteOperator& op, std::span<const double> v) {
    if (v.size() != op.size()) throw ConfigError("vector does not match the operator");
    const auto map = embedding(frame, op);
    std::vector<Complex> out(frame.size());
    for (std::size_t row = 0; row < v.size(); ++row) out[map[row]] = v[row];
    return out;
}

/// Extends a matrix on the operator rows by zero to the frame grid.
inline Eigen::MatrixXd embed(const CoherentFrame& frame, const DiscreteOperator& op, const Eigen::MatrixXd& m) {
    const auto n = static_cast<Eigen::Index>(op.size());
    if (m.rows() != n || m.cols() != n) throw ConfigError("matrix does not match the operator");
    const auto map = embedding(frame, op);
    const auto total = static_cast<Eigen::Index>(frame.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(total, total);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out(static_cast<Eigen::Index>(map[i]), static_cast<Eigen::Index>(map[j])) = m(i, j);
    return out;
}

struct SymbolValue {
    double value = 0.0;
    bool truncated = false;  // window support not contained in the domain
};

/// Re <e, A e> / <e, e> for e(x) = exp(i xi . x) g(x - y) sampled on the
/// operator's interior nodes (zero elsewhere).
inline SymbolValue symbol(const Window& window, const DiscreteOperator& op, std::span<const double> xi,
                          std::span<const double> y) {
    const GridDomain& grid = op.grid();
    const std::size_t d = grid.dim();
    if (xi.size() != d || y.size() != d || window.dim() != d) throw ConfigError("symbol dimension mismatch");

    SymbolValue result;
    for (std::size_t a = 0; a < d; ++a) {
        const double reach = window.is_separable() ? window.factors()[a].support() : window.support_radius();
        const double last = grid.origin()[a] + static_cast<double>(grid.shape()[a] - 1) * grid.h();
        if (y[a] - reach < grid.origin()[a] || y[a] + reach > last) result.truncated = true;
    }

    std::vector<double> re(op.size(), 0.0), im(op.size(), 0.0);
    std::vector<double> x(d), z(d);
    for (std::size_t flat = 0; flat < grid.node_count(); ++flat) {
        grid.coordinates(flat, x);
        for (std::size_t a = 0; a < d; ++a) z[a] = x[a] - y[a];
        const double g = window(z);
        if (g == 0.0) continue;
        const std::int64_t row = op.row_of_node(flat);
        if (row < 0) {
            result.truncated = true;
            continue;
        }
        double phase = 0.0;
        for (std::size_t a = 0; a < d; ++a) phase += xi[a] * x[a];
        re[static_cast<std::size_t>(row)] = g * std::cos(phase);
        im[static_cast<std::size_t>(row)] = g * std::sin(phase);
    }
    const auto are = weylcs::apply(op, re);
    const auto aim = weylcs::apply(op, im);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < op.size(); ++i) {
        num += re[i] * are[i] + im[i] * aim[i];
        den += re[i] * re[i] + im[i] * im[i];
    }
    if (den == 0.0) throw ConfigError("coherent state vanishes on the domain");
    result.value = num / den;
    return result;
}

inline SymbolValue symbol(const CoherentFrame& frame, const DiscreteOperator& op, std::span<const double> xi,
                          std::span<const double> y) {
    return symbol(frame.window(), op, xi, y);
}

/// Continuum symbol <e_{xi,y}, A e_{xi,y}> of -Laplace or H.
inline double analytic_symbol(OperatorKind kind, const Window& window, std::span<const double> xi,
                              std::span<const double> y) {
    if (xi.size() != window.dim() || y.size() != window.dim()) throw ConfigError("symbol dimension mismatch");
    if (kind == OperatorKind::euclidean) {
        double xi2 = 0.0;
        for (double v : xi) xi2 += v * v;
        return xi2 + gradient_energy(window);
    }
    const CConstants c = c_constants(window);
    double tilde2 = 0.0;
    for (std::size_t a = 1; a < xi.size(); ++a) tilde2 += xi[a] * xi[a];
    const double growth = std::exp(2.0 * y[0]);
    return xi[0] * xi[0] + growth * tilde2 * c.c3 + growth * c.c2 + c.c1;
}

/// Binary layout (little endian): uint32 d, uint32 N, float64 h, float64 L,
/// float64 eps, then N^d * N^d complex64 values (float32 re, float32 im),
/// y-major and xi-minor.
inline void write_phase_space(std::ostream& os, const CoherentFrame& frame, const PhaseSpaceFunction& F) {
    static_assert(std::endian::native == std::endian::little, "phase-space export assumes little endian");
    if (F.frame_id() != frame.id()) throw ConfigError("phase-space function belongs to a different frame");
    const auto d = static_cast<std::uint32_t>(frame.dim());
    const auto n = static_cast<std::uint32_t>(frame.nodes_per_axis());
    const double header[3] = {frame.h(), frame.side(), frame.window().eps()};
    os.write(reinterpret_cast<const char*>(&d), sizeof d);
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(reinterpret_cast<const char*>(header), sizeof header);
    for (const auto& v : F.values()) {
        const float pair[2] = {static_cast<float>(v.real()), static_cast<float>(v.imag())};
        os.write(reinterpret_cast<const char*>(pair), sizeof pair);
    }
}

struct PhaseSpaceFile {
    std::uint32_t dim = 0;
    std::uint32_t nodes_per_axis = 0;
    double h = 0.0;
    double side = 0.0;
    double eps = 0.0;
    std::vector<std::complex<float>> values;
};

inline PhaseSpaceFile read_phase_space(std::istream& is) {
    PhaseSpaceFile f;
    double header[3];
    is.read(reinterpret_cast<char*>(&f.dim), sizeof f.dim);
    is.read(reinterpret_cast<char*>(&f.nodes_per_axis), sizeof f.nodes_per_axis);
    is.read(reinterpret_cast<char*>(header), sizeof header);
    if (!is) throw ConfigError("truncated phase-space header");
    f.h = header[0];
    f.side = header[1];
    f.eps = header[2];
    std::size_t count = 1;
    for (std::uint32_t a = 0; a < 2 * f.dim; ++a) count *= f.nodes_per_axis;
    f.values.resize(count);
    is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(count * sizeof(std::complex<float>)));
    if (!is) throw ConfigError("truncated phase-space values");
    return f;
}

}  // namespace weylcs
