#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "weylcs/common.hpp"

namespace weylcs {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

using Box = std::vector<Interval>;

inline double box_volume(const Box& box) {
    double v = 1.0;
    for (const auto& iv : box) v *= iv.length();
    return v;
}

/// A domain represented by the interior nodes of a uniform grid.
///
/// Nodes sit at origin + i * h per axis, stored row-major with axis 0 (the
/// x1 direction of the hyperbolic operator) varying slowest. Domains created
/// by rectangle_domain remember their exact box so that closed-form volumes
/// and phase-space integrals can be used downstream.
class GridDomain {
public:
    GridDomain(double h, std::vector<double> origin, std::vector<std::size_t> shape, Box bounding_box,
               std::vector<std::uint8_t> mask, std::optional<Box> exact_box = std::nullopt)
        : h_(h),
          origin_(std::move(origin)),
          shape_(std::move(shape)),
          bounding_box_(std::move(bounding_box)),
          mask_(std::move(mask)),
          exact_box_(std::move(exact_box)) {
        if (!(h_ > 0.0)) throw ConfigError("grid spacing must be positive");
        if (shape_.empty() || origin_.size() != shape_.size() || bounding_box_.size() != shape_.size())
            throw ConfigError("inconsistent grid dimensions");
        std::size_t total = 1;
        for (auto n : shape_) total *= n;
        if (mask_.size() != total) throw ConfigError("mask size does not match grid shape");
        strides_.assign(shape_.size(), 1);
        for (std::size_t j = shape_.size() - 1; j > 0; --j) strides_[j - 1] = strides_[j] * shape_[j];

        r_ = std::numeric_limits<double>::infinity();
        R_ = -std::numeric_limits<double>::infinity();
        std::vector<double> x(dim());
        for (std::size_t i = 0; i < mask_.size(); ++i) {
            if (!mask_[i]) continue;
            ++count_;
            coordinates(i, x);
            for (std::size_t j = 0; j < dim(); ++j)
                if (!(x[j] > bounding_box_[j].lo && x[j] < bounding_box_[j].hi))
                    throw ConfigError("masked node outside the bounding box");
            r_ = std::min(r_, x[0]);
            R_ = std::max(R_, x[0]);
        }
        if (count_ == 0) throw ConfigError("empty domain mask");
    }

    std::size_t dim() const { return shape_.size(); }
    double h() const { return h_; }
    const std::vector<double>& origin() const { return origin_; }
    const std::vector<std::size_t>& shape() const { return shape_; }
    const std::vector<std::size_t>& strides() const { return strides_; }
    const Box& bounding_box() const { return bounding_box_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    const std::optional<Box>& exact_box() const { return exact_box_; }
    std::size_t node_count() const { return mask_.size(); }
    std::size_t interior_count() const { return count_; }
    bool inside(std::size_t flat) const { return mask_[flat] != 0; }

    /// Smallest / largest x1 over the interior nodes.
    double y1_min() const { return r_; }
    double y1_max() const { return R_; }

    /// count * h^d.
    double measure() const { return static_cast<double>(count_) * std::pow(h_, static_cast<double>(dim())); }

    /// Exact volume for rectangles, the grid measure otherwise.
    double volume() const { return exact_box_ ? box_volume(*exact_box_) : measure(); }

    double coordinate(std::size_t flat, std::size_t axis) const {
        return origin_[axis] + static_cast<double>((flat / strides_[axis]) % shape_[axis]) * h_;
    }

    void coordinates(std::size_t flat, std::vector<double>& x) const {
        x.resize(dim());
        for (std::size_t j = 0; j < dim(); ++j) x[j] = coordinate(flat, j);
    }

    /// Flat index of the node at `x`, if x is (within h/1000) a node of this grid.
    std::optional<std::size_t> node_at(const std::vector<double>& x) const {
        std::size_t flat = 0;
        for (std::size_t j = 0; j < dim(); ++j) {
            const double t = (x[j] - origin_[j]) / h_;
            const double k = std::round(t);
            if (std::abs(t - k) > 1e-3 || k < 0.0 || k >= static_cast<double>(shape_[j])) return std::nullopt;
            flat += static_cast<std::size_t>(k) * strides_[j];
        }
        return flat;
    }

    /// True when every interior node of `other` is an interior node here.
    bool contains(const GridDomain& other) const {
        std::vector<double> x;
        for (std::size_t i = 0; i < other.node_count(); ++i) {
            if (!other.inside(i)) continue;
            other.coordinates(i, x);
            const auto at = node_at(x);
            if (!at || !inside(*at)) return false;
        }
        return true;
    }

private:
    double h_;
    std::vector<double> origin_;
    std::vector<std::size_t> shape_;
    std::vector<std::size_t> strides_;
    Box bounding_box_;
    std::vector<std::uint8_t> mask_;
    std::optional<Box> exact_box_;
    std::size_t count_ = 0;
    double r_ = 0.0;
    double R_ = 0.0;
};

/// Grid over `box` with spacing h; the mask selects nodes strictly inside.
inline GridDomain rectangle_domain(const Box& box, double h) {
    if (box.empty()) throw ConfigError("box needs at least one interval");
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("grid spacing must be positive");
    double shortest = std::numeric_limits<double>::infinity();
    for (const auto& iv : box) {
        if (!(iv.hi > iv.lo)) throw ConfigError("degenerate box interval");
        shortest = std::min(shortest, iv.length());
    }
    if (!(h < shortest)) throw ConfigError("grid spacing must be smaller than the shortest side");

    const std::size_t d = box.size();
    std::vector<double> origin(d);
    std::vector<std::size_t> shape(d);
    for (std::size_t j = 0; j < d; ++j) {
        origin[j] = box[j].lo;
        shape[j] = static_cast<std::size_t>(std::floor(box[j].length() / h + 1e-9)) + 1;
    }
    std::size_t total = 1;
    for (auto n : shape) total *= n;
    std::vector<std::uint8_t> mask(total, 1);
    const double tol = 1e-9 * h;
    std::size_t stride = total;
    for (std::size_t j = 0; j < d; ++j) {
        stride /= shape[j];
        for (std::size_t i = 0; i < total; ++i) {
            const double x = origin[j] + static_cast<double>((i / stride) % shape[j]) * h;
            if (!(x > box[j].lo + tol && x < box[j].hi - tol)) mask[i] = 0;
        }
    }
    return GridDomain(h, std::move(origin), std::move(shape), box, std::move(mask), box);
}

namespace detail {

inline constexpr double kFar = 1e30;
// Distances equal to the radius (in grid units, up to rounding) count as on the boundary.
inline constexpr double kTie = 1e-9;

// Lower-envelope squared distance transform along one line (Felzenszwalb &
// Huttenlocher): out[q] = min_p (q - p)^2 + f[p].
inline void distance_transform_line(const std::vector<double>& f, std::vector<double>& out,
                                    std::vector<std::size_t>& v, std::vector<double>& z) {
    const std::size_t n = f.size();
    out.resize(n);
    v.assign(n, 0);
    z.assign(n + 1, 0.0);
    std::size_t k = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    auto intersect = [&](std::size_t q, std::size_t p) {
        const double qd = static_cast<double>(q), pd = static_cast<double>(p);
        return ((f[q] + qd * qd) - (f[p] + pd * pd)) / (2.0 * qd - 2.0 * pd);
    };
    for (std::size_t q = 1; q < n; ++q) {
        double s = intersect(q, v[k]);
        while (s <= z[k]) {
            --k;
            s = intersect(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        while (z[k + 1] < static_cast<double>(q)) ++k;
        const double dq = static_cast<double>(q) - static_cast<double>(v[k]);
        out[q] = dq * dq + f[v[k]];
    }
}

/// Exact squared euclidean distance (in index units) from every node to the
/// nearest feature node.
inline std::vector<double> squared_distance_transform(const std::vector<std::size_t>& shape,
                                                      const std::vector<std::uint8_t>& feature) {
    std::vector<double> dist(feature.size());
    for (std::size_t i = 0; i < feature.size(); ++i) dist[i] = feature[i] ? 0.0 : kFar;
    const std::size_t d = shape.size();
    std::vector<std::size_t> strides(d, 1);
    for (std::size_t j = d - 1; j > 0; --j) strides[j - 1] = strides[j] * shape[j];

    std::vector<double> line, out, z;
    std::vector<std::size_t> v;
    for (std::size_t axis = 0; axis < d; ++axis) {
        const std::size_t n = shape[axis];
        const std::size_t stride = strides[axis];
        line.resize(n);
        for (std::size_t start = 0; start < dist.size(); ++start) {
            if ((start / stride) % n != 0) continue;
            for (std::size_t q = 0; q < n; ++q) line[q] = dist[start + q * stride];
            distance_transform_line(line, out, v, z);
            for (std::size_t q = 0; q < n; ++q) dist[start + q * stride] = std::min(out[q], kFar);
        }
    }
    return dist;
}

}  // namespace detail

/// Nodes whose distance to the nearest exterior node exceeds eps. Nodes
/// beyond the grid count as exterior.
inline GridDomain erode(const GridDomain& dom, double eps) {
    if (!(eps >= 0.0)) throw ConfigError("erosion radius must be nonnegative");
    if (eps == 0.0) return dom;
    const std::size_t d = dom.dim();
    std::vector<std::size_t> padded(d);
    for (std::size_t j = 0; j < d; ++j) padded[j] = dom.shape()[j] + 2;
    std::size_t total = 1;
    for (auto n : padded) total *= n;

    std::vector<std::size_t> pstrides(d, 1);
    for (std::size_t j = d - 1; j > 0; --j) pstrides[j - 1] = pstrides[j] * padded[j];
    auto padded_index = [&](std::size_t flat) {
        std::size_t p = 0;
        for (std::size_t j = 0; j < d; ++j) p += ((flat / dom.strides()[j]) % dom.shape()[j] + 1) * pstrides[j];
        return p;
    };

    std::vector<std::uint8_t> exterior(total, 1);
    for (std::size_t i = 0; i < dom.node_count(); ++i)
        if (dom.inside(i)) exterior[padded_index(i)] = 0;
    const auto dist2 = detail::squared_distance_transform(padded, exterior);

    const double limit = eps / dom.h();
    std::vector<std::uint8_t> mask(dom.node_count(), 0);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < dom.node_count(); ++i) {
        if (dom.inside(i) && std::sqrt(dist2[padded_index(i)]) > limit + detail::kTie) {
            mask[i] = 1;
            ++kept;
        }
    }
    if (kept == 0) throw ConfigError("empty erosion");
    return GridDomain(dom.h(), dom.origin(), dom.shape(), dom.bounding_box(), std::move(mask));
}

/// Nodes within distance < eps of an interior node, on a grid padded by eps.
inline GridDomain dilate(const GridDomain& dom, double eps) {
    if (!(eps >= 0.0)) throw ConfigError("dilation radius must be nonnegative");
    if (eps == 0.0) return dom;
    const std::size_t d = dom.dim();
    const auto pad = static_cast<std::size_t>(std::ceil(eps / dom.h())) + 1;
    std::vector<std::size_t> shape(d);
    std::vector<double> origin(d);
    Box box(d);
    for (std::size_t j = 0; j < d; ++j) {
        shape[j] = dom.shape()[j] + 2 * pad;
        origin[j] = dom.origin()[j] - static_cast<double>(pad) * dom.h();
        box[j] = {dom.bounding_box()[j].lo - eps, dom.bounding_box()[j].hi + eps};
    }
    std::size_t total = 1;
    for (auto n : shape) total *= n;
    std::vector<std::size_t> strides(d, 1);
    for (std::size_t j = d - 1; j > 0; --j) strides[j - 1] = strides[j] * shape[j];

    std::vector<std::uint8_t> feature(total, 0);
    for (std::size_t i = 0; i < dom.node_count(); ++i) {
        if (!dom.inside(i)) continue;
        std::size_t p = 0;
        for (std::size_t j = 0; j < d; ++j) p += ((i / dom.strides()[j]) % dom.shape()[j] + pad) * strides[j];
        feature[p] = 1;
    }
    const auto dist2 = detail::squared_distance_transform(shape, feature);
    const double limit = eps / dom.h();
    std::vector<std::uint8_t> mask(total, 0);
    for (std::size_t i = 0; i < total; ++i) mask[i] = (feature[i] || std::sqrt(dist2[i]) < limit - detail::kTie) ? 1 : 0;
    return GridDomain(dom.h(), std::move(origin), std::move(shape), std::move(box), std::move(mask));
}

inline double measure(const GridDomain& dom) { return dom.measure(); }

/// Writes the mask as a text header followed by run-length-encoded rows.
/// Each row covers the last axis; it starts with the value of its first run
/// (0 or 1) followed by alternating run lengths.
inline void write_mask(std::ostream& os, const GridDomain& dom) {
    const std::size_t d = dom.dim();
    os << "# weylcs mask v1\n" << std::setprecision(17);
    os << "d " << d << "\nh " << dom.h() << "\nbox";
    for (const auto& iv : dom.bounding_box()) os << ' ' << iv.lo << ' ' << iv.hi;
    os << "\norigin";
    for (double o : dom.origin()) os << ' ' << o;
    os << "\nshape";
    for (auto n : dom.shape()) os << ' ' << n;
    os << '\n';
    const std::size_t row = dom.shape().back();
    const auto& mask = dom.mask();
    for (std::size_t start = 0; start < mask.size(); start += row) {
        os << static_cast<int>(mask[start]);
        std::size_t run = 0;
        std::uint8_t current = mask[start];
        for (std::size_t q = 0; q < row; ++q) {
            if (mask[start + q] == current) {
                ++run;
            } else {
                os << ' ' << run;
                current = mask[start + q];
                run = 1;
            }
        }
        os << ' ' << run << '\n';
    }
}

inline GridDomain read_mask(std::istream& is) {
    std::string line;
    std::size_t d = 0;
    double h = 0.0;
    Box box;
    std::vector<double> origin;
    std::vector<std::size_t> shape;
    auto fail = [](const std::string& what) { return ConfigError("mask file: " + what); };
    while (shape.empty() && std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "d") {
            ls >> d;
        } else if (key == "h") {
            ls >> h;
        } else if (key == "box") {
            box.resize(d);
            for (auto& iv : box) ls >> iv.lo >> iv.hi;
        } else if (key == "origin") {
            origin.resize(d);
            for (auto& o : origin) ls >> o;
        } else if (key == "shape") {
            shape.resize(d);
            for (auto& n : shape) ls >> n;
        } else {
            throw fail("unknown header key '" + key + "'");
        }
        if (!ls) throw fail("malformed header line '" + line + "'");
    }
    if (d == 0 || shape.size() != d || box.size() != d || origin.size() != d) throw fail("incomplete header");
    std::size_t total = 1;
    for (auto n : shape) total *= n;
    const std::size_t row = shape.back();
    std::vector<std::uint8_t> mask;
    mask.reserve(total);
    while (mask.size() < total && std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int value = 0;
        ls >> value;
        if (value != 0 && value != 1) throw fail("row must start with 0 or 1");
        std::size_t run = 0, covered = 0;
        while (ls >> run) {
            mask.insert(mask.end(), run, static_cast<std::uint8_t>(value));
            covered += run;
            value = 1 - value;
        }
        if (covered != row) throw fail("row length mismatch");
    }
    if (mask.size() != total) throw fail("truncated mask rows");
    return GridDomain(h, std::move(origin), std::move(shape), std::move(box), std::move(mask));
}

}  // namespace weylcs
