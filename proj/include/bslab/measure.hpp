#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bslab/errors.hpp"

// Compactly supported positive finite Radon measures, discretized as atom
// lists.  Each atom stands for a geometric piece of the measure (an arc
// panel or an area cell); its scale is the panel size used to regularize
// the logarithmic kernel diagonal.

namespace bslab {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(Point a, Point b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

enum class PanelKind { curve, area };

struct Atom {
    Point position;
    double weight = 0.0;
    double scale = 0.0;  // 0 means "no panel": representable, rejected by assemblers
    PanelKind panel_kind = PanelKind::curve;
};

struct Box {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
    bool contains(Point p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }
};

// Generator descriptors; a measure built by a constructor below carries one
// so it can be regenerated at doubled resolution (refine) and serialized
// into run provenance without dumping atom coordinates.
struct CircleSpec {
    double r;
    int n;
};
struct SegmentSpec {
    Point a, b;
    int n;
};
struct PolylineSpec {
    std::vector<Point> vertices;
    double n_per_unit;
};
struct RadialDensitySpec {
    double gamma;
    int n_r, n_theta;
};
struct GridDensitySpec {
    std::function<double(double, double)> density;
    std::string density_name;
    Box box;
    int nx, ny;
};
using MeasureSpec =
    std::variant<CircleSpec, SegmentSpec, PolylineSpec, RadialDensitySpec, GridDensitySpec>;

namespace detail {

// Neumaier compensated summation.
inline double compensated_sum(const std::vector<Atom>& atoms) {
    double s = 0.0, c = 0.0;
    for (const Atom& a : atoms) {
        const double v = a.weight;
        const double t = s + v;
        if (std::abs(s) >= std::abs(v))
            c += (s - t) + v;
        else
            c += (v - t) + s;
        s = t;
    }
    return s + c;
}

inline void validate_atoms(const std::vector<Atom>& atoms) {
    if (atoms.empty()) throw validation_error("measure: empty atom list");
    for (const Atom& a : atoms) {
        if (!(a.weight > 0.0) || !std::isfinite(a.weight))
            throw validation_error("measure: atom weight must be positive and finite");
        if (!(a.scale >= 0.0) || !std::isfinite(a.scale))
            throw validation_error("measure: atom scale must be nonnegative and finite");
        if (!std::isfinite(a.position.x) || !std::isfinite(a.position.y))
            throw validation_error("measure: atom position must be finite");
    }
}

} // namespace detail

class AtomicMeasure {
public:
    static AtomicMeasure from_atoms(std::vector<Atom> atoms, std::string label) {
        detail::validate_atoms(atoms);
        return AtomicMeasure(std::move(atoms), std::move(label), std::nullopt);
    }

    static AtomicMeasure from_generator(std::vector<Atom> atoms, std::string label,
                                        MeasureSpec spec) {
        detail::validate_atoms(atoms);
        return AtomicMeasure(std::move(atoms), std::move(label), std::move(spec));
    }

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    const std::string& label() const { return label_; }
    double total_mass() const { return total_mass_; }
    const std::optional<MeasureSpec>& generator() const { return spec_; }

    Box bounding_box() const {
        Box b{atoms_[0].position.x, atoms_[0].position.y, atoms_[0].position.x,
              atoms_[0].position.y};
        for (const Atom& a : atoms_) {
            b.xmin = std::min(b.xmin, a.position.x);
            b.xmax = std::max(b.xmax, a.position.x);
            b.ymin = std::min(b.ymin, a.position.y);
            b.ymax = std::max(b.ymax, a.position.y);
        }
        return b;
    }

    double support_diameter() const {
        const Box b = bounding_box();
        return std::hypot(b.xmax - b.xmin, b.ymax - b.ymin);
    }

private:
    AtomicMeasure(std::vector<Atom> atoms, std::string label, std::optional<MeasureSpec> spec)
        : atoms_(std::move(atoms)),
          label_(std::move(label)),
          spec_(std::move(spec)),
          total_mass_(detail::compensated_sum(atoms_)) {
        if (!(total_mass_ > 0.0) || !std::isfinite(total_mass_))
            throw validation_error("measure: total mass must be positive and finite");
    }

    std::vector<Atom> atoms_;
    std::string label_;
    std::optional<MeasureSpec> spec_;
    double total_mass_;
};

// n equally spaced arc panels on the circle of radius r; weight = scale =
// arc length per panel.
inline AtomicMeasure circle(double r, int n) {
    if (!(r > 0.0)) throw validation_error("circle: radius must be positive");
    if (n < 3) throw validation_error("circle: need at least 3 atoms");
    const double w = 2.0 * M_PI * r / n;
    std::vector<Atom> atoms(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double th = 2.0 * M_PI * i / n;
        atoms[i] = Atom{{r * std::cos(th), r * std::sin(th)}, w, w, PanelKind::curve};
    }
    return AtomicMeasure::from_generator(
        std::move(atoms), "circle(r=" + std::to_string(r) + ",n=" + std::to_string(n) + ")",
        CircleSpec{r, n});
}

namespace detail {

inline void append_segment_atoms(std::vector<Atom>& atoms, Point a, Point b, int n) {
    const double len = distance(a, b);
    const double w = len / n;
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) / n;
        atoms.push_back(Atom{{a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t}, w, w,
                             PanelKind::curve});
    }
}

} // namespace detail

// Midpoint-rule panels on the straight segment from a to b.
inline AtomicMeasure segment(Point a, Point b, int n) {
    if (a.x == b.x && a.y == b.y)
        throw validation_error("segment: endpoints coincide (degenerate geometry)");
    if (n < 1) throw validation_error("segment: need at least 1 atom");
    std::vector<Atom> atoms;
    atoms.reserve(static_cast<std::size_t>(n));
    detail::append_segment_atoms(atoms, a, b, n);
    return AtomicMeasure::from_generator(std::move(atoms),
                                         "segment(n=" + std::to_string(n) + ")",
                                         SegmentSpec{a, b, n});
}

// Chain of segments; each edge gets ceil(length * n_per_unit) panels.
inline AtomicMeasure polyline(const std::vector<Point>& vertices, double n_per_unit) {
    if (vertices.size() < 2) throw validation_error("polyline: need at least 2 vertices");
    if (!(n_per_unit > 0.0)) throw validation_error("polyline: n_per_unit must be positive");
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
        const Point a = vertices[i], b = vertices[i + 1];
        const double len = distance(a, b);
        if (len == 0.0)
            throw validation_error("polyline: repeated consecutive vertex (degenerate geometry)");
        const int n = std::max(1, static_cast<int>(std::ceil(len * n_per_unit)));
        detail::append_segment_atoms(atoms, a, b, n);
    }
    return AtomicMeasure::from_generator(std::move(atoms), "polyline",
                                         PolylineSpec{vertices, n_per_unit});
}

// Absolutely continuous measure V(x)dx with the radial density
// V(r) = 1/(r^2 |ln r|^gamma) on the disc r <= 1/2, gamma > 2.  The radial
// grid is geometrically graded toward r = 0 (cell edges (1/2)q^j reaching
// 1e-8); a uniform grid misestimates the mass near the singularity.
inline AtomicMeasure radial_density(double gamma, int n_r, int n_theta) {
    if (!(gamma > 2.0))
        throw validation_error("radial_density: gamma must exceed 2 (mass diverges otherwise)");
    if (n_r < 1 || n_theta < 1)
        throw validation_error("radial_density: grid sizes must be positive");
    const double r_inner = 1e-8;
    const double q = std::pow(2.0 * r_inner, 1.0 / n_r);  // (1/2) q^{n_r} = r_inner
    const double dth = 2.0 * M_PI / n_theta;
    std::vector<Atom> atoms;
    atoms.reserve(static_cast<std::size_t>(n_r) * n_theta);
    double outer = 0.5;
    for (int j = 0; j < n_r; ++j) {
        const double inner = 0.5 * std::pow(q, j + 1);
        const double r = 0.5 * (outer + inner);
        const double dr = outer - inner;
        const double V = 1.0 / (r * r * std::pow(std::abs(std::log(r)), gamma));
        const double w = V * r * dr * dth;
        const double cell_scale = std::sqrt(r * dr * dth / M_PI);
        for (int l = 0; l < n_theta; ++l) {
            const double th = (l + 0.5) * dth;
            atoms.push_back(Atom{{r * std::cos(th), r * std::sin(th)}, w, cell_scale,
                                 PanelKind::area});
        }
        outer = inner;
    }
    return AtomicMeasure::from_generator(
        std::move(atoms), "radial_density(gamma=" + std::to_string(gamma) + ")",
        RadialDensitySpec{gamma, n_r, n_theta});
}

// Midpoint-rule cells of a nonnegative density on a box; zero cells dropped.
inline AtomicMeasure grid_density(const std::function<double(double, double)>& density, Box box,
                                  int nx, int ny, std::string density_name = "custom") {
    if (nx < 1 || ny < 1) throw validation_error("grid_density: grid sizes must be positive");
    if (!(box.xmax > box.xmin) || !(box.ymax > box.ymin))
        throw validation_error("grid_density: empty box");
    const double dx = (box.xmax - box.xmin) / nx;
    const double dy = (box.ymax - box.ymin) / ny;
    const double cell_scale = std::sqrt(dx * dy / M_PI);
    std::vector<Atom> atoms;
    atoms.reserve(static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const double cx = box.xmin + (ix + 0.5) * dx;
            const double cy = box.ymin + (iy + 0.5) * dy;
            const double v = density(cx, cy);
            if (v < 0.0)
                throw validation_error("grid_density: negative density sample (positivity)");
            if (v == 0.0) continue;
            atoms.push_back(Atom{{cx, cy}, v * dx * dy, cell_scale, PanelKind::area});
        }
    }
    return AtomicMeasure::from_generator(std::move(atoms), "grid_density(" + density_name + ")",
                                         GridDensitySpec{density, std::move(density_name), box,
                                                         nx, ny});
}

// Rebuild at doubled resolution.  Only constructor-built measures carry the
// generator needed for this.
inline AtomicMeasure refine(const AtomicMeasure& m) {
    if (!m.generator())
        throw validation_error("refine: measure has no generator descriptor (not refinable)");
    const MeasureSpec& spec = *m.generator();
    if (const auto* c = std::get_if<CircleSpec>(&spec)) return circle(c->r, 2 * c->n);
    if (const auto* s = std::get_if<SegmentSpec>(&spec)) return segment(s->a, s->b, 2 * s->n);
    if (const auto* p = std::get_if<PolylineSpec>(&spec))
        return polyline(p->vertices, 2.0 * p->n_per_unit);
    if (const auto* rd = std::get_if<RadialDensitySpec>(&spec))
        return radial_density(rd->gamma, 2 * rd->n_r, 2 * rd->n_theta);
    const auto& g = std::get<GridDensitySpec>(spec);
    return grid_density(g.density, g.box, 2 * g.nx, 2 * g.ny, g.density_name);
}

inline AtomicMeasure concat(const AtomicMeasure& a, const AtomicMeasure& b, std::string label) {
    std::vector<Atom> atoms = a.atoms();
    atoms.insert(atoms.end(), b.atoms().begin(), b.atoms().end());
    return AtomicMeasure::from_atoms(std::move(atoms), std::move(label));
}

// Panel-averaged |ln| self term: the mean of |ln|s|| over the piece the
// atom represents (arc of length h, or disc of the equivalent radius).
inline double kato_self_term(const Atom& a) {
    if (a.panel_kind == PanelKind::curve) return a.weight * (1.0 - std::log(a.scale / 2.0));
    return a.weight * (0.5 - std::log(a.scale));
}

// Estimates sup_x of the log potential mass near x over shrinking discs,
// the membership signal for the generalized Kato class.  The sup runs over
// atom positions only; interior maxima between atoms are not probed.
inline std::vector<std::pair<double, double>> kato_diagnostic(const AtomicMeasure& m,
                                                              const std::vector<double>& eps_list) {
    if (eps_list.empty()) throw validation_error("kato_diagnostic: empty eps list");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0))
            throw validation_error("kato_diagnostic: eps values must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw validation_error("kato_diagnostic: eps list must be strictly decreasing");
    }
    const auto& atoms = m.atoms();
    const std::size_t n = atoms.size();
    std::vector<std::pair<double, double>> out;
    out.reserve(eps_list.size());
    for (double eps : eps_list) {
        double sup = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = kato_self_term(atoms[i]);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double d = distance(atoms[i].position, atoms[j].position);
                if (d < eps && d > 0.0) acc += atoms[j].weight * std::abs(std::log(d));
            }
            sup = std::max(sup, acc);
        }
        out.emplace_back(eps, sup);
    }
    return out;
}

} // namespace bslab
