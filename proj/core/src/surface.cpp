#include "memfem/surface.hpp"

#include <cmath>

namespace memfem {

TraceField TraceField::zeros_like(const TraceField& other) {
    TraceField z;
    z.comp.reserve(other.comp.size());
    for (const auto& c : other.comp) z.comp.emplace_back(c.size(), 0.0);
    return z;
}

void TraceField::add_scaled(const TraceField& other, double s) {
    for (std::size_t c = 0; c < comp.size(); ++c) {
        for (std::size_t j = 0; j < comp[c].size(); ++j) comp[c][j] += s * other.comp[c][j];
    }
}

void TraceField::add_component_constant(int c, double v) {
    for (double& x : comp[c]) x += v;
}

TraceField TraceField::operator-(const TraceField& other) const {
    TraceField d = *this;
    d.add_scaled(other, -1.0);
    return d;
}

TraceField SurfaceOperator::zero_trace() const {
    TraceField z;
    z.comp.reserve(comps.size());
    for (const auto& c : comps) z.comp.emplace_back(c.mass.size(), 0.0);
    return z;
}

namespace {

SurfaceOperator::Component build_from_lengths(std::vector<double> seg_len) {
    const int n = static_cast<int>(seg_len.size());
    SurfaceOperator::Component c;
    c.seg_len = std::move(seg_len);
    c.mass.resize(n);
    c.arc.resize(n);
    c.perimeter = 0.0;
    for (int j = 0; j < n; ++j) {
        if (c.seg_len[j] <= 0.0) throw GeometryError("degenerate surface segment");
        c.arc[j] = c.perimeter;
        c.perimeter += c.seg_len[j];
    }
    for (int j = 0; j < n; ++j) {
        c.mass[j] = 0.5 * (c.seg_len[(j + n - 1) % n] + c.seg_len[j]);
    }

    std::vector<Triplet> ts;
    ts.reserve(static_cast<std::size_t>(n) * 4);
    for (int j = 0; j < n; ++j) {
        const int a = j, b = (j + 1) % n;
        const double w = 1.0 / c.seg_len[j];
        ts.push_back({a, a, w});
        ts.push_back({b, b, w});
        ts.push_back({a, b, -w});
        ts.push_back({b, a, -w});
    }
    c.stiffness = SparseSym::from_triplets(n, std::move(ts));
    return c;
}

}  // namespace

SurfaceOperator build_surface_operator(const Mesh& mesh) {
    if (mesh.loops.empty()) throw GeometryError("mesh has no interface loops");
    SurfaceOperator op;
    op.comps.reserve(mesh.loops.size());
    for (const Loop& loop : mesh.loops) op.comps.push_back(build_from_lengths(loop.seg_len));
    return op;
}

SurfaceOperator::Component build_surface_component(const std::vector<Point>& poly) {
    if (poly.size() < 3) throw GeometryError("surface polyline needs at least 3 nodes");
    const int n = static_cast<int>(poly.size());
    std::vector<double> seg(n);
    for (int j = 0; j < n; ++j) {
        const Point& a = poly[j];
        const Point& b = poly[(j + 1) % n];
        seg[j] = std::hypot(b.x - a.x, b.y - a.y);
    }
    return build_from_lengths(std::move(seg));
}

TraceField lb_solve(const SurfaceOperator& op, double alpha, const TraceField& g,
                    double compat_tol, CgOptions cg) {
    if (!(alpha > 0.0)) throw ConfigError("surface capacity alpha must be positive");
    TraceField v;
    v.comp.resize(op.comps.size());
    for (std::size_t c = 0; c < op.comps.size(); ++c) {
        // alpha scales the operator; fold it into the source instead.
        std::vector<double> b = g.comp[c];
        for (double& x : b) x /= alpha;
        cg_solve_zero_mean(op.comps[c].stiffness, b, op.comps[c].mass, v.comp[c],
                           compat_tol, cg);
    }
    return v;
}

double surface_grad_energy_component(const SurfaceOperator& op, const TraceField& w, int c) {
    const auto& comp = op.comps[c];
    const auto& x = w.comp[c];
    const int n = comp.size();
    double e = 0.0;
    for (int j = 0; j < n; ++j) {
        const double d = x[(j + 1) % n] - x[j];
        e += d * d / comp.seg_len[j];
    }
    return e;
}

double surface_grad_energy(const SurfaceOperator& op, const TraceField& w) {
    double e = 0.0;
    for (std::size_t c = 0; c < op.comps.size(); ++c)
        e += surface_grad_energy_component(op, w, static_cast<int>(c));
    return e;
}

double surface_l2_norm_component(const SurfaceOperator& op, const TraceField& w, int c) {
    const auto& comp = op.comps[c];
    const auto& x = w.comp[c];
    double s = 0.0;
    for (int j = 0; j < comp.size(); ++j) s += comp.mass[j] * x[j] * x[j];
    return std::sqrt(s);
}

double surface_l2_norm(const SurfaceOperator& op, const TraceField& w) {
    double s = 0.0;
    for (std::size_t c = 0; c < op.comps.size(); ++c) {
        const double l = surface_l2_norm_component(op, w, static_cast<int>(c));
        s += l * l;
    }
    return std::sqrt(s);
}

double surface_h1_norm(const SurfaceOperator& op, const TraceField& w) {
    double s = surface_grad_energy(op, w);
    for (std::size_t c = 0; c < op.comps.size(); ++c) {
        const double l = surface_l2_norm_component(op, w, static_cast<int>(c));
        s += l * l;
    }
    return std::sqrt(s);
}

std::vector<std::vector<double>> surface_gradient(const SurfaceOperator& op,
                                                  const TraceField& w) {
    std::vector<std::vector<double>> out(op.comps.size());
    for (std::size_t c = 0; c < op.comps.size(); ++c) {
        const auto& comp = op.comps[c];
        const auto& x = w.comp[c];
        const int n = comp.size();
        out[c].resize(n);
        for (int j = 0; j < n; ++j) {
            out[c][j] = (x[(j + 1) % n] - x[j]) / comp.seg_len[j];
        }
    }
    return out;
}

}  // namespace memfem
