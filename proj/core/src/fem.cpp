#include "memfem/fem.hpp"

#include <cmath>
#include <string>

namespace memfem {

double CoefficientMap::value(const RegionLabel& l) const {
    double v;
    switch (l.kind) {
        case Region::Outer: v = outer; break;
        case Region::Inclusion: v = inclusion; break;
        default: v = membrane; break;
    }
    if (!std::isfinite(v))
        throw CoefficientError("coefficient map does not cover region kind " +
                               std::to_string(static_cast<int>(l.kind)));
    return v;
}

SparseSym assemble_stiffness(const Mesh& mesh, const CoefficientMap& coef,
                             const RegionPred& keep) {
    std::vector<Triplet> ts;
    ts.reserve(mesh.tris.size() * 9);
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        const Triangle& tri = mesh.tris[t];
        if (!keep(tri.label)) continue;
        const double c = coef.value(tri.label);
        const double area = mesh.tri_area(static_cast<int>(t));

        double b[3], g[3];
        for (int i = 0; i < 3; ++i) {
            const Point& pj = mesh.nodes[tri.v[(i + 1) % 3]];
            const Point& pk = mesh.nodes[tri.v[(i + 2) % 3]];
            b[i] = pj.y - pk.y;
            g[i] = pk.x - pj.x;
        }
        const double scale = c / (4.0 * area);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                ts.push_back({tri.v[i], tri.v[j], scale * (b[i] * b[j] + g[i] * g[j])});
            }
        }
    }
    return SparseSym::from_triplets(static_cast<int>(mesh.nodes.size()), std::move(ts));
}

std::vector<double> lumped_mass(const Mesh& mesh, const RegionPred& keep) {
    std::vector<double> m(mesh.nodes.size(), 0.0);
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        if (!keep(mesh.tris[t].label)) continue;
        const double share = mesh.tri_area(static_cast<int>(t)) / 3.0;
        for (int v : mesh.tris[t].v) m[v] += share;
    }
    return m;
}

std::vector<double> lumped_load(const Mesh& mesh, const std::vector<double>& f_nodal,
                                const RegionPred& keep) {
    for (double v : f_nodal) {
        if (!std::isfinite(v)) throw InvalidField("load field contains a non-finite value");
    }
    std::vector<double> load = lumped_mass(mesh, keep);
    for (std::size_t p = 0; p < load.size(); ++p) load[p] *= f_nodal[p];
    return load;
}

std::vector<double> sample_nodes(const Mesh& mesh,
                                 const std::function<double(double, double)>& f) {
    std::vector<double> out(mesh.nodes.size());
    for (std::size_t p = 0; p < mesh.nodes.size(); ++p) {
        out[p] = f(mesh.nodes[p].x, mesh.nodes[p].y);
        if (!std::isfinite(out[p]))
            throw InvalidField("sampled field is non-finite at node " + std::to_string(p));
    }
    return out;
}

DirichletSystem::DirichletSystem(const SparseSym& a,
                                 const std::vector<unsigned char>& fixed_mask)
    : a_full_(a) {
    const int n = a.size();
    node_to_free_.assign(static_cast<std::size_t>(n), -1);
    for (int p = 0; p < n; ++p) {
        if (!fixed_mask[p]) {
            node_to_free_[p] = static_cast<int>(free_.size());
            free_.push_back(p);
        }
    }

    std::vector<Triplet> ts;
    ts.reserve(free_.size() * 7);
    for (std::size_t i = 0; i < free_.size(); ++i) {
        const auto row = a_full_.row(free_[i]);
        for (int k = 0; k < row.count; ++k) {
            const int fc = node_to_free_[row.cols[k]];
            if (fc >= 0) ts.push_back({static_cast<int>(i), fc, row.vals[k]});
        }
    }
    a_reduced_ = SparseSym::from_triplets(static_cast<int>(free_.size()), std::move(ts));
}

std::vector<double> DirichletSystem::solve(const std::vector<double>& load,
                                           const std::vector<double>& fixed_values,
                                           CgOptions opt) const {
    const int n = a_full_.size();
    std::vector<double> g(static_cast<std::size_t>(n), 0.0);
    for (int p = 0; p < n; ++p) {
        if (node_to_free_[p] < 0) g[p] = fixed_values[p];
    }
    const std::vector<double> ag = a_full_.multiply(g);

    std::vector<double> b(free_.size());
    for (std::size_t i = 0; i < free_.size(); ++i) {
        const int p = free_[i];
        b[i] = load[p] - ag[p];
    }

    std::vector<double> xr;
    if (!free_.empty()) cg_solve(a_reduced_, b, xr, opt);

    std::vector<double> x = g;
    for (std::size_t i = 0; i < free_.size(); ++i) x[free_[i]] = xr[i];
    return x;
}

DirichletSystem::ResidualReport DirichletSystem::residual_report(
    const std::vector<double>& u, const std::vector<double>& load) const {
    const std::vector<double> au = a_full_.multiply(u);

    std::vector<double> g(u.size(), 0.0);
    for (std::size_t p = 0; p < u.size(); ++p) {
        if (node_to_free_[p] < 0) g[p] = u[p];
    }
    const std::vector<double> ag = a_full_.multiply(g);

    ResidualReport rep;
    double r2 = 0.0, s2 = 0.0;
    for (int p : free_) {
        const double r = au[p] - load[p];
        const double s = load[p] - ag[p];
        r2 += r * r;
        s2 += s * s;
    }
    rep.residual = std::sqrt(r2);
    rep.scale = std::sqrt(s2);
    return rep;
}

std::vector<unsigned char> fix_boundary(const Mesh& mesh) {
    return mesh.on_boundary;
}

std::vector<unsigned char> fix_boundary_and_loops(const Mesh& mesh) {
    std::vector<unsigned char> mask = mesh.on_boundary;
    for (const Loop& loop : mesh.loops) {
        for (int p : loop.nodes) mask[p] = 1;
    }
    return mask;
}

FieldNorms field_norms(const Mesh& mesh, const std::vector<double>& u,
                       const RegionPred& keep) {
    double l2sq = 0.0, h1sq = 0.0;
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        if (!keep(mesh.tris[t].label)) continue;
        const double area = mesh.tri_area(static_cast<int>(t));
        double local = 0.0;
        for (int v : mesh.tris[t].v) local += u[v] * u[v];
        l2sq += area / 3.0 * local;

        const Grad grad = tri_gradient(mesh, static_cast<int>(t), u);
        h1sq += area * (grad.gx * grad.gx + grad.gy * grad.gy);
    }
    return {std::sqrt(l2sq), std::sqrt(h1sq)};
}

Grad tri_gradient(const Mesh& mesh, int t, const std::vector<double>& u) {
    const Triangle& tri = mesh.tris[t];
    const double area = mesh.tri_area(t);
    Grad grad;
    for (int i = 0; i < 3; ++i) {
        const Point& pj = mesh.nodes[tri.v[(i + 1) % 3]];
        const Point& pk = mesh.nodes[tri.v[(i + 2) % 3]];
        grad.gx += u[tri.v[i]] * (pj.y - pk.y);
        grad.gy += u[tri.v[i]] * (pk.x - pj.x);
    }
    grad.gx /= 2.0 * area;
    grad.gy /= 2.0 * area;
    return grad;
}

}  // namespace memfem
