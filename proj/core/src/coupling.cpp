#include "memfem/coupling.hpp"

#include <cmath>

namespace memfem {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::vector<double> ConstantsSystem::solve(const std::vector<double>& g) const {
    return dense_solve(a, m, g);
}

ThinOperators::ThinOperators(const Mesh& mesh, double sigma_int, double sigma_out,
                             CouplingTols tols)
    : mesh_(&mesh), sigma_int_(sigma_int), sigma_out_(sigma_out), tols_(tols) {
    if (mesh.has_membrane())
        throw GeometryError("thin-interface operators require a sharp-interface mesh");
    if (mesh.loops.empty()) throw GeometryError("mesh has no interface loops");
    if (!(sigma_int > 0.0) || !(sigma_out > 0.0))
        throw ConfigError("conductivities must be strictly positive");

    CoefficientMap sigma;
    sigma.outer = sigma_out;
    sigma.inclusion = sigma_int;
    a_sigma_ = assemble_stiffness(mesh, sigma);
    a_outer_ = assemble_stiffness(mesh, CoefficientMap::constant(sigma_out),
                                  keep_kind(Region::Outer));
    a_unit_ = assemble_stiffness(mesh, CoefficientMap::constant(1.0));

    transmission_ = DirichletSystem(a_sigma_, fix_boundary_and_loops(mesh));

    std::vector<unsigned char> ext_fixed = fix_boundary_and_loops(mesh);
    for (std::size_t p = 0; p < mesh.nodes.size(); ++p) {
        if (!mesh.node_touches(static_cast<int>(p), Region::Outer)) ext_fixed[p] = 1;
    }
    exterior_ = DirichletSystem(a_outer_, ext_fixed);

    surface_ = build_surface_operator(mesh);

    mass_all_ = lumped_mass(mesh);
    mass_outer_ = lumped_mass(mesh, keep_kind(Region::Outer));
    mass_incl_.resize(mesh.components());
    for (int c = 1; c <= mesh.components(); ++c) {
        mass_incl_[c - 1] = lumped_mass(mesh, keep_kind(Region::Inclusion, c));
    }

    const int m = mesh.components();
    constants_.m = m;
    constants_.a.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (int j = 0; j < m; ++j) {
        TraceField chi = surface_.zero_trace();
        chi.comp[j].assign(chi.comp[j].size(), 1.0);
        const std::vector<double> e = solve_exterior(chi);
        const std::vector<double> zero(mesh.nodes.size(), 0.0);
        for (int i = 0; i < m; ++i) {
            constants_.a[static_cast<std::size_t>(i) * m + j] =
                onesided_from_load(e, zero, i + 1);
        }
    }
    // Pivot check up front: a singular system is a mesh/assembly bug, not a
    // state to discover mid-run.
    constants_.solve(std::vector<double>(static_cast<std::size_t>(m), 0.0));
}

std::vector<double> ThinOperators::solve_transmission(const std::vector<double>& f_nodal,
                                                      const TraceField& h) const {
    const std::vector<double> load = lumped_load(*mesh_, f_nodal);
    return transmission_.solve(load, scatter_trace(h), cg(false));
}

std::vector<double> ThinOperators::solve_zero_trace(const std::vector<double>& f_nodal) const {
    const std::vector<double> load = lumped_load(*mesh_, f_nodal);
    const std::vector<double> zero(mesh_->nodes.size(), 0.0);
    return transmission_.solve(load, zero, cg(false));
}

std::vector<double> ThinOperators::solve_exterior(const TraceField& g) const {
    const std::vector<double> zero(mesh_->nodes.size(), 0.0);
    return exterior_.solve(zero, scatter_trace(g), cg(true));
}

TraceField ThinOperators::trace_of(const std::vector<double>& u) const {
    TraceField t;
    t.comp.resize(mesh_->loops.size());
    for (std::size_t c = 0; c < mesh_->loops.size(); ++c) {
        const Loop& loop = mesh_->loops[c];
        t.comp[c].resize(loop.nodes.size());
        for (std::size_t j = 0; j < loop.nodes.size(); ++j) t.comp[c][j] = u[loop.nodes[j]];
    }
    return t;
}

std::vector<double> ThinOperators::scatter_trace(const TraceField& h) const {
    std::vector<double> full(mesh_->nodes.size(), 0.0);
    for (std::size_t c = 0; c < mesh_->loops.size(); ++c) {
        const Loop& loop = mesh_->loops[c];
        for (std::size_t j = 0; j < loop.nodes.size(); ++j) full[loop.nodes[j]] = h.comp[c][j];
    }
    return full;
}

void ThinOperators::check_solved_transmission(const std::vector<double>& u,
                                              const std::vector<double>& load) const {
    const auto rep = transmission_.residual_report(u, load);
    if (rep.residual > 10.0 * tols_.cg_tol * rep.scale + 1e-13 * (1.0 + norm2(u)))
        throw StaleField("field does not solve the transmission system it was paired with");
}

void ThinOperators::check_solved_outer(const std::vector<double>& u,
                                       const std::vector<double>& outer_load) const {
    const auto rep = exterior_.residual_report(u, outer_load);
    if (rep.residual > 10.0 * tols_.cg_tol * rep.scale + 1e-13 * (1.0 + norm2(u)))
        throw StaleField("field does not solve the outer-region system it was paired with");
}

FluxFunctional ThinOperators::jump_flux(const std::vector<double>& u,
                                        const std::vector<double>& f_nodal) const {
    const std::vector<double> load = lumped_load(*mesh_, f_nodal);
    check_solved_transmission(u, load);

    const std::vector<double> au = a_sigma_.multiply(u);
    FluxFunctional flux;
    flux.nodal.comp.resize(mesh_->loops.size());
    flux.total.assign(mesh_->loops.size(), 0.0);
    for (std::size_t c = 0; c < mesh_->loops.size(); ++c) {
        const Loop& loop = mesh_->loops[c];
        flux.nodal.comp[c].resize(loop.nodes.size());
        for (std::size_t j = 0; j < loop.nodes.size(); ++j) {
            const int p = loop.nodes[j];
            flux.nodal.comp[c][j] = load[p] - au[p];
            flux.total[c] += flux.nodal.comp[c][j];
        }
    }
    return flux;
}

double ThinOperators::onesided_from_load(const std::vector<double>& u,
                                         const std::vector<double>& outer_load,
                                         int comp) const {
    const std::vector<double> au = a_outer_.multiply(u);
    const Loop& loop = mesh_->loops[comp - 1];
    double s = 0.0;
    for (int p : loop.nodes) s += outer_load[p] - au[p];
    return s;
}

double ThinOperators::onesided_outer_flux(const std::vector<double>& u,
                                          const std::vector<double>& f_nodal,
                                          int comp) const {
    const std::vector<double> outer_load =
        lumped_load(*mesh_, f_nodal, keep_kind(Region::Outer));
    check_solved_outer(u, outer_load);
    return onesided_from_load(u, outer_load, comp);
}

double ThinOperators::boundary_flux(const std::vector<double>& ubar,
                                    const std::vector<double>& f_nodal) const {
    const std::vector<double> outer_load =
        lumped_load(*mesh_, f_nodal, keep_kind(Region::Outer));
    check_solved_outer(ubar, outer_load);
    const std::vector<double> au = a_outer_.multiply(ubar);
    double s = 0.0;
    for (int p : mesh_->boundary_nodes) s += au[p] - outer_load[p];
    return s;
}

std::vector<double> ThinOperators::compute_targets(const std::vector<double>& ubar,
                                                   const std::vector<double>& f_nodal) const {
    const int m = components();
    const std::vector<double> outer_load =
        lumped_load(*mesh_, f_nodal, keep_kind(Region::Outer));
    check_solved_outer(ubar, outer_load);

    const std::vector<double> au = a_outer_.multiply(ubar);
    double bflux = 0.0;
    for (int p : mesh_->boundary_nodes) bflux += au[p] - outer_load[p];

    double f_outer = 0.0;
    for (double v : outer_load) f_outer += v;

    std::vector<double> onesided(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) onesided[i] = onesided_from_load(ubar, outer_load, i + 1);

    std::vector<double> targets(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        double f_incl = 0.0;
        for (std::size_t p = 0; p < f_nodal.size(); ++p)
            f_incl += mass_incl_[j][p] * f_nodal[p];
        double cross = 0.0;
        for (int i = 0; i < m; ++i) {
            if (i != j) cross += onesided[i];
        }
        targets[j] = -bflux - (f_outer + f_incl) + cross;
    }
    return targets;
}

Projection ThinOperators::project(const TraceField& w,
                                  const std::vector<double>& targets) const {
    const int m = components();
    const std::vector<double> e = solve_exterior(w);
    const std::vector<double> zero(mesh_->nodes.size(), 0.0);

    std::vector<double> g(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) g[i] = targets[i] - onesided_from_load(e, zero, i + 1);

    Projection p;
    p.constants = constants_.solve(g);
    p.trace = w;
    for (int i = 0; i < m; ++i) p.trace.add_component_constant(i, p.constants[i]);
    return p;
}

double ThinOperators::lipschitz_constant() const {
    if (lipschitz_ >= 0.0) return lipschitz_;

    const int m = components();
    const std::vector<double> zero_targets(static_cast<std::size_t>(m), 0.0);
    double best = 0.0;
    for (int c = 0; c < m; ++c) {
        const auto& sc = surface_.comps[c];
        for (int mode = 0; mode < 4; ++mode) {
            TraceField probe = surface_.zero_trace();
            for (int j = 0; j < sc.size(); ++j) {
                const double s = sc.arc[j] / sc.perimeter;
                switch (mode) {
                    case 0: probe.comp[c][j] = std::cos(2.0 * kPi * s); break;
                    case 1: probe.comp[c][j] = std::sin(2.0 * kPi * s); break;
                    case 2: probe.comp[c][j] = std::cos(4.0 * kPi * s); break;
                    default: probe.comp[c][j] = 1.0; break;
                }
            }
            const Projection pr = project(probe, zero_targets);
            const double cnorm = norm2(pr.constants);
            const double wnorm = surface_h1_norm(surface_, probe);
            if (wnorm > 0.0) best = std::max(best, cnorm / wnorm);
        }
    }
    lipschitz_ = best;
    return lipschitz_;
}

double ThinOperators::bulk_grad_energy(const std::vector<double>& u) const {
    return a_unit_.quadratic(u);
}

double ThinOperators::lumped_integral(const std::vector<double>& f_nodal) const {
    double s = 0.0;
    for (std::size_t p = 0; p < f_nodal.size(); ++p) s += mass_all_[p] * f_nodal[p];
    return s;
}

double ThinOperators::lumped_l2sq(const std::vector<double>& f_nodal) const {
    double s = 0.0;
    for (std::size_t p = 0; p < f_nodal.size(); ++p) s += mass_all_[p] * f_nodal[p] * f_nodal[p];
    return s;
}

TraceField sample_trace(const Mesh& mesh, const std::function<double(double, double)>& f) {
    TraceField t;
    t.comp.resize(mesh.loops.size());
    for (std::size_t c = 0; c < mesh.loops.size(); ++c) {
        const Loop& loop = mesh.loops[c];
        t.comp[c].resize(loop.nodes.size());
        for (std::size_t j = 0; j < loop.nodes.size(); ++j) {
            const Point& q = mesh.nodes[loop.nodes[j]];
            t.comp[c][j] = f(q.x, q.y);
            if (!std::isfinite(t.comp[c][j]))
                throw InvalidField("trace sample is non-finite on an interface node");
        }
    }
    return t;
}

}  // namespace memfem
