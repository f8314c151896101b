#include "memfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace memfem {

namespace {

int label_code(const RegionLabel& l) {
    return static_cast<int>(l.kind) + 4 * l.component;
}

int node_id(int n, int i, int j) { return j * (n + 1) + i; }

}  // namespace

double point_segment_distance(Point p, Point a, Point b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
        t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
        t = std::clamp(t, 0.0, 1.0);
    }
    const double ex = p.x - (a.x + t * dx), ey = p.y - (a.y + t * dy);
    return std::sqrt(ex * ex + ey * ey);
}

double loop_distance(const Mesh& mesh, const Loop& loop, Point p) {
    double best = std::numeric_limits<double>::infinity();
    const int m = loop.size();
    for (int j = 0; j < m; ++j) {
        const Point a = mesh.nodes[loop.nodes[j]];
        const Point b = mesh.nodes[loop.nodes[(j + 1) % m]];
        best = std::min(best, point_segment_distance(p, a, b));
    }
    return best;
}

double Mesh::tri_area(int t) const {
    const Point& a = nodes[tris[t].v[0]];
    const Point& b = nodes[tris[t].v[1]];
    const Point& c = nodes[tris[t].v[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Point Mesh::centroid(int t) const {
    const Point& a = nodes[tris[t].v[0]];
    const Point& b = nodes[tris[t].v[1]];
    const Point& c = nodes[tris[t].v[2]];
    return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

bool Mesh::node_touches(int node, Region kind, int comp) const {
    for (int code : node_labels_[node]) {
        const Region k = static_cast<Region>(code & 3);
        const int c = code >> 2;
        if (k == kind && (comp == 0 || c == comp)) return true;
    }
    return false;
}

std::vector<int> Mesh::nodes_touching(Region kind, int comp) const {
    std::vector<int> out;
    for (int p = 0; p < static_cast<int>(nodes.size()); ++p) {
        if (node_touches(p, kind, comp)) out.push_back(p);
    }
    return out;
}

void Mesh::build_adjacency() {
    node_labels_.assign(nodes.size(), {});
    for (const Triangle& t : tris) {
        const int code = label_code(t.label);
        for (int v : t.v) {
            auto& codes = node_labels_[v];
            if (std::find(codes.begin(), codes.end(), code) == codes.end())
                codes.push_back(code);
        }
    }
    for (auto& codes : node_labels_) std::sort(codes.begin(), codes.end());
}

void Mesh::finalize() {
    const int num_nodes = static_cast<int>(nodes.size());
    if (num_nodes == 0 || tris.empty())
        throw GeometryError("mesh has no nodes or no triangles");

    for (std::size_t t = 0; t < tris.size(); ++t) {
        for (int v : tris[t].v) {
            if (v < 0 || v >= num_nodes)
                throw GeometryError("triangle vertex id out of range");
        }
        if (tri_area(static_cast<int>(t)) <= 0.0)
            throw GeometryError("triangle " + std::to_string(t) +
                                " is not counter-clockwise");
    }

    on_boundary.assign(num_nodes, 0);
    boundary_nodes.clear();
    constexpr double tol = 1e-12;
    for (int p = 0; p < num_nodes; ++p) {
        const Point& q = nodes[p];
        if (q.x < tol || q.x > 1.0 - tol || q.y < tol || q.y > 1.0 - tol) {
            on_boundary[p] = 1;
            boundary_nodes.push_back(p);
        }
    }

    for (Loop& loop : loops) {
        if (loop.size() < 3) throw GeometryError("interface loop has fewer than 3 nodes");
        loop.seg_len.resize(loop.nodes.size());
        loop.arc.resize(loop.nodes.size());
        loop.perimeter = 0.0;
        for (int j = 0; j < loop.size(); ++j) {
            const int a = loop.nodes[j];
            const int b = loop.nodes[(j + 1) % loop.size()];
            if (a < 0 || a >= num_nodes || b < 0 || b >= num_nodes)
                throw GeometryError("loop node id out of range");
            const double dx = nodes[b].x - nodes[a].x;
            const double dy = nodes[b].y - nodes[a].y;
            const double len = std::sqrt(dx * dx + dy * dy);
            if (len <= 0.0) throw GeometryError("zero-length loop segment");
            loop.arc[j] = loop.perimeter;
            loop.seg_len[j] = len;
            loop.perimeter += len;
        }
    }

    build_adjacency();

    const bool any_membrane = std::any_of(tris.begin(), tris.end(), [](const Triangle& t) {
        return t.label.kind == Region::Membrane;
    });
    if (any_membrane && eta <= 0.0)
        throw GeometryError("membrane triangles present but band thickness is unset");
    if (!any_membrane) eta = 0.0;

    extract_band_boundaries();
}

void Mesh::extract_band_boundaries() {
    band_outer.clear();
    band_inner.clear();
    if (eta <= 0.0) return;

    const int m = components();
    band_outer.resize(m);
    band_inner.resize(m);

    // Interface edges keyed by sorted node pair; value collects incident labels.
    std::map<std::pair<int, int>, std::vector<RegionLabel>> edges;
    for (const Triangle& t : tris) {
        for (int e = 0; e < 3; ++e) {
            int a = t.v[e], b = t.v[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            edges[{a, b}].push_back(t.label);
        }
    }

    // neighbor maps per component, separately for the outer and inner boundary
    std::vector<std::map<int, std::vector<int>>> outer_nbr(m + 1), inner_nbr(m + 1);
    for (const auto& [edge, labels] : edges) {
        if (labels.size() != 2) {
            if (labels.size() == 1 && labels[0].kind == Region::Membrane)
                throw GeometryError("membrane band reaches the outer boundary");
            continue;
        }
        const RegionLabel la = labels[0], lb = labels[1];
        if (la.kind == lb.kind && la.component == lb.component) continue;
        const bool a_mem = la.kind == Region::Membrane;
        const bool b_mem = lb.kind == Region::Membrane;
        if (a_mem && b_mem)
            throw GeometryError("membrane bands of two components touch");
        if (!a_mem && !b_mem)
            throw GeometryError("conductor regions meet without a membrane between them");
        const RegionLabel mem = a_mem ? la : lb;
        const RegionLabel other = a_mem ? lb : la;
        auto& nbr = (other.kind == Region::Outer) ? outer_nbr[mem.component]
                                                  : inner_nbr[mem.component];
        if (other.kind == Region::Inclusion && other.component != mem.component)
            throw GeometryError("membrane band borders a foreign conductor core");
        nbr[edge.first].push_back(edge.second);
        nbr[edge.second].push_back(edge.first);
    }

    auto chain = [&](const std::map<int, std::vector<int>>& nbr, int comp) {
        if (nbr.empty())
            throw GeometryError("membrane band of component " + std::to_string(comp) +
                                " has a missing boundary");
        for (const auto& [node, nn] : nbr) {
            if (nn.size() != 2)
                throw GeometryError("band boundary is not a simple closed curve");
        }
        Loop loop;
        loop.component = comp;
        const int start = nbr.begin()->first;
        int prev = -1, cur = start;
        do {
            loop.nodes.push_back(cur);
            const auto& nn = nbr.at(cur);
            const int next = (nn[0] == prev) ? nn[1] : nn[0];
            prev = cur;
            cur = next;
        } while (cur != start);
        if (loop.nodes.size() != nbr.size())
            throw GeometryError("band boundary is not a single closed curve");
        return loop;
    };

    for (int c = 1; c <= m; ++c) {
        band_outer[c - 1] = chain(outer_nbr[c], c);
        band_inner[c - 1] = chain(inner_nbr[c], c);
        for (Loop* lp : {&band_outer[c - 1], &band_inner[c - 1]}) {
            lp->seg_len.resize(lp->nodes.size());
            lp->arc.resize(lp->nodes.size());
            lp->perimeter = 0.0;
            for (int j = 0; j < lp->size(); ++j) {
                const Point a = nodes[lp->nodes[j]];
                const Point b = nodes[lp->nodes[(j + 1) % lp->size()]];
                lp->arc[j] = lp->perimeter;
                lp->seg_len[j] = std::hypot(b.x - a.x, b.y - a.y);
                lp->perimeter += lp->seg_len[j];
            }
        }
    }
}

Mesh build_square_mesh(int n) {
    if (n < 2) throw InvalidMeshSpec("grid resolution must be at least 2");
    Mesh mesh;
    mesh.n = n;
    mesh.grid_h = 1.0 / n;
    mesh.nodes.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            mesh.nodes.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
        }
    }
    mesh.tris.reserve(static_cast<std::size_t>(2) * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = node_id(n, i, j);
            const int v10 = node_id(n, i + 1, j);
            const int v01 = node_id(n, i, j + 1);
            const int v11 = node_id(n, i + 1, j + 1);
            mesh.tris.push_back({{v00, v10, v11}, {}});
            mesh.tris.push_back({{v00, v11, v01}, {}});
        }
    }
    mesh.finalize();
    return mesh;
}

void embed_inclusions(Mesh& mesh, const std::vector<Box>& boxes) {
    if (!mesh.loops.empty() || mesh.has_membrane())
        throw GeometryError("inclusions must be embedded into a plain square mesh");
    if (boxes.empty()) throw InvalidMeshSpec("at least one inclusion box required");

    const int n = mesh.n;
    struct IBox {
        int i0, j0, i1, j1;
    };
    auto snap = [&](double v) {
        const double s = v * n;
        const int i = static_cast<int>(std::lround(s));
        if (std::abs(s - i) > 1e-9)
            throw SnapError("inclusion corner " + std::to_string(v) +
                            " does not lie on a grid line");
        return i;
    };

    std::vector<IBox> ib;
    for (const Box& b : boxes) {
        IBox q{snap(b.x0), snap(b.y0), snap(b.x1), snap(b.y1)};
        if (q.i1 <= q.i0 || q.j1 <= q.j0)
            throw InvalidMeshSpec("inclusion box has no interior");
        if (q.i0 < 1 || q.j0 < 1 || q.i1 > n - 1 || q.j1 > n - 1)
            throw GeometryError("inclusion closer than one cell to the outer boundary");
        ib.push_back(q);
    }
    for (std::size_t a = 0; a < ib.size(); ++a) {
        for (std::size_t b = a + 1; b < ib.size(); ++b) {
            const int gx = std::max(ib[b].i0 - ib[a].i1, ib[a].i0 - ib[b].i1);
            const int gy = std::max(ib[b].j0 - ib[a].j1, ib[a].j0 - ib[b].j1);
            if (std::max(gx, gy) < 1)
                throw GeometryError("inclusions closer than one cell apart");
        }
    }

    for (Triangle& t : mesh.tris) {
        const Point c = {(mesh.nodes[t.v[0]].x + mesh.nodes[t.v[1]].x + mesh.nodes[t.v[2]].x) / 3.0,
                         (mesh.nodes[t.v[0]].y + mesh.nodes[t.v[1]].y + mesh.nodes[t.v[2]].y) / 3.0};
        const int ci = static_cast<int>(std::floor(c.x * n));
        const int cj = static_cast<int>(std::floor(c.y * n));
        for (std::size_t b = 0; b < ib.size(); ++b) {
            if (ci >= ib[b].i0 && ci < ib[b].i1 && cj >= ib[b].j0 && cj < ib[b].j1) {
                t.label = {Region::Inclusion, static_cast<int>(b) + 1};
                break;
            }
        }
    }

    // CCW perimeter walk; segment normals (dy, -dx) point into the outer region.
    for (std::size_t b = 0; b < ib.size(); ++b) {
        Loop loop;
        loop.component = static_cast<int>(b) + 1;
        const IBox& q = ib[b];
        for (int i = q.i0; i < q.i1; ++i) loop.nodes.push_back(node_id(n, i, q.j0));
        for (int j = q.j0; j < q.j1; ++j) loop.nodes.push_back(node_id(n, q.i1, j));
        for (int i = q.i1; i > q.i0; --i) loop.nodes.push_back(node_id(n, i, q.j1));
        for (int j = q.j1; j > q.j0; --j) loop.nodes.push_back(node_id(n, q.i0, j));
        mesh.loops.push_back(std::move(loop));
    }

    mesh.finalize();
}

void thicken_interfaces(Mesh& mesh, int k) {
    if (k < 1) throw InvalidMeshSpec("band half-width k must be at least 1");
    if (mesh.loops.empty()) throw GeometryError("no interface loops to thicken");
    if (mesh.has_membrane()) throw GeometryError("mesh already carries a membrane band");

    const double radius = k * mesh.grid_h;
    std::vector<int> claim(mesh.tris.size(), 0);
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        const Point c = mesh.centroid(static_cast<int>(t));
        for (const Loop& loop : mesh.loops) {
            if (loop_distance(mesh, loop, c) < radius) {
                if (claim[t] != 0 && claim[t] != loop.component)
                    throw GeometryError("membrane bands of two components overlap");
                claim[t] = loop.component;
            }
        }
    }

    std::vector<int> core_count(mesh.components() + 1, 0);
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        if (claim[t] != 0) {
            mesh.tris[t].label = {Region::Membrane, claim[t]};
            for (int v : mesh.tris[t].v) {
                if (mesh.on_boundary[v])
                    throw GeometryError("membrane band reaches the outer boundary");
            }
        } else if (mesh.tris[t].label.kind == Region::Inclusion) {
            ++core_count[mesh.tris[t].label.component];
        }
    }
    for (int c = 1; c <= mesh.components(); ++c) {
        if (core_count[c] == 0)
            throw GeometryError("membrane band swallows conductor core " + std::to_string(c));
    }

    mesh.eta = 2.0 * k * mesh.grid_h;
    mesh.finalize();
}

}  // namespace memfem
