#pragma once

#include <array>
#include <vector>

#include "memfem/errors.hpp"

namespace memfem {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

enum class Region : int { Outer = 0, Inclusion = 1, Membrane = 2 };

// Region labels carry a component id: 0 for Outer, 1..m for Inclusion/Membrane.
struct RegionLabel {
    Region kind = Region::Outer;
    int component = 0;

    bool operator==(const RegionLabel&) const = default;
};

struct Triangle {
    std::array<int, 3> v{};  // CCW
    RegionLabel label;
};

// Closed polyline along mesh edges. `nodes` lists each node once; the segment
// after nodes.back() returns to nodes.front().
struct Loop {
    int component = 0;
    std::vector<int> nodes;
    std::vector<double> seg_len;  // seg_len[j]: nodes[j] -> nodes[j+1 mod size]
    std::vector<double> arc;      // cumulative arc coordinate per node, arc[0] = 0
    double perimeter = 0.0;

    int size() const { return static_cast<int>(nodes.size()); }
};

// Axis-aligned rectangle, corners on grid lines.
struct Box {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

// Triangulation of the unit square. Cells are split along the bottom-left to
// top-right diagonal; node (i,j) of the n x n grid has id j*(n+1)+i.
struct Mesh {
    int n = 0;
    double grid_h = 0.0;
    double eta = 0.0;  // membrane band thickness, 0 for sharp-interface meshes

    std::vector<Point> nodes;
    std::vector<Triangle> tris;
    std::vector<Loop> loops;  // interface loops, components 1..m in order

    // Derived by finalize(); never serialized.
    std::vector<int> boundary_nodes;         // ascending
    std::vector<unsigned char> on_boundary;  // per node
    std::vector<Loop> band_outer;  // per component: Membrane/Outer interface
    std::vector<Loop> band_inner;  // per component: Membrane/Inclusion interface

    int components() const { return static_cast<int>(loops.size()); }
    bool has_membrane() const { return eta > 0.0; }

    double tri_area(int t) const;
    Point centroid(int t) const;

    // True if any triangle adjacent to the node has the given label kind
    // (and component, unless comp == 0 which matches any).
    bool node_touches(int node, Region kind, int comp = 0) const;
    std::vector<int> nodes_touching(Region kind, int comp = 0) const;

    // Rebuild derived data and check geometric invariants (positive CCW areas,
    // closed loops with positive segment lengths, 2-regular band boundaries).
    void finalize();

  private:
    std::vector<std::vector<int>> node_labels_;  // sorted label codes per node
    void build_adjacency();
    void extract_band_boundaries();
};

// Uniform n x n right-triangle mesh of (0,1)^2, all triangles labeled Outer.
Mesh build_square_mesh(int n);

// Relabel the interiors of the given rectangles as Inclusion(1..m) and record
// their boundary loops (CCW). Preconditions: corners on grid lines (SnapError),
// pairwise and boundary separation at least one cell (GeometryError), at least
// one cell of interior per box (InvalidMeshSpec).
void embed_inclusions(Mesh& mesh, const std::vector<Box>& boxes);

// Relabel every triangle whose centroid lies within k*grid_h of a loop as
// Membrane(component), producing a band of thickness eta = 2*k*grid_h
// symmetric about the loop. Centroid distances cannot tie k*grid_h exactly on
// the integer grid, so the strict inequality is unambiguous. Errors if a band
// would claim triangles of two components, touch the outer boundary, or
// swallow an entire conductor core.
void thicken_interfaces(Mesh& mesh, int k);

// Distance from p to the closed polyline of the loop.
double loop_distance(const Mesh& mesh, const Loop& loop, Point p);

double point_segment_distance(Point p, Point a, Point b);

}  // namespace memfem
