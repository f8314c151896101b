#include "memfem/mesh_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace memfem {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string label_text(const RegionLabel& l) {
    switch (l.kind) {
        case Region::Outer: return "outer";
        case Region::Inclusion: return "incl" + std::to_string(l.component);
        case Region::Membrane: return "memb" + std::to_string(l.component);
    }
    return "outer";
}

RegionLabel parse_label(const std::string& s, int line) {
    if (s == "outer") return {Region::Outer, 0};
    Region kind;
    std::string rest;
    if (s.rfind("incl", 0) == 0) {
        kind = Region::Inclusion;
        rest = s.substr(4);
    } else if (s.rfind("memb", 0) == 0) {
        kind = Region::Membrane;
        rest = s.substr(4);
    } else {
        throw ParseError("unknown region label '" + s + "'", line);
    }
    if (rest.empty() || rest.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError("unknown region label '" + s + "'", line);
    const int comp = std::stoi(rest);
    if (comp < 1) throw ParseError("region component must be positive", line);
    return {kind, comp};
}

double parse_num(const std::string& tok, int line) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || errno == ERANGE || !std::isfinite(v))
        throw ParseError("bad numeric token '" + tok + "'", line);
    return v;
}

int parse_id(const std::string& tok, int line) {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError("bad id token '" + tok + "'", line);
    return std::stoi(tok);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(std::move(tok));
    return out;
}

}  // namespace

std::string mesh_to_text(const Mesh& mesh) {
    std::string out;
    out += "meta grid_h " + fmt17(mesh.grid_h) + "\n";
    if (mesh.eta > 0.0) out += "meta eta " + fmt17(mesh.eta) + "\n";
    for (std::size_t p = 0; p < mesh.nodes.size(); ++p) {
        out += "node " + std::to_string(p) + " " + fmt17(mesh.nodes[p].x) + " " +
               fmt17(mesh.nodes[p].y) + "\n";
    }
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        const Triangle& tri = mesh.tris[t];
        out += "tri " + std::to_string(t) + " " + std::to_string(tri.v[0]) + " " +
               std::to_string(tri.v[1]) + " " + std::to_string(tri.v[2]) + " " +
               label_text(tri.label) + "\n";
    }
    for (const Loop& loop : mesh.loops) {
        out += "loop " + std::to_string(loop.component);
        for (int v : loop.nodes) out += " " + std::to_string(v);
        out += " " + std::to_string(loop.nodes.front()) + "\n";
    }
    return out;
}

Mesh mesh_from_text(const std::string& text) {
    Mesh mesh;
    bool have_h = false;
    // Records must appear in writing order: meta, node, tri, loop.
    enum Stage { MetaStage, NodeStage, TriStage, LoopStage };
    Stage stage = MetaStage;
    int line_no = 0;

    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        const std::string& kind = tok[0];

        if (kind == "meta") {
            if (stage != MetaStage) throw ParseError("meta record after data records", line_no);
            if (tok.size() != 3) throw ParseError("meta record needs a key and a value", line_no);
            const double v = parse_num(tok[2], line_no);
            if (tok[1] == "grid_h") {
                if (v <= 0.0 || v >= 1.0) throw ParseError("grid_h out of range", line_no);
                mesh.grid_h = v;
                have_h = true;
            } else if (tok[1] == "eta") {
                if (v <= 0.0) throw ParseError("eta must be positive", line_no);
                mesh.eta = v;
            } else {
                throw ParseError("unknown meta key '" + tok[1] + "'", line_no);
            }
        } else if (kind == "node") {
            if (stage > NodeStage) throw ParseError("node record after triangles", line_no);
            stage = NodeStage;
            if (tok.size() != 4) throw ParseError("node record needs id, x, y", line_no);
            if (parse_id(tok[1], line_no) != static_cast<int>(mesh.nodes.size()))
                throw ParseError("node ids must be sequential from 0", line_no);
            mesh.nodes.push_back({parse_num(tok[2], line_no), parse_num(tok[3], line_no)});
        } else if (kind == "tri") {
            if (stage > TriStage) throw ParseError("tri record after loops", line_no);
            stage = TriStage;
            if (tok.size() != 6) throw ParseError("tri record needs id, 3 vertices, label", line_no);
            if (parse_id(tok[1], line_no) != static_cast<int>(mesh.tris.size()))
                throw ParseError("tri ids must be sequential from 0", line_no);
            Triangle t;
            for (int i = 0; i < 3; ++i) {
                const int v = parse_id(tok[2 + i], line_no);
                if (v >= static_cast<int>(mesh.nodes.size()))
                    throw ParseError("triangle vertex id out of range", line_no);
                t.v[i] = v;
            }
            t.label = parse_label(tok[5], line_no);
            mesh.tris.push_back(t);
        } else if (kind == "loop") {
            stage = LoopStage;
            if (tok.size() < 5) throw ParseError("loop record too short", line_no);
            Loop loop;
            loop.component = parse_id(tok[1], line_no);
            if (loop.component != static_cast<int>(mesh.loops.size()) + 1)
                throw ParseError("loop components must be sequential from 1", line_no);
            for (std::size_t i = 2; i < tok.size(); ++i) {
                const int v = parse_id(tok[i], line_no);
                if (v >= static_cast<int>(mesh.nodes.size()))
                    throw ParseError("loop node id out of range", line_no);
                loop.nodes.push_back(v);
            }
            if (loop.nodes.front() != loop.nodes.back())
                throw ParseError("loop is not closed", line_no);
            loop.nodes.pop_back();
            mesh.loops.push_back(std::move(loop));
        } else {
            throw ParseError("unknown record '" + kind + "'", line_no);
        }
    }

    if (!have_h) throw ParseError("missing meta grid_h record", line_no);
    if (mesh.nodes.empty() || mesh.tris.empty())
        throw ParseError("truncated mesh artifact", line_no);

    mesh.n = static_cast<int>(std::lround(1.0 / mesh.grid_h));
    mesh.finalize();
    return mesh;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw WriteError("cannot open '" + tmp + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw WriteError("short write to '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw WriteError("cannot rename '" + tmp + "' to '" + path + "': " +
                         std::strerror(errno));
}

void write_mesh(const Mesh& mesh, const std::string& path) {
    write_text_atomic(path, mesh_to_text(mesh));
}

Mesh read_mesh(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open mesh file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return mesh_from_text(ss.str());
}

}  // namespace memfem
