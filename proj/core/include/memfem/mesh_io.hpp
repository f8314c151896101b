#pragma once

#include <string>

#include "memfem/mesh.hpp"

namespace memfem {

// Plain-text mesh artifact, LF line endings, 0-based ids, records in order:
//   meta grid_h <v>        (required; `meta eta <v>` follows for banded meshes)
//   node <id> <x> <y>
//   tri <id> <a> <b> <c> <label>    label: outer | incl<k> | memb<k>
//   loop <comp> <n0> <n1> ... <n0>  (first node repeated at the end)
// Coordinates are written with enough digits to round-trip exactly.
std::string mesh_to_text(const Mesh& mesh);
Mesh mesh_from_text(const std::string& text);

// File variants. Writes go through a temp file and rename, so a crashed
// writer never leaves a half-written artifact behind.
void write_mesh(const Mesh& mesh, const std::string& path);
Mesh read_mesh(const std::string& path);

// Shared by every artifact writer in the suite.
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace memfem
