#pragma once

#include <cstdint>
#include <string>

#include "hypbranch/ball.hpp"

namespace hypbranch {

struct DeltaOptions {
    bool exhaustive = true;
    // Triangles examined in sampled mode.
    std::size_t samples = 2000;
    std::uint64_t seed = 1;
    // Vertex radius of the triangles (defaults to the ball radius).
    int radius = -1;
    // Exhaustive mode refuses more triangles than this.
    std::size_t triangle_cap = 2'000'000;
};

struct DeltaEstimate {
    // Largest slimness defect found; a lower bound for the slimness
    // constant of the whole Cayley graph.
    int value = 0;
    bool exhaustive = true;
    int radius = 0;
    std::size_t triangles = 0;
    std::size_t uncertified = 0;
    // Worst triangle (o, y, z), the side carrying the far point p
    // (0: [o,y], 1: [o,z], 2: [y,z]) and p itself.
    Element witness_y, witness_z, witness_p;
    int witness_side = -1;
};

// Rips slimness over triangles with one vertex at o (every triangle is a
// translate of one). For each side and each point p on some geodesic for that
// side, the other two sides are chosen to stay as far from p as possible.
DeltaEstimate estimate_delta(const Ball& ball, const DeltaOptions& options = {});

} // namespace hypbranch
