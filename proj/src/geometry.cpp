#include "geopep/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace geopep {

SpatialGrid::SpatialGrid(const std::vector<Vec3>& points, double cell_size)
    : cell_size_(cell_size), points_(points) {
    if (cell_size <= 0.0) throw ContractError("SpatialGrid: cell_size must be > 0");
    for (size_t i = 0; i < points_.size(); ++i) cells_[key_of(points_[i])].push_back(i);
}

SpatialGrid::CellKey SpatialGrid::key_of(const Vec3& p) const {
    return {(int64_t)std::floor(p.x / cell_size_), (int64_t)std::floor(p.y / cell_size_),
            (int64_t)std::floor(p.z / cell_size_)};
}

std::vector<size_t> SpatialGrid::query(const Vec3& q, double radius) const {
    std::vector<size_t> hits;
    int64_t reach = (int64_t)std::ceil(radius / cell_size_);
    CellKey c = key_of(q);
    double r2 = radius * radius;
    for (int64_t dx = -reach; dx <= reach; ++dx)
        for (int64_t dy = -reach; dy <= reach; ++dy)
            for (int64_t dz = -reach; dz <= reach; ++dz) {
                auto it = cells_.find({c.x + dx, c.y + dy, c.z + dz});
                if (it == cells_.end()) continue;
                for (size_t idx : it->second)
                    if (distance2(points_[idx], q) <= r2) hits.push_back(idx);
            }
    return hits;
}

double min_atom_distance(const Residue& a, const Residue& b) {
    if (a.atoms.empty() || b.atoms.empty())
        throw ContractError("min_atom_distance: residue without heavy atoms");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pa : a.atoms)
        for (const auto& pb : b.atoms) best = std::min(best, distance2(pa.coord, pb.coord));
    return std::sqrt(best);
}

std::vector<std::pair<size_t, size_t>> neighbor_pairs(const std::vector<Vec3>& atoms_a,
                                                      const std::vector<Vec3>& atoms_b,
                                                      double cutoff) {
    if (cutoff <= 0.0) throw ContractError("neighbor_pairs: cutoff must be > 0");
    std::vector<std::pair<size_t, size_t>> pairs;
    if (atoms_a.empty() || atoms_b.empty()) return pairs;
    SpatialGrid grid(atoms_b, cutoff);
    for (size_t i = 0; i < atoms_a.size(); ++i) {
        auto hits = grid.query(atoms_a[i], cutoff);
        for (size_t j : hits) pairs.emplace_back(i, j);
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

// ---------------------------------------------------------------- quickhull

namespace {

struct Face {
    int v[3];
    Vec3 normal; // not normalized
    double offset;
    std::vector<int> outside;
    bool alive = true;

    double dist(const Vec3& p) const { return normal.dot(p) - offset; }
};

Face make_face(int a, int b, int c, const std::vector<Vec3>& pts) {
    Face f;
    f.v[0] = a;
    f.v[1] = b;
    f.v[2] = c;
    f.normal = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    f.offset = f.normal.dot(pts[a]);
    return f;
}

} // namespace

HullResult convex_hull_volume(const std::vector<Vec3>& points) {
    HullResult result;
    const size_t n = points.size();
    if (n < 4) {
        result.degenerate = true;
        result.vertex_count = n;
        return result;
    }

    double scale = 0.0;
    for (const auto& p : points)
        scale = std::max({scale, std::fabs(p.x), std::fabs(p.y), std::fabs(p.z)});
    const double eps = 1e-12 * std::max(1.0, scale);

    // Initial simplex: extreme pair, then farthest from the line, then from
    // the plane. Any failure means < 4 affinely independent points.
    size_t i0 = 0, i1 = 0;
    double best = -1.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j : {(size_t)0, n / 2, n - 1}) {
            double d = distance2(points[i], points[j]);
            if (d > best) { best = d; i0 = i; i1 = j; }
        }
    for (size_t i = 0; i < n; ++i) {
        double d = distance2(points[i], points[i0]);
        if (d > best) { best = d; i1 = i; }
    }
    if (std::sqrt(std::max(best, 0.0)) <= eps) {
        result.degenerate = true;
        result.vertex_count = 1;
        return result;
    }

    Vec3 axis = points[i1] - points[i0];
    size_t i2 = i0;
    best = -1.0;
    for (size_t i = 0; i < n; ++i) {
        double d = axis.cross(points[i] - points[i0]).norm2();
        if (d > best) { best = d; i2 = i; }
    }
    if (std::sqrt(std::max(best, 0.0)) / axis.norm() <= eps) {
        result.degenerate = true;
        result.vertex_count = 2;
        return result;
    }

    Vec3 plane_n = axis.cross(points[i2] - points[i0]);
    size_t i3 = i0;
    best = -1.0;
    for (size_t i = 0; i < n; ++i) {
        double d = std::fabs(plane_n.dot(points[i] - points[i0]));
        if (d > best) { best = d; i3 = i; }
    }
    if (best / plane_n.norm() <= eps) {
        result.degenerate = true;
        result.vertex_count = 3;
        return result;
    }

    std::vector<Face> faces;
    {
        int a = (int)i0, b = (int)i1, c = (int)i2, d = (int)i3;
        int tets[4][4] = {{a, b, c, d}, {a, c, d, b}, {a, d, b, c}, {b, d, c, a}};
        for (auto& t : tets) {
            Face f = make_face(t[0], t[1], t[2], points);
            if (f.dist(points[t[3]]) > 0) std::swap(f.v[1], f.v[2]);
            faces.push_back(make_face(f.v[0], f.v[1], f.v[2], points));
        }
    }

    const double vis_eps = 1e-10 * std::max(1.0, scale);
    for (size_t i = 0; i < n; ++i) {
        if (i == i0 || i == i1 || i == i2 || i == i3) continue;
        double best_d = vis_eps;
        int best_f = -1;
        for (size_t f = 0; f < faces.size(); ++f) {
            double d = faces[f].dist(points[i]) / faces[f].normal.norm();
            if (d > best_d) { best_d = d; best_f = (int)f; }
        }
        if (best_f >= 0) faces[best_f].outside.push_back((int)i);
    }

    // Refine: expand toward the farthest outside point of any live face.
    for (size_t fi = 0; fi < faces.size(); ++fi) {
        if (!faces[fi].alive || faces[fi].outside.empty()) continue;

        int apex = -1;
        double best_d = -1.0;
        for (int p : faces[fi].outside) {
            double d = faces[fi].dist(points[p]);
            if (d > best_d) { best_d = d; apex = p; }
        }

        std::vector<size_t> visible;
        std::vector<int> orphans;
        for (size_t f = 0; f < faces.size(); ++f) {
            if (!faces[f].alive) continue;
            if (faces[f].dist(points[apex]) / faces[f].normal.norm() > vis_eps) {
                visible.push_back(f);
                orphans.insert(orphans.end(), faces[f].outside.begin(), faces[f].outside.end());
            }
        }

        // Horizon = directed edges of visible faces whose reverse edge is not
        // itself on a visible face.
        std::map<std::pair<int, int>, int> edge_count;
        for (size_t f : visible) {
            const auto& v = faces[f].v;
            edge_count[{v[0], v[1]}]++;
            edge_count[{v[1], v[2]}]++;
            edge_count[{v[2], v[0]}]++;
        }
        std::vector<std::pair<int, int>> horizon;
        for (const auto& [e, cnt] : edge_count)
            if (edge_count.find({e.second, e.first}) == edge_count.end()) horizon.push_back(e);

        for (size_t f : visible) faces[f].alive = false;

        size_t first_new = faces.size();
        for (const auto& [u, v] : horizon) faces.push_back(make_face(u, v, apex, points));

        for (int p : orphans) {
            if (p == apex) continue;
            double bd = vis_eps;
            int bf = -1;
            for (size_t f = first_new; f < faces.size(); ++f) {
                double d = faces[f].dist(points[p]) / faces[f].normal.norm();
                if (d > bd) { bd = d; bf = (int)f; }
            }
            if (bf >= 0) faces[bf].outside.push_back(p);
        }
        fi = (size_t)-1; // rescan from the start; face count stays small
    }

    // Signed tetrahedron sum from the hull vertex centroid.
    std::vector<int> verts;
    for (const auto& f : faces)
        if (f.alive) verts.insert(verts.end(), f.v, f.v + 3);
    std::sort(verts.begin(), verts.end());
    verts.erase(std::unique(verts.begin(), verts.end()), verts.end());

    Vec3 centroid;
    for (int v : verts) centroid += points[v];
    centroid = centroid / (double)verts.size();

    double vol = 0.0;
    for (const auto& f : faces) {
        if (!f.alive) continue;
        Vec3 a = points[f.v[0]] - centroid;
        Vec3 b = points[f.v[1]] - centroid;
        Vec3 c = points[f.v[2]] - centroid;
        vol += a.dot(b.cross(c));
    }
    result.volume = vol / 6.0;
    result.vertex_count = verts.size();
    result.degenerate = false;
    return result;
}

// ------------------------------------------------------------------- SASA

double vdw_radius(const std::string& element) {
    if (element.empty() || element == "H" || element == "D")
        throw ValidationError("vdw_radius: unsupported element '" + element + "'");
    if (element == "C") return 1.70;
    if (element == "N") return 1.55;
    if (element == "O") return 1.52;
    if (element == "S") return 1.80;
    if (element == "P") return 1.80;
    return 1.70;
}

std::vector<Vec3> golden_spiral_points(int n) {
    std::vector<Vec3> pts;
    pts.reserve((size_t)n);
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
        double z = 1.0 - 2.0 * (k + 0.5) / n;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = golden_angle * k;
        pts.push_back({r * std::cos(phi), r * std::sin(phi), z});
    }
    return pts;
}

SasaResult shrake_rupley_sasa(const std::vector<SasaAtom>& atoms, double probe, int n_points) {
    if (probe < 0.0) throw ContractError("shrake_rupley_sasa: probe must be >= 0");
    if (n_points < 1) throw ContractError("shrake_rupley_sasa: n_points must be >= 1");

    SasaResult result;
    result.per_atom_area.assign(atoms.size(), 0.0);
    if (atoms.empty()) return result;

    std::vector<double> radii(atoms.size());
    double max_radius = 0.0;
    size_t max_residue = 0;
    std::vector<Vec3> coords(atoms.size());
    for (size_t i = 0; i < atoms.size(); ++i) {
        radii[i] = vdw_radius(atoms[i].element) + probe;
        max_radius = std::max(max_radius, radii[i]);
        max_residue = std::max(max_residue, atoms[i].residue_index);
        coords[i] = atoms[i].coord;
    }

    SpatialGrid grid(coords, 2.0 * max_radius);
    const auto sphere = golden_spiral_points(n_points);
    const double four_pi = 4.0 * std::numbers::pi;

    for (size_t i = 0; i < atoms.size(); ++i) {
        const double ri = radii[i];
        auto candidates = grid.query(coords[i], ri + max_radius);
        std::vector<size_t> neighbors;
        for (size_t j : candidates)
            if (j != i && distance(coords[i], coords[j]) < ri + radii[j]) neighbors.push_back(j);

        int accessible = 0;
        for (const auto& dir : sphere) {
            Vec3 p = coords[i] + dir * ri;
            bool buried = false;
            for (size_t j : neighbors)
                if (distance2(p, coords[j]) < radii[j] * radii[j]) { buried = true; break; }
            if (!buried) ++accessible;
        }
        result.per_atom_area[i] = four_pi * ri * ri * accessible / n_points;
    }

    result.per_residue_area.assign(max_residue + 1, 0.0);
    for (size_t i = 0; i < atoms.size(); ++i)
        result.per_residue_area[atoms[i].residue_index] += result.per_atom_area[i];
    return result;
}

} // namespace geopep
