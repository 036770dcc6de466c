#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "geopep/errors.hpp"
#include "geopep/structio.hpp"
#include "geopep/vec3.hpp"

namespace geopep {

/// Uniform hash grid over 3-D points. Immutable after construction.
class SpatialGrid {
  public:
    SpatialGrid(const std::vector<Vec3>& points, double cell_size);

    /// Indices of stored points within `radius` of `q` (inclusive).
    std::vector<size_t> query(const Vec3& q, double radius) const;

    double cell_size() const { return cell_size_; }

  private:
    struct CellKey {
        int64_t x, y, z;
        bool operator==(const CellKey&) const = default;
    };
    struct CellHash {
        size_t operator()(const CellKey& k) const {
            // FNV-style mix of the three lattice coordinates.
            uint64_t h = 1469598103934665603ull;
            for (int64_t v : {k.x, k.y, k.z}) {
                h ^= (uint64_t)v;
                h *= 1099511628211ull;
            }
            return (size_t)h;
        }
    };

    CellKey key_of(const Vec3& p) const;

    double cell_size_;
    std::vector<Vec3> points_;
    std::unordered_map<CellKey, std::vector<size_t>, CellHash> cells_;
};

/// Minimum heavy-atom pair distance between two residues.
double min_atom_distance(const Residue& a, const Residue& b);

/// All (i, j) index pairs with |a_i - b_j| <= cutoff, grid accelerated.
/// Pairs are sorted lexicographically.
std::vector<std::pair<size_t, size_t>> neighbor_pairs(const std::vector<Vec3>& atoms_a,
                                                      const std::vector<Vec3>& atoms_b,
                                                      double cutoff);

struct HullResult {
    double volume = 0.0;
    size_t vertex_count = 0;
    bool degenerate = false;
};

/// 3-D convex hull volume (quickhull). Inputs with fewer than 4 affinely
/// independent points are flagged degenerate with volume 0.
HullResult convex_hull_volume(const std::vector<Vec3>& points);

struct SasaResult {
    std::vector<double> per_atom_area;    // Å², aligned with input atoms
    std::vector<double> per_residue_area; // Å², aligned with residue_of values
};

struct SasaAtom {
    Vec3 coord;
    std::string element;
    size_t residue_index = 0;
};

/// Van der Waals radius for an element (C 1.70, N 1.55, O 1.52, S 1.80,
/// P 1.80, default 1.70 for other heavy elements). Throws on H/D or empty.
double vdw_radius(const std::string& element);

/// Shrake-Rupley SASA with a deterministic golden-spiral sphere lattice.
SasaResult shrake_rupley_sasa(const std::vector<SasaAtom>& atoms, double probe = 1.4,
                              int n_points = 960);

/// The n-point golden-spiral unit sphere lattice used by SASA.
std::vector<Vec3> golden_spiral_points(int n);

} // namespace geopep
