#pragma once

#include <vector>

#include "geopep/errors.hpp"
#include "geopep/vec3.hpp"

namespace geopep {

constexpr double kProbClamp = 1e-7;

struct LossBreakdown {
    double total = 0.0;
    double ce = 0.0;
    double struct_term = 0.0;
    double lambda = 0.0;
};

struct DistanceField {
    std::vector<double> d3d; // Å, per real residue; 0 at true binding residues
    double dmax = 0.0;
};

/// Mean binary cross-entropy over real residues, probabilities clamped to
/// [1e-7, 1 - 1e-7].
double ce_loss(const std::vector<double>& p, const std::vector<int>& y,
               const std::vector<int>& mask);

/// Minimum heavy-atom distance from each real residue to the nearest true
/// binding residue. Requires at least one binding residue.
DistanceField distance_field(const std::vector<std::vector<Vec3>>& residue_atoms,
                             const std::vector<int>& y, const std::vector<int>& mask);

/// (1/N) sum over real negatives of p_i * d3d(i)/dmax. 0 when dmax = 0.
double struct_loss(const std::vector<double>& p, const std::vector<int>& y,
                   const DistanceField& field, const std::vector<int>& mask);

/// Hard false-positive variant: lambda-weighted mean of r1/r2 over residues
/// predicted positive at `threshold`, where r2 is the max r1 across the false
/// positives. Optional mode, off by default in training.
double struct_loss_hard(const std::vector<double>& p, const std::vector<int>& y,
                        const DistanceField& field, const std::vector<int>& mask,
                        double threshold = 0.5);

struct TotalLossResult {
    LossBreakdown breakdown;
    std::vector<double> grad_p; // dtotal/dp per padded position, 0 at masked
};

/// total = ce + lambda * struct_term, with the analytic gradient in p.
/// Instances with no binding residue contribute CE only (pass empty field).
TotalLossResult total_loss(const std::vector<double>& p, const std::vector<int>& y,
                           const DistanceField* field, double lambda,
                           const std::vector<int>& mask);

} // namespace geopep
