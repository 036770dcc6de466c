#include "geopep/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geopep {

namespace {

size_t real_count(const std::vector<int>& mask) {
    size_t n = 0;
    for (int m : mask) n += m ? 1 : 0;
    return n;
}

void check_aligned(size_t a, size_t b, const char* what) {
    if (a != b) throw ContractError(std::string(what) + ": length mismatch");
}

} // namespace

double ce_loss(const std::vector<double>& p, const std::vector<int>& y,
               const std::vector<int>& mask) {
    check_aligned(p.size(), y.size(), "ce_loss");
    check_aligned(p.size(), mask.size(), "ce_loss");
    size_t n = real_count(mask);
    if (n == 0) throw ContractError("ce_loss: no real residues");
    double sum = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (!mask[i]) continue;
        double pt = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
        sum += y[i] ? std::log(pt) : std::log(1.0 - pt);
    }
    return -sum / (double)n;
}

DistanceField distance_field(const std::vector<std::vector<Vec3>>& residue_atoms,
                             const std::vector<int>& y, const std::vector<int>& mask) {
    size_t n_real = residue_atoms.size();
    std::vector<size_t> binding;
    for (size_t i = 0; i < n_real; ++i)
        if (mask[i] && y[i]) binding.push_back(i);
    if (binding.empty()) throw ContractError("distance_field: no binding residues");

    auto min_dist = [](const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& pa : a)
            for (const auto& pb : b) best = std::min(best, distance2(pa, pb));
        return std::sqrt(best);
    };

    DistanceField field;
    field.d3d.assign(n_real, 0.0);
    for (size_t i = 0; i < n_real; ++i) {
        if (!mask[i] || y[i]) continue;
        double best = std::numeric_limits<double>::infinity();
        for (size_t j : binding) best = std::min(best, min_dist(residue_atoms[i], residue_atoms[j]));
        field.d3d[i] = best;
        field.dmax = std::max(field.dmax, best);
    }
    return field;
}

double struct_loss(const std::vector<double>& p, const std::vector<int>& y,
                   const DistanceField& field, const std::vector<int>& mask) {
    check_aligned(p.size(), y.size(), "struct_loss");
    size_t n = real_count(mask);
    if (n == 0) throw ContractError("struct_loss: no real residues");
    if (field.dmax == 0.0) return 0.0;
    double sum = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (!mask[i] || y[i]) continue;
        sum += p[i] * field.d3d[i] / field.dmax;
    }
    return sum / (double)n;
}

double struct_loss_hard(const std::vector<double>& p, const std::vector<int>& y,
                        const DistanceField& field, const std::vector<int>& mask,
                        double threshold) {
    check_aligned(p.size(), y.size(), "struct_loss_hard");
    std::vector<size_t> false_pos;
    for (size_t i = 0; i < p.size(); ++i)
        if (mask[i] && !y[i] && p[i] >= threshold) false_pos.push_back(i);
    if (false_pos.empty()) return 0.0;
    double r2 = 0.0;
    for (size_t i : false_pos) r2 = std::max(r2, field.d3d[i]);
    if (r2 == 0.0) return 0.0;
    double sum = 0.0;
    for (size_t i : false_pos) sum += field.d3d[i] / r2;
    return sum / (double)false_pos.size();
}

TotalLossResult total_loss(const std::vector<double>& p, const std::vector<int>& y,
                           const DistanceField* field, double lambda,
                           const std::vector<int>& mask) {
    if (lambda < 0.0) throw ContractError("total_loss: lambda must be >= 0");
    TotalLossResult result;
    result.breakdown.lambda = lambda;
    result.breakdown.ce = ce_loss(p, y, mask);
    if (field && field->dmax > 0.0)
        result.breakdown.struct_term = struct_loss(p, y, *field, mask);
    result.breakdown.total = result.breakdown.ce + lambda * result.breakdown.struct_term;

    size_t n = real_count(mask);
    result.grad_p.assign(p.size(), 0.0);
    for (size_t i = 0; i < p.size(); ++i) {
        if (!mask[i]) continue;
        double g = 0.0;
        if (p[i] > kProbClamp && p[i] < 1.0 - kProbClamp) {
            // d/dp of -(1/N)[y ln p + (1-y) ln(1-p)]
            g = (p[i] - (double)y[i]) / (p[i] * (1.0 - p[i])) / (double)n;
        }
        if (field && field->dmax > 0.0 && !y[i])
            g += lambda * field->d3d[i] / field->dmax / (double)n;
        result.grad_p[i] = g;
    }
    return result;
}

} // namespace geopep
