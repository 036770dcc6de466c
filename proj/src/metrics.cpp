#include "geopep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace geopep {

namespace {

struct Scored {
    double score;
    int label;
};

std::vector<Scored> collect(const std::vector<double>& p, const std::vector<int>& y,
                            const std::vector<int>& mask) {
    if (p.size() != y.size() || p.size() != mask.size())
        throw ContractError("metrics: aligned vectors required");
    std::vector<Scored> s;
    for (size_t i = 0; i < p.size(); ++i)
        if (mask[i]) s.push_back({p[i], y[i] ? 1 : 0});
    return s;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double percentile(std::vector<double> sorted, double q) {
    // linear interpolation between closest ranks
    if (sorted.empty()) throw ContractError("percentile: empty");
    double pos = q * (double)(sorted.size() - 1);
    size_t lo = (size_t)std::floor(pos);
    size_t hi = (size_t)std::ceil(pos);
    double frac = pos - (double)lo;
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double vec_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / (double)v.size();
}

double vec_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

ThresholdMetrics confusion_at_threshold(const std::vector<double>& p, const std::vector<int>& y,
                                        const std::vector<int>& mask, double threshold) {
    auto scored = collect(p, y, mask);
    if (scored.empty()) throw ContractError("confusion_at_threshold: no real residues");
    ThresholdMetrics m;
    for (const auto& s : scored) {
        bool pred = s.score >= threshold;
        if (pred && s.label) m.counts.tp++;
        else if (pred && !s.label) m.counts.fp++;
        else if (!pred && s.label) m.counts.fn++;
        else m.counts.tn++;
    }
    const auto& c = m.counts;
    m.precision = c.tp + c.fp ? (double)c.tp / (double)(c.tp + c.fp) : 0.0;
    m.recall = c.tp + c.fn ? (double)c.tp / (double)(c.tp + c.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                      : 0.0;
    m.accuracy = (double)(c.tp + c.tn) / (double)c.total();
    return m;
}

CurvePoints roc_curve(const std::vector<double>& p, const std::vector<int>& y,
                      const std::vector<int>& mask) {
    auto scored = collect(p, y, mask);
    size_t n_pos = 0, n_neg = 0;
    for (const auto& s : scored) (s.label ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw ContractError("roc_curve: both classes required");

    std::sort(scored.begin(), scored.end(),
              [](const Scored& a, const Scored& b) { return a.score > b.score; });

    CurvePoints curve;
    size_t tp = 0, fp = 0;
    // integer win/tie counting for the AUC (ties inside one score group)
    unsigned long long wins = 0, ties = 0;
    size_t i = 0;
    size_t neg_below = n_neg; // negatives with strictly lower score than the current group
    while (i < scored.size()) {
        size_t j = i;
        size_t g_pos = 0, g_neg = 0;
        while (j < scored.size() && scored[j].score == scored[i].score) {
            (scored[j].label ? g_pos : g_neg)++;
            ++j;
        }
        neg_below -= g_neg;
        wins += (unsigned long long)g_pos * neg_below;
        ties += (unsigned long long)g_pos * g_neg;
        tp += g_pos;
        fp += g_neg;
        curve.thresholds.push_back(scored[i].score);
        curve.xs.push_back((double)fp / (double)n_neg); // FPR
        curve.ys.push_back((double)tp / (double)n_pos); // TPR
        i = j;
    }
    curve.area = ((double)wins + 0.5 * (double)ties) / ((double)n_pos * (double)n_neg);
    return curve;
}

CurvePoints pr_curve(const std::vector<double>& p, const std::vector<int>& y,
                     const std::vector<int>& mask) {
    auto scored = collect(p, y, mask);
    size_t n_pos = 0;
    for (const auto& s : scored) n_pos += (size_t)s.label;
    if (n_pos == 0 || n_pos == scored.size())
        throw ContractError("pr_curve: both classes required");

    std::sort(scored.begin(), scored.end(),
              [](const Scored& a, const Scored& b) { return a.score > b.score; });

    CurvePoints curve;
    size_t tp = 0, predicted = 0;
    size_t i = 0;
    while (i < scored.size()) {
        size_t j = i;
        while (j < scored.size() && scored[j].score == scored[i].score) {
            tp += (size_t)scored[j].label;
            ++predicted;
            ++j;
        }
        curve.thresholds.push_back(scored[i].score);
        curve.xs.push_back((double)tp / (double)n_pos);   // recall
        curve.ys.push_back((double)tp / (double)predicted); // precision
        i = j;
    }
    // trapezoid over (recall, precision), anchored at recall 0 with the
    // first group's precision (right-continuous)
    double area = 0.0;
    double prev_x = 0.0, prev_y = curve.ys.front();
    for (size_t k = 0; k < curve.xs.size(); ++k) {
        area += (curve.xs[k] - prev_x) * 0.5 * (curve.ys[k] + prev_y);
        prev_x = curve.xs[k];
        prev_y = curve.ys[k];
    }
    curve.area = area;
    return curve;
}

std::optional<double> tpvr(const std::vector<Vec3>& pred_points,
                           const std::vector<Vec3>& tp_points) {
    auto contains = [&](const Vec3& q) {
        for (const auto& p : pred_points)
            if (distance2(p, q) < 1e-18) return true;
        return false;
    };
    for (const auto& q : tp_points)
        if (!contains(q))
            throw ContractError("tpvr: tp_set is not a subset of pred_set");

    HullResult pred = convex_hull_volume(pred_points);
    if (pred.degenerate) {
        HullResult tp = convex_hull_volume(tp_points);
        bool same_size = pred_points.size() == tp_points.size();
        if (tp.degenerate && same_size) return 1.0;
        return std::nullopt;
    }
    HullResult tp = convex_hull_volume(tp_points);
    return tp.volume / pred.volume;
}

double distance_loss_eval(const std::vector<double>& p, const std::vector<int>& y,
                          const std::vector<std::vector<Vec3>>& residue_atoms,
                          const std::vector<int>& mask, double threshold,
                          DistanceLossMode mode) {
    bool any_binding = false;
    for (size_t i = 0; i < residue_atoms.size(); ++i)
        if (mask[i] && y[i]) any_binding = true;
    if (!any_binding) return 0.0;

    DistanceField field = distance_field(residue_atoms, y, mask);
    if (mode == DistanceLossMode::raw_probabilities) return struct_loss(p, y, field, mask);
    std::vector<double> hard(p.size(), 0.0);
    for (size_t i = 0; i < p.size(); ++i) hard[i] = p[i] >= threshold ? 1.0 : 0.0;
    return struct_loss(hard, y, field, mask);
}

double max_sasa(const std::string& resname, bool* known) {
    // Theoretical maxima (Tien et al. style), Å².
    static const std::map<std::string, double> table = {
        {"ALA", 129.0}, {"ARG", 274.0}, {"ASN", 195.0}, {"ASP", 193.0}, {"CYS", 167.0},
        {"GLN", 225.0}, {"GLU", 223.0}, {"GLY", 104.0}, {"HIS", 224.0}, {"ILE", 197.0},
        {"LEU", 201.0}, {"LYS", 236.0}, {"MET", 224.0}, {"PHE", 240.0}, {"PRO", 159.0},
        {"SER", 155.0}, {"THR", 172.0}, {"TRP", 285.0}, {"TYR", 263.0}, {"VAL", 174.0}};
    auto it = table.find(resname);
    if (known) *known = it != table.end();
    return it == table.end() ? 200.0 : it->second;
}

DeltaRsaResult delta_rsa(const Complex& complex, char peptide_chain, char protein_chain,
                         double probe, int n_points) {
    const Chain* prot = complex.find_chain(protein_chain);
    if (!prot) throw ContractError("delta_rsa: protein chain not found");
    if (!complex.find_chain(peptide_chain)) throw ContractError("delta_rsa: peptide chain not found");

    auto build = [&](bool include_peptide) {
        std::vector<SasaAtom> atoms;
        std::vector<size_t> prot_residue_slot; // SASA residue index per protein residue
        size_t residue_index = 0;
        for (const auto& chain : complex.chains) {
            if (!include_peptide && chain.id == peptide_chain) continue;
            for (const auto& res : chain.residues) {
                if (chain.id == protein_chain) prot_residue_slot.push_back(residue_index);
                for (const auto& a : res.atoms)
                    atoms.push_back({a.coord, a.element, residue_index});
                ++residue_index;
            }
        }
        return std::make_pair(atoms, prot_residue_slot);
    };

    auto [bound_atoms, bound_slots] = build(true);
    auto [unbound_atoms, unbound_slots] = build(false);
    SasaResult bound = shrake_rupley_sasa(bound_atoms, probe, n_points);
    SasaResult unbound = shrake_rupley_sasa(unbound_atoms, probe, n_points);

    DeltaRsaResult out;
    for (size_t i = 0; i < prot->residues.size(); ++i) {
        bool known = false;
        double cap = max_sasa(prot->residues[i].name, &known);
        if (!known) out.unknown_residues++;
        double rb = std::clamp(bound.per_residue_area[bound_slots[i]] / cap, 0.0, 1.0);
        double ru = std::clamp(unbound.per_residue_area[unbound_slots[i]] / cap, 0.0, 1.0);
        out.rsa_bound.push_back(rb);
        out.rsa_unbound.push_back(ru);
        out.delta_rsa.push_back(rb - ru);
    }
    return out;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& differences) {
    if (differences.empty()) throw ContractError("wilcoxon_signed_rank: empty input");
    const size_t n = differences.size();

    // Midranks over |d|, zeros included (Pratt).
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return std::fabs(differences[a]) < std::fabs(differences[b]);
    });
    std::vector<double> rank(n, 0.0);
    std::vector<size_t> tie_sizes;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n &&
               std::fabs(differences[order[j]]) == std::fabs(differences[order[i]]))
            ++j;
        double midrank = 0.5 * (double)(i + 1 + j); // average of ranks i+1..j
        for (size_t k = i; k < j; ++k) rank[order[k]] = midrank;
        tie_sizes.push_back(j - i);
        i = j;
    }

    WilcoxonResult res;
    size_t n_zero = 0;
    double r_plus = 0.0;
    std::vector<double> nonzero_ranks;
    for (size_t k = 0; k < n; ++k) {
        if (differences[k] == 0.0) {
            ++n_zero;
        } else {
            nonzero_ranks.push_back(rank[k]);
            if (differences[k] > 0.0) r_plus += rank[k];
        }
    }
    res.w = r_plus;
    if (nonzero_ranks.empty()) {
        res.degenerate = true;
        res.p_value = 1.0;
        return res;
    }

    // Normal approximation pieces (also supply the effect size for the
    // exact branch).
    double N = (double)n, z0 = (double)n_zero;
    double mn = (N * (N + 1.0) - z0 * (z0 + 1.0)) / 4.0;
    double var = (N * (N + 1.0) * (2.0 * N + 1.0) - z0 * (z0 + 1.0) * (2.0 * z0 + 1.0)) / 24.0;
    for (size_t t : tie_sizes) var -= ((double)t * t * t - (double)t) / 48.0;
    double se = std::sqrt(std::max(var, 0.0));
    double z_stat = 0.0;
    if (se > 0.0) {
        double cc = 0.5 * ((r_plus > mn) - (r_plus < mn)); // continuity correction
        z_stat = (r_plus - mn - cc) / se;
    }
    res.effect_r = std::min(1.0, std::fabs(z_stat) / std::sqrt(N));

    if (n <= 25) {
        // Exact null distribution via subset-sum DP over doubled ranks
        // (midranks are half-integers). p = P(W+ <= observed).
        std::vector<long> dranks;
        long total = 0;
        for (double r : nonzero_ranks) {
            long d = (long)std::llround(2.0 * r);
            dranks.push_back(d);
            total += d;
        }
        std::vector<double> count((size_t)total + 1, 0.0);
        count[0] = 1.0;
        for (long d : dranks)
            for (long s = total; s >= d; --s) count[(size_t)s] += count[(size_t)(s - d)];
        long w2 = (long)std::llround(2.0 * r_plus);
        double below = 0.0;
        for (long s = 0; s <= std::min(w2, total); ++s) below += count[(size_t)s];
        res.p_value = below / std::pow(2.0, (double)dranks.size());
        res.exact = true;
    } else {
        res.p_value = se > 0.0 ? normal_cdf(z_stat) : 1.0;
    }
    return res;
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& values,
                                       BootstrapStatistic statistic, int n_boot, uint64_t seed) {
    if (values.empty()) throw ContractError("bootstrap_ci: empty input");
    std::mt19937_64 rng(seed);
    std::vector<double> stats;
    stats.reserve((size_t)n_boot);
    std::vector<double> sample(values.size());
    for (int b = 0; b < n_boot; ++b) {
        for (auto& s : sample) s = values[(size_t)(rng() % values.size())];
        stats.push_back(statistic == BootstrapStatistic::mean ? vec_mean(sample)
                                                              : vec_median(sample));
    }
    std::sort(stats.begin(), stats.end());
    return {percentile(stats, 0.025), percentile(stats, 0.975)};
}

DeltaRsaStats delta_rsa_stats(const std::vector<double>& per_entry_pos_mean,
                              const std::vector<double>& per_entry_neg_mean, int n_boot,
                              uint64_t seed) {
    if (per_entry_pos_mean.size() != per_entry_neg_mean.size() || per_entry_pos_mean.empty())
        throw ContractError("delta_rsa_stats: aligned nonempty vectors required");
    DeltaRsaStats s;
    s.per_entry_pos_mean = per_entry_pos_mean;
    s.per_entry_neg_mean = per_entry_neg_mean;
    std::vector<double> diffs(per_entry_pos_mean.size());
    for (size_t i = 0; i < diffs.size(); ++i)
        diffs[i] = per_entry_pos_mean[i] - per_entry_neg_mean[i];
    s.diff_mean = vec_mean(diffs);
    s.diff_median = vec_median(diffs);
    auto w = wilcoxon_signed_rank(diffs);
    s.wilcoxon_w = w.w;
    s.p_value = w.p_value;
    s.effect_r = w.effect_r;
    s.ci_mean = bootstrap_ci(diffs, BootstrapStatistic::mean, n_boot, seed);
    s.ci_median = bootstrap_ci(diffs, BootstrapStatistic::median, n_boot, seed + 1);
    return s;
}

ComplexRecallPoint complex_recall_point(const std::vector<double>& p, const std::vector<int>& y,
                                        const std::vector<int>& mask, double threshold) {
    size_t real = 0, pos = 0, tp = 0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (!mask[i]) continue;
        ++real;
        if (y[i]) {
            ++pos;
            if (p[i] >= threshold) ++tp;
        }
    }
    if (real == 0) throw ContractError("complex_recall_point: no real residues");
    ComplexRecallPoint pt;
    pt.interface_ratio = (double)pos / (double)real;
    pt.recall = pos ? (double)tp / (double)pos : 0.0;
    return pt;
}

std::vector<RecallBin> recall_vs_interface_ratio(const std::vector<ComplexRecallPoint>& points,
                                                 double bin_width) {
    size_t n_bins = (size_t)std::ceil(1.0 / bin_width);
    std::vector<RecallBin> bins(n_bins);
    for (size_t b = 0; b < n_bins; ++b) {
        bins[b].ratio_lo = (double)b * bin_width;
        bins[b].ratio_hi = (double)(b + 1) * bin_width;
    }
    for (const auto& pt : points) {
        size_t b = std::min(n_bins - 1, (size_t)(pt.interface_ratio / bin_width));
        bins[b].mean_recall += pt.recall;
        bins[b].count++;
    }
    for (auto& bin : bins)
        if (bin.count) bin.mean_recall /= (double)bin.count;
    return bins;
}

} // namespace geopep
