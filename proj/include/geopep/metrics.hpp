#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geopep/geometry.hpp"
#include "geopep/loss.hpp"
#include "geopep/structio.hpp"

namespace geopep {

constexpr double kDefaultThreshold = 0.8;

struct ConfusionCounts {
    size_t tp = 0, fp = 0, fn = 0, tn = 0;
    size_t total() const { return tp + fp + fn + tn; }
};

struct ThresholdMetrics {
    ConfusionCounts counts;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
};

ThresholdMetrics confusion_at_threshold(const std::vector<double>& p, const std::vector<int>& y,
                                        const std::vector<int>& mask,
                                        double threshold = kDefaultThreshold);

struct CurvePoints {
    std::vector<double> thresholds; // descending
    std::vector<double> xs, ys;
    double area = 0.0;
};

/// ROC sweep over unique scores; AUC from integer win/tie pair counts
/// (ties count 0.5), identical arithmetic to the pairwise definition.
CurvePoints roc_curve(const std::vector<double>& p, const std::vector<int>& y,
                      const std::vector<int>& mask);

/// Precision at each recall breakpoint, trapezoidal area over (recall,
/// precision) with right-continuous precision.
CurvePoints pr_curve(const std::vector<double>& p, const std::vector<int>& y,
                     const std::vector<int>& mask);

/// True positive volume ratio V_TP / V_pred over residue mass centers.
/// nullopt when V_pred is degenerate, except 1.0 when both sets are equal.
std::optional<double> tpvr(const std::vector<Vec3>& pred_points,
                           const std::vector<Vec3>& tp_points);

enum class DistanceLossMode { raw_probabilities, thresholded };

/// Per-complex mean 3-D distance loss at inference. Returns 0 when the
/// instance has no binding residues or no mass on negatives.
double distance_loss_eval(const std::vector<double>& p, const std::vector<int>& y,
                          const std::vector<std::vector<Vec3>>& residue_atoms,
                          const std::vector<int>& mask,
                          double threshold = kDefaultThreshold,
                          DistanceLossMode mode = DistanceLossMode::thresholded);

/// Theoretical maximum SASA (Å²) for RSA normalization; falls back to a
/// generic value for unknown residue types.
double max_sasa(const std::string& resname, bool* known = nullptr);

struct DeltaRsaResult {
    std::vector<double> delta_rsa; // per protein residue, bound minus unbound
    std::vector<double> rsa_bound;
    std::vector<double> rsa_unbound;
    size_t unknown_residues = 0; // count that used the generic max-SASA
};

/// Per-residue RSA change of the protein chain upon removing the peptide
/// chain. Negative values mean burial on binding.
DeltaRsaResult delta_rsa(const Complex& complex, char peptide_chain, char protein_chain,
                         double probe = 1.4, int n_points = 960);

struct WilcoxonResult {
    double w = 0.0;        // sum of ranks of positive differences (Pratt)
    double p_value = 1.0;
    double effect_r = 0.0; // |z| / sqrt(n)
    bool exact = false;
    bool degenerate = false; // all differences zero
};

/// One-sided (negative-shift) Wilcoxon signed-rank test with Pratt zero
/// handling. Exact subset-sum enumeration for n <= 25, tie/zero-corrected
/// normal approximation with 0.5 continuity correction above.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& differences);

enum class BootstrapStatistic { mean, median };

std::pair<double, double> bootstrap_ci(const std::vector<double>& values,
                                       BootstrapStatistic statistic, int n_boot = 10000,
                                       uint64_t seed = 0);

struct DeltaRsaStats {
    std::vector<double> per_entry_pos_mean;
    std::vector<double> per_entry_neg_mean;
    double diff_mean = 0.0;
    double diff_median = 0.0;
    double wilcoxon_w = 0.0;
    double p_value = 1.0;
    double effect_r = 0.0;
    std::pair<double, double> ci_mean{0.0, 0.0};
    std::pair<double, double> ci_median{0.0, 0.0};
};

/// Aggregate per-complex (positive mean, negative mean) ΔRSA pairs into the
/// paired-difference statistics.
DeltaRsaStats delta_rsa_stats(const std::vector<double>& per_entry_pos_mean,
                              const std::vector<double>& per_entry_neg_mean,
                              int n_boot = 10000, uint64_t seed = 0);

struct RecallBin {
    double ratio_lo = 0.0, ratio_hi = 0.0;
    double mean_recall = 0.0;
    size_t count = 0;
};

struct ComplexRecallPoint {
    double interface_ratio = 0.0;
    double recall = 0.0;
};

ComplexRecallPoint complex_recall_point(const std::vector<double>& p, const std::vector<int>& y,
                                        const std::vector<int>& mask,
                                        double threshold = kDefaultThreshold);

/// Equal-width 0.05 bins of interface ratio with per-bin mean recall.
std::vector<RecallBin> recall_vs_interface_ratio(const std::vector<ComplexRecallPoint>& points,
                                                 double bin_width = 0.05);

} // namespace geopep
