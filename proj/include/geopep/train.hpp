#pragma once

#include <map>
#include <string>
#include <vector>

#include "geopep/loss.hpp"
#include "geopep/model.hpp"

namespace geopep {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam moments, keyed by parameter tensor name.
class AdamOptimizer {
  public:
    explicit AdamOptimizer(AdamConfig config = {}) : config_(config) {}

    /// One update over every parameter tensor of the stack, consuming the
    /// accumulated gradients. Throws NumericalError on non-finite gradients.
    void step(KanStack& stack, const std::string& instance_id = "");

    long step_count() const { return step_; }
    const AdamConfig& config() const { return config_; }

  private:
    AdamConfig config_;
    long step_ = 0;
    std::map<std::string, std::vector<double>> first_moment_;
    std::map<std::string, std::vector<double>> second_moment_;
};

enum class LossMode { composite, ce_only };

struct TrainConfig {
    int epochs = 200;
    int batch_size = 1; // gradient accumulation over this many instances
    uint64_t seed = 0;
    double lr = 1e-3;
    double lambda = 0.5;
    ModelMode mode = ModelMode::kan;
    LossMode loss_mode = LossMode::composite;
    int patience = 20; // early stopping on validation AUC, <= 0 disables
};

/// One training instance: labels plus encoded features.
struct TrainInstance {
    std::string id;
    const LabeledPair* pair = nullptr;
    FeatureMatrix features;
};

struct EpochLog {
    int epoch = 0;
    size_t instances = 0;
    double mean_ce = 0.0;
    double mean_struct = 0.0;
    double mean_total = 0.0;
    double val_auc = 0.0;
};

struct TrainResult {
    KanStack model;
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_val_auc = 0.0;
    std::string best_checkpoint; // serialized snapshot at the best epoch
    bool diverged = false;
    std::string divergence_info;
};

std::string training_log_csv(const std::vector<EpochLog>& log);

/// Validation AUC pooled over all real residues of the given instances.
double validation_auc(const KanStack& stack, const std::vector<TrainInstance>& instances);

/// Deterministic per-complex training loop: seeded shuffles, composite loss,
/// Adam updates, best-by-validation-AUC checkpointing.
TrainResult train_model(const std::vector<TrainInstance>& train_set,
                        const std::vector<TrainInstance>& val_set, const ModelConfig& model_config,
                        const TrainConfig& config);

struct GradientCheckEntry {
    std::string tensor;
    double max_rel_error = 0.0;
};

struct GradientCheckReport {
    std::vector<GradientCheckEntry> entries;
    double max_rel_error = 0.0;
    bool passed = false;
};

/// End-to-end analytic parameter gradients (through the composite loss)
/// against central finite differences. Relative error uses an absolute floor
/// of 1e-12.
GradientCheckReport gradient_check(KanStack& stack, const TrainInstance& instance,
                                   const DistanceField* field, double lambda,
                                   double tolerance = 1e-5, double fd_step = 1e-5);

} // namespace geopep
