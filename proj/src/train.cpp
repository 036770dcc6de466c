#include "geopep/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <sstream>

#include "geopep/metrics.hpp"

namespace geopep {

void AdamOptimizer::step(KanStack& stack, const std::string& instance_id) {
    ++step_;
    double bc1 = 1.0 - std::pow(config_.beta1, (double)step_);
    double bc2 = 1.0 - std::pow(config_.beta2, (double)step_);
    stack.for_each_param([&](const std::string& name, std::vector<double>& p,
                             std::vector<double>& g) {
        auto& m = first_moment_[name];
        auto& v = second_moment_[name];
        if (m.size() != p.size()) m.assign(p.size(), 0.0);
        if (v.size() != p.size()) v.assign(p.size(), 0.0);
        for (size_t i = 0; i < p.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw NumericalError("adam_step: non-finite gradient in tensor '" + name +
                                     "' (instance " + instance_id + ")");
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
            p[i] -= config_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config_.eps);
        }
    });
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
    std::ostringstream out;
    out << "epoch,instances,ce,struct,total,val_auc\n";
    char buf[128];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%d,%zu,%.9f,%.9f,%.9f,%.9f\n", e.epoch, e.instances,
                      e.mean_ce, e.mean_struct, e.mean_total, e.val_auc);
        out << buf;
    }
    return out.str();
}

double validation_auc(const KanStack& stack, const std::vector<TrainInstance>& instances) {
    std::vector<double> pooled_p;
    std::vector<int> pooled_y, pooled_mask;
    for (const auto& inst : instances) {
        auto probs = stack.forward(inst.features, inst.pair->mask);
        for (size_t i = 0; i < probs.size(); ++i) {
            if (!inst.pair->mask[i]) continue;
            pooled_p.push_back(probs[i]);
            pooled_y.push_back(inst.pair->labels[i]);
            pooled_mask.push_back(1);
        }
    }
    if (pooled_p.empty()) return 0.5;
    try {
        return roc_curve(pooled_p, pooled_y, pooled_mask).area;
    } catch (const ContractError&) {
        return 0.5; // single-class pool
    }
}

TrainResult train_model(const std::vector<TrainInstance>& train_set,
                        const std::vector<TrainInstance>& val_set,
                        const ModelConfig& model_config, const TrainConfig& config) {
    if (train_set.empty()) throw ContractError("train_model: empty training split");
    if (config.epochs < 1 || config.lr <= 0.0)
        throw ContractError("train_model: epochs >= 1 and lr > 0 required");

    ModelConfig mc = model_config;
    mc.mode = config.mode;
    TrainResult result;
    result.model = KanStack(mc);
    init_params(result.model, config.seed);

    // Standardizer fitted on all real-residue input rows of the training split.
    std::vector<std::vector<double>> samples;
    for (const auto& inst : train_set) {
        for (size_t i = 0; i < inst.pair->mask.size(); ++i) {
            if (!inst.pair->mask[i]) continue;
            std::vector<double> row = inst.features.rows[i];
            row.insert(row.end(), inst.features.global_row.begin(),
                       inst.features.global_row.end());
            samples.push_back(std::move(row));
        }
    }
    result.model.standardizer.fit(samples);

    // Distance fields are fixed per instance; cache them up front.
    double lambda = config.loss_mode == LossMode::composite ? config.lambda : 0.0;
    std::vector<std::optional<DistanceField>> fields(train_set.size());
    if (lambda > 0.0) {
        for (size_t i = 0; i < train_set.size(); ++i) {
            const auto& pair = *train_set[i].pair;
            bool any = false;
            for (size_t r = 0; r < pair.real_length(); ++r) any = any || pair.labels[r];
            if (any) fields[i] = distance_field(pair.residue_atoms, pair.labels, pair.mask);
        }
    }

    AdamOptimizer adam({config.lr});
    std::mt19937_64 shuffle_rng(config.seed);
    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    int epochs_since_best = 0;
    result.best_val_auc = -1.0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        for (size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng() % (i + 1)]);

        EpochLog log;
        log.epoch = epoch;
        result.model.zero_grads();
        int accumulated = 0;

        for (size_t oi = 0; oi < order.size(); ++oi) {
            size_t idx = order[oi];
            const auto& inst = train_set[idx];
            const auto& pair = *inst.pair;

            auto probs = result.model.forward(inst.features, pair.mask);
            const DistanceField* field = fields[idx] ? &*fields[idx] : nullptr;
            auto tl = total_loss(probs, pair.labels, field, lambda, pair.mask);

            if (!std::isfinite(tl.breakdown.total)) {
                result.diverged = true;
                result.divergence_info = "non-finite loss on instance " + inst.id + " at epoch " +
                                         std::to_string(epoch);
                return result;
            }
            log.mean_ce += tl.breakdown.ce;
            log.mean_struct += tl.breakdown.struct_term;
            log.mean_total += tl.breakdown.total;
            log.instances++;

            result.model.forward_backward(inst.features, pair.mask, tl.grad_p);
            if (++accumulated >= config.batch_size || oi + 1 == order.size()) {
                adam.step(result.model, inst.id);
                result.model.zero_grads();
                accumulated = 0;
            }
        }
        log.mean_ce /= (double)log.instances;
        log.mean_struct /= (double)log.instances;
        log.mean_total /= (double)log.instances;

        log.val_auc = val_set.empty() ? 0.5 : validation_auc(result.model, val_set);
        result.log.push_back(log);

        if (log.val_auc > result.best_val_auc) {
            result.best_val_auc = log.val_auc;
            result.best_epoch = epoch;
            result.best_checkpoint = save_checkpoint(result.model, config.seed);
            epochs_since_best = 0;
        } else if (config.patience > 0 && ++epochs_since_best >= config.patience) {
            break;
        }
    }
    if (result.best_checkpoint.empty())
        result.best_checkpoint = save_checkpoint(result.model, config.seed);
    return result;
}

GradientCheckReport gradient_check(KanStack& stack, const TrainInstance& instance,
                                   const DistanceField* field, double lambda, double tolerance,
                                   double fd_step) {
    const auto& pair = *instance.pair;
    auto loss_of = [&]() {
        auto probs = stack.forward(instance.features, pair.mask);
        return total_loss(probs, pair.labels, field, lambda, pair.mask).breakdown.total;
    };

    stack.zero_grads();
    auto probs = stack.forward(instance.features, pair.mask);
    auto tl = total_loss(probs, pair.labels, field, lambda, pair.mask);
    stack.forward_backward(instance.features, pair.mask, tl.grad_p);

    std::vector<std::pair<std::string, std::vector<double>>> analytic;
    stack.for_each_param([&](const std::string& name, std::vector<double>&,
                             std::vector<double>& g) { analytic.emplace_back(name, g); });

    GradientCheckReport report;
    size_t tensor_idx = 0;
    stack.for_each_param([&](const std::string& name, std::vector<double>& p,
                             std::vector<double>&) {
        const auto& ag = analytic[tensor_idx++].second;
        double max_abs_diff = 0.0, scale = 0.0;
        for (size_t i = 0; i < p.size(); ++i) {
            double saved = p[i];
            p[i] = saved + fd_step;
            double lp = loss_of();
            p[i] = saved - fd_step;
            double lm = loss_of();
            p[i] = saved;
            double fd = (lp - lm) / (2.0 * fd_step);
            max_abs_diff = std::max(max_abs_diff, std::fabs(ag[i] - fd));
            scale = std::max({scale, std::fabs(ag[i]), std::fabs(fd)});
        }
        // per-tensor relative error with absolute floor 1e-12
        GradientCheckEntry entry;
        entry.tensor = name;
        entry.max_rel_error = max_abs_diff / std::max(scale, 1e-12);
        report.entries.push_back(entry);
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    });
    report.passed = report.max_rel_error < tolerance;
    return report;
}

} // namespace geopep
