#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "geopep/dataset.hpp"
#include "geopep/errors.hpp"

namespace geopep {

/// Uniform knot grid for B-spline bases of a given degree. The knot vector is
/// the uniform [lo, hi] grid extended by `degree` spacings on each side, so
/// the n_basis = grid_size + degree bases form a partition of unity on
/// [lo, hi].
struct SplineGrid {
    double lo = -1.0;
    double hi = 1.0;
    int grid_size = 8;
    int degree = 3;
    std::vector<double> knots;

    static SplineGrid make(double lo, double hi, int grid_size, int degree);

    int n_basis() const { return grid_size + degree; }
};

/// Cox-de Boor evaluation of all n_basis bases at x (clamped into [lo, hi]).
std::vector<double> bspline_basis(double x, const SplineGrid& grid);

/// Bases and their derivatives at x. Derivatives are 0 when x lies outside
/// [lo, hi] (the clamp is flat there).
void bspline_basis_and_deriv(double x, const SplineGrid& grid, std::vector<double>& basis,
                             std::vector<double>& deriv);

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double silu_deriv(double x) {
    double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

/// Forward cache for one KAN layer evaluation.
struct KanTape {
    uint64_t layer_id = 0;
    std::vector<double> input;
    std::vector<double> basis;      // in_dim * n_basis (dense)
    std::vector<int> support_begin; // first index of the degree+1 nonzero bases, per input
};

/// One KAN layer: every edge (o, i) carries base_w * silu(x_i) plus a
/// trainable B-spline expansion of x_i.
class KanLayer {
  public:
    KanLayer() = default;
    KanLayer(int in_dim, int out_dim, SplineGrid grid, bool use_base = true);

    std::vector<double> forward(const std::vector<double>& input, KanTape& tape) const;

    /// Accumulates coeff/base gradients; returns the input gradient.
    std::vector<double> backward(const KanTape& tape, const std::vector<double>& upstream);

    void zero_grads();

    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }
    const SplineGrid& grid() const { return grid_; }
    bool use_base() const { return use_base_; }
    size_t param_count() const;

    std::vector<double> spline_coeffs; // [out][in][n_basis]
    std::vector<double> base_weights;  // [out][in]
    std::vector<double> spline_grads;
    std::vector<double> base_grads;

  private:
    int in_dim_ = 0, out_dim_ = 0;
    SplineGrid grid_;
    bool use_base_ = true;
    uint64_t id_ = 0;
};

/// One MLP layer: affine map plus tanh (identity on the head).
class MlpLayer {
  public:
    MlpLayer() = default;
    MlpLayer(int in_dim, int out_dim, bool activation = true);

    std::vector<double> forward(const std::vector<double>& input, std::vector<double>& pre_act,
                                std::vector<double>& saved_input) const;
    std::vector<double> backward(const std::vector<double>& saved_input,
                                 const std::vector<double>& pre_act,
                                 const std::vector<double>& upstream);
    void zero_grads();

    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }
    bool activation() const { return activation_; }
    size_t param_count() const { return weights.size() + bias.size(); }

    std::vector<double> weights; // [out][in]
    std::vector<double> bias;    // [out]
    std::vector<double> weight_grads;
    std::vector<double> bias_grads;

  private:
    int in_dim_ = 0, out_dim_ = 0;
    bool activation_ = true;
};

enum class ModelMode { kan, mlp };

struct ModelConfig {
    ModelMode mode = ModelMode::kan;
    int feature_dim = 21;       // per-residue feature dimension D
    std::vector<int> hidden = {64, 64};
    int spline_degree = 3;
    int grid_size = 8;
    bool use_base = true;       // silu base term alongside splines
    int mlp_hidden = 0;         // 0 = auto-match KAN parameter count

    int input_dim() const { return 2 * feature_dim; } // concat(row, global_row)
};

/// Per-input-feature standardization fitted on the training split:
/// z = clamp((x - mean) / std, -3, 3) / 3, landing in the spline range.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    void fit(const std::vector<std::vector<double>>& samples);
    std::vector<double> apply(const std::vector<double>& x) const;
};

class KanStack {
  public:
    KanStack() = default;
    explicit KanStack(const ModelConfig& config);

    /// Per-residue probabilities over the padded protein; masked positions
    /// are forced to 0.
    std::vector<double> forward(const FeatureMatrix& features, const std::vector<int>& mask) const;

    /// Forward pass that also accumulates parameter gradients from
    /// dloss/dprobability (aligned with the padded protein; entries at masked
    /// positions are ignored).
    std::vector<double> forward_backward(const FeatureMatrix& features,
                                         const std::vector<int>& mask,
                                         const std::vector<double>& dloss_dprob);

    /// Probability for one already-standardized input vector (test hook).
    double forward_single_raw(const std::vector<double>& input) const;

    void zero_grads();
    size_t param_count() const;

    /// Visit every parameter tensor with its gradient buffer.
    void for_each_param(const std::function<void(const std::string&, std::vector<double>&,
                                                 std::vector<double>&)>& fn);

    const ModelConfig& config() const { return config_; }
    ModelMode mode() const { return config_.mode; }

    Standardizer standardizer;
    std::vector<KanLayer> kan_layers;
    std::vector<MlpLayer> mlp_layers;
    std::vector<double> head_weights;
    std::vector<double> head_bias; // single logit
    std::vector<double> head_weight_grads;
    std::vector<double> head_bias_grads;

  private:
    double logit_single(const std::vector<double>& std_input,
                        std::vector<KanTape>* tapes,
                        std::vector<std::vector<double>>* mlp_pre,
                        std::vector<std::vector<double>>* mlp_in,
                        std::vector<double>* last_hidden) const;

    ModelConfig config_;
};

/// Deterministic parameter initialization: spline coefficients with
/// sigma = 0.1/sqrt(n_basis), affine weights with sigma = 1/sqrt(in_dim).
void init_params(KanStack& stack, uint64_t seed);

/// Hidden width whose MLP parameter count best matches the KAN variant.
int matched_mlp_hidden(const ModelConfig& kan_config);

/// Checkpoint round-trips bit-exactly (doubles serialized as hexfloats).
std::string save_checkpoint(const KanStack& stack, uint64_t seed);
KanStack load_checkpoint(const std::string& text, uint64_t* seed_out = nullptr);

} // namespace geopep
