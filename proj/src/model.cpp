#include "geopep/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace geopep {

namespace {
std::atomic<uint64_t> next_layer_id{1};
}

SplineGrid SplineGrid::make(double lo, double hi, int grid_size, int degree) {
    if (!(hi > lo)) throw ContractError("SplineGrid: hi must exceed lo");
    if (grid_size < 1 || degree < 0) throw ContractError("SplineGrid: bad grid_size/degree");
    SplineGrid g;
    g.lo = lo;
    g.hi = hi;
    g.grid_size = grid_size;
    g.degree = degree;
    double h = (hi - lo) / grid_size;
    g.knots.resize((size_t)(grid_size + 2 * degree + 1));
    for (int i = 0; i < (int)g.knots.size(); ++i) g.knots[(size_t)i] = lo + (i - degree) * h;
    return g;
}

namespace {

// Knot interval index j with knots[j] <= x < knots[j+1], restricted to the
// in-range spans [degree, degree + grid_size - 1]. x must be pre-clamped.
int span_of(double x, const SplineGrid& g) {
    double h = (g.hi - g.lo) / g.grid_size;
    int cell = (int)std::floor((x - g.lo) / h);
    cell = std::clamp(cell, 0, g.grid_size - 1);
    return g.degree + cell;
}

// NURBS-book local basis algorithm: returns N[r] = B_{span-deg+r, deg}(x).
void local_basis(double x, int span, int deg, const std::vector<double>& t,
                 std::vector<double>& N) {
    N.assign((size_t)deg + 1, 0.0);
    N[0] = 1.0;
    std::vector<double> left((size_t)deg + 1), right((size_t)deg + 1);
    for (int d = 1; d <= deg; ++d) {
        left[(size_t)d] = x - t[(size_t)(span + 1 - d)];
        right[(size_t)d] = t[(size_t)(span + d)] - x;
        double saved = 0.0;
        for (int r = 0; r < d; ++r) {
            double temp = N[(size_t)r] / (right[(size_t)(r + 1)] + left[(size_t)(d - r)]);
            N[(size_t)r] = saved + right[(size_t)(r + 1)] * temp;
            saved = left[(size_t)(d - r)] * temp;
        }
        N[(size_t)d] = saved;
    }
}

} // namespace

std::vector<double> bspline_basis(double x, const SplineGrid& grid) {
    std::vector<double> out((size_t)grid.n_basis(), 0.0);
    if (std::isnan(x)) throw ContractError("bspline_basis: NaN input");
    double xc = std::clamp(x, grid.lo, grid.hi);
    int span = span_of(xc, grid);
    std::vector<double> N;
    local_basis(xc, span, grid.degree, grid.knots, N);
    for (int r = 0; r <= grid.degree; ++r) {
        int idx = span - grid.degree + r;
        if (idx >= 0 && idx < grid.n_basis()) out[(size_t)idx] = N[(size_t)r];
    }
    return out;
}

void bspline_basis_and_deriv(double x, const SplineGrid& grid, std::vector<double>& basis,
                             std::vector<double>& deriv) {
    int nb = grid.n_basis();
    basis.assign((size_t)nb, 0.0);
    deriv.assign((size_t)nb, 0.0);
    bool clamped = x < grid.lo || x > grid.hi;
    double xc = std::clamp(x, grid.lo, grid.hi);
    int span = span_of(xc, grid);
    int k = grid.degree;
    const auto& t = grid.knots;

    std::vector<double> N;
    local_basis(xc, span, k, t, N);
    for (int r = 0; r <= k; ++r) {
        int idx = span - k + r;
        if (idx >= 0 && idx < nb) basis[(size_t)idx] = N[(size_t)r];
    }
    if (clamped || k == 0) return; // flat outside the range

    // Degree k-1 bases at the same span: M[r] = B_{span-k+1+r, k-1}.
    std::vector<double> M;
    local_basis(xc, span, k - 1, t, M);
    auto lower = [&](int i) -> double {
        int r = i - (span - k + 1);
        return (r >= 0 && r <= k - 1) ? M[(size_t)r] : 0.0;
    };
    for (int r = 0; r <= k; ++r) {
        int i = span - k + r;
        if (i < 0 || i >= nb) continue;
        double a = t[(size_t)(i + k)] - t[(size_t)i];
        double b = t[(size_t)(i + k + 1)] - t[(size_t)(i + 1)];
        double d = 0.0;
        if (a > 0) d += lower(i) / a;
        if (b > 0) d -= lower(i + 1) / b;
        deriv[(size_t)i] = k * d;
    }
}

// ---------------------------------------------------------------- KanLayer

KanLayer::KanLayer(int in_dim, int out_dim, SplineGrid grid, bool use_base)
    : in_dim_(in_dim), out_dim_(out_dim), grid_(std::move(grid)), use_base_(use_base),
      id_(next_layer_id.fetch_add(1)) {
    if (in_dim < 1 || out_dim < 1) throw ContractError("KanLayer: bad dimensions");
    size_t nb = (size_t)grid_.n_basis();
    spline_coeffs.assign((size_t)out_dim * (size_t)in_dim * nb, 0.0);
    base_weights.assign((size_t)out_dim * (size_t)in_dim, 0.0);
    spline_grads.assign(spline_coeffs.size(), 0.0);
    base_grads.assign(base_weights.size(), 0.0);
}

std::vector<double> KanLayer::forward(const std::vector<double>& input, KanTape& tape) const {
    if ((int)input.size() != in_dim_)
        throw ContractError("KanLayer::forward: expected input of size " + std::to_string(in_dim_) +
                            ", got " + std::to_string(input.size()));
    const int nb = grid_.n_basis();
    const int k = grid_.degree;
    tape.layer_id = id_;
    tape.input = input;
    tape.basis.assign((size_t)in_dim_ * (size_t)nb, 0.0);
    tape.support_begin.assign((size_t)in_dim_, 0);

    std::vector<double> N;
    std::vector<double> out((size_t)out_dim_, 0.0);
    for (int i = 0; i < in_dim_; ++i) {
        double xc = std::clamp(input[(size_t)i], grid_.lo, grid_.hi);
        int span = span_of(xc, grid_);
        local_basis(xc, span, k, grid_.knots, N);
        int begin = span - k;
        tape.support_begin[(size_t)i] = begin;
        for (int r = 0; r <= k; ++r)
            if (begin + r >= 0 && begin + r < nb)
                tape.basis[(size_t)i * (size_t)nb + (size_t)(begin + r)] = N[(size_t)r];

        double s = use_base_ ? silu(input[(size_t)i]) : 0.0;
        for (int o = 0; o < out_dim_; ++o) {
            const double* coeff = &spline_coeffs[((size_t)o * in_dim_ + i) * (size_t)nb];
            double acc = use_base_ ? base_weights[(size_t)o * in_dim_ + (size_t)i] * s : 0.0;
            for (int r = 0; r <= k; ++r) {
                int b = begin + r;
                if (b >= 0 && b < nb) acc += coeff[b] * N[(size_t)r];
            }
            out[(size_t)o] += acc;
        }
    }
    return out;
}

std::vector<double> KanLayer::backward(const KanTape& tape, const std::vector<double>& upstream) {
    if (tape.layer_id != id_) throw ContractError("KanLayer::backward: tape from another layer");
    if ((int)upstream.size() != out_dim_)
        throw ContractError("KanLayer::backward: upstream gradient size mismatch");
    const int nb = grid_.n_basis();
    const int k = grid_.degree;
    std::vector<double> input_grad((size_t)in_dim_, 0.0);
    std::vector<double> B, dB;

    for (int i = 0; i < in_dim_; ++i) {
        double x = tape.input[(size_t)i];
        bspline_basis_and_deriv(x, grid_, B, dB);
        double s = 0.0, ds = 0.0;
        if (use_base_) { s = silu(x); ds = silu_deriv(x); }
        int begin = tape.support_begin[(size_t)i];

        for (int o = 0; o < out_dim_; ++o) {
            double g = upstream[(size_t)o];
            if (g == 0.0) continue;
            size_t edge = (size_t)o * in_dim_ + (size_t)i;
            const double* coeff = &spline_coeffs[edge * (size_t)nb];
            double* cgrad = &spline_grads[edge * (size_t)nb];
            double dx = use_base_ ? base_weights[edge] * ds : 0.0;
            for (int r = 0; r <= k; ++r) {
                int b = begin + r;
                if (b < 0 || b >= nb) continue;
                cgrad[b] += g * tape.basis[(size_t)i * (size_t)nb + (size_t)b];
                dx += coeff[b] * dB[(size_t)b];
            }
            if (use_base_) base_grads[edge] += g * s;
            input_grad[(size_t)i] += g * dx;
        }
    }
    return input_grad;
}

void KanLayer::zero_grads() {
    std::fill(spline_grads.begin(), spline_grads.end(), 0.0);
    std::fill(base_grads.begin(), base_grads.end(), 0.0);
}

size_t KanLayer::param_count() const {
    return spline_coeffs.size() + (use_base_ ? base_weights.size() : 0);
}

// ---------------------------------------------------------------- MlpLayer

MlpLayer::MlpLayer(int in_dim, int out_dim, bool activation)
    : in_dim_(in_dim), out_dim_(out_dim), activation_(activation) {
    weights.assign((size_t)out_dim * (size_t)in_dim, 0.0);
    bias.assign((size_t)out_dim, 0.0);
    weight_grads.assign(weights.size(), 0.0);
    bias_grads.assign(bias.size(), 0.0);
}

std::vector<double> MlpLayer::forward(const std::vector<double>& input,
                                      std::vector<double>& pre_act,
                                      std::vector<double>& saved_input) const {
    if ((int)input.size() != in_dim_) throw ContractError("MlpLayer::forward: input size mismatch");
    saved_input = input;
    pre_act.assign((size_t)out_dim_, 0.0);
    for (int o = 0; o < out_dim_; ++o) {
        double acc = bias[(size_t)o];
        const double* w = &weights[(size_t)o * in_dim_];
        for (int i = 0; i < in_dim_; ++i) acc += w[i] * input[(size_t)i];
        pre_act[(size_t)o] = acc;
    }
    std::vector<double> out = pre_act;
    if (activation_)
        for (auto& v : out) v = std::tanh(v);
    return out;
}

std::vector<double> MlpLayer::backward(const std::vector<double>& saved_input,
                                       const std::vector<double>& pre_act,
                                       const std::vector<double>& upstream) {
    if ((int)upstream.size() != out_dim_)
        throw ContractError("MlpLayer::backward: upstream gradient size mismatch");
    std::vector<double> input_grad((size_t)in_dim_, 0.0);
    for (int o = 0; o < out_dim_; ++o) {
        double g = upstream[(size_t)o];
        if (activation_) {
            double th = std::tanh(pre_act[(size_t)o]);
            g *= 1.0 - th * th;
        }
        bias_grads[(size_t)o] += g;
        double* wg = &weight_grads[(size_t)o * in_dim_];
        const double* w = &weights[(size_t)o * in_dim_];
        for (int i = 0; i < in_dim_; ++i) {
            wg[i] += g * saved_input[(size_t)i];
            input_grad[(size_t)i] += g * w[i];
        }
    }
    return input_grad;
}

void MlpLayer::zero_grads() {
    std::fill(weight_grads.begin(), weight_grads.end(), 0.0);
    std::fill(bias_grads.begin(), bias_grads.end(), 0.0);
}

// -------------------------------------------------------------- Standardizer

void Standardizer::fit(const std::vector<std::vector<double>>& samples) {
    if (samples.empty()) throw ContractError("Standardizer::fit: no samples");
    size_t dim = samples[0].size();
    mean.assign(dim, 0.0);
    stddev.assign(dim, 0.0);
    for (const auto& s : samples)
        for (size_t d = 0; d < dim; ++d) mean[d] += s[d];
    for (auto& m : mean) m /= (double)samples.size();
    for (const auto& s : samples)
        for (size_t d = 0; d < dim; ++d) {
            double c = s[d] - mean[d];
            stddev[d] += c * c;
        }
    for (auto& v : stddev) {
        v = std::sqrt(v / (double)samples.size());
        if (v < 1e-8) v = 1.0; // constant feature: pass through centered
    }
}

std::vector<double> Standardizer::apply(const std::vector<double>& x) const {
    if (mean.empty()) return x; // identity until fitted
    if (x.size() != mean.size()) throw ContractError("Standardizer: dimension mismatch");
    std::vector<double> z(x.size());
    for (size_t d = 0; d < x.size(); ++d)
        z[d] = std::clamp((x[d] - mean[d]) / stddev[d], -3.0, 3.0) / 3.0;
    return z;
}

// ------------------------------------------------------------------ KanStack

KanStack::KanStack(const ModelConfig& config) : config_(config) {
    if (config.hidden.empty()) throw ContractError("KanStack: need at least one hidden layer");
    int in = config.input_dim();
    if (config.mode == ModelMode::kan) {
        for (int h : config.hidden) {
            kan_layers.emplace_back(in, h,
                                    SplineGrid::make(-1.0, 1.0, config.grid_size,
                                                     config.spline_degree),
                                    config.use_base);
            in = h;
        }
    } else {
        int width = config.mlp_hidden;
        if (width <= 0) {
            ModelConfig kc = config;
            kc.mode = ModelMode::kan;
            kc.mlp_hidden = 0;
            width = matched_mlp_hidden(kc);
        }
        config_.mlp_hidden = width;
        for (size_t l = 0; l < config.hidden.size(); ++l) {
            mlp_layers.emplace_back(in, width, true);
            in = width;
        }
    }
    head_weights.assign((size_t)in, 0.0);
    head_bias.assign(1, 0.0);
    head_weight_grads.assign(head_weights.size(), 0.0);
    head_bias_grads.assign(1, 0.0);
}

double KanStack::logit_single(const std::vector<double>& std_input, std::vector<KanTape>* tapes,
                              std::vector<std::vector<double>>* mlp_pre,
                              std::vector<std::vector<double>>* mlp_in,
                              std::vector<double>* last_hidden) const {
    std::vector<double> h = std_input;
    if (config_.mode == ModelMode::kan) {
        for (size_t l = 0; l < kan_layers.size(); ++l) {
            KanTape local;
            KanTape& tape = tapes ? (*tapes)[l] : local;
            h = kan_layers[l].forward(h, tape);
        }
    } else {
        for (size_t l = 0; l < mlp_layers.size(); ++l) {
            std::vector<double> pre_local, in_local;
            std::vector<double>& pre = mlp_pre ? (*mlp_pre)[l] : pre_local;
            std::vector<double>& saved = mlp_in ? (*mlp_in)[l] : in_local;
            h = mlp_layers[l].forward(h, pre, saved);
        }
    }
    if (h.size() != head_weights.size()) throw ContractError("KanStack: head dimension mismatch");
    double logit = head_bias[0];
    for (size_t i = 0; i < h.size(); ++i) logit += head_weights[i] * h[i];
    if (last_hidden) *last_hidden = std::move(h);
    return logit;
}

double KanStack::forward_single_raw(const std::vector<double>& input) const {
    double logit = logit_single(input, nullptr, nullptr, nullptr, nullptr);
    return 1.0 / (1.0 + std::exp(-logit));
}

std::vector<double> KanStack::forward(const FeatureMatrix& features,
                                      const std::vector<int>& mask) const {
    if (features.rows.size() != mask.size())
        throw ContractError("KanStack::forward: features/mask size mismatch");
    std::vector<double> probs(mask.size(), 0.0);
    for (size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        std::vector<double> input = features.rows[i];
        input.insert(input.end(), features.global_row.begin(), features.global_row.end());
        if ((int)input.size() != config_.input_dim())
            throw ContractError("KanStack::forward: feature dimension mismatch");
        probs[i] = forward_single_raw(standardizer.apply(input));
    }
    return probs;
}

std::vector<double> KanStack::forward_backward(const FeatureMatrix& features,
                                               const std::vector<int>& mask,
                                               const std::vector<double>& dloss_dprob) {
    if (features.rows.size() != mask.size() || dloss_dprob.size() != mask.size())
        throw ContractError("KanStack::forward_backward: size mismatch");
    std::vector<double> probs(mask.size(), 0.0);
    size_t n_layers = config_.mode == ModelMode::kan ? kan_layers.size() : mlp_layers.size();
    std::vector<KanTape> tapes(n_layers);
    std::vector<std::vector<double>> mlp_pre(n_layers), mlp_in(n_layers);
    std::vector<double> hidden;

    for (size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        std::vector<double> input = features.rows[i];
        input.insert(input.end(), features.global_row.begin(), features.global_row.end());
        std::vector<double> z = standardizer.apply(input);

        double logit = logit_single(z, &tapes, &mlp_pre, &mlp_in, &hidden);
        double p = 1.0 / (1.0 + std::exp(-logit));
        probs[i] = p;

        double glogit = dloss_dprob[i] * p * (1.0 - p);
        if (glogit == 0.0) continue;

        std::vector<double> gh(hidden.size());
        for (size_t j = 0; j < hidden.size(); ++j) {
            head_weight_grads[j] += glogit * hidden[j];
            gh[j] = glogit * head_weights[j];
        }
        head_bias_grads[0] += glogit;

        if (config_.mode == ModelMode::kan) {
            for (size_t l = kan_layers.size(); l-- > 0;)
                gh = kan_layers[l].backward(tapes[l], gh);
        } else {
            for (size_t l = mlp_layers.size(); l-- > 0;)
                gh = mlp_layers[l].backward(mlp_in[l], mlp_pre[l], gh);
        }
    }
    return probs;
}

void KanStack::zero_grads() {
    for (auto& l : kan_layers) l.zero_grads();
    for (auto& l : mlp_layers) l.zero_grads();
    std::fill(head_weight_grads.begin(), head_weight_grads.end(), 0.0);
    std::fill(head_bias_grads.begin(), head_bias_grads.end(), 0.0);
}

size_t KanStack::param_count() const {
    size_t n = head_weights.size() + head_bias.size();
    for (const auto& l : kan_layers) n += l.param_count();
    for (const auto& l : mlp_layers) n += l.param_count();
    return n;
}

void KanStack::for_each_param(const std::function<void(const std::string&, std::vector<double>&,
                                                       std::vector<double>&)>& fn) {
    for (size_t l = 0; l < kan_layers.size(); ++l) {
        auto& layer = kan_layers[l];
        fn("kan" + std::to_string(l) + ".spline", layer.spline_coeffs, layer.spline_grads);
        if (layer.use_base())
            fn("kan" + std::to_string(l) + ".base", layer.base_weights, layer.base_grads);
    }
    for (size_t l = 0; l < mlp_layers.size(); ++l) {
        auto& layer = mlp_layers[l];
        fn("mlp" + std::to_string(l) + ".weight", layer.weights, layer.weight_grads);
        fn("mlp" + std::to_string(l) + ".bias", layer.bias, layer.bias_grads);
    }
    fn("head.weight", head_weights, head_weight_grads);
    fn("head.bias", head_bias, head_bias_grads);
}

void init_params(KanStack& stack, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& layer : stack.kan_layers) {
        double coeff_sigma = 0.1 / std::sqrt((double)layer.grid().n_basis());
        for (auto& c : layer.spline_coeffs) c = coeff_sigma * gauss(rng);
        double base_sigma = 1.0 / std::sqrt((double)layer.in_dim());
        for (auto& w : layer.base_weights) w = base_sigma * gauss(rng);
    }
    for (auto& layer : stack.mlp_layers) {
        double sigma = 1.0 / std::sqrt((double)layer.in_dim());
        for (auto& w : layer.weights) w = sigma * gauss(rng);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
    }
    double head_sigma = 1.0 / std::sqrt((double)stack.head_weights.size());
    for (auto& w : stack.head_weights) w = head_sigma * gauss(rng);
    stack.head_bias[0] = 0.0;
}

int matched_mlp_hidden(const ModelConfig& kan_config) {
    ModelConfig kc = kan_config;
    kc.mode = ModelMode::kan;
    KanStack reference(kc);
    long target = (long)reference.param_count();

    int layers = (int)kan_config.hidden.size();
    int in = kan_config.input_dim();
    int best_h = 1;
    long best_err = std::numeric_limits<long>::max();
    for (int h = 1; h <= 8192; ++h) {
        long count = (long)(in + 1) * h + (long)(layers - 1) * (h + 1) * h + (h + 1);
        long err = std::labs(count - target);
        if (err < best_err) { best_err = err; best_h = h; }
        if (count > 2 * target) break;
    }
    return best_h;
}

// ------------------------------------------------------------- checkpoints

namespace {

void write_tensor(std::ostringstream& out, const std::string& name,
                  const std::vector<double>& data) {
    out << "tensor " << name << " " << data.size() << "\n";
    char buf[40];
    for (double v : data) {
        std::snprintf(buf, sizeof buf, "%a\n", v);
        out << buf;
    }
}

} // namespace

std::string save_checkpoint(const KanStack& stack, uint64_t seed) {
    std::ostringstream out;
    const auto& c = stack.config();
    out << "geopep-checkpoint v1\n";
    out << "mode " << (c.mode == ModelMode::kan ? "kan" : "mlp") << "\n";
    out << "feature_dim " << c.feature_dim << "\n";
    out << "hidden";
    for (int h : c.hidden) out << " " << h;
    out << "\n";
    out << "degree " << c.spline_degree << "\n";
    out << "grid_size " << c.grid_size << "\n";
    out << "use_base " << (c.use_base ? 1 : 0) << "\n";
    out << "mlp_hidden " << c.mlp_hidden << "\n";
    out << "seed " << seed << "\n";

    write_tensor(out, "standardizer.mean", stack.standardizer.mean);
    write_tensor(out, "standardizer.std", stack.standardizer.stddev);
    const_cast<KanStack&>(stack).for_each_param(
        [&](const std::string& name, std::vector<double>& p, std::vector<double>&) {
            write_tensor(out, name, p);
        });
    return out.str();
}

KanStack load_checkpoint(const std::string& text, uint64_t* seed_out) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "geopep-checkpoint v1")
        throw ParseError("checkpoint: bad magic line");

    ModelConfig c;
    uint64_t seed = 0;
    std::string tag;
    while (in >> tag) {
        if (tag == "mode") {
            std::string m;
            in >> m;
            c.mode = m == "kan" ? ModelMode::kan : ModelMode::mlp;
        } else if (tag == "feature_dim") {
            in >> c.feature_dim;
        } else if (tag == "hidden") {
            c.hidden.clear();
            std::getline(in, line);
            std::istringstream hs(line);
            int h;
            while (hs >> h) c.hidden.push_back(h);
        } else if (tag == "degree") {
            in >> c.spline_degree;
        } else if (tag == "grid_size") {
            in >> c.grid_size;
        } else if (tag == "use_base") {
            int b;
            in >> b;
            c.use_base = b != 0;
        } else if (tag == "mlp_hidden") {
            in >> c.mlp_hidden;
        } else if (tag == "seed") {
            in >> seed;
        } else if (tag == "tensor") {
            break;
        } else {
            throw ParseError("checkpoint: unknown header tag '" + tag + "'");
        }
    }
    if (tag != "tensor") throw ParseError("checkpoint: missing tensors");

    KanStack stack(c);
    std::map<std::string, std::vector<double>*> slots;
    slots["standardizer.mean"] = &stack.standardizer.mean;
    slots["standardizer.std"] = &stack.standardizer.stddev;
    stack.for_each_param([&](const std::string& name, std::vector<double>& p,
                             std::vector<double>&) { slots[name] = &p; });

    // The first "tensor" token has already been consumed.
    bool pending = true;
    while (pending || (in >> tag && tag == "tensor")) {
        pending = false;
        std::string name;
        size_t count;
        if (!(in >> name >> count)) throw ParseError("checkpoint: truncated tensor header");
        auto it = slots.find(name);
        if (it == slots.end()) throw ParseError("checkpoint: unknown tensor '" + name + "'");
        std::vector<double>& dst = *it->second;
        dst.resize(count);
        for (size_t i = 0; i < count; ++i) {
            std::string tok;
            if (!(in >> tok)) throw ParseError("checkpoint: truncated tensor '" + name + "'");
            dst[i] = std::strtod(tok.c_str(), nullptr);
        }
    }
    if (seed_out) *seed_out = seed;
    return stack;
}

} // namespace geopep
