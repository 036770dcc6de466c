#include "doctest.h"

#include <random>

#include "geopep/model.hpp"

using namespace geopep;

namespace {

// Independent Cox-de Boor evaluation by direct recursion over all bases.
double cox_de_boor(int i, int k, double x, const std::vector<double>& t) {
    if (k == 0) return (t[(size_t)i] <= x && x < t[(size_t)i + 1]) ? 1.0 : 0.0;
    double left = 0.0, right = 0.0;
    double da = t[(size_t)(i + k)] - t[(size_t)i];
    double db = t[(size_t)(i + k + 1)] - t[(size_t)(i + 1)];
    if (da > 0) left = (x - t[(size_t)i]) / da * cox_de_boor(i, k - 1, x, t);
    if (db > 0) right = (t[(size_t)(i + k + 1)] - x) / db * cox_de_boor(i + 1, k - 1, x, t);
    return left + right;
}

std::vector<double> random_vec(std::mt19937_64& rng, size_t n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

} // namespace

TEST_CASE("degree 0 basis is the knot-interval indicator") {
    auto grid = SplineGrid::make(0.0, 4.0, 4, 0);
    auto b = bspline_basis(2.5, grid);
    REQUIRE(b.size() == 4);
    CHECK(b[2] == 1.0);
    CHECK(b[0] + b[1] + b[3] == 0.0);
}

TEST_CASE("partition of unity for degrees 1-3 at 1000 random points") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int degree = 1; degree <= 3; ++degree) {
        auto grid = SplineGrid::make(-1.0, 1.0, 8, degree);
        for (int i = 0; i < 1000; ++i) {
            auto b = bspline_basis(u(rng), grid);
            double sum = 0.0;
            for (double v : b) {
                CHECK(v >= 0.0);
                sum += v;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("cubic basis at an interior knot: central 2/3, neighbors 1/6") {
    auto grid = SplineGrid::make(-1.0, 1.0, 8, 3);
    double knot = grid.knots[(size_t)(3 + 4)]; // interior knot
    auto b = bspline_basis(knot, grid);
    std::vector<double> nonzero;
    for (double v : b)
        if (v > 1e-14) nonzero.push_back(v);
    REQUIRE(nonzero.size() == 3);
    CHECK(nonzero[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(nonzero[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(nonzero[2] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("basis matches the independent Cox-de Boor recursion") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-0.999, 0.999);
    for (int degree = 1; degree <= 3; ++degree) {
        auto grid = SplineGrid::make(-1.0, 1.0, 6, degree);
        for (int trial = 0; trial < 200; ++trial) {
            double x = u(rng);
            auto b = bspline_basis(x, grid);
            for (int i = 0; i < grid.n_basis(); ++i)
                CHECK(b[(size_t)i] ==
                      doctest::Approx(cox_de_boor(i, degree, x, grid.knots)).epsilon(1e-12));
        }
    }
}

TEST_CASE("basis derivative matches finite differences") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    auto grid = SplineGrid::make(-1.0, 1.0, 8, 3);
    std::vector<double> b, db, bp, bm, dummy;
    for (int trial = 0; trial < 100; ++trial) {
        double x = u(rng);
        bspline_basis_and_deriv(x, grid, b, db);
        double h = 1e-6;
        bspline_basis_and_deriv(x + h, grid, bp, dummy);
        bspline_basis_and_deriv(x - h, grid, bm, dummy);
        for (size_t i = 0; i < b.size(); ++i) {
            double fd = (bp[i] - bm[i]) / (2 * h);
            CHECK(db[i] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
        }
    }
}

TEST_CASE("kan_forward: zero parameters give zero output") {
    KanLayer layer(3, 2, SplineGrid::make(-1, 1, 8, 3));
    KanTape tape;
    auto out = layer.forward({0.3, -0.5, 0.9}, tape);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
}

TEST_CASE("kan_forward: pure base weights at input 0 give 0 (silu(0) = 0)") {
    KanLayer layer(2, 1, SplineGrid::make(-1, 1, 8, 3));
    std::fill(layer.base_weights.begin(), layer.base_weights.end(), 1.0);
    KanTape tape;
    auto out = layer.forward({0.0, 0.0}, tape);
    CHECK(out[0] == doctest::Approx(0.0));
}

TEST_CASE("kan_forward matches an independent scalar-by-scalar re-evaluation") {
    std::mt19937_64 rng(31);
    KanLayer layer(3, 2, SplineGrid::make(-1, 1, 8, 3));
    layer.spline_coeffs = random_vec(rng, layer.spline_coeffs.size(), 0.5);
    layer.base_weights = random_vec(rng, layer.base_weights.size(), 0.5);
    std::vector<double> input = {0.4, -0.7, 0.1};
    KanTape tape;
    auto out = layer.forward(input, tape);

    int nb = layer.grid().n_basis();
    for (int o = 0; o < 2; ++o) {
        double expected = 0.0;
        for (int i = 0; i < 3; ++i) {
            expected += layer.base_weights[(size_t)(o * 3 + i)] * silu(input[(size_t)i]);
            auto basis = bspline_basis(input[(size_t)i], layer.grid());
            for (int b = 0; b < nb; ++b)
                expected += layer.spline_coeffs[(size_t)((o * 3 + i) * nb + b)] * basis[(size_t)b];
        }
        CHECK(out[(size_t)o] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("kan_backward: zero upstream gives zero gradients") {
    std::mt19937_64 rng(37);
    KanLayer layer(3, 2, SplineGrid::make(-1, 1, 8, 3));
    layer.spline_coeffs = random_vec(rng, layer.spline_coeffs.size());
    KanTape tape;
    layer.forward({0.1, 0.2, 0.3}, tape);
    auto gin = layer.backward(tape, {0.0, 0.0});
    for (double g : gin) CHECK(g == 0.0);
    for (double g : layer.spline_grads) CHECK(g == 0.0);
    for (double g : layer.base_grads) CHECK(g == 0.0);
}

TEST_CASE("kan_backward gradients match finite differences") {
    std::mt19937_64 rng(41);
    KanLayer layer(3, 2, SplineGrid::make(-1, 1, 8, 3));
    layer.spline_coeffs = random_vec(rng, layer.spline_coeffs.size(), 0.3);
    layer.base_weights = random_vec(rng, layer.base_weights.size(), 0.3);
    std::vector<double> input = {0.35, -0.62, 0.05};
    std::vector<double> upstream = {0.7, -1.3};

    auto scalar_loss = [&](const std::vector<double>& in) {
        KanTape t;
        auto out = layer.forward(in, t);
        return upstream[0] * out[0] + upstream[1] * out[1];
    };

    layer.zero_grads();
    KanTape tape;
    layer.forward(input, tape);
    auto gin = layer.backward(tape, upstream);

    const double h = 1e-6;
    for (size_t i = 0; i < input.size(); ++i) {
        auto p = input, m = input;
        p[i] += h;
        m[i] -= h;
        double fd = (scalar_loss(p) - scalar_loss(m)) / (2 * h);
        CHECK(gin[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
    for (size_t c = 0; c < layer.spline_coeffs.size(); c += 7) {
        double saved = layer.spline_coeffs[c];
        layer.spline_coeffs[c] = saved + h;
        double lp = scalar_loss(input);
        layer.spline_coeffs[c] = saved - h;
        double lm = scalar_loss(input);
        layer.spline_coeffs[c] = saved;
        CHECK(layer.spline_grads[c] ==
              doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("stale tape is rejected") {
    KanLayer a(2, 2, SplineGrid::make(-1, 1, 4, 2));
    KanLayer b(2, 2, SplineGrid::make(-1, 1, 4, 2));
    KanTape tape;
    a.forward({0.1, 0.2}, tape);
    CHECK_THROWS_AS(b.backward(tape, {1.0, 1.0}), ContractError);
}

TEST_CASE("dimension mismatches are shape errors") {
    KanLayer layer(3, 2, SplineGrid::make(-1, 1, 4, 2));
    KanTape tape;
    CHECK_THROWS_AS(layer.forward({0.1, 0.2}, tape), ContractError);
}

TEST_CASE("stack with zero parameters outputs 0.5 on real residues, 0 on masked") {
    ModelConfig cfg;
    cfg.feature_dim = 4;
    cfg.hidden = {5};
    KanStack stack(cfg);
    FeatureMatrix fm;
    fm.rows.assign(6, std::vector<double>(4, 0.2));
    fm.global_row.assign(4, 0.2);
    std::vector<int> mask = {1, 1, 1, 0, 0, 0};
    auto p = stack.forward(fm, mask);
    for (int i = 0; i < 3; ++i) CHECK(p[(size_t)i] == doctest::Approx(0.5));
    for (int i = 3; i < 6; ++i) CHECK(p[(size_t)i] == 0.0);
}

TEST_CASE("identical feature rows get identical outputs (permutation symmetry)") {
    ModelConfig cfg;
    cfg.feature_dim = 4;
    cfg.hidden = {6, 5};
    KanStack stack(cfg);
    init_params(stack, 3);
    FeatureMatrix fm;
    fm.rows = {{1, 0, 0, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}};
    fm.global_row = {0.5, 0.25, 0.1, 0.0};
    std::vector<int> mask = {1, 1, 1};
    auto p = stack.forward(fm, mask);
    CHECK(p[0] == p[2]);
    CHECK(p[0] != p[1]);
    CHECK(p[0] > 0.0);
    CHECK(p[0] < 1.0);
}

TEST_CASE("stack forward matches layer-by-layer oracle composition") {
    ModelConfig cfg;
    cfg.feature_dim = 3;
    cfg.hidden = {4, 3};
    KanStack stack(cfg);
    init_params(stack, 11);
    std::vector<double> input = {0.2, -0.4, 0.6, 0.1, 0.0, -0.2};

    KanTape t1, t2;
    auto h = stack.kan_layers[0].forward(input, t1);
    h = stack.kan_layers[1].forward(h, t2);
    double logit = stack.head_bias[0];
    for (size_t i = 0; i < h.size(); ++i) logit += stack.head_weights[i] * h[i];
    double expected = 1.0 / (1.0 + std::exp(-logit));
    CHECK(stack.forward_single_raw(input) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("mlp zero weights give p = 0.5; parameter count within 5% of KAN") {
    ModelConfig cfg;
    cfg.feature_dim = 21;
    cfg.hidden = {64, 64};
    KanStack kan(cfg);
    ModelConfig mcfg = cfg;
    mcfg.mode = ModelMode::mlp;
    KanStack mlp(mcfg);

    FeatureMatrix fm;
    fm.rows.assign(2, std::vector<double>(21, 0.0));
    fm.rows[0][3] = 1.0;
    fm.rows[1][5] = 1.0;
    fm.global_row.assign(21, 0.5);
    std::vector<int> mask = {1, 1};
    auto p = mlp.forward(fm, mask);
    CHECK(p[0] == doctest::Approx(0.5));

    double kan_n = (double)kan.param_count();
    double mlp_n = (double)mlp.param_count();
    CHECK(std::fabs(mlp_n - kan_n) / kan_n < 0.05);
}

TEST_CASE("mlp gradients match finite differences") {
    std::mt19937_64 rng(53);
    MlpLayer layer(4, 3, true);
    layer.weights = random_vec(rng, layer.weights.size(), 0.5);
    layer.bias = random_vec(rng, layer.bias.size(), 0.2);
    std::vector<double> input = {0.3, -0.8, 0.2, 0.5};
    std::vector<double> upstream = {1.0, -0.5, 0.25};

    auto scalar_loss = [&]() {
        std::vector<double> pre, saved;
        auto out = layer.forward(input, pre, saved);
        return upstream[0] * out[0] + upstream[1] * out[1] + upstream[2] * out[2];
    };
    layer.zero_grads();
    std::vector<double> pre, saved;
    layer.forward(input, pre, saved);
    layer.backward(saved, pre, upstream);

    const double h = 1e-6;
    for (size_t w = 0; w < layer.weights.size(); ++w) {
        double s = layer.weights[w];
        layer.weights[w] = s + h;
        double lp = scalar_loss();
        layer.weights[w] = s - h;
        double lm = scalar_loss();
        layer.weights[w] = s;
        CHECK(layer.weight_grads[w] == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("init_params is seed-deterministic and seed-sensitive") {
    ModelConfig cfg;
    cfg.feature_dim = 5;
    cfg.hidden = {8};
    KanStack a(cfg), b(cfg), c(cfg);
    init_params(a, 42);
    init_params(b, 42);
    init_params(c, 43);
    CHECK(a.kan_layers[0].spline_coeffs == b.kan_layers[0].spline_coeffs);
    CHECK(a.kan_layers[0].spline_coeffs != c.kan_layers[0].spline_coeffs);
    CHECK(a.head_weights == b.head_weights);
}

TEST_CASE("initialization spread matches the target sigma within 20%") {
    ModelConfig cfg;
    cfg.feature_dim = 25; // 50 inputs x 64 out x 11 bases > 10^4 draws
    cfg.hidden = {64};
    KanStack stack(cfg);
    init_params(stack, 7);
    const auto& coeffs = stack.kan_layers[0].spline_coeffs;
    REQUIRE(coeffs.size() >= 10000);
    double mean = 0.0, var = 0.0;
    for (double c : coeffs) mean += c;
    mean /= (double)coeffs.size();
    for (double c : coeffs) var += (c - mean) * (c - mean);
    double sd = std::sqrt(var / (double)coeffs.size());
    double target = 0.1 / std::sqrt((double)stack.kan_layers[0].grid().n_basis());
    CHECK(sd == doctest::Approx(target).epsilon(0.2));
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    ModelConfig cfg;
    cfg.feature_dim = 6;
    cfg.hidden = {7, 5};
    KanStack stack(cfg);
    init_params(stack, 99);
    stack.standardizer.mean.assign((size_t)cfg.input_dim(), 0.125);
    stack.standardizer.stddev.assign((size_t)cfg.input_dim(), 1.75);

    std::string ckpt = save_checkpoint(stack, 99);
    uint64_t seed = 0;
    KanStack loaded = load_checkpoint(ckpt, &seed);
    CHECK(seed == 99);
    CHECK(save_checkpoint(loaded, seed) == ckpt);
    for (size_t l = 0; l < stack.kan_layers.size(); ++l) {
        CHECK(loaded.kan_layers[l].spline_coeffs == stack.kan_layers[l].spline_coeffs);
        CHECK(loaded.kan_layers[l].base_weights == stack.kan_layers[l].base_weights);
    }
    CHECK(loaded.head_weights == stack.head_weights);
    CHECK(loaded.standardizer.mean == stack.standardizer.mean);
}

TEST_CASE("forward is deterministic given fixed parameters and data") {
    ModelConfig cfg;
    cfg.feature_dim = 4;
    cfg.hidden = {6};
    KanStack stack(cfg);
    init_params(stack, 5);
    stack.standardizer.mean.assign(8, 0.0);
    stack.standardizer.stddev.assign(8, 1.0);
    FeatureMatrix fm;
    fm.rows.assign(4, std::vector<double>{0.1, 0.2, 0.3, 0.4});
    fm.global_row = {0.25, 0.25, 0.25, 0.25};
    std::vector<int> mask = {1, 1, 1, 1};
    auto p1 = stack.forward(fm, mask);
    auto p2 = stack.forward(fm, mask);
    CHECK(p1 == p2);
}
