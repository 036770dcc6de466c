#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "geopep/metrics.hpp"
#include "test_util.hpp"

using namespace geopep;
using namespace geopep::testutil;

namespace {

std::vector<int> ones(size_t n) { return std::vector<int>(n, 1); }

/// Pairwise AUC definition: wins + half-ties over all (pos, neg) pairs.
double auc_pairwise_oracle(const std::vector<double>& p, const std::vector<int>& y) {
    double num = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (!y[i]) continue;
        for (size_t j = 0; j < p.size(); ++j) {
            if (y[j]) continue;
            ++pairs;
            if (p[i] > p[j]) num += 1.0;
            else if (p[i] == p[j]) num += 0.5;
        }
    }
    return num / (double)pairs;
}

/// Exact Wilcoxon p by enumerating all sign assignments of nonzero midranks.
double wilcoxon_enumeration_oracle(const std::vector<double>& d) {
    size_t n = d.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return std::fabs(d[a]) < std::fabs(d[b]); });
    std::vector<double> rank(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && std::fabs(d[order[j]]) == std::fabs(d[order[i]])) ++j;
        for (size_t k = i; k < j; ++k) rank[order[k]] = 0.5 * (double)(i + 1 + j);
        i = j;
    }
    std::vector<double> nz;
    double w_obs = 0.0;
    for (size_t k = 0; k < n; ++k) {
        if (d[k] == 0.0) continue;
        nz.push_back(rank[k]);
        if (d[k] > 0.0) w_obs += rank[k];
    }
    size_t m = nz.size();
    size_t below = 0;
    for (size_t mask = 0; mask < (size_t(1) << m); ++mask) {
        double w = 0.0;
        for (size_t b = 0; b < m; ++b)
            if (mask & (size_t(1) << b)) w += nz[b];
        if (w <= w_obs + 1e-12) ++below;
    }
    return (double)below / (double)(size_t(1) << m);
}

std::vector<Vec3> cube_corners(double side, Vec3 origin = {0, 0, 0}) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i)
        pts.push_back({origin.x + side * (double)(i & 1), origin.y + side * (double)((i >> 1) & 1),
                       origin.z + side * (double)((i >> 2) & 1)});
    return pts;
}

} // namespace

TEST_CASE("confusion counts and derived rates on a 10-residue fixture") {
    // tp 2, fp 1, fn 1, tn 6 at threshold 0.8
    std::vector<double> p = {0.9, 0.85, 0.8, 0.7, 0.1, 0.2, 0.3, 0.1, 0.05, 0.4};
    std::vector<int> y = {1, 1, 0, 1, 0, 0, 0, 0, 0, 0};
    auto m = confusion_at_threshold(p, y, ones(10), 0.8);
    CHECK(m.counts.tp == 2);
    CHECK(m.counts.fp == 1);
    CHECK(m.counts.fn == 1);
    CHECK(m.counts.tn == 6);
    CHECK(m.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.accuracy == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("no predicted positives gives precision, recall, f1 of 0") {
    auto m = confusion_at_threshold({0.1, 0.2}, {1, 0}, ones(2), 0.8);
    CHECK(m.precision == 0.0);
    CHECK(m.f1 == 0.0);
    CHECK(m.counts.fn == 1);
}

TEST_CASE("masked positions are excluded from the confusion") {
    auto m = confusion_at_threshold({0.9, 0.9}, {1, 0}, {1, 0}, 0.8);
    CHECK(m.counts.total() == 1);
    CHECK(m.accuracy == 1.0);
}

TEST_CASE("roc auc fixtures") {
    CHECK(roc_curve({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}, ones(4)).area == 1.0);
    CHECK(roc_curve({0.5, 0.5, 0.5, 0.5}, {1, 1, 0, 0}, ones(4)).area == 0.5);
    CHECK(roc_curve({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0}, ones(4)).area == 0.0);
    // one of two positives outscored by the negative: 1 win of 2 pairs
    CHECK(roc_curve({0.9, 0.4, 0.6}, {1, 1, 0}, ones(3)).area == 0.5);
}

TEST_CASE("roc curve starts above (0,0) and ends at (1,1)") {
    auto c = roc_curve({0.9, 0.7, 0.7, 0.3, 0.2}, {1, 0, 1, 0, 0}, ones(5));
    CHECK(c.xs.back() == 1.0);
    CHECK(c.ys.back() == 1.0);
    for (size_t i = 1; i < c.xs.size(); ++i) {
        CHECK(c.xs[i] >= c.xs[i - 1]);
        CHECK(c.ys[i] >= c.ys[i - 1]);
        CHECK(c.thresholds[i] < c.thresholds[i - 1]);
    }
}

TEST_CASE("roc auc equals the pairwise oracle bit for bit on tied data") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        size_t n = 10 + rng() % 60;
        std::vector<double> p(n);
        std::vector<int> y(n);
        for (size_t i = 0; i < n; ++i) {
            p[i] = (double)(rng() % 8) / 7.0; // heavy ties
            y[i] = (int)(rng() % 2);
        }
        y[0] = 1;
        y[1] = 0;
        CHECK(roc_curve(p, y, ones(n)).area == auc_pairwise_oracle(p, y));
    }
}

TEST_CASE("single-class input is rejected") {
    CHECK_THROWS_AS(roc_curve({0.1, 0.9}, {1, 1}, ones(2)), ContractError);
    CHECK_THROWS_AS(pr_curve({0.1, 0.9}, {0, 0}, ones(2)), ContractError);
}

TEST_CASE("pr curve fixture: area 19/24") {
    auto c = pr_curve({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0}, ones(4));
    CHECK(c.area == doctest::Approx(19.0 / 24.0).epsilon(1e-12));
    CHECK(c.xs.back() == 1.0);
    CHECK(pr_curve({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}, ones(4)).area == 1.0);
}

TEST_CASE("tpvr: tp set equal to pred set gives 1") {
    std::vector<Vec3> tet = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    auto r = tpvr(tet, tet);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tpvr: inner cube of half side inside outer cube gives 1/8") {
    auto pred = cube_corners(2.0);
    auto inner = cube_corners(1.0, {0.5, 0.5, 0.5});
    for (const auto& q : inner) pred.push_back(q);
    auto r = tpvr(pred, inner);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("tpvr: degenerate tp subset of a solid pred hull gives 0") {
    auto pred = cube_corners(1.0);
    auto r = tpvr(pred, {pred[0], pred[1], pred[2]});
    REQUIRE(r.has_value());
    CHECK(*r == 0.0);
}

TEST_CASE("tpvr degenerate-pred policy") {
    std::vector<Vec3> planar = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    CHECK(tpvr(planar, planar) == 1.0);
    CHECK_FALSE(tpvr(planar, {planar[0], planar[1]}).has_value());
}

TEST_CASE("tpvr rejects tp points outside the pred set") {
    std::vector<Vec3> tet = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    CHECK_THROWS_AS(tpvr(tet, {{0.5, 0.5, 0.5}}), ContractError);
}

TEST_CASE("distance_loss_eval fixtures on the 0-2-4 line") {
    std::vector<std::vector<Vec3>> residues = {{{0, 0, 0}}, {{2, 0, 0}}, {{4, 0, 0}}};
    std::vector<int> y = {1, 0, 0}, mask = {1, 1, 1};
    CHECK(distance_loss_eval({0.9, 0.5, 0.5}, y, residues, mask, 0.8,
                             DistanceLossMode::raw_probabilities) ==
          doctest::Approx(0.25).epsilon(1e-15));
    // thresholded at 0.8: only the nearer negative counts, as a hard 1
    CHECK(distance_loss_eval({0.9, 0.9, 0.1}, y, residues, mask, 0.8,
                             DistanceLossMode::thresholded) ==
          doctest::Approx((2.0 / 4.0) / 3.0).epsilon(1e-15));
    CHECK(distance_loss_eval({0.9, 0.5}, {0, 0}, {{{0, 0, 0}}, {{2, 0, 0}}}, {1, 1}) == 0.0);
}

TEST_CASE("max_sasa table entries and the generic fallback") {
    bool known = false;
    CHECK(max_sasa("ALA", &known) == 129.0);
    CHECK(known);
    CHECK(max_sasa("TRP") == 285.0);
    CHECK(max_sasa("GLY") == 104.0);
    CHECK(max_sasa("UNK", &known) == 200.0);
    CHECK_FALSE(known);
}

TEST_CASE("delta_rsa equals the direct SASA-difference oracle") {
    std::string text;
    int serial = 1;
    std::vector<Vec3> prot, pep;
    for (int i = 0; i < 6; ++i) prot.push_back({(double)i * 3.8, 0, 0});
    for (int i = 0; i < 3; ++i) pep.push_back({(double)i * 3.8, 4.5, 0});
    text += ca_chain('A', prot, serial, "ALA");
    text += ca_chain('P', pep, serial, "GLY");
    Complex cx = parse_pdb(text, "drsa");

    auto res = delta_rsa(cx, 'P', 'A', 1.4, 240);
    REQUIRE(res.delta_rsa.size() == 6);
    CHECK(res.unknown_residues == 0);

    // independent bookkeeping: run SASA on the two atom sets directly
    std::vector<SasaAtom> bound, unbound;
    for (int i = 0; i < 6; ++i) {
        bound.push_back({prot[(size_t)i], "C", (size_t)i});
        unbound.push_back({prot[(size_t)i], "C", (size_t)i});
    }
    for (const auto& c : pep) bound.push_back({c, "C", 99});
    auto sb = shrake_rupley_sasa(bound, 1.4, 240);
    auto su = shrake_rupley_sasa(unbound, 1.4, 240);
    for (size_t i = 0; i < 6; ++i) {
        double rb = std::clamp(sb.per_residue_area[i] / 129.0, 0.0, 1.0);
        double ru = std::clamp(su.per_residue_area[i] / 129.0, 0.0, 1.0);
        CHECK(res.rsa_bound[i] == doctest::Approx(rb).epsilon(1e-12));
        CHECK(res.rsa_unbound[i] == doctest::Approx(ru).epsilon(1e-12));
        CHECK(res.delta_rsa[i] == doctest::Approx(rb - ru).epsilon(1e-12));
        // removing atoms never decreases exposure
        CHECK(res.delta_rsa[i] <= 1e-12);
    }
    // residues adjacent to the peptide lose exposure
    CHECK(res.delta_rsa[1] < -1e-3);
}

TEST_CASE("delta_rsa counts residues that fall back to the generic max") {
    std::string text;
    int serial = 1;
    text += ca_chain('A', {{0, 0, 0}, {3.8, 0, 0}}, serial, "ZZZ");
    text += ca_chain('P', {{0, 6, 0}}, serial, "GLY");
    auto res = delta_rsa(parse_pdb(text, "unk"), 'P', 'A', 1.4, 120);
    CHECK(res.unknown_residues == 2);
    CHECK_THROWS_AS(delta_rsa(parse_pdb(text, "unk"), 'Q', 'A'), ContractError);
}

TEST_CASE("wilcoxon: five distinct negative differences give p = 1/32") {
    auto r = wilcoxon_signed_rank({-1.0, -2.0, -3.0, -4.0, -5.0});
    CHECK(r.exact);
    CHECK(r.w == 0.0);
    CHECK(r.p_value == doctest::Approx(0.03125).epsilon(1e-15));
    CHECK_FALSE(r.degenerate);
}

TEST_CASE("wilcoxon: balanced pair is far from significant") {
    auto r = wilcoxon_signed_rank({-1.0, 1.0});
    CHECK(r.exact);
    CHECK(r.p_value >= 0.5);
}

TEST_CASE("wilcoxon: all-zero differences are degenerate with p = 1") {
    auto r = wilcoxon_signed_rank({0.0, 0.0, 0.0});
    CHECK(r.degenerate);
    CHECK(r.p_value == 1.0);
    CHECK(r.w == 0.0);
}

TEST_CASE("wilcoxon exact branch matches full sign enumeration for n <= 12") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> mag(-4, 4);
    for (int trial = 0; trial < 60; ++trial) {
        size_t n = 3 + rng() % 10;
        std::vector<double> d(n);
        bool any_nonzero = false;
        for (auto& v : d) {
            v = (double)mag(rng); // integer magnitudes force ties and zeros
            any_nonzero = any_nonzero || v != 0.0;
        }
        if (!any_nonzero) d[0] = -1.0;
        auto r = wilcoxon_signed_rank(d);
        CHECK(r.exact);
        CHECK(r.p_value == doctest::Approx(wilcoxon_enumeration_oracle(d)).epsilon(1e-12));
    }
}

TEST_CASE("wilcoxon normal branch: strong negative shift at n = 40") {
    std::vector<double> d;
    for (int i = 1; i <= 40; ++i) d.push_back(-(double)i / 10.0);
    auto r = wilcoxon_signed_rank(d);
    CHECK_FALSE(r.exact);
    CHECK(r.p_value < 1e-6);
    CHECK(r.effect_r > 0.8);
    CHECK(r.effect_r <= 1.0);
}

TEST_CASE("wilcoxon normal branch agrees with exact near the switchover") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> g(-0.5, 1.0);
    std::vector<double> d25(25);
    for (auto& v : d25) v = g(rng);
    auto exact = wilcoxon_signed_rank(d25);
    CHECK(exact.exact);
    // same data padded with one extra value flips to the approximation
    std::vector<double> d26 = d25;
    d26.push_back(g(rng));
    auto approx = wilcoxon_signed_rank(d26);
    CHECK_FALSE(approx.exact);
    // both see a clear negative shift and land in the same regime
    CHECK(approx.p_value < 0.1);
    CHECK(exact.p_value < 0.1);
}

TEST_CASE("bootstrap on constant data gives a zero-width interval") {
    auto ci = bootstrap_ci({3.0, 3.0, 3.0, 3.0}, BootstrapStatistic::mean, 500, 1);
    CHECK(ci.first == 3.0);
    CHECK(ci.second == 3.0);
}

TEST_CASE("bootstrap is deterministic per seed and ordered") {
    std::vector<double> vals = {1.0, 5.0, 2.0, 8.0, 3.0, 7.0, 4.0};
    auto a = bootstrap_ci(vals, BootstrapStatistic::median, 2000, 9);
    auto b = bootstrap_ci(vals, BootstrapStatistic::median, 2000, 9);
    CHECK(a == b);
    CHECK(a.first <= a.second);
    auto c = bootstrap_ci(vals, BootstrapStatistic::mean, 2000, 9);
    auto d = bootstrap_ci(vals, BootstrapStatistic::mean, 2000, 10);
    CHECK(c != d);
}

TEST_CASE("bootstrap mean CI width matches normal theory within 15%") {
    std::mt19937_64 rng(33);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> vals(200);
    double mean = 0.0, var = 0.0;
    for (auto& v : vals) {
        v = g(rng);
        mean += v;
    }
    mean /= 200.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= 200.0;

    auto ci = bootstrap_ci(vals, BootstrapStatistic::mean, 20000, 3);
    double width = ci.second - ci.first;
    double theory = 2.0 * 1.959964 * std::sqrt(var / 200.0);
    CHECK(width == doctest::Approx(theory).epsilon(0.15));
    CHECK(ci.first < mean);
    CHECK(ci.second > mean);
}

TEST_CASE("delta_rsa_stats composes its pieces consistently") {
    std::vector<double> pos = {-0.30, -0.25, -0.40, -0.10, -0.35, -0.22};
    std::vector<double> neg = {-0.05, -0.02, -0.10, -0.01, -0.06, -0.04};
    auto s = delta_rsa_stats(pos, neg, 2000, 5);

    std::vector<double> diffs(pos.size());
    double mean = 0.0;
    for (size_t i = 0; i < pos.size(); ++i) {
        diffs[i] = pos[i] - neg[i];
        mean += diffs[i];
    }
    mean /= (double)pos.size();
    CHECK(s.diff_mean == doctest::Approx(mean).epsilon(1e-12));
    auto w = wilcoxon_signed_rank(diffs);
    CHECK(s.wilcoxon_w == w.w);
    CHECK(s.p_value == w.p_value);
    CHECK(s.p_value < 0.05); // every interface residue buried more
    CHECK(s.ci_mean.first <= s.diff_mean);
    CHECK(s.ci_mean.second >= s.diff_mean);

    CHECK_THROWS_AS(delta_rsa_stats({1.0}, {}, 100, 0), ContractError);
}

TEST_CASE("per-complex recall point and interface-ratio binning") {
    // 4 real residues, 2 positives, 1 recovered at 0.8
    auto pt = complex_recall_point({0.9, 0.5, 0.9, 0.1}, {1, 1, 0, 0}, ones(4));
    CHECK(pt.interface_ratio == 0.5);
    CHECK(pt.recall == 0.5);

    std::vector<ComplexRecallPoint> pts = {{0.12, 1.0}, {0.13, 0.5}, {0.42, 0.25}, {1.0, 0.8}};
    auto bins = recall_vs_interface_ratio(pts);
    REQUIRE(bins.size() == 20);
    CHECK(bins[2].count == 2); // [0.10, 0.15)
    CHECK(bins[2].mean_recall == doctest::Approx(0.75));
    CHECK(bins[8].count == 1);
    CHECK(bins[8].mean_recall == doctest::Approx(0.25));
    CHECK(bins[19].count == 1); // ratio 1.0 clamps into the last bin
    CHECK(bins[0].count == 0);
    CHECK(bins[0].mean_recall == 0.0);
}
