#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "tversky/autodiff/gradcheck.hpp"
#include "tversky/autodiff/ops.hpp"
#include "tversky/core/measures.hpp"

using namespace tversky;
using tvtest::mask_safe;
using tvtest::random_tensor;

namespace {

// Independent brute-force oracle: materialize the feature sets first, then
// loop over explicit set members. Kept free of the library's masked kernels.
double oracle_psi(double x, double y, IntersectionReduction r) {
    switch (r) {
        case IntersectionReduction::Min: return std::min(x, y);
        case IntersectionReduction::Max: return std::max(x, y);
        case IntersectionReduction::Product: return x * y;
        case IntersectionReduction::Mean: return 0.5 * (x + y);
        case IntersectionReduction::GMean: return std::sqrt(std::max(x * y, 1e-12));
        case IntersectionReduction::SoftMin: {
            double wx = std::exp(-x), wy = std::exp(-y);
            return (x * wx + y * wy) / (wx + wy);
        }
    }
    return 0;
}

struct OracleSets {
    FeatureSet A, B;
    std::vector<double> adots, bdots;
};

OracleSets oracle_sets(const Tensor<double>& a, const Tensor<double>& b,
                       const FeatureBank<double>& bank) {
    OracleSets s;
    s.A = feature_membership(a, bank, 0);
    s.B = feature_membership(b, bank, 1);
    for (int64_t k = 0; k < bank.size(); ++k) {
        double da = 0, db = 0;
        for (int64_t j = 0; j < bank.dim(); ++j) {
            da += a.data[static_cast<size_t>(j)] * bank.features.at(k, j);
            db += b.data[static_cast<size_t>(j)] * bank.features.at(k, j);
        }
        s.adots.push_back(da);
        s.bdots.push_back(db);
    }
    return s;
}

double oracle_intersection(const Tensor<double>& a, const Tensor<double>& b,
                           const FeatureBank<double>& bank, IntersectionReduction r) {
    OracleSets s = oracle_sets(a, b, bank);
    double acc = 0;
    for (size_t i = 0; i < s.A.member_indices.size(); ++i) {
        int64_t k = s.A.member_indices[i];
        if (s.B.contains(k))
            acc += oracle_psi(s.A.measures[i], s.bdots[static_cast<size_t>(k)], r);
    }
    return acc;
}

double oracle_difference(const Tensor<double>& a, const Tensor<double>& b,
                         const FeatureBank<double>& bank, DifferenceReduction mode) {
    OracleSets s = oracle_sets(a, b, bank);
    double acc = 0;
    for (size_t i = 0; i < s.A.member_indices.size(); ++i) {
        int64_t k = s.A.member_indices[i];
        if (!s.B.contains(k)) acc += s.A.measures[i];
    }
    if (mode == DifferenceReduction::SubstractMatch) {
        for (size_t i = 0; i < s.B.member_indices.size(); ++i) {
            int64_t k = s.B.member_indices[i];
            double da = s.adots[static_cast<size_t>(k)];
            if (da > s.B.measures[i]) acc += da - s.B.measures[i];
        }
    }
    return acc;
}

FeatureBank<double> figure1_bank() {
    return FeatureBank<double>(Tensor<double>::matrix(2, 2, {0.5, -1, -1, 0.5}));
}

const Tensor<double> kX2 = Tensor<double>::row({1, 0});
const Tensor<double> kX3 = Tensor<double>::row({1, 1});
const Tensor<double> kP0 = Tensor<double>::row({0.5, 0.5});
const Tensor<double> kP1 = Tensor<double>::row({-0.5, -0.5});

}  // namespace

TEST_SUITE_BEGIN("measures");

TEST_CASE("feature membership on the constructed universe") {
    auto bank = figure1_bank();
    auto x2 = feature_membership(kX2, bank);
    REQUIRE(x2.member_indices == std::vector<int64_t>{0});
    CHECK(x2.measures[0] == doctest::Approx(0.5));

    CHECK(feature_membership(kX3, bank).member_indices.empty());
    CHECK(feature_membership(Tensor<double>::row({0, 0}), bank).member_indices.empty());
    CHECK(feature_membership(kP0, bank).member_indices.empty());
    auto p1 = feature_membership(kP1, bank);
    CHECK(p1.member_indices == std::vector<int64_t>{0, 1});
    CHECK(p1.measures == std::vector<double>{0.25, 0.25});

    CHECK_THROWS(feature_membership(Tensor<double>::row({1, 2, 3}), bank));
}

TEST_CASE("salience values") {
    auto bank = figure1_bank();
    CHECK(salience_value(kX2, bank) == doctest::Approx(0.5));
    CHECK(salience_value(kX3, bank) == doctest::Approx(0.0));
    CHECK(salience_value(Tensor<double>::row({0, 0}), bank) == doctest::Approx(0.0));

    // graph form agrees
    Graph<double> g;
    auto x = g.constant(kX2);
    auto f = g.constant(bank.features);
    CHECK(salience(g, x, f).value().data[0] == doctest::Approx(0.5));
}

TEST_CASE("intersection measure: frozen pair values") {
    auto bank = figure1_bank();
    ReductionConfig cfg;
    auto check = [&](IntersectionReduction r, double expect) {
        cfg.intersection = r;
        CHECK(intersection_measure_value(kX2, kP1, bank, cfg) == doctest::Approx(expect));
    };
    check(IntersectionReduction::Min, 0.25);
    check(IntersectionReduction::Product, 0.125);
    check(IntersectionReduction::Max, 0.5);
    check(IntersectionReduction::Mean, 0.375);
    check(IntersectionReduction::GMean, 0.35355339059327379);
    check(IntersectionReduction::SoftMin, 0.35945587477855051);

    // disjoint sets vanish under every reduction
    for (auto r : kAllIntersections) {
        cfg.intersection = r;
        CHECK(intersection_measure_value(kX3, kP1, bank, cfg) == doctest::Approx(0.0));
    }
}

TEST_CASE("difference measure: frozen values and self-difference") {
    auto bank = figure1_bank();
    ReductionConfig ig{IntersectionReduction::Min, DifferenceReduction::IgnoreMatch, false};
    ReductionConfig sm{IntersectionReduction::Min, DifferenceReduction::SubstractMatch, false};
    CHECK(difference_measure_value(kX2, kP1, bank, ig) == doctest::Approx(0.0));
    CHECK(difference_measure_value(kX2, kP1, bank, sm) == doctest::Approx(0.25));
    CHECK(difference_measure_value(kP1, kX2, bank, ig) == doctest::Approx(0.25));

    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
        Tensor<double> a = random_tensor(rng, {2});
        CHECK(difference_measure_value(a, a, bank, ig) == doctest::Approx(0.0));
        CHECK(difference_measure_value(a, a, bank, sm) == doctest::Approx(0.0));
    }
}

TEST_CASE("contrast values reproduce the constructed-universe orderings") {
    auto bank = figure1_bank();
    ContrastWeights<double> w(1.0, 0.5, 0.5);
    ReductionConfig cfg{IntersectionReduction::Min, DifferenceReduction::IgnoreMatch, false};
    double s21 = tversky_contrast_value(kX2, kP1, bank, w, cfg);
    double s20 = tversky_contrast_value(kX2, kP0, bank, w, cfg);
    double s30 = tversky_contrast_value(kX3, kP0, bank, w, cfg);
    double s31 = tversky_contrast_value(kX3, kP1, bank, w, cfg);
    CHECK(s21 == doctest::Approx(0.125));
    CHECK(s20 == doctest::Approx(-0.25));
    CHECK(s21 > s20);
    CHECK(s30 == doctest::Approx(0.0));
    CHECK(s31 == doctest::Approx(-0.25));
    CHECK(s30 > s31);
}

TEST_CASE("normalize rejects the zero vector and applies to objects only") {
    auto bank = figure1_bank();
    ContrastWeights<double> w;
    ReductionConfig cfg;
    cfg.normalize = true;
    CHECK_THROWS(tversky_contrast_value(Tensor<double>::row({0, 0}), kP1, bank, w, cfg));

    // normalized input equals pre-scaled input: S(c*a, b) == S(a, b) under normalize
    ReductionConfig plain = cfg;
    Tensor<double> a = Tensor<double>::row({0.6, -0.2});
    Tensor<double> a3 = Tensor<double>::row({1.8, -0.6});
    CHECK(tversky_contrast_value(a, kP1, bank, w, cfg) ==
          doctest::Approx(tversky_contrast_value(a3, kP1, bank, w, plain)));
}

TEST_CASE("brute-force oracle equivalence on random small instances") {
    Rng rng(41);
    int checked = 0;
    for (int t = 0; t < 1000; ++t) {
        int64_t d = 1 + static_cast<int64_t>(rng.next_u64() % 4);
        int64_t m = 1 + static_cast<int64_t>(rng.next_u64() % 5);
        FeatureBank<double> bank(random_tensor(rng, {m, d}));
        Tensor<double> a = random_tensor(rng, {d});
        Tensor<double> b = random_tensor(rng, {d});
        ReductionConfig cfg;
        for (auto r : kAllIntersections) {
            cfg.intersection = r;
            double got = intersection_measure_value(a, b, bank, cfg);
            double want = oracle_intersection(a, b, bank, r);
            CHECK(got == doctest::Approx(want).epsilon(1e-9));
        }
        for (auto md : kAllDifferences) {
            cfg.difference = md;
            double got = difference_measure_value(a, b, bank, cfg);
            double want = oracle_difference(a, b, bank, md);
            CHECK(got == doctest::Approx(want).epsilon(1e-9));
        }
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("symmetry, nonnegativity, dominance, permutation invariance") {
    Rng rng(43);
    for (int t = 0; t < 200; ++t) {
        int64_t d = 2 + static_cast<int64_t>(rng.next_u64() % 3);
        int64_t m = 1 + static_cast<int64_t>(rng.next_u64() % 5);
        FeatureBank<double> bank(random_tensor(rng, {m, d}));
        Tensor<double> a = random_tensor(rng, {d});
        Tensor<double> b = random_tensor(rng, {d});
        ReductionConfig cfg;
        for (auto r : kAllIntersections) {
            cfg.intersection = r;
            double ab = intersection_measure_value(a, b, bank, cfg);
            double ba = intersection_measure_value(b, a, bank, cfg);
            CHECK(ab == ba);  // exact
            CHECK(ab >= 0.0);
        }
        CHECK(salience_value(a, bank) >= 0.0);
        for (auto md : kAllDifferences) {
            cfg.difference = md;
            CHECK(difference_measure_value(a, b, bank, cfg) >= 0.0);
        }
        ReductionConfig ig{IntersectionReduction::Min, DifferenceReduction::IgnoreMatch, false};
        ReductionConfig sm{IntersectionReduction::Min, DifferenceReduction::SubstractMatch, false};
        CHECK(difference_measure_value(a, b, bank, sm) >=
              difference_measure_value(a, b, bank, ig));

        // permuting feature rows leaves every measure unchanged
        std::vector<int64_t> perm(static_cast<size_t>(m));
        for (int64_t i = 0; i < m; ++i) perm[static_cast<size_t>(i)] = i;
        for (int64_t i = m - 1; i > 0; --i)
            std::swap(perm[static_cast<size_t>(i)],
                      perm[static_cast<size_t>(rng.next_u64() % static_cast<uint64_t>(i + 1))]);
        Tensor<double> shuffled({m, d});
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < d; ++j)
                shuffled.at(i, j) = bank.features.at(perm[static_cast<size_t>(i)], j);
        FeatureBank<double> bank2(shuffled);
        ContrastWeights<double> w(1.0, 0.7, 0.3);
        ReductionConfig cfg2{IntersectionReduction::Product, DifferenceReduction::SubstractMatch,
                             false};
        CHECK(tversky_contrast_value(a, b, bank, w, cfg2) ==
              doctest::Approx(tversky_contrast_value(a, b, bank2, w, cfg2)).epsilon(1e-12));
        CHECK(salience_value(a, bank) == doctest::Approx(salience_value(a, bank2)).epsilon(1e-12));
    }
}

TEST_CASE("alpha == beta makes the contrast symmetric") {
    Rng rng(47);
    for (int t = 0; t < 100; ++t) {
        FeatureBank<double> bank(random_tensor(rng, {4, 3}));
        Tensor<double> a = random_tensor(rng, {3});
        Tensor<double> b = random_tensor(rng, {3});
        ContrastWeights<double> w(1.3, 0.4, 0.4);
        ReductionConfig cfg{IntersectionReduction::Mean, DifferenceReduction::SubstractMatch,
                            false};
        double ab = tversky_contrast_value(a, b, bank, w, cfg);
        double ba = tversky_contrast_value(b, a, bank, w, cfg);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-6));
    }
}

TEST_CASE("self-similarity reduces to theta * intersection") {
    Rng rng(53);
    for (int t = 0; t < 50; ++t) {
        FeatureBank<double> bank(random_tensor(rng, {4, 3}));
        Tensor<double> a = random_tensor(rng, {3});
        ContrastWeights<double> w(1.7, 0.6, 0.2);
        for (auto r : kAllIntersections) {
            ReductionConfig cfg{r, DifferenceReduction::SubstractMatch, false};
            double s = tversky_contrast_value(a, a, bank, w, cfg);
            double i = intersection_measure_value(a, a, bank, cfg);
            CHECK(s == doctest::Approx(1.7 * i).epsilon(1e-12));
        }
    }
}

TEST_CASE("contrast gradients match finite differences at mask-safe points") {
    Rng rng(59);
    const double h = 1e-6;
    const double margin = 10 * h;
    for (auto r : kAllIntersections) {
        for (auto md : kAllDifferences) {
            for (bool norm : {false, true}) {
                ReductionConfig cfg{r, md, norm};
                int done = 0;
                while (done < 4) {
                    int64_t d = 3, m = 3;
                    Tensor<double> feats = random_tensor(rng, {m, d});
                    Tensor<double> a = random_tensor(rng, {d});
                    Tensor<double> b = random_tensor(rng, {d});
                    Tensor<double> an = a, bn = b;
                    if (norm) {
                        // the masks see normalized rows
                        auto normed = [](Tensor<double> v) {
                            double nn = 0;
                            for (double x : v.data) nn += x * x;
                            nn = std::sqrt(nn);
                            for (double& x : v.data) x /= nn;
                            return v;
                        };
                        an = normed(a);
                        bn = normed(b);
                    }
                    FeatureBank<double> fb(feats);
                    if (!mask_safe(an, bn, feats, margin)) continue;
                    ++done;
                    // generic weights: at special values (e.g. theta=1, beta=0.5
                    // with mean) terms cancel exactly and the relative error is
                    // undefined against finite-difference noise
                    auto rep = finite_diff_check_multi(
                        [&](Graph<double>& g, const std::vector<Var<double>>& vs) {
                            return tversky_contrast(g, vs[0], vs[1], vs[2], vs[3], vs[4], vs[5],
                                                    cfg);
                        },
                        {a, b, feats, Tensor<double>::scalar(rng.uniform(0.8, 1.2)),
                         Tensor<double>::scalar(rng.uniform(0.3, 0.7)),
                         Tensor<double>::scalar(rng.uniform(0.3, 0.7))},
                        h);
                    CHECK(rep.max_rel_err < 1e-5);
                }
            }
        }
    }
}

TEST_CASE("graph and plain-value forms agree") {
    Rng rng(61);
    for (int t = 0; t < 50; ++t) {
        FeatureBank<double> bank(random_tensor(rng, {4, 3}));
        Tensor<double> a = random_tensor(rng, {3});
        Tensor<double> b = random_tensor(rng, {3});
        ContrastWeights<double> w(1.1, 0.4, 0.8);
        ReductionConfig cfg{IntersectionReduction::SoftMin, DifferenceReduction::SubstractMatch,
                            false};
        Graph<double> g;
        auto va = g.constant(a), vb = g.constant(b), vf = g.constant(bank.features);
        auto th = g.constant(w.theta), al = g.constant(w.alpha), be = g.constant(w.beta);
        double graph_val = tversky_contrast(g, va, vb, vf, th, al, be, cfg).value().data[0];
        CHECK(graph_val ==
              doctest::Approx(tversky_contrast_value(a, b, bank, w, cfg)).epsilon(1e-12));
    }
}

TEST_SUITE_END();
