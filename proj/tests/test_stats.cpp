#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pairsim/stats.hpp"

using namespace pairsim::stats;

namespace {

PhotonDistribution product_poisson(double lam1, double lam2, int cutoff) {
    const std::size_t dim = static_cast<std::size_t>(cutoff) + 1;
    std::vector<double> row1(dim), row2(dim);
    row1[0] = std::exp(-lam1);
    row2[0] = std::exp(-lam2);
    for (int k = 1; k <= cutoff; ++k) {
        row1[k] = row1[k - 1] * lam1 / k;
        row2[k] = row2[k - 1] * lam2 / k;
    }
    std::vector<double> pmf(dim * dim);
    double sum = 0.0;
    for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b) {
            pmf[a * dim + b] = row1[a] * row2[b];
            sum += pmf[a * dim + b];
        }
    return PhotonDistribution(cutoff, std::move(pmf), 1.0 - sum, 1e-6);
}

}  // namespace

TEST_CASE("pair_distribution basics") {
    SUBCASE("p = 0 is vacuum") {
        const auto d = pair_distribution(0.0, 4);
        CHECK(d.at(0, 0) == doctest::Approx(1.0));
        double off = 0.0;
        for (int a = 0; a <= 4; ++a)
            for (int b = 0; b <= 4; ++b)
                if (a || b) off += d.at(a, b);
        CHECK(off == 0.0);
    }
    SUBCASE("diagonal law at p = 0.01") {
        const auto d = pair_distribution(0.01, 20);
        CHECK(d.at(0, 0) == doctest::Approx(1.0 / 1.01).epsilon(1e-12));
        CHECK(d.at(1, 1) == doctest::Approx(0.01 / (1.01 * 1.01)).epsilon(1e-12));
        CHECK(d.at(1, 0) == 0.0);
        CHECK(d.at(0, 1) == 0.0);
    }
    SUBCASE("marginal mean equals p (brute force)") {
        const auto d = pair_distribution(0.01, 20);
        const auto m = oracles::brute_moments(d);
        CHECK(m.mean1 == doctest::Approx(0.01).epsilon(0).scale(1).epsilon(1e-9));
        CHECK(m.mean2 == doctest::Approx(0.01).epsilon(1e-9));
    }
    SUBCASE("rejects out-of-range p and hopeless cutoffs") {
        CHECK_THROWS(pair_distribution(-0.1, 10));
        CHECK_THROWS(pair_distribution(1.0, 10));
        CHECK_THROWS(pair_distribution(0.5, 3));  // truncation mass far above threshold
    }
}

TEST_CASE("photon distribution invariants hold over random chains") {
    std::mt19937 gen(42);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const double p = 0.001 + 0.1 * unif(gen);
        auto d = pair_distribution(p, 24);
        d = apply_read_efficiency(d, unif(gen));
        d = thin(d, 0.2 + 0.8 * unif(gen), 0.2 + 0.8 * unif(gen));
        d = add_background(d, 0.2 * unif(gen), 0.2 * unif(gen));
        double sum = 0.0;
        for (double v : d.pmf()) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum + d.truncation_mass() - 1.0) <= 1e-12);
    }
}

TEST_CASE("apply_read_efficiency") {
    SUBCASE("identity and full loss") {
        const auto d = pair_distribution(0.05, 16);
        const auto same = apply_read_efficiency(d, 1.0);
        for (int a = 0; a <= 16; ++a)
            for (int b = 0; b <= 16; ++b) CHECK(same.at(a, b) == doctest::Approx(d.at(a, b)));
        const auto lost = apply_read_efficiency(d, 0.0);
        const auto m2 = lost.marginal2();
        CHECK(m2[0] == doctest::Approx(1.0 - lost.truncation_mass()).epsilon(1e-12));
    }
    SUBCASE("single pair splits binomially") {
        // P(1,1) = q goes to 0.6 q at (1,1) and 0.4 q at (1,0)
        const auto d = pair_distribution(0.01, 20);
        const double q = d.at(1, 1);
        const auto t = apply_read_efficiency(d, 0.6);
        CHECK(t.at(1, 1) == doctest::Approx(0.6 * q).epsilon(1e-12));
        CHECK(t.at(1, 0) == doctest::Approx(0.4 * q).epsilon(1e-12));
    }
    CHECK_THROWS(apply_read_efficiency(pair_distribution(0.01, 20), 1.5));
}

TEST_CASE("thin") {
    const auto d = pair_distribution(0.01, 20);
    SUBCASE("identity") {
        const auto same = thin(d, 1.0, 1.0);
        for (int a = 0; a <= 20; ++a)
            for (int b = 0; b <= 20; ++b) CHECK(same.at(a, b) == doctest::Approx(d.at(a, b)));
    }
    SUBCASE("composition: thin a then b equals thin ab") {
        const auto two_step = thin(thin(d, 0.7, 1.0), 0.45, 1.0);
        const auto one_step = thin(d, 0.7 * 0.45, 1.0);
        for (int a = 0; a <= 20; ++a)
            for (int b = 0; b <= 20; ++b)
                CHECK(std::abs(two_step.at(a, b) - one_step.at(a, b)) <= 1e-12);
    }
    SUBCASE("marginal mean scales with the efficiency (brute force)") {
        const auto t = thin(d, 0.15, 1.0);
        const auto m = oracles::brute_moments(t);
        CHECK(std::abs(m.mean1 - 0.0015) <= 1e-9);
    }
    CHECK_THROWS(thin(d, -0.2, 1.0));
}

TEST_CASE("add_background") {
    const auto d = pair_distribution(0.01, 24);
    SUBCASE("zero means do nothing") {
        const auto same = add_background(d, 0.0, 0.0);
        for (int a = 0; a <= 24; ++a)
            for (int b = 0; b <= 24; ++b) CHECK(same.at(a, b) == doctest::Approx(d.at(a, b)));
    }
    SUBCASE("vacuum turns into Poisson") {
        const auto vac = pair_distribution(0.0, 24);
        const auto bg = add_background(vac, 0.1, 0.0);
        const auto m1 = bg.marginal1();
        double expect = std::exp(-0.1);
        for (int k = 0; k <= 6; ++k) {
            CHECK(m1[static_cast<std::size_t>(k)] == doctest::Approx(expect).epsilon(1e-9));
            expect *= 0.1 / (k + 1);
        }
    }
    SUBCASE("any background pulls the cross-correlation toward 1") {
        std::mt19937 gen(7);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int rep = 0; rep < 20; ++rep) {
            const double p = 0.002 + 0.05 * unif(gen);
            auto base = thin(apply_read_efficiency(pair_distribution(p, 24), 0.6), 0.3, 0.4);
            const auto before = moments(base);
            REQUIRE(before.g2_12.has_value());
            REQUIRE(*before.g2_12 > 1.0);
            const auto after = moments(add_background(base, 0.3 * unif(gen) + 1e-3, 0.3 * unif(gen) + 1e-3));
            CHECK(*after.g2_12 > 1.0);
            CHECK(*after.g2_12 < *before.g2_12);
        }
    }
}

TEST_CASE("moments") {
    SUBCASE("ideal pair source has thermal autocorrelations") {
        for (double p : {1e-3, 1e-2, 1e-1}) {
            const auto ms = moments(pair_distribution(p, 48));
            REQUIRE(ms.g2_11.has_value());
            REQUIRE(ms.g2_22.has_value());
            CHECK(*ms.g2_11 == doctest::Approx(2.0).epsilon(1e-8));
            CHECK(*ms.g2_22 == doctest::Approx(2.0).epsilon(1e-8));
        }
    }
    SUBCASE("cross-correlation is 2 + 1/p (brute force)") {
        const auto d = pair_distribution(0.01, 24);
        const auto ms = moments(d);
        const auto brute = oracles::brute_moments(d);
        REQUIRE(ms.g2_12.has_value());
        CHECK(*ms.g2_12 == doctest::Approx(brute.cross / (brute.mean1 * brute.mean2)).epsilon(1e-12));
        CHECK(*ms.g2_12 == doctest::Approx(102.0).epsilon(1e-6));
    }
    SUBCASE("independent Poisson modes are fully uncorrelated") {
        const auto ms = moments(product_poisson(0.4, 0.2, 24));
        CHECK(*ms.g2_11 == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(*ms.g2_22 == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(*ms.g2_12 == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("zero-mean modes report absent correlations") {
        const auto ms = moments(pair_distribution(0.0, 4));
        CHECK_FALSE(ms.g2_11.has_value());
        CHECK_FALSE(ms.g2_22.has_value());
        CHECK_FALSE(ms.g2_12.has_value());
    }
}

TEST_CASE("ideal violation ratios") {
    CHECK(ideal_cs_ratio_paper(0.01) == doctest::Approx(2550.25).epsilon(1e-12));
    CHECK(ideal_cs_ratio_paper(1.0) == doctest::Approx(1.0));
    CHECK(ideal_cs_ratio_paper(0.5) == doctest::Approx(2.25));
    CHECK_THROWS(ideal_cs_ratio_paper(0.0));

    CHECK(ideal_cs_ratio_pair_model(0.01) == doctest::Approx(2601.0).epsilon(1e-12));
    // the two formulas differ at order p
    for (double p : {0.005, 0.01, 0.02, 0.05}) {
        const double rel = ideal_cs_ratio_pair_model(p) / ideal_cs_ratio_paper(p) - 1.0;
        CHECK(rel == doctest::Approx(p * (2.0 + 3.0 * p) / ((1.0 + p) * (1.0 + p))).epsilon(1e-9));
    }
}

TEST_CASE("cs_holds_classical") {
    const auto measured = cs_holds_classical(1.739, 1.710, 2.335);
    CHECK(measured.ratio == doctest::Approx(2.335 * 2.335 / (1.739 * 1.710)).epsilon(1e-12));
    CHECK(measured.ratio == doctest::Approx(1.8335).epsilon(1e-3));
    CHECK(measured.violated);

    const auto boundary = cs_holds_classical(2.0, 2.0, 2.0);
    CHECK(boundary.ratio == doctest::Approx(1.0));
    CHECK_FALSE(boundary.violated);

    const auto wide = cs_holds_classical(1.72, 1.52, 2.45);
    CHECK(wide.ratio == doctest::Approx(6.0025 / 2.6144).epsilon(1e-9));
    CHECK(wide.violated);

    CHECK_THROWS(cs_holds_classical(0.0, 1.0, 1.0));
}

TEST_CASE("classical boundary: mixtures of shared-intensity Poisson modes never violate") {
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int cutoff = 30;
    const std::size_t dim = static_cast<std::size_t>(cutoff) + 1;
    for (int rep = 0; rep < 100; ++rep) {
        // random mixture of product-Poisson components (a classical field)
        const int comps = 1 + static_cast<int>(unif(gen) * 4);
        std::vector<double> pmf(dim * dim, 0.0);
        double weight_sum = 0.0;
        std::vector<double> weights(static_cast<std::size_t>(comps));
        for (auto& w : weights) {
            w = 0.05 + unif(gen);
            weight_sum += w;
        }
        double total = 0.0;
        for (int c = 0; c < comps; ++c) {
            const double lam1 = 0.02 + 1.5 * unif(gen);
            const double lam2 = 0.02 + 1.5 * unif(gen);
            const auto comp = product_poisson(lam1, lam2, cutoff);
            const double w = weights[static_cast<std::size_t>(c)] / weight_sum;
            for (std::size_t i = 0; i < pmf.size(); ++i) pmf[i] += w * comp.pmf()[i];
        }
        for (double v : pmf) total += v;
        const PhotonDistribution mix(cutoff, std::move(pmf), 1.0 - total, 1e-4);
        const auto ms = moments(mix);
        const auto check = cs_holds_classical(*ms.g2_11, *ms.g2_22, *ms.g2_12);
        CHECK(check.ratio <= 1.0 + 1e-9);
    }
}

TEST_CASE("predict_report") {
    SUBCASE("ideal source reproduces the bare pair statistics") {
        const SourceParams sp{.p = 0.01, .zeta = 1.0, .eta1 = 1.0, .eta2 = 1.0};
        const auto ms = predict_report(sp, 24);
        CHECK(*ms.g2_12 == doctest::Approx(102.0).epsilon(1e-6));
        CHECK(*ms.g2_11 == doctest::Approx(2.0).epsilon(1e-6));
    }
    SUBCASE("backgrounds only give Poisson statistics") {
        const SourceParams sp{.p = 0.0, .bg1 = 0.2, .bg2 = 0.1, .leak2 = 0.05};
        const auto ms = predict_report(sp, 24);
        CHECK(*ms.g2_11 == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(*ms.g2_22 == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(*ms.g2_12 == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("matches an independent brute-force chain evaluation") {
        const SourceParams sp{.p = 0.03, .zeta = 0.6, .eta1 = 0.15, .eta2 = 0.15,
                              .bg1 = 0.02, .bg2 = 0.01, .leak2 = 0.005};
        const auto ms = predict_report(sp, 32);
        auto d = pair_distribution(sp.p, 32);
        d = apply_read_efficiency(d, sp.zeta);
        d = thin(d, sp.eta1, sp.eta2);
        d = add_background(d, sp.bg1, sp.bg2 + sp.leak2);
        const auto brute = oracles::brute_moments(d);
        CHECK(ms.mean1 == doctest::Approx(brute.mean1).epsilon(1e-12));
        CHECK(ms.mean2 == doctest::Approx(brute.mean2).epsilon(1e-12));
        CHECK(*ms.g2_11 == doctest::Approx(brute.fact11 / (brute.mean1 * brute.mean1)).epsilon(1e-12));
        CHECK(*ms.g2_22 == doctest::Approx(brute.fact22 / (brute.mean2 * brute.mean2)).epsilon(1e-12));
        CHECK(*ms.g2_12 == doctest::Approx(brute.cross / (brute.mean1 * brute.mean2)).epsilon(1e-12));
    }
    SUBCASE("auto_cutoff grows the support for strong sources") {
        const SourceParams sp{.p = 0.9};
        CHECK(auto_cutoff(sp) > 20);
        const auto ms = predict_report_auto(sp);
        CHECK(*ms.g2_12 == doctest::Approx(2.0 + 1.0 / 0.9).epsilon(1e-8));
    }
}
