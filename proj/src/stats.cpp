#include "pairsim/stats.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace pairsim::stats {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Binomial pmf row Bin(n, q) computed by the stable ratio recurrence.
std::vector<double> binomial_row(int n, double q) {
    std::vector<double> row(static_cast<std::size_t>(n) + 1, 0.0);
    if (q <= 0.0) { row[0] = 1.0; return row; }
    if (q >= 1.0) { row[static_cast<std::size_t>(n)] = 1.0; return row; }
    row[0] = std::pow(1.0 - q, n);
    const double ratio = q / (1.0 - q);
    for (int k = 1; k <= n; ++k)
        row[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k) - 1] * ratio * (n - k + 1) / k;
    return row;
}

// Poisson pmf up to `cutoff`; the excluded tail is returned via `tail`.
std::vector<double> poisson_row(double lam, int cutoff, double& tail) {
    std::vector<double> row(static_cast<std::size_t>(cutoff) + 1, 0.0);
    row[0] = std::exp(-lam);
    double sum = row[0];
    for (int k = 1; k <= cutoff; ++k) {
        row[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k) - 1] * lam / k;
        sum += row[static_cast<std::size_t>(k)];
    }
    tail = std::max(0.0, 1.0 - sum);
    return row;
}

}  // namespace

void SourceParams::validate() const {
    require(p >= 0.0 && p < 1.0, "source.p out of range [0, 1)");
    require(zeta >= 0.0 && zeta <= 1.0, "source.zeta out of range [0, 1]");
    require(eta1 >= 0.0 && eta1 <= 1.0, "source.eta1 out of range [0, 1]");
    require(eta2 >= 0.0 && eta2 <= 1.0, "source.eta2 out of range [0, 1]");
    require(bg1 >= 0.0, "source.bg1 must be >= 0");
    require(bg2 >= 0.0, "source.bg2 must be >= 0");
    require(leak2 >= 0.0, "source.leak2 must be >= 0");
}

PhotonDistribution::PhotonDistribution(int cutoff, std::vector<double> pmf,
                                       double truncation_mass, double threshold)
    : cutoff_(cutoff), truncation_mass_(truncation_mass), threshold_(threshold), pmf_(std::move(pmf)) {
    require(cutoff_ >= 1, "photon distribution cutoff must be >= 1");
    require(pmf_.size() == dim() * dim(), "pmf size does not match cutoff");
    double sum = 0.0;
    for (double v : pmf_) {
        require(v >= -1e-15, "pmf has a negative mass");
        sum += v;
    }
    require(truncation_mass_ >= -1e-15, "negative truncation mass");
    require(std::abs(sum + truncation_mass_ - 1.0) <= 1e-12,
            "pmf plus truncation mass does not sum to 1");
    if (truncation_mass_ > threshold_)
        throw std::invalid_argument("truncation mass " + std::to_string(truncation_mass_) +
                                    " exceeds threshold; increase the cutoff");
}

std::vector<double> PhotonDistribution::marginal1() const {
    std::vector<double> m(dim(), 0.0);
    for (std::size_t i = 0; i < dim(); ++i)
        for (std::size_t j = 0; j < dim(); ++j) m[i] += at(static_cast<int>(i), static_cast<int>(j));
    return m;
}

std::vector<double> PhotonDistribution::marginal2() const {
    std::vector<double> m(dim(), 0.0);
    for (std::size_t i = 0; i < dim(); ++i)
        for (std::size_t j = 0; j < dim(); ++j) m[j] += at(static_cast<int>(i), static_cast<int>(j));
    return m;
}

PhotonDistribution pair_distribution(double p, int cutoff, double threshold) {
    require(p >= 0.0 && p < 1.0, "pair_distribution: p out of range [0, 1)");
    require(cutoff >= 1, "pair_distribution: cutoff must be >= 1");
    const std::size_t dim = static_cast<std::size_t>(cutoff) + 1;
    std::vector<double> pmf(dim * dim, 0.0);
    double term = 1.0 / (1.0 + p);
    double sum = 0.0;
    for (int n = 0; n <= cutoff; ++n) {
        pmf[static_cast<std::size_t>(n) * dim + n] = term;
        sum += term;
        term *= p / (1.0 + p);
    }
    return PhotonDistribution(cutoff, std::move(pmf), std::max(0.0, 1.0 - sum), threshold);
}

PhotonDistribution apply_read_efficiency(const PhotonDistribution& d, double zeta) {
    require(zeta >= 0.0 && zeta <= 1.0, "apply_read_efficiency: zeta out of range [0, 1]");
    const std::size_t dim = d.dim();
    std::vector<double> out(dim * dim, 0.0);
    for (int n2 = 0; n2 <= d.cutoff(); ++n2) {
        const auto row = binomial_row(n2, zeta);
        for (int n1 = 0; n1 <= d.cutoff(); ++n1) {
            const double mass = d.at(n1, n2);
            if (mass == 0.0) continue;
            for (int k = 0; k <= n2; ++k)
                out[static_cast<std::size_t>(n1) * dim + k] += mass * row[static_cast<std::size_t>(k)];
        }
    }
    return PhotonDistribution(d.cutoff(), std::move(out), d.truncation_mass(), d.threshold());
}

PhotonDistribution thin(const PhotonDistribution& d, double eta1, double eta2) {
    require(eta1 >= 0.0 && eta1 <= 1.0, "thin: eta1 out of range [0, 1]");
    require(eta2 >= 0.0 && eta2 <= 1.0, "thin: eta2 out of range [0, 1]");
    const std::size_t dim = d.dim();
    // thin mode 1
    std::vector<double> tmp(dim * dim, 0.0);
    for (int n1 = 0; n1 <= d.cutoff(); ++n1) {
        const auto row = binomial_row(n1, eta1);
        for (int n2 = 0; n2 <= d.cutoff(); ++n2) {
            const double mass = d.at(n1, n2);
            if (mass == 0.0) continue;
            for (int k = 0; k <= n1; ++k)
                tmp[static_cast<std::size_t>(k) * dim + n2] += mass * row[static_cast<std::size_t>(k)];
        }
    }
    // thin mode 2
    std::vector<double> out(dim * dim, 0.0);
    for (int n2 = 0; n2 <= d.cutoff(); ++n2) {
        const auto row = binomial_row(n2, eta2);
        for (int n1 = 0; n1 <= d.cutoff(); ++n1) {
            const double mass = tmp[static_cast<std::size_t>(n1) * dim + n2];
            if (mass == 0.0) continue;
            for (int k = 0; k <= n2; ++k)
                out[static_cast<std::size_t>(n1) * dim + k] += mass * row[static_cast<std::size_t>(k)];
        }
    }
    return PhotonDistribution(d.cutoff(), std::move(out), d.truncation_mass(), d.threshold());
}

PhotonDistribution add_background(const PhotonDistribution& d, double lam1, double lam2) {
    require(lam1 >= 0.0, "add_background: lam1 must be >= 0");
    require(lam2 >= 0.0, "add_background: lam2 must be >= 0");
    const std::size_t dim = d.dim();
    double tail1 = 0.0, tail2 = 0.0;
    const auto pois1 = poisson_row(lam1, d.cutoff(), tail1);
    const auto pois2 = poisson_row(lam2, d.cutoff(), tail2);

    std::vector<double> tmp(dim * dim, 0.0);
    for (int n1 = 0; n1 <= d.cutoff(); ++n1)
        for (int n2 = 0; n2 <= d.cutoff(); ++n2) {
            const double mass = d.at(n1, n2);
            if (mass == 0.0) continue;
            for (int k = 0; n1 + k <= d.cutoff(); ++k)
                tmp[static_cast<std::size_t>(n1 + k) * dim + n2] += mass * pois1[static_cast<std::size_t>(k)];
        }
    std::vector<double> out(dim * dim, 0.0);
    for (int n1 = 0; n1 <= d.cutoff(); ++n1)
        for (int n2 = 0; n2 <= d.cutoff(); ++n2) {
            const double mass = tmp[static_cast<std::size_t>(n1) * dim + n2];
            if (mass == 0.0) continue;
            for (int k = 0; n2 + k <= d.cutoff(); ++k)
                out[static_cast<std::size_t>(n1) * dim + (n2 + k)] += mass * pois2[static_cast<std::size_t>(k)];
        }
    double sum = 0.0;
    for (double v : out) sum += v;
    return PhotonDistribution(d.cutoff(), std::move(out), std::max(0.0, 1.0 - sum), d.threshold());
}

MomentSet moments(const PhotonDistribution& d) {
    double m1 = 0.0, m2 = 0.0, f11 = 0.0, f22 = 0.0, x12 = 0.0;
    for (int n1 = 0; n1 <= d.cutoff(); ++n1)
        for (int n2 = 0; n2 <= d.cutoff(); ++n2) {
            const double mass = d.at(n1, n2);
            if (mass == 0.0) continue;
            m1 += n1 * mass;
            m2 += n2 * mass;
            f11 += static_cast<double>(n1) * (n1 - 1) * mass;
            f22 += static_cast<double>(n2) * (n2 - 1) * mass;
            x12 += static_cast<double>(n1) * n2 * mass;
        }
    MomentSet ms;
    ms.mean1 = m1;
    ms.mean2 = m2;
    if (m1 > 0.0) ms.g2_11 = f11 / (m1 * m1);
    if (m2 > 0.0) ms.g2_22 = f22 / (m2 * m2);
    if (m1 > 0.0 && m2 > 0.0) ms.g2_12 = x12 / (m1 * m2);
    return ms;
}

double ideal_cs_ratio_paper(double p) {
    require(p > 0.0, "ideal_cs_ratio_paper: p must be > 0");
    const double r = (1.0 + p) / (2.0 * p);
    return r * r;
}

double ideal_cs_ratio_pair_model(double p) {
    require(p > 0.0, "ideal_cs_ratio_pair_model: p must be > 0");
    const double r = (1.0 + 2.0 * p) / (2.0 * p);
    return r * r;
}

CsCheck cs_holds_classical(double g11, double g22, double g12) {
    require(g11 > 0.0 && g22 > 0.0 && g12 > 0.0, "cs_holds_classical: inputs must be > 0");
    const double ratio = g12 * g12 / (g11 * g22);
    return CsCheck{ratio, ratio > 1.0};
}

MomentSet predict_report(const SourceParams& sp, int cutoff) {
    sp.validate();
    auto d = pair_distribution(sp.p, cutoff);
    d = apply_read_efficiency(d, sp.zeta);
    d = thin(d, sp.eta1, sp.eta2);
    d = add_background(d, sp.bg1, sp.bg2 + sp.leak2);
    return moments(d);
}

int auto_cutoff(const SourceParams& sp, double threshold) {
    sp.validate();
    for (int cutoff = 20; cutoff <= 256; cutoff *= 2) {
        try {
            auto d = pair_distribution(sp.p, cutoff, threshold);
            d = add_background(d, sp.bg1, sp.bg2 + sp.leak2);  // worst case for tail growth
            return cutoff;
        } catch (const std::invalid_argument&) {
            continue;
        }
    }
    throw std::invalid_argument("auto_cutoff: no cutoff <= 256 meets the truncation threshold");
}

MomentSet predict_report_auto(const SourceParams& sp, double threshold) {
    return predict_report(sp, auto_cutoff(sp, threshold));
}

}  // namespace pairsim::stats
