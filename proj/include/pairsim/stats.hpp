#pragma once

#include <optional>
#include <vector>

namespace pairsim::stats {

/// Physical parameters of the pair source and its noise channels.
/// bg1/bg2 are mean uncorrelated background counts per gate window in the
/// field-1 / field-2 channel; leak2 is the mean read-pulse leakage count per
/// trial in the field-2 channel (its temporal profile follows the read pulse).
struct SourceParams {
    double p = 0.0;      // excitation probability per trial, [0, 1)
    double zeta = 1.0;   // read transfer efficiency, [0, 1]
    double eta1 = 1.0;   // end-to-end detection efficiency, field 1
    double eta2 = 1.0;   // end-to-end detection efficiency, field 2
    double bg1 = 0.0;    // background counts per gate, field-1 channel
    double bg2 = 0.0;    // background counts per gate, field-2 channel
    double leak2 = 0.0;  // read leakage counts per trial, field-2 channel

    void validate() const;  // throws std::invalid_argument naming the field
    bool operator==(const SourceParams&) const = default;
};

/// Exact per-gate photon-number moments. Normalized correlations are absent
/// (not 0, not 1) whenever the corresponding mean vanishes.
struct MomentSet {
    double mean1 = 0.0;
    double mean2 = 0.0;
    std::optional<double> g2_11;
    std::optional<double> g2_22;
    std::optional<double> g2_12;
};

/// Joint photon-number distribution over (n1, n2) with a hard support cutoff.
/// Mass that falls outside the support is tracked in truncation_mass; if it
/// exceeds the configured threshold construction fails rather than silently
/// corrupting downstream moments.
class PhotonDistribution {
public:
    static constexpr double kDefaultTruncationThreshold = 1e-10;

    PhotonDistribution(int cutoff, std::vector<double> pmf, double truncation_mass,
                       double threshold = kDefaultTruncationThreshold);

    int cutoff() const { return cutoff_; }
    double truncation_mass() const { return truncation_mass_; }
    double threshold() const { return threshold_; }

    double at(int n1, int n2) const { return pmf_[static_cast<std::size_t>(n1) * dim() + n2]; }
    std::size_t dim() const { return static_cast<std::size_t>(cutoff_) + 1; }
    const std::vector<double>& pmf() const { return pmf_; }

    std::vector<double> marginal1() const;
    std::vector<double> marginal2() const;

private:
    int cutoff_;
    double truncation_mass_;
    double threshold_;
    std::vector<double> pmf_;
};

/// Diagonal pair-source law P(n, n) = p^n / (1+p)^(n+1): perfectly correlated
/// photon numbers with thermal marginals of mean p.
PhotonDistribution pair_distribution(double p, int cutoff,
                                     double threshold = PhotonDistribution::kDefaultTruncationThreshold);

/// Binomial thinning of mode 2 with survival probability zeta; mode 1 intact.
PhotonDistribution apply_read_efficiency(const PhotonDistribution& d, double zeta);

/// Independent binomial thinning of both modes.
PhotonDistribution thin(const PhotonDistribution& d, double eta1, double eta2);

/// Convolution of each mode with an independent Poisson background.
PhotonDistribution add_background(const PhotonDistribution& d, double lam1, double lam2);

/// Exact moment sums over the pmf.
MomentSet moments(const PhotonDistribution& d);

/// Ideal-case Cauchy-Schwarz violation ratio [(1+p)/(2p)]^2 as quoted for
/// this protocol family. See also ideal_cs_ratio_pair_model.
double ideal_cs_ratio_paper(double p);

/// Violation ratio [(1+2p)/(2p)]^2 implied by the diagonal pair-source law
/// used here (g2_12 = 2 + 1/p against thermal autocorrelations of 2).
/// Differs from ideal_cs_ratio_paper at order p.
double ideal_cs_ratio_pair_model(double p);

struct CsCheck {
    double ratio;   // g12^2 / (g11 * g22)
    bool violated;  // ratio > 1
};

/// Classical-field Cauchy-Schwarz bound g12^2 <= g11 * g22.
CsCheck cs_holds_classical(double g11, double g22, double g12);

/// Analytic prediction for the full noisy source:
/// pair_distribution -> apply_read_efficiency -> thin -> add_background -> moments.
/// This is the oracle the Monte Carlo pipeline converges to when fed
/// gate-accepted effective parameters (see engine::gated_source_params).
MomentSet predict_report(const SourceParams& sp, int cutoff);

/// Smallest cutoff that keeps the chained prediction within the truncation
/// threshold for these parameters.
int auto_cutoff(const SourceParams& sp,
                double threshold = PhotonDistribution::kDefaultTruncationThreshold);

/// predict_report at auto_cutoff.
MomentSet predict_report_auto(const SourceParams& sp,
                              double threshold = PhotonDistribution::kDefaultTruncationThreshold);

}  // namespace pairsim::stats
