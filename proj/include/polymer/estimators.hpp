#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polymer/engine.hpp"
#include "polymer/environment.hpp"
#include "polymer/stats.hpp"

namespace polymer {

// Monte Carlo estimators reproducing the bound-phase phenomena at desk scale:
// LLN separation, pinning and midpoint tails, linear variance, Gaussian
// fluctuations, block decomposition, near-vertical comparison, large
// deviations, influence and Efron-Stein diagnostics, and the excursion
// identity. Every estimator is a deterministic function of
// (model, mode, geometry, master seed, replicates); replicates run in
// parallel on disjoint derived seeds and are folded in index order.

struct EstimatorContext {
    WeightSpec model;
    Mode mode = Mode::PositiveTemperature;
    Geometry geometry = Geometry::HalfSpace;
    uint64_t master_seed = 0;
    int replicates = 2;
    int threads = 1;
};

// Experiment tags entering seed derivation; stable across versions.
enum class ExperimentId : uint64_t {
    Validate = 1,
    Lln,
    Pinning,
    Midpoint,
    Variance,
    Clt,
    Blocks,
    NearVertical,
    Ldp,
    Influence,
    EfronStein,
    Lindeberg,
    Excursion,
    CoupleDemo,
};

// ---------------------------------------------------------------------------
// LLN separation (gap delta = (g - g^bk)/5)

struct LLNEstimate {
    int n = 0;
    int replicates = 0;
    double g_hat = 0.0;
    double g_bulk_hat = 0.0;
    double raw_diff = 0.0; // mean of (G - G^bk)/n, paired
    double gap_hat = 0.0;  // raw_diff / 5
    double se_g = 0.0;
    double se_bulk = 0.0;
    double se_gap = 0.0;
    double gap_ci_lo = 0.0; // 95% normal CI for gap_hat
    double gap_ci_hi = 0.0;
    std::vector<double> g_samples;      // per replicate, G/n
    std::vector<double> g_bulk_samples; // per replicate, G^bk/n
};

std::vector<LLNEstimate> estimate_lln_gap(const EstimatorContext& ctx,
                                          const std::vector<int>& n_list);

// ---------------------------------------------------------------------------
// Pinning curve: Q(pi avoids V_[s1,s2]) per s2

struct PinningPoint {
    int s2 = 0;
    double median_q = 0.0;
    double q90 = 0.0;
    double q99 = 0.0;
    std::vector<double> per_replicate;
};

struct PinningCurve {
    int n = 0;
    int s1 = 0;
    std::vector<PinningPoint> points;
    LinearFit fit; // log(median) vs (s2 - s1), over positive medians
};

PinningCurve pinning_curve(const EstimatorContext& ctx, int n, int s1,
                           const std::vector<int>& s2_list);

// ---------------------------------------------------------------------------
// Midpoint tail: Q(pi(n/2) > k) per k

struct MidpointTailPoint {
    int k = 0;
    double median_q = 0.0;
    double mean_q = 0.0;
    double q90 = 0.0;
    std::vector<double> per_replicate;
};

struct MidpointTail {
    int n = 0;
    std::vector<MidpointTailPoint> points;
    LinearFit fit; // log(median) vs k, over positive medians
};

MidpointTail midpoint_tail(const EstimatorContext& ctx, int n, const std::vector<int>& k_list);

// ---------------------------------------------------------------------------
// Variance curve

struct VariancePoint {
    int n = 0;
    double mean_g = 0.0;
    double var_g = 0.0;
    double jackknife_se = 0.0;
    double var_over_n = 0.0;
    std::vector<double> samples;
};

struct VarianceCurve {
    std::vector<VariancePoint> points;
    LinearFit var_vs_n;
};

VarianceCurve variance_curve(const EstimatorContext& ctx, const std::vector<int>& n_list);

// ---------------------------------------------------------------------------
// CLT sample

struct CltResult {
    int n = 0;
    double mean_g = 0.0;
    double stddev_g = 0.0;
    double ks = 0.0;
    double ks_critical = 0.0;
    double anderson_darling = 0.0;
    std::vector<double> raw;          // per replicate G, replicate order
    std::vector<double> standardized; // same order
    std::vector<std::pair<double, double>> quantile_pairs; // (normal, empirical), 99 probs
};

CltResult clt_sample(const EstimatorContext& ctx, int n);

// Both temperatures from one sweep per replicate: {F result, L result}.
std::pair<CltResult, CltResult> clt_sample_both(const EstimatorContext& ctx, int n);

// ---------------------------------------------------------------------------
// Block decomposition (anchors s_i = iK, m_i = iK + J, t_i = min(iK + 2J, n))

struct BlockLayout {
    int n = 0;
    int J = 0;
    int K = 0;
    int N = 0;
    std::vector<int> m; // m[0]=0, m[i]=iK+J for 1<=i<=N, m[N+1]=n
    std::vector<int> s; // s[i]=iK for 1<=i<=N (index 0 unused)
    std::vector<int> t; // t[i]=min(iK+2J, n)
    int root_j = 0;     // floor(sqrt(J)): constrained window width
    int hwy_window = 0; // floor(J^{3/4}): highway window height

    // Full layout with the highway geometry; requires even J, K and K > 2J.
    static BlockLayout create(int n, int J, int K);
    // Anchor sequence only (lindeberg sums); requires even J, K and N >= 1.
    static BlockLayout anchors_only(int n, int J, int K);

    static int default_J(int n); // ceil_even((log n)^2)
    static int default_K(int n); // ceil_even(n^0.6)
};

struct BlockReplicate {
    double g = 0.0;
    double sum_gi0 = 0.0;
    double discrepancy_scaled = 0.0; // (g - sum_gi0)/sqrt(n), nonnegative
    double highway_fraction = 0.0;   // fraction of blocks with Q_i(hwy) >= 1 - eps_hwy
    double constrained_prob = 0.0;   // Q(Pi^cons)
    std::vector<double> gi0;         // blocks i = 0..N
};

struct BlockDecomposition {
    BlockLayout layout;
    double eps_hwy = 1e-3;
    std::vector<BlockReplicate> reps;
    double mean_discrepancy_scaled = 0.0;
    double lag1_corr = 0.0; // pooled correlation of standardized (G_i^0, G_{i+1}^0)
    double mean_highway_fraction = 0.0;
    double mean_constrained_prob = 0.0;
};

BlockDecomposition block_decomposition(const EstimatorContext& ctx, int n, int J, int K,
                                       double eps_hwy = 1e-3);

// ---------------------------------------------------------------------------
// Near-vertical endpoint comparison

struct NearVerticalPoint {
    int n = 0;
    int y = 0;
    double mean_stat = 0.0; // mean |G(0,0;0,n) - G(0,0;y,n)| / sqrt(n)
    double p95 = 0.0;
    std::vector<double> per_replicate;
};

std::vector<NearVerticalPoint> near_vertical_gap(const EstimatorContext& ctx,
                                                 const std::vector<int>& n_list,
                                                 const std::function<int(int)>& y_rule);

int floor_even_pow(int n, double exponent); // floor_even(n^exponent)

// ---------------------------------------------------------------------------
// Large deviations exceedance check

struct LdpPoint {
    int t = 0;
    double threshold = 0.0; // delta * t
    int exceed = 0;
    double freq = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
    std::vector<double> samples;
};

struct LdpResult {
    double delta = 0.0;
    std::vector<LdpPoint> points;
    LinearFit envelope; // log(freq) vs t^{1/3}, over positive frequencies
    bool monotone_within_ci = true;
};

LdpResult ldp_check(const EstimatorContext& ctx, const std::vector<int>& t_list,
                    std::optional<double> delta);

// ---------------------------------------------------------------------------
// Influence profile (row perturbation B_low -> B_high)

struct InfluenceRow {
    int row = 0;
    double mean_delta = 0.0;
    double frac_ge_eps = 0.0;
    std::vector<double> deltas;
};

struct InfluenceProfile {
    int n = 0;
    int x_max = 0;
    double b_low = 0.0;
    double b_high = 0.0;
    double eps = 0.0;
    std::vector<InfluenceRow> rows;
};

InfluenceProfile influence_profile(const EstimatorContext& ctx, int n, std::vector<int> rows,
                                   int x_max, double b_low, double b_high, double eps);

// ---------------------------------------------------------------------------
// Efron-Stein sum

struct EfronSteinResult {
    int n = 0;
    int replicates = 0;
    double var_g = 0.0;
    double half_sum_mean = 0.0; // mean of (1/2) sum_j (G - G_j')^2
    double ratio = 0.0;         // var_g / half_sum_mean
    double ratio_se = 0.0;      // delete-1 jackknife standard error of the ratio
    std::vector<double> g_samples;
    std::vector<double> half_sums;
};

EfronSteinResult efron_stein_sum(const EstimatorContext& ctx, int n);

// ---------------------------------------------------------------------------
// Lindeberg sums for the standardized block variables

struct LindebergResult {
    BlockLayout layout;
    double normalization = 0.0; // sqrt(sum_i Var-hat(G_i)), the sigma_N sqrt(NK) estimate
    double sigma_n = 0.0;
    std::vector<std::pair<double, double>> sums; // (epsilon, truncated second-moment sum)
    std::vector<std::vector<double>> block_g;    // [i][r]
};

LindebergResult lindeberg_sum(const EstimatorContext& ctx, int n,
                              const std::vector<double>& eps_list,
                              std::optional<std::pair<int, int>> jk = std::nullopt);

// ---------------------------------------------------------------------------
// Excursion identity (two-sample check and per-environment bijection)

struct ExcursionResult {
    int n = 0;
    int replicates = 0;
    double ks = 0.0;
    double ks_critical = 0.0;
    double worst_bijection_rel_err = 0.0;
    std::vector<double> exc_samples;  // G^exc(0,0;0,n)
    std::vector<double> bulk_samples; // G^bk(0,0;0,n-2) + 2 vertical draws
};

ExcursionResult excursion_identity_check(const EstimatorContext& ctx, int n);

// ---------------------------------------------------------------------------
// Reproducible output row bundle handed to the harness.

struct ResultRecord {
    std::string experiment;
    std::string config_hash;
    uint64_t seed = 0;
    std::vector<std::string> replicate_columns;
    std::vector<std::vector<std::string>> replicate_rows; // cells preformatted for output
    std::vector<std::string> summary_columns;
    std::vector<std::vector<std::string>> summary_rows;
};

} // namespace polymer
