#include "polymer/estimators.hpp"

#include <cmath>

#include "polymer/events.hpp"
#include "polymer/parallel.hpp"
#include "polymer/rng.hpp"

namespace polymer {

namespace {

constexpr double kZ95 = 1.959963984540054;

uint64_t env_seed(const EstimatorContext& ctx, ExperimentId id, uint64_t point, uint64_t r) {
    return hash_words({ctx.master_seed, rng_tag::kEnvSeed, static_cast<uint64_t>(id), point, r});
}

uint64_t aux_seed(const EstimatorContext& ctx, ExperimentId id, uint64_t point, uint64_t r) {
    return hash_words({ctx.master_seed, rng_tag::kAuxSeed, static_cast<uint64_t>(id), point, r});
}

Region vertical_region(int n, Geometry geom) {
    return Region::cone(Point{0, 0}, Point{0, n}, geom == Geometry::HalfSpace);
}

void require_even_n(int n) {
    if (n < 2 || n % 2 != 0)
        throw PreconditionViolated("estimator: n must be a positive even integer");
}

void require_replicates(const EstimatorContext& ctx, int minimum) {
    if (ctx.replicates < minimum)
        throw PreconditionViolated("estimator: too few replicates");
}

// Fit of log(y) against x restricted to positive y.
LinearFit log_linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (size_t i = 0; i < y.size(); ++i)
        if (y[i] > 0.0) {
            xs.push_back(x[i]);
            ys.push_back(std::log(y[i]));
        }
    if (xs.size() < 2)
        return LinearFit{};
    return least_squares(xs, ys);
}

} // namespace

std::vector<LLNEstimate> estimate_lln_gap(const EstimatorContext& ctx,
                                          const std::vector<int>& n_list) {
    ctx.model.validate();
    require_replicates(ctx, 2);
    std::vector<LLNEstimate> out;
    for (int n : n_list) {
        require_even_n(n);
        const int R = ctx.replicates;
        LLNEstimate est;
        est.n = n;
        est.replicates = R;
        est.g_samples.resize(static_cast<size_t>(R));
        est.g_bulk_samples.resize(static_cast<size_t>(R));
        const Query q{Point{0, 0}, Point{0, n}, ctx.mode, ctx.geometry};
        parallel_for(R, ctx.threads, [&](int r) {
            const auto env = Environment::sample(
                ctx.model, vertical_region(n, ctx.geometry),
                env_seed(ctx, ExperimentId::Lln, static_cast<uint64_t>(n), static_cast<uint64_t>(r)));
            const auto view =
                bulk_view(env, aux_seed(ctx, ExperimentId::Lln, static_cast<uint64_t>(n),
                                        static_cast<uint64_t>(r)));
            est.g_samples[static_cast<size_t>(r)] = free_energy(q, env) / n;
            est.g_bulk_samples[static_cast<size_t>(r)] = free_energy(q, view) / n;
        });
        std::vector<double> diffs(static_cast<size_t>(R));
        for (int r = 0; r < R; ++r)
            diffs[static_cast<size_t>(r)] =
                est.g_samples[static_cast<size_t>(r)] - est.g_bulk_samples[static_cast<size_t>(r)];
        est.g_hat = mean(est.g_samples);
        est.g_bulk_hat = mean(est.g_bulk_samples);
        est.raw_diff = mean(diffs);
        // gap convention delta = (g - g_bulk)/5; paired raw_diff kept alongside
        est.gap_hat = (est.g_hat - est.g_bulk_hat) / 5.0;
        const double root_r = std::sqrt(static_cast<double>(R));
        est.se_g = stddev(est.g_samples) / root_r;
        est.se_bulk = stddev(est.g_bulk_samples) / root_r;
        est.se_gap = stddev(diffs) / root_r / 5.0;
        est.gap_ci_lo = est.gap_hat - kZ95 * est.se_gap;
        est.gap_ci_hi = est.gap_hat + kZ95 * est.se_gap;
        out.push_back(std::move(est));
    }
    return out;
}

PinningCurve pinning_curve(const EstimatorContext& ctx, int n, int s1,
                           const std::vector<int>& s2_list) {
    require_even_n(n);
    require_replicates(ctx, 1);
    if (s1 < 1)
        throw PreconditionViolated("pinning_curve: s1 must be >= 1");
    for (int s2 : s2_list)
        if (s2 < s1 || s2 > n - 1)
            throw PreconditionViolated("pinning_curve: s2 must lie in [s1, n-1]");

    const int R = ctx.replicates;
    PinningCurve curve;
    curve.n = n;
    curve.s1 = s1;
    curve.points.resize(s2_list.size());
    for (size_t i = 0; i < s2_list.size(); ++i) {
        curve.points[i].s2 = s2_list[i];
        curve.points[i].per_replicate.resize(static_cast<size_t>(R));
    }
    const Query q{Point{0, 0}, Point{0, n}, ctx.mode, ctx.geometry};
    parallel_for(R, ctx.threads, [&](int r) {
        const auto env = Environment::sample(
            ctx.model, vertical_region(n, ctx.geometry),
            env_seed(ctx, ExperimentId::Pinning, static_cast<uint64_t>(n), static_cast<uint64_t>(r)));
        std::optional<double> base;
        if (ctx.mode == Mode::PositiveTemperature)
            base = free_energy(q, env);
        for (size_t i = 0; i < s2_list.size(); ++i) {
            const auto ev = EventSpec::avoids(Segment::vertical(0, s1, s2_list[i]));
            curve.points[i].per_replicate[static_cast<size_t>(r)] =
                event_probability(q, env, ev, base);
        }
    });
    std::vector<double> gaps;
    std::vector<double> medians;
    for (auto& pt : curve.points) {
        pt.median_q = median(pt.per_replicate);
        pt.q90 = quantile(pt.per_replicate, 0.9);
        pt.q99 = quantile(pt.per_replicate, 0.99);
        gaps.push_back(static_cast<double>(pt.s2 - s1));
        medians.push_back(pt.median_q);
    }
    curve.fit = log_linear_fit(gaps, medians);
    return curve;
}

MidpointTail midpoint_tail(const EstimatorContext& ctx, int n, const std::vector<int>& k_list) {
    require_even_n(n);
    require_replicates(ctx, 1);
    for (int k : k_list)
        if (k < 0)
            throw PreconditionViolated("midpoint_tail: k must be nonnegative");

    const int R = ctx.replicates;
    MidpointTail tail;
    tail.n = n;
    tail.points.resize(k_list.size());
    for (size_t i = 0; i < k_list.size(); ++i) {
        tail.points[i].k = k_list[i];
        tail.points[i].per_replicate.resize(static_cast<size_t>(R));
    }
    const int h = n / 2;
    const Query q{Point{0, 0}, Point{0, n}, ctx.mode, ctx.geometry};
    parallel_for(R, ctx.threads, [&](int r) {
        const auto env = Environment::sample(
            ctx.model, vertical_region(n, ctx.geometry),
            env_seed(ctx, ExperimentId::Midpoint, static_cast<uint64_t>(n), static_cast<uint64_t>(r)));
        std::optional<double> base;
        if (ctx.mode == Mode::PositiveTemperature)
            base = free_energy(q, env);
        for (size_t i = 0; i < k_list.size(); ++i) {
            // {pi(n/2) > k}: empty window when k >= n/2, probability 0.
            const auto ev = EventSpec::position_in(h, k_list[i] + 1, h);
            tail.points[i].per_replicate[static_cast<size_t>(r)] =
                k_list[i] >= h ? 0.0 : event_probability(q, env, ev, base);
        }
    });
    std::vector<double> ks;
    std::vector<double> medians;
    for (auto& pt : tail.points) {
        pt.median_q = median(pt.per_replicate);
        pt.mean_q = mean(pt.per_replicate);
        pt.q90 = quantile(pt.per_replicate, 0.9);
        ks.push_back(static_cast<double>(pt.k));
        medians.push_back(pt.median_q);
    }
    tail.fit = log_linear_fit(ks, medians);
    return tail;
}

VarianceCurve variance_curve(const EstimatorContext& ctx, const std::vector<int>& n_list) {
    require_replicates(ctx, 100);
    const int R = ctx.replicates;
    VarianceCurve curve;
    for (int n : n_list) {
        require_even_n(n);
        VariancePoint pt;
        pt.n = n;
        pt.samples.resize(static_cast<size_t>(R));
        const Query q{Point{0, 0}, Point{0, n}, ctx.mode, ctx.geometry};
        parallel_for(R, ctx.threads, [&](int r) {
            const auto env = Environment::sample(ctx.model, vertical_region(n, ctx.geometry),
                                                 env_seed(ctx, ExperimentId::Variance,
                                                          static_cast<uint64_t>(n),
                                                          static_cast<uint64_t>(r)));
            pt.samples[static_cast<size_t>(r)] = free_energy(q, env);
        });
        pt.mean_g = mean(pt.samples);
        pt.var_g = variance(pt.samples);
        pt.jackknife_se = jackknife_variance_se(pt.samples);
        pt.var_over_n = pt.var_g / n;
        curve.points.push_back(std::move(pt));
    }
    if (curve.points.size() >= 2) {
        std::vector<double> xs;
        std::vector<double> ys;
        for (const auto& pt : curve.points) {
            xs.push_back(static_cast<double>(pt.n));
            ys.push_back(pt.var_g);
        }
        curve.var_vs_n = least_squares(xs, ys);
    }
    return curve;
}

namespace {

CltResult assemble_clt(int n, std::vector<double> raw) {
    CltResult res;
    res.n = n;
    res.raw = std::move(raw);
    res.mean_g = mean(res.raw);
    const double sd = stddev(res.raw);
    if (sd == 0.0)
        throw DegenerateSample("clt_sample: zero-variance sample");
    res.stddev_g = sd;
    res.standardized.resize(res.raw.size());
    for (size_t i = 0; i < res.raw.size(); ++i)
        res.standardized[i] = (res.raw[i] - res.mean_g) / sd;
    res.ks = ks_distance_normal(res.standardized);
    res.ks_critical = ks_critical_one_sample_1pct(res.raw.size());
    res.anderson_darling = anderson_darling_normal(res.standardized);
    res.quantile_pairs.reserve(99);
    for (int i = 1; i <= 99; ++i) {
        const double p = static_cast<double>(i) / 100.0;
        res.quantile_pairs.emplace_back(normal_quantile(p), quantile(res.standardized, p));
    }
    return res;
}

} // namespace

CltResult clt_sample(const EstimatorContext& ctx, int n) {
    require_even_n(n);
    require_replicates(ctx, 1000);
    const int R = ctx.replicates;
    std::vector<double> raw(static_cast<size_t>(R));
    const Query q{Point{0, 0}, Point{0, n}, ctx.mode, ctx.geometry};
    parallel_for(R, ctx.threads, [&](int r) {
        const auto env = Environment::sample(
            ctx.model, vertical_region(n, ctx.geometry),
            env_seed(ctx, ExperimentId::Clt, static_cast<uint64_t>(n), static_cast<uint64_t>(r)));
        raw[static_cast<size_t>(r)] = free_energy(q, env);
    });
    return assemble_clt(n, std::move(raw));
}

std::pair<CltResult, CltResult> clt_sample_both(const EstimatorContext& ctx, int n) {
    require_even_n(n);
    require_replicates(ctx, 1000);
    const int R = ctx.replicates;
    std::vector<double> raw_f(static_cast<size_t>(R));
    std::vector<double> raw_l(static_cast<size_t>(R));
    parallel_for(R, ctx.threads, [&](int r) {
        const auto env = Environment::sample(
            ctx.model, vertical_region(n, ctx.geometry),
            env_seed(ctx, ExperimentId::Clt, static_cast<uint64_t>(n), static_cast<uint64_t>(r)));
        const auto [f, l] =
            free_energy_both(Point{0, 0}, Point{0, n}, ctx.geometry, Mask{}, env);
        raw_f[static_cast<size_t>(r)] = f;
        raw_l[static_cast<size_t>(r)] = l;
    });
    return {assemble_clt(n, std::move(raw_f)), assemble_clt(n, std::move(raw_l))};
}

// Desk-scale defaults. The asymptotic prescription J ~ polylog(n),
// K ~ n^{0.9} binds only as n -> infinity; at reachable n it either exceeds n
// or leaves too few blocks for the truncated second moments to be small.
// These choices keep J = o(K), K > 2J valid from n ~ 100 and give ~sqrt(n)
// blocks of size ~sqrt(n) at desk scale.
int BlockLayout::default_J(int n) {
    const double v = std::pow(std::log10(static_cast<double>(n)), 2.0);
    const int j = static_cast<int>(std::ceil(v));
    return j % 2 == 0 ? j : j + 1;
}

int BlockLayout::default_K(int n) {
    const double v = std::sqrt(static_cast<double>(n));
    const int k = static_cast<int>(std::ceil(v));
    return k % 2 == 0 ? k : k + 1;
}

namespace {

BlockLayout make_layout(int n, int J, int K) {
    if (J < 2 || K < 2 || J % 2 != 0 || K % 2 != 0)
        throw LayoutInvalid("block layout: J and K must be positive even integers");
    BlockLayout layout;
    layout.n = n;
    layout.J = J;
    layout.K = K;
    layout.N = (n - J) / K; // max { i : iK + J <= n }
    if (layout.N >= 1 && layout.N * K + J == n)
        --layout.N; // a final anchor at n would leave an empty top block
    if (layout.N < 1)
        throw LayoutInvalid("block layout: no anchors fit below n");
    layout.m.resize(static_cast<size_t>(layout.N) + 2);
    layout.s.resize(static_cast<size_t>(layout.N) + 1);
    layout.t.resize(static_cast<size_t>(layout.N) + 1);
    layout.m[0] = 0;
    for (int i = 1; i <= layout.N; ++i) {
        layout.s[static_cast<size_t>(i)] = i * K;
        layout.m[static_cast<size_t>(i)] = i * K + J;
        layout.t[static_cast<size_t>(i)] = std::min(i * K + 2 * J, n);
    }
    layout.m[static_cast<size_t>(layout.N) + 1] = n;
    layout.root_j = static_cast<int>(std::floor(std::sqrt(static_cast<double>(J))));
    layout.hwy_window = static_cast<int>(std::floor(std::pow(static_cast<double>(J), 0.75)));
    return layout;
}

} // namespace

BlockLayout BlockLayout::create(int n, int J, int K) {
    if (K <= 2 * J)
        throw LayoutInvalid("block layout: K > 2J required for disjoint highway boxes");
    return make_layout(n, J, K);
}

BlockLayout BlockLayout::anchors_only(int n, int J, int K) { return make_layout(n, J, K); }

BlockDecomposition block_decomposition(const EstimatorContext& ctx, int n, int J, int K,
                                       double eps_hwy) {
    require_even_n(n);
    require_replicates(ctx, 2);
    BlockDecomposition result;
    result.layout = BlockLayout::create(n, J, K);
    result.eps_hwy = eps_hwy;
    const BlockLayout& L = result.layout;
    const int R = ctx.replicates;
    result.reps.resize(static_cast<size_t>(R));

    parallel_for(R, ctx.threads, [&](int r) {
        const auto env = Environment::sample(
            ctx.model, vertical_region(n, ctx.geometry),
            env_seed(ctx, ExperimentId::Blocks, static_cast<uint64_t>(n), static_cast<uint64_t>(r)));
        BlockReplicate rep;
        const Query whole{Point{0, 0}, Point{0, n}, ctx.mode, ctx.geometry};
        rep.g = free_energy(whole, env);

        rep.gi0.resize(static_cast<size_t>(L.N) + 1);
        double sum = 0.0;
        for (int i = 0; i <= L.N; ++i) {
            const Point a{0, L.m[static_cast<size_t>(i)]};
            const Point b{0, L.m[static_cast<size_t>(i) + 1]};
            double gi = free_energy(Query{a, b, ctx.mode, ctx.geometry}, env);
            if (i < L.N)
                gi -= env.weight(0, b.t);
            rep.gi0[static_cast<size_t>(i)] = gi;
            sum += gi;
        }
        rep.sum_gi0 = sum;
        rep.discrepancy_scaled = (rep.g - sum) / std::sqrt(static_cast<double>(n));

        int typical = 0;
        for (int i = 1; i <= L.N; ++i) {
            const int s_i = L.s[static_cast<size_t>(i)];
            const int t_i = L.t[static_cast<size_t>(i)];
            const Query block{Point{L.root_j, s_i}, Point{L.root_j, t_i}, ctx.mode, ctx.geometry};
            const auto hwy = EventSpec::from_formula(
                {EventSpec::Primitive::avoids(Segment::vertical(0, s_i, s_i + L.hwy_window)),
                 EventSpec::Primitive::avoids(Segment::vertical(0, t_i - L.hwy_window, t_i))},
                [](uint16_t a) { return a == 0; }); // hits both windows
            if (event_probability(block, env, hwy) >= 1.0 - eps_hwy)
                ++typical;
        }
        rep.highway_fraction = static_cast<double>(typical) / L.N;

        std::vector<EventSpec::Primitive> windows;
        for (int i = 1; i <= L.N; ++i) {
            windows.push_back(
                EventSpec::Primitive::position_in(L.s[static_cast<size_t>(i)], 0, L.root_j));
            windows.push_back(
                EventSpec::Primitive::position_in(L.t[static_cast<size_t>(i)], 0, L.root_j));
        }
        rep.constrained_prob =
            event_probability(whole, env, EventSpec::all_of(windows),
                              ctx.mode == Mode::PositiveTemperature
                                  ? std::optional<double>(rep.g)
                                  : std::nullopt);
        result.reps[static_cast<size_t>(r)] = std::move(rep);
    });

    std::vector<double> disc;
    std::vector<double> hwy_frac;
    std::vector<double> cons;
    for (const auto& rep : result.reps) {
        disc.push_back(rep.discrepancy_scaled);
        hwy_frac.push_back(rep.highway_fraction);
        cons.push_back(rep.constrained_prob);
    }
    result.mean_discrepancy_scaled = mean(disc);
    result.mean_highway_fraction = mean(hwy_frac);
    result.mean_constrained_prob = mean(cons);

    // Pooled lag-1 correlation of the per-block standardized G_i^0.
    std::vector<double> mu(static_cast<size_t>(L.N) + 1, 0.0);
    std::vector<double> sd(static_cast<size_t>(L.N) + 1, 0.0);
    for (int i = 0; i <= L.N; ++i) {
        std::vector<double> col(static_cast<size_t>(R));
        for (int r = 0; r < R; ++r)
            col[static_cast<size_t>(r)] = result.reps[static_cast<size_t>(r)].gi0[static_cast<size_t>(i)];
        mu[static_cast<size_t>(i)] = mean(col);
        sd[static_cast<size_t>(i)] = stddev(col);
    }
    std::vector<double> zs;
    std::vector<double> zs_next;
    for (int i = 0; i < L.N; ++i) {
        if (sd[static_cast<size_t>(i)] == 0.0 || sd[static_cast<size_t>(i) + 1] == 0.0)
            continue;
        for (int r = 0; r < R; ++r) {
            const auto& gi = result.reps[static_cast<size_t>(r)].gi0;
            zs.push_back((gi[static_cast<size_t>(i)] - mu[static_cast<size_t>(i)]) /
                         sd[static_cast<size_t>(i)]);
            zs_next.push_back((gi[static_cast<size_t>(i) + 1] - mu[static_cast<size_t>(i) + 1]) /
                              sd[static_cast<size_t>(i) + 1]);
        }
    }
    result.lag1_corr = zs.size() >= 2 ? pearson(zs, zs_next) : 0.0;
    return result;
}

int floor_even_pow(int n, double exponent) {
    const int v = static_cast<int>(std::floor(std::pow(static_cast<double>(n), exponent)));
    return v % 2 == 0 ? v : v - 1;
}

std::vector<NearVerticalPoint> near_vertical_gap(const EstimatorContext& ctx,
                                                 const std::vector<int>& n_list,
                                                 const std::function<int(int)>& y_rule) {
    require_replicates(ctx, 1);
    std::vector<NearVerticalPoint> out;
    for (int n : n_list) {
        require_even_n(n);
        const int y = y_rule(n);
        if (y < 0 || y % 2 != 0 || y > n)
            throw PreconditionViolated("near_vertical_gap: y_n must be even in [0, n]");
        NearVerticalPoint pt;
        pt.n = n;
        pt.y = y;
        const int R = ctx.replicates;
        pt.per_replicate.resize(static_cast<size_t>(R));
        const Query q0{Point{0, 0}, Point{0, n}, ctx.mode, ctx.geometry};
        const Query qy{Point{0, 0}, Point{y, n}, ctx.mode, ctx.geometry};
        // One region covering both reachability cones keeps the pair of
        // queries on the same realized field.
        const Region r0 = vertical_region(n, ctx.geometry);
        const Region ry = Region::cone(qy.u, qy.v, ctx.geometry == Geometry::HalfSpace);
        const Region joint{std::min(r0.x_min, ry.x_min), std::max(r0.x_max, ry.x_max), 0, n};
        parallel_for(R, ctx.threads, [&](int r) {
            const auto env = Environment::sample(ctx.model, joint,
                                                 env_seed(ctx, ExperimentId::NearVertical,
                                                          static_cast<uint64_t>(n),
                                                          static_cast<uint64_t>(r)));
            const double g0 = free_energy(q0, env);
            const double gy = y == 0 ? g0 : free_energy(qy, env);
            pt.per_replicate[static_cast<size_t>(r)] =
                std::abs(g0 - gy) / std::sqrt(static_cast<double>(n));
        });
        pt.mean_stat = mean(pt.per_replicate);
        pt.p95 = quantile(pt.per_replicate, 0.95);
        out.push_back(std::move(pt));
    }
    return out;
}

LdpResult ldp_check(const EstimatorContext& ctx, const std::vector<int>& t_list,
                    std::optional<double> delta) {
    require_replicates(ctx, 2);
    LdpResult result;
    if (delta) {
        if (!(*delta > 0.0))
            throw PreconditionViolated("ldp_check: delta must be positive");
        result.delta = *delta;
    } else {
        // Prior gap estimate at a fixed desk-scale n, derived from the same seed.
        EstimatorContext sub = ctx;
        sub.replicates = std::min(ctx.replicates, 50);
        const auto gap = estimate_lln_gap(sub, {400});
        result.delta = std::max(gap[0].gap_hat, 1e-6);
    }
    for (int t : t_list) {
        require_even_n(t);
        LdpPoint pt;
        pt.t = t;
        pt.threshold = result.delta * t;
        const int R = ctx.replicates;
        pt.samples.resize(static_cast<size_t>(R));
        const Query q{Point{0, 0}, Point{0, t}, ctx.mode, ctx.geometry};
        parallel_for(R, ctx.threads, [&](int r) {
            const auto env = Environment::sample(
                ctx.model, vertical_region(t, ctx.geometry),
                env_seed(ctx, ExperimentId::Ldp, static_cast<uint64_t>(t), static_cast<uint64_t>(r)));
            pt.samples[static_cast<size_t>(r)] = free_energy(q, env);
        });
        const double m = mean(pt.samples);
        for (double g : pt.samples)
            if (std::abs(g - m) > pt.threshold)
                ++pt.exceed;
        pt.freq = static_cast<double>(pt.exceed) / R;
        const auto iv = wilson_interval(static_cast<size_t>(pt.exceed), static_cast<size_t>(R));
        pt.wilson_lo = iv.lo;
        pt.wilson_hi = iv.hi;
        result.points.push_back(std::move(pt));
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& pt : result.points) {
        xs.push_back(std::cbrt(static_cast<double>(pt.t)));
        ys.push_back(pt.freq);
    }
    result.envelope = log_linear_fit(xs, ys);
    for (size_t i = 0; i + 1 < result.points.size(); ++i)
        if (result.points[i + 1].freq > result.points[i].wilson_hi)
            result.monotone_within_ci = false;
    return result;
}

InfluenceProfile influence_profile(const EstimatorContext& ctx, int n, std::vector<int> rows,
                                   int x_max, double b_low, double b_high, double eps) {
    require_even_n(n);
    require_replicates(ctx, 1);
    if (!(b_low > 0.0) || b_high < b_low)
        throw PreconditionViolated("influence_profile: need 0 < B_low <= B_high");
    if (x_max < 0)
        throw PreconditionViolated("influence_profile: x_max must be nonnegative");
    for (int j : rows)
        if (j < 0 || j > n)
            throw PreconditionViolated("influence_profile: row outside [0, n]");

    InfluenceProfile prof;
    prof.n = n;
    prof.x_max = x_max;
    prof.b_low = b_low;
    prof.b_high = b_high;
    prof.eps = eps;
    prof.rows.resize(rows.size());
    const int R = ctx.replicates;
    for (size_t i = 0; i < rows.size(); ++i) {
        prof.rows[i].row = rows[i];
        prof.rows[i].deltas.resize(static_cast<size_t>(R));
    }
    const Query q{Point{0, 0}, Point{0, n}, ctx.mode, ctx.geometry};
    parallel_for(R, ctx.threads, [&](int r) {
        const auto env = Environment::sample(
            ctx.model, vertical_region(n, ctx.geometry),
            env_seed(ctx, ExperimentId::Influence, static_cast<uint64_t>(n), static_cast<uint64_t>(r)));
        const DpTable fwd = forward_table(q, env);
        const DpTable bwd = backward_table(q, env);
        for (size_t i = 0; i < rows.size(); ++i) {
            const int j = rows[i];
            const double hi = splice_row(fwd, bwd, j, [&](int x) {
                return x >= 0 && x <= x_max ? b_high : env.weight(x, j);
            });
            const double lo = splice_row(fwd, bwd, j, [&](int x) {
                return x >= 0 && x <= x_max ? b_low : env.weight(x, j);
            });
            prof.rows[i].deltas[static_cast<size_t>(r)] = hi - lo;
        }
    });
    for (auto& row : prof.rows) {
        row.mean_delta = mean(row.deltas);
        int count = 0;
        for (double d : row.deltas)
            if (d >= eps)
                ++count;
        row.frac_ge_eps = static_cast<double>(count) / R;
    }
    return prof;
}

EfronSteinResult efron_stein_sum(const EstimatorContext& ctx, int n) {
    require_even_n(n);
    require_replicates(ctx, 3);
    const int R = ctx.replicates;
    EfronSteinResult res;
    res.n = n;
    res.replicates = R;
    res.g_samples.resize(static_cast<size_t>(R));
    res.half_sums.resize(static_cast<size_t>(R));
    const Query q{Point{0, 0}, Point{0, n}, ctx.mode, ctx.geometry};
    parallel_for(R, ctx.threads, [&](int r) {
        const auto env = Environment::sample(
            ctx.model, vertical_region(n, ctx.geometry),
            env_seed(ctx, ExperimentId::EfronStein, static_cast<uint64_t>(n),
                     static_cast<uint64_t>(r)));
        const double g = free_energy(q, env);
        const DpTable fwd = forward_table(q, env);
        const DpTable bwd = backward_table(q, env);
        double half_sum = 0.0;
        for (int j = 0; j <= n; ++j) {
            const RowResampled resampled{env, j, 0};
            // W'_j == W_j gives G_j' = G identically; recomputing would only
            // add roundoff from a different summation order.
            const RowSpan& span = fwd.span_at(j);
            bool changed = false;
            for (int i = 0; i < span.count() && !changed; ++i)
                changed = resampled.weight(span.x_at(i), j) != env.weight(span.x_at(i), j);
            if (!changed)
                continue;
            const double gj =
                splice_row(fwd, bwd, j, [&](int x) { return resampled.weight(x, j); });
            half_sum += 0.5 * (g - gj) * (g - gj);
        }
        res.g_samples[static_cast<size_t>(r)] = g;
        res.half_sums[static_cast<size_t>(r)] = half_sum;
    });
    res.var_g = variance(res.g_samples);
    res.half_sum_mean = mean(res.half_sums);
    res.ratio = res.half_sum_mean == 0.0 ? 0.0 : res.var_g / res.half_sum_mean;

    // Delete-1 jackknife for the ratio.
    if (res.half_sum_mean > 0.0) {
        double s1 = 0.0;
        double s2 = 0.0;
        double hs = 0.0;
        for (int r = 0; r < R; ++r) {
            s1 += res.g_samples[static_cast<size_t>(r)];
            s2 += res.g_samples[static_cast<size_t>(r)] * res.g_samples[static_cast<size_t>(r)];
            hs += res.half_sums[static_cast<size_t>(r)];
        }
        std::vector<double> loo(static_cast<size_t>(R));
        for (int r = 0; r < R; ++r) {
            const double g = res.g_samples[static_cast<size_t>(r)];
            const double m = (s1 - g) / (R - 1);
            const double var = (s2 - g * g - (R - 1) * m * m) / (R - 2);
            const double denom = (hs - res.half_sums[static_cast<size_t>(r)]) / (R - 1);
            loo[static_cast<size_t>(r)] = denom == 0.0 ? 0.0 : var / denom;
        }
        const double lm = mean(loo);
        double acc = 0.0;
        for (double v : loo)
            acc += (v - lm) * (v - lm);
        res.ratio_se = std::sqrt(acc * (R - 1) / static_cast<double>(R));
    }
    return res;
}

LindebergResult lindeberg_sum(const EstimatorContext& ctx, int n,
                              const std::vector<double>& eps_list,
                              std::optional<std::pair<int, int>> jk) {
    require_even_n(n);
    require_replicates(ctx, 2);
    const int J = jk ? jk->first : BlockLayout::default_J(n);
    const int K = jk ? jk->second : BlockLayout::default_K(n);
    LindebergResult res;
    res.layout = BlockLayout::anchors_only(n, J, K);
    const BlockLayout& L = res.layout;
    const int R = ctx.replicates;
    res.block_g.assign(static_cast<size_t>(L.N) + 1,
                       std::vector<double>(static_cast<size_t>(R), 0.0));
    parallel_for(R, ctx.threads, [&](int r) {
        const auto env = Environment::sample(
            ctx.model, vertical_region(n, ctx.geometry),
            env_seed(ctx, ExperimentId::Lindeberg, static_cast<uint64_t>(n),
                     static_cast<uint64_t>(r)));
        for (int i = 0; i <= L.N; ++i) {
            const Point a{0, L.m[static_cast<size_t>(i)]};
            const Point b{0, L.m[static_cast<size_t>(i) + 1]};
            res.block_g[static_cast<size_t>(i)][static_cast<size_t>(r)] =
                free_energy(Query{a, b, ctx.mode, ctx.geometry}, env);
        }
    });

    // Empirical normalization: sum of the per-block mean squares of the
    // centered values equals 1 by construction at eps = 0.
    std::vector<double> mu(static_cast<size_t>(L.N) + 1);
    double total = 0.0;
    for (int i = 0; i <= L.N; ++i) {
        mu[static_cast<size_t>(i)] = mean(res.block_g[static_cast<size_t>(i)]);
        for (double g : res.block_g[static_cast<size_t>(i)]) {
            const double c = g - mu[static_cast<size_t>(i)];
            total += c * c / R;
        }
    }
    res.normalization = std::sqrt(total);
    res.sigma_n = std::sqrt(total / (static_cast<double>(L.N) * L.K));
    for (double eps : eps_list) {
        double sum = 0.0;
        for (int i = 0; i <= L.N; ++i)
            for (double g : res.block_g[static_cast<size_t>(i)]) {
                const double x = (g - mu[static_cast<size_t>(i)]) / res.normalization;
                if (std::abs(x) > eps)
                    sum += x * x / R;
            }
        res.sums.emplace_back(eps, sum);
    }
    return res;
}

ExcursionResult excursion_identity_check(const EstimatorContext& ctx, int n) {
    require_even_n(n);
    if (n < 4)
        throw PreconditionViolated("excursion_identity_check: n must be >= 4");
    require_replicates(ctx, 2);
    const int R = ctx.replicates;
    ExcursionResult res;
    res.n = n;
    res.replicates = R;
    res.exc_samples.resize(static_cast<size_t>(R));
    res.bulk_samples.resize(static_cast<size_t>(R));
    std::vector<double> bijection_err(static_cast<size_t>(R));

    Mask excursion_mask; // exclude V between the endpoints
    excursion_mask.excluded.push_back(Segment::vertical(0, 1, n - 1));
    const Query q_exc{Point{0, 0}, Point{0, n}, ctx.mode, ctx.geometry, excursion_mask};
    const Query q_bulk{Point{0, 0}, Point{0, n - 2}, ctx.mode, ctx.geometry};

    parallel_for(R, ctx.threads, [&](int r) {
        const auto env_a = Environment::sample(
            ctx.model, vertical_region(n, ctx.geometry),
            env_seed(ctx, ExperimentId::Excursion, 2 * static_cast<uint64_t>(r), 0));
        const double g_exc = free_energy(q_exc, env_a);
        res.exc_samples[static_cast<size_t>(r)] = g_exc;

        // Per-environment bijection: delete the endpoints, translate by
        // (-1,-1); the image path collects exactly the bulk weights of the
        // shifted field.
        const Shifted<Environment> shifted{env_a, 1, 1};
        const double g_shift = free_energy(q_bulk, shifted);
        const double expect = g_shift + env_a.weight(0, 0) + env_a.weight(0, n);
        bijection_err[static_cast<size_t>(r)] =
            std::abs(g_exc - expect) / std::max(1.0, std::abs(g_exc));

        const auto env_b = Environment::sample(
            ctx.model, vertical_region(n, ctx.geometry),
            env_seed(ctx, ExperimentId::Excursion, 2 * static_cast<uint64_t>(r) + 1, 1));
        const auto view = bulk_view(env_b, aux_seed(ctx, ExperimentId::Excursion,
                                                    static_cast<uint64_t>(r), 0));
        CounterRng vertical_draws = CounterRng::from_words(
            {ctx.master_seed, rng_tag::kScalar, static_cast<uint64_t>(ExperimentId::Excursion),
             static_cast<uint64_t>(r)});
        const double w1 = ctx.model.vertical.sample(vertical_draws);
        const double w2 = ctx.model.vertical.sample(vertical_draws);
        res.bulk_samples[static_cast<size_t>(r)] = free_energy(q_bulk, view) + w1 + w2;
    });

    res.worst_bijection_rel_err = 0.0;
    for (double e : bijection_err)
        res.worst_bijection_rel_err = std::max(res.worst_bijection_rel_err, e);
    res.ks = ks_distance_two_sample(res.exc_samples, res.bulk_samples);
    res.ks_critical = ks_critical_two_sample_1pct(res.exc_samples.size(), res.bulk_samples.size());
    return res;
}

} // namespace polymer
