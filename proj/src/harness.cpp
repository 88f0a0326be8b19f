#include "polymer/harness.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "polymer/events.hpp"
#include "polymer/parallel.hpp"
#include "polymer/sampling.hpp"

namespace polymer {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos)
        return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("write_csv: cannot open " + path);
    for (size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << csv_escape(header[i]);
    out << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << csv_escape(row[i]);
        out << "\n";
    }
    if (!out)
        throw IoError("write_csv: short write to " + path);
}

namespace {

namespace fs = std::filesystem;

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
}

std::string cell(double v) { return format_double(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(uint64_t v) { return std::to_string(v); }

struct OutputBundle {
    ResultRecord record;
    std::vector<std::string> lines; // console one-liners, one per parameter point
};

EstimatorContext make_context(const ExperimentConfig& cfg, int default_replicates) {
    EstimatorContext ctx;
    ctx.model = cfg.model;
    ctx.mode = cfg.mode;
    ctx.geometry = cfg.geometry;
    ctx.master_seed = cfg.seed;
    ctx.replicates = cfg.replicates > 0 ? cfg.replicates : default_replicates;
    int threads = cfg.threads;
    if (threads == 0) {
        if (const char* env = std::getenv("POLYMER_LAB_THREADS"))
            threads = std::atoi(env);
    }
    ctx.threads = threads > 0 ? threads : hardware_threads();
    return ctx;
}

// ---------------------------------------------------------------------- lln

OutputBundle run_lln(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    const std::vector<int> n_list = param_present(cfg.params, "n_list")
                                        ? param_int_list(cfg.params, "n_list")
                                        : std::vector<int>{2000};
    const auto estimates = estimate_lln_gap(ctx, n_list);
    OutputBundle out;
    out.record.replicate_columns = {"n", "replicate", "g_over_n", "g_bulk_over_n", "diff_over_n"};
    out.record.summary_columns = {"n",      "replicates", "g_hat",      "g_bulk_hat", "raw_diff",
                          "gap_hat", "se_gap",     "gap_ci_lo",  "gap_ci_hi"};
    for (const auto& est : estimates) {
        for (int r = 0; r < est.replicates; ++r) {
            const double g = est.g_samples[static_cast<size_t>(r)];
            const double gb = est.g_bulk_samples[static_cast<size_t>(r)];
            out.record.replicate_rows.push_back(
                {cell(est.n), cell(r), cell(g), cell(gb), cell(g - gb)});
        }
        out.record.summary_rows.push_back({cell(est.n), cell(est.replicates), cell(est.g_hat),
                                    cell(est.g_bulk_hat), cell(est.raw_diff), cell(est.gap_hat),
                                    cell(est.se_gap), cell(est.gap_ci_lo), cell(est.gap_ci_hi)});
        char line[160];
        std::snprintf(line, sizeof line, "lln n=%d g_hat=%.6f g_bulk_hat=%.6f gap_hat=%.6f",
                      est.n, est.g_hat, est.g_bulk_hat, est.gap_hat);
        out.lines.emplace_back(line);
    }
    return out;
}

// ------------------------------------------------------------------ pinning

OutputBundle run_pinning(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    const int n = param_present(cfg.params, "n") ? param_int(cfg.params, "n") : 2000;
    const int s1 = param_present(cfg.params, "s1") ? param_int(cfg.params, "s1") : n / 2 - 30;
    const std::vector<int> s2_list =
        param_present(cfg.params, "s2_list")
            ? param_int_list(cfg.params, "s2_list")
            : std::vector<int>{s1 + 10, s1 + 20, s1 + 30, s1 + 40, s1 + 50, s1 + 60};
    const auto curve = pinning_curve(ctx, n, s1, s2_list);
    OutputBundle out;
    out.record.replicate_columns = {"n", "s1", "s2", "replicate", "q_avoid"};
    out.record.summary_columns = {"n",   "s1",  "s2",        "gap",      "median_q",
                          "q90", "q99", "fit_slope", "fit_r2"};
    for (const auto& pt : curve.points) {
        for (size_t r = 0; r < pt.per_replicate.size(); ++r)
            out.record.replicate_rows.push_back({cell(n), cell(s1), cell(pt.s2),
                                          cell(static_cast<int>(r)), cell(pt.per_replicate[r])});
        out.record.summary_rows.push_back({cell(n), cell(s1), cell(pt.s2), cell(pt.s2 - s1),
                                    cell(pt.median_q), cell(pt.q90), cell(pt.q99),
                                    cell(curve.fit.slope), cell(curve.fit.r2)});
        char line[160];
        std::snprintf(line, sizeof line, "pinning n=%d s2-s1=%d median=%.3e", n, pt.s2 - s1,
                      pt.median_q);
        out.lines.emplace_back(line);
    }
    return out;
}

// ----------------------------------------------------------------- midpoint

OutputBundle run_midpoint(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    const int n = param_present(cfg.params, "n") ? param_int(cfg.params, "n") : 2000;
    const std::vector<int> k_list = param_present(cfg.params, "k_list")
                                        ? param_int_list(cfg.params, "k_list")
                                        : std::vector<int>{5, 10, 15, 20, 25, 30};
    const auto tail = midpoint_tail(ctx, n, k_list);
    OutputBundle out;
    out.record.replicate_columns = {"n", "k", "replicate", "q_tail"};
    out.record.summary_columns = {"n", "k", "median_q", "mean_q", "q90", "fit_slope", "fit_r2"};
    for (const auto& pt : tail.points) {
        for (size_t r = 0; r < pt.per_replicate.size(); ++r)
            out.record.replicate_rows.push_back(
                {cell(n), cell(pt.k), cell(static_cast<int>(r)), cell(pt.per_replicate[r])});
        out.record.summary_rows.push_back({cell(n), cell(pt.k), cell(pt.median_q), cell(pt.mean_q),
                                    cell(pt.q90), cell(tail.fit.slope), cell(tail.fit.r2)});
        char line[160];
        std::snprintf(line, sizeof line, "midpoint n=%d k=%d median=%.3e", n, pt.k, pt.median_q);
        out.lines.emplace_back(line);
    }
    return out;
}

// ----------------------------------------------------------------- variance

OutputBundle run_variance(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    if (!ctx.model.bulk.unbounded_support() || !ctx.model.vertical.unbounded_support())
        throw InadmissibleSpec("variance: the linear-variance claim needs unbounded weight "
                               "support; Constant families are diagnostics-only here");
    const std::vector<int> n_list = param_present(cfg.params, "n_list")
                                        ? param_int_list(cfg.params, "n_list")
                                        : std::vector<int>{200, 500, 1000, 2000};
    const auto curve = variance_curve(ctx, n_list);
    OutputBundle out;
    out.record.replicate_columns = {"n", "replicate", "g"};
    out.record.summary_columns = {"n",          "replicates",  "mean_g", "var_g",
                          "jackknife_se", "var_over_n", "fit_slope", "fit_r2"};
    for (const auto& pt : curve.points) {
        for (size_t r = 0; r < pt.samples.size(); ++r)
            out.record.replicate_rows.push_back({cell(pt.n), cell(static_cast<int>(r)),
                                          cell(pt.samples[r])});
        out.record.summary_rows.push_back({cell(pt.n), cell(static_cast<int>(pt.samples.size())),
                                    cell(pt.mean_g), cell(pt.var_g), cell(pt.jackknife_se),
                                    cell(pt.var_over_n), cell(curve.var_vs_n.slope),
                                    cell(curve.var_vs_n.r2)});
        char line[160];
        std::snprintf(line, sizeof line, "variance n=%d var=%.3f var/n=%.4f", pt.n, pt.var_g,
                      pt.var_over_n);
        out.lines.emplace_back(line);
    }
    return out;
}

// ---------------------------------------------------------------------- clt

OutputBundle run_clt(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    const int n = param_present(cfg.params, "n") ? param_int(cfg.params, "n") : 2000;
    const auto res = clt_sample(ctx, n);
    OutputBundle out;
    out.record.replicate_columns = {"n", "replicate", "g", "standardized"};
    out.record.summary_columns = {"n",  "replicates",  "mean_g",      "stddev_g",
                          "ks", "ks_critical", "anderson_darling"};
    for (size_t r = 0; r < res.raw.size(); ++r)
        out.record.replicate_rows.push_back({cell(n), cell(static_cast<int>(r)), cell(res.raw[r]),
                                      cell(res.standardized[r])});
    out.record.summary_rows.push_back({cell(n), cell(static_cast<int>(res.raw.size())),
                                cell(res.mean_g), cell(res.stddev_g), cell(res.ks),
                                cell(res.ks_critical), cell(res.anderson_darling)});
    char line[160];
    std::snprintf(line, sizeof line, "clt n=%d ks=%.4f (critical %.4f) ad=%.3f", n, res.ks,
                  res.ks_critical, res.anderson_darling);
    out.lines.emplace_back(line);
    return out;
}

// ------------------------------------------------------------------- blocks

OutputBundle run_blocks(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    const int n = param_present(cfg.params, "n") ? param_int(cfg.params, "n") : 2000;
    const int J = param_present(cfg.params, "J") ? param_int(cfg.params, "J") : 36;
    const int K = param_present(cfg.params, "K") ? param_int(cfg.params, "K") : 200;
    const double eps_hwy =
        param_present(cfg.params, "eps_hwy") ? param_double(cfg.params, "eps_hwy") : 1e-3;
    const auto res = block_decomposition(ctx, n, J, K, eps_hwy);
    OutputBundle out;
    out.record.replicate_columns = {"n",      "J",       "K",
                            "replicate", "g",    "sum_gi0",
                            "discrepancy_scaled", "highway_fraction", "constrained_prob"};
    out.record.summary_columns = {"n", "J", "K", "N", "replicates", "mean_discrepancy_scaled",
                          "lag1_corr", "mean_highway_fraction", "mean_constrained_prob"};
    for (size_t r = 0; r < res.reps.size(); ++r) {
        const auto& rep = res.reps[r];
        out.record.replicate_rows.push_back({cell(n), cell(J), cell(K), cell(static_cast<int>(r)),
                                      cell(rep.g), cell(rep.sum_gi0),
                                      cell(rep.discrepancy_scaled), cell(rep.highway_fraction),
                                      cell(rep.constrained_prob)});
    }
    out.record.summary_rows.push_back({cell(n), cell(J), cell(K), cell(res.layout.N),
                                cell(static_cast<int>(res.reps.size())),
                                cell(res.mean_discrepancy_scaled), cell(res.lag1_corr),
                                cell(res.mean_highway_fraction),
                                cell(res.mean_constrained_prob)});
    char line[200];
    std::snprintf(line, sizeof line,
                  "blocks n=%d J=%d K=%d N=%d mean_disc=%.4f lag1_corr=%.4f hwy=%.3f", n, J, K,
                  res.layout.N, res.mean_discrepancy_scaled, res.lag1_corr,
                  res.mean_highway_fraction);
    out.lines.emplace_back(line);
    return out;
}

// -------------------------------------------------------------- near-vertical

OutputBundle run_near_vertical(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    const std::vector<int> n_list = param_present(cfg.params, "n_list")
                                        ? param_int_list(cfg.params, "n_list")
                                        : std::vector<int>{500, 1000, 2000};
    std::function<int(int)> y_rule;
    if (param_present(cfg.params, "y_rule")) {
        const json& rule = cfg.params["y_rule"];
        if (!rule.is_object() || !rule.contains("type"))
            throw ConfigInvalid("y_rule: expected an object with a 'type'");
        const std::string type = rule["type"].get<std::string>();
        if (type == "power") {
            if (!rule.contains("exponent") || !rule["exponent"].is_number())
                throw ConfigInvalid("y_rule.exponent: expected a number");
            const double e = rule["exponent"].get<double>();
            y_rule = [e](int n) { return floor_even_pow(n, e); };
        } else if (type == "list") {
            if (!rule.contains("values") || !rule["values"].is_array() ||
                rule["values"].size() != n_list.size())
                throw ConfigInvalid("y_rule.values: expected an array matching n_list");
            std::map<int, int> by_n;
            for (size_t i = 0; i < n_list.size(); ++i)
                by_n[n_list[i]] = rule["values"][i].get<int>();
            y_rule = [by_n](int n) { return by_n.at(n); };
        } else {
            throw ConfigInvalid("y_rule.type: expected 'power' or 'list'");
        }
    } else {
        y_rule = [](int n) { return floor_even_pow(n, 0.3); };
    }
    const auto points = near_vertical_gap(ctx, n_list, y_rule);
    OutputBundle out;
    out.record.replicate_columns = {"n", "y", "replicate", "stat"};
    out.record.summary_columns = {"n", "y", "replicates", "mean_stat", "p95"};
    for (const auto& pt : points) {
        for (size_t r = 0; r < pt.per_replicate.size(); ++r)
            out.record.replicate_rows.push_back(
                {cell(pt.n), cell(pt.y), cell(static_cast<int>(r)), cell(pt.per_replicate[r])});
        out.record.summary_rows.push_back({cell(pt.n), cell(pt.y),
                                    cell(static_cast<int>(pt.per_replicate.size())),
                                    cell(pt.mean_stat), cell(pt.p95)});
        char line[160];
        std::snprintf(line, sizeof line, "near-vertical n=%d y=%d mean=%.5f p95=%.5f", pt.n,
                      pt.y, pt.mean_stat, pt.p95);
        out.lines.emplace_back(line);
    }
    return out;
}

// ---------------------------------------------------------------------- ldp

OutputBundle run_ldp(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    const std::vector<int> t_list = param_present(cfg.params, "t_list")
                                        ? param_int_list(cfg.params, "t_list")
                                        : std::vector<int>{200, 500, 1000, 2000};
    std::optional<double> delta;
    if (param_present(cfg.params, "delta"))
        delta = param_double(cfg.params, "delta");
    const auto res = ldp_check(ctx, t_list, delta);
    OutputBundle out;
    out.record.replicate_columns = {"t", "replicate", "g"};
    out.record.summary_columns = {"t",         "delta",     "threshold",      "exceed",
                          "freq",      "wilson_lo", "wilson_hi",      "envelope_intercept",
                          "envelope_slope", "monotone_within_ci"};
    for (const auto& pt : res.points) {
        for (size_t r = 0; r < pt.samples.size(); ++r)
            out.record.replicate_rows.push_back(
                {cell(pt.t), cell(static_cast<int>(r)), cell(pt.samples[r])});
        out.record.summary_rows.push_back({cell(pt.t), cell(res.delta), cell(pt.threshold),
                                    cell(pt.exceed), cell(pt.freq), cell(pt.wilson_lo),
                                    cell(pt.wilson_hi), cell(res.envelope.intercept),
                                    cell(res.envelope.slope),
                                    cell(res.monotone_within_ci ? 1 : 0)});
        char line[160];
        std::snprintf(line, sizeof line, "ldp t=%d freq=%.4f [%.4f, %.4f]", pt.t, pt.freq,
                      pt.wilson_lo, pt.wilson_hi);
        out.lines.emplace_back(line);
    }
    return out;
}

// ---------------------------------------------------------------- influence

OutputBundle run_influence(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    const int n = param_present(cfg.params, "n") ? param_int(cfg.params, "n") : 1000;
    std::vector<int> rows;
    if (param_present(cfg.params, "rows")) {
        rows = param_int_list(cfg.params, "rows");
    } else {
        for (int j = n / 10; j < n; j += n / 10)
            rows.push_back(j);
    }
    const int x_max = param_present(cfg.params, "x_max") ? param_int(cfg.params, "x_max") : 6;
    const double b_low =
        param_present(cfg.params, "B_low") ? param_double(cfg.params, "B_low") : 2.0;
    const double b_high =
        param_present(cfg.params, "B_high") ? param_double(cfg.params, "B_high") : 4.0;
    const double eps =
        param_present(cfg.params, "epsilon") ? param_double(cfg.params, "epsilon") : 0.1;
    const auto prof = influence_profile(ctx, n, rows, x_max, b_low, b_high, eps);
    OutputBundle out;
    out.record.replicate_columns = {"n", "row", "replicate", "delta"};
    out.record.summary_columns = {"n", "row", "x_max", "B_low", "B_high", "epsilon", "mean_delta",
                          "frac_ge_eps"};
    for (const auto& row : prof.rows) {
        for (size_t r = 0; r < row.deltas.size(); ++r)
            out.record.replicate_rows.push_back(
                {cell(n), cell(row.row), cell(static_cast<int>(r)), cell(row.deltas[r])});
        out.record.summary_rows.push_back({cell(n), cell(row.row), cell(x_max), cell(b_low),
                                    cell(b_high), cell(eps), cell(row.mean_delta),
                                    cell(row.frac_ge_eps)});
        char line[160];
        std::snprintf(line, sizeof line, "influence row=%d mean_delta=%.4f frac>=eps %.3f",
                      row.row, row.mean_delta, row.frac_ge_eps);
        out.lines.emplace_back(line);
    }
    return out;
}

// --------------------------------------------------------------- efron-stein

OutputBundle run_efron_stein(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    const int n = param_present(cfg.params, "n") ? param_int(cfg.params, "n") : 500;
    const auto res = efron_stein_sum(ctx, n);
    OutputBundle out;
    out.record.replicate_columns = {"n", "replicate", "g", "half_sum"};
    out.record.summary_columns = {"n", "replicates", "var_g", "half_sum_mean", "ratio", "ratio_se"};
    for (size_t r = 0; r < res.g_samples.size(); ++r)
        out.record.replicate_rows.push_back({cell(n), cell(static_cast<int>(r)), cell(res.g_samples[r]),
                                      cell(res.half_sums[r])});
    out.record.summary_rows.push_back({cell(n), cell(res.replicates), cell(res.var_g),
                                cell(res.half_sum_mean), cell(res.ratio), cell(res.ratio_se)});
    char line[160];
    std::snprintf(line, sizeof line, "efron-stein n=%d var=%.3f half_sum=%.3f ratio=%.4f", n,
                  res.var_g, res.half_sum_mean, res.ratio);
    out.lines.emplace_back(line);
    return out;
}

// ---------------------------------------------------------------- lindeberg

OutputBundle run_lindeberg(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    const int n = param_present(cfg.params, "n") ? param_int(cfg.params, "n") : 2000;
    const std::vector<double> eps_list = param_present(cfg.params, "eps_list")
                                             ? param_double_list(cfg.params, "eps_list")
                                             : std::vector<double>{0.0, 0.25, 0.5, 1.0};
    std::optional<std::pair<int, int>> jk;
    if (param_present(cfg.params, "J") || param_present(cfg.params, "K"))
        jk = std::make_pair(param_int(cfg.params, "J"), param_int(cfg.params, "K"));
    const auto res = lindeberg_sum(ctx, n, eps_list, jk);
    OutputBundle out;
    out.record.replicate_columns = {"n", "block", "replicate", "g_block"};
    out.record.summary_columns = {"n",   "J",        "K",        "N",  "replicates",
                          "eps", "sum",      "normalization", "sigma_n"};
    for (size_t i = 0; i < res.block_g.size(); ++i)
        for (size_t r = 0; r < res.block_g[i].size(); ++r)
            out.record.replicate_rows.push_back({cell(n), cell(static_cast<int>(i)),
                                          cell(static_cast<int>(r)), cell(res.block_g[i][r])});
    for (const auto& [eps, sum] : res.sums) {
        out.record.summary_rows.push_back({cell(n), cell(res.layout.J), cell(res.layout.K),
                                    cell(res.layout.N),
                                    cell(static_cast<int>(res.block_g[0].size())), cell(eps),
                                    cell(sum), cell(res.normalization), cell(res.sigma_n)});
        char line[160];
        std::snprintf(line, sizeof line, "lindeberg n=%d eps=%.3f sum=%.5f", n, eps, sum);
        out.lines.emplace_back(line);
    }
    return out;
}

// ---------------------------------------------------------------- excursion

OutputBundle run_excursion(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    const int n = param_present(cfg.params, "n") ? param_int(cfg.params, "n") : 40;
    const auto res = excursion_identity_check(ctx, n);
    OutputBundle out;
    out.record.replicate_columns = {"n", "replicate", "g_exc", "g_bulk_plus_endpoints"};
    out.record.summary_columns = {"n", "replicates", "ks", "ks_critical", "worst_bijection_rel_err"};
    for (size_t r = 0; r < res.exc_samples.size(); ++r)
        out.record.replicate_rows.push_back({cell(n), cell(static_cast<int>(r)),
                                      cell(res.exc_samples[r]), cell(res.bulk_samples[r])});
    out.record.summary_rows.push_back({cell(n), cell(res.replicates), cell(res.ks),
                                cell(res.ks_critical), cell(res.worst_bijection_rel_err)});
    char line[160];
    std::snprintf(line, sizeof line, "excursion n=%d ks=%.4f (critical %.4f) bij_err=%.2e", n,
                  res.ks, res.ks_critical, res.worst_bijection_rel_err);
    out.lines.emplace_back(line);
    return out;
}

// -------------------------------------------------------------- couple-demo

Point param_point(const json& params, const std::string& key, Point fallback) {
    if (!param_present(params, key))
        return fallback;
    const json& p = params[key];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
        throw ConfigInvalid(key + ": expected [x, t]");
    return Point{p[0].get<int>(), p[1].get<int>()};
}

OutputBundle run_couple_demo(const ExperimentConfig& cfg, const EstimatorContext& ctx) {
    const Point u = param_point(cfg.params, "u", Point{0, 0});
    const Point v = param_point(cfg.params, "v", Point{0, 12});
    const Point u2 = param_point(cfg.params, "u2", Point{2, 0});
    const Point v2 = param_point(cfg.params, "v2", Point{2, 12});
    const int draws = param_present(cfg.params, "draws") ? param_int(cfg.params, "draws") : 10000;

    const Region cone_l = Region::cone(u, v, ctx.geometry == Geometry::HalfSpace);
    const Region cone_r = Region::cone(u2, v2, ctx.geometry == Geometry::HalfSpace);
    const Region joint{std::min(cone_l.x_min, cone_r.x_min),
                       std::max(cone_l.x_max, cone_r.x_max), u.t, v.t};
    const auto env = Environment::sample(ctx.model, joint,
                                         hash_words({ctx.master_seed, rng_tag::kEnvSeed,
                                                     static_cast<uint64_t>(ExperimentId::CoupleDemo),
                                                     0, 0}));
    CoupledSampler sampler(u, v, u2, v2, env, ctx.mode);
    CounterRng rng = CounterRng::from_words({ctx.master_seed, rng_tag::kDraw,
                                             static_cast<uint64_t>(ExperimentId::CoupleDemo)});
    const int mid = (u.t + v.t) / 2;
    OutputBundle out;
    out.record.replicate_columns = {"draw",      "left_mid",   "right_mid", "ordered", "connected",
                            "overlap_lo", "overlap_hi", "overlap_len", "left_steps",
                            "right_steps"};
    out.record.summary_columns = {"draws", "ordered_fraction", "connected_fraction", "mean_overlap_len"};
    int ordered_count = 0;
    int connected_count = 0;
    double overlap_total = 0.0;
    for (int d = 0; d < draws; ++d) {
        const auto pair = sampler.draw(rng);
        const auto l = pair.left.positions();
        const auto r = pair.right.positions();
        bool ordered = true;
        int runs = 0;
        bool in_run = false;
        for (size_t i = 0; i < l.size(); ++i) {
            ordered = ordered && l[i] <= r[i];
            const bool same = l[i] == r[i];
            if (same && !in_run)
                ++runs;
            in_run = same;
        }
        const auto summary = coalescence_summary(pair);
        ordered_count += ordered;
        connected_count += runs <= 1;
        overlap_total += summary.overlap_length;
        out.record.replicate_rows.push_back(
            {cell(d), cell(pair.left.position(mid)), cell(pair.right.position(mid)),
             cell(ordered ? 1 : 0), cell(runs <= 1 ? 1 : 0),
             cell(summary.overlap_interval ? summary.overlap_interval->first : -1),
             cell(summary.overlap_interval ? summary.overlap_interval->second : -1),
             cell(summary.overlap_length), pair.left.step_string(),
             pair.right.step_string()});
    }
    out.record.summary_rows.push_back({cell(draws), cell(static_cast<double>(ordered_count) / draws),
                                cell(static_cast<double>(connected_count) / draws),
                                cell(overlap_total / draws)});
    char line[200];
    std::snprintf(line, sizeof line,
                  "couple-demo draws=%d ordered=%.4f connected=%.4f mean_overlap=%.2f", draws,
                  static_cast<double>(ordered_count) / draws,
                  static_cast<double>(connected_count) / draws, overlap_total / draws);
    out.lines.emplace_back(line);
    return out;
}

// ----------------------------------------------------------------- validate

OutputBundle run_validate(const ExperimentConfig& cfg, const EstimatorContext& ctx,
                          bool& all_pass) {
    const int instances =
        param_present(cfg.params, "instances") ? param_int(cfg.params, "instances") : 200;
    const auto report = validate_against_oracle(ctx.master_seed, instances);
    all_pass = report.all_pass();
    OutputBundle out;
    out.record.replicate_columns = {"check", "instances", "failures", "worst_error", "pass"};
    out.record.summary_columns = out.record.replicate_columns;
    for (const auto& c : report.checks) {
        const std::vector<std::string> row = {c.name, cell(c.instances), cell(c.failures),
                                              cell(c.worst_error), cell(c.pass() ? 1 : 0)};
        out.record.replicate_rows.push_back(row);
        out.record.summary_rows.push_back(row);
        char line[200];
        std::snprintf(line, sizeof line, "validate %-28s instances=%-4d failures=%-3d worst=%.3e %s",
                      c.name.c_str(), c.instances, c.failures, c.worst_error,
                      c.pass() ? "PASS" : "FAIL");
        out.lines.emplace_back(line);
    }
    return out;
}

int default_replicates(const std::string& experiment) {
    if (experiment == "clt")
        return 2000;
    if (experiment == "variance")
        return 1000;
    if (experiment == "excursion")
        return 10000;
    if (experiment == "efron-stein")
        return 200;
    return 200;
}

void dump_environments(const ExperimentConfig& cfg, const EstimatorContext& ctx,
                       std::vector<std::string>& files) {
    // Snapshots of the replicate environments at the primary parameter point.
    ExperimentId id;
    int n;
    if (cfg.experiment == "lln") {
        id = ExperimentId::Lln;
        n = param_present(cfg.params, "n_list") ? param_int_list(cfg.params, "n_list")[0] : 2000;
    } else if (cfg.experiment == "clt") {
        id = ExperimentId::Clt;
        n = param_present(cfg.params, "n") ? param_int(cfg.params, "n") : 2000;
    } else if (cfg.experiment == "variance") {
        id = ExperimentId::Variance;
        n = param_present(cfg.params, "n_list") ? param_int_list(cfg.params, "n_list")[0] : 200;
    } else if (cfg.experiment == "midpoint") {
        id = ExperimentId::Midpoint;
        n = param_present(cfg.params, "n") ? param_int(cfg.params, "n") : 2000;
    } else {
        return; // snapshots are defined for the environment-per-replicate runs
    }
    const Region region = Region::cone(Point{0, 0}, Point{0, n},
                                       ctx.geometry == Geometry::HalfSpace);
    for (int r = 0; r < ctx.replicates; ++r) {
        const uint64_t seed = hash_words({ctx.master_seed, rng_tag::kEnvSeed,
                                          static_cast<uint64_t>(id), static_cast<uint64_t>(n),
                                          static_cast<uint64_t>(r)});
        const auto env = Environment::sample(ctx.model, region, seed);
        const std::string name = "env-" + std::to_string(r) + ".hspe";
        save_snapshot(env, cfg.out_dir + "/" + name);
        files.push_back(name);
    }
}

} // namespace

int run_experiment(const ExperimentConfig& cfg, bool quiet) {
    const EstimatorContext ctx = make_context(cfg, default_replicates(cfg.experiment));
    fs::create_directories(cfg.out_dir);

    Manifest manifest;
    manifest.artifact_version = kArtifactVersion;
    ExperimentConfig effective = cfg;
    effective.replicates = ctx.replicates;
    manifest.config = effective.to_json();
    manifest.config_hash = effective.config_hash();
    manifest.master_seed = cfg.seed;
    manifest.started_utc = utc_now();

    bool validate_pass = true;
    OutputBundle bundle;
    if (cfg.experiment == "lln")
        bundle = run_lln(cfg, ctx);
    else if (cfg.experiment == "pinning")
        bundle = run_pinning(cfg, ctx);
    else if (cfg.experiment == "midpoint")
        bundle = run_midpoint(cfg, ctx);
    else if (cfg.experiment == "variance")
        bundle = run_variance(cfg, ctx);
    else if (cfg.experiment == "clt")
        bundle = run_clt(cfg, ctx);
    else if (cfg.experiment == "blocks")
        bundle = run_blocks(cfg, ctx);
    else if (cfg.experiment == "near-vertical")
        bundle = run_near_vertical(cfg, ctx);
    else if (cfg.experiment == "ldp")
        bundle = run_ldp(cfg, ctx);
    else if (cfg.experiment == "influence")
        bundle = run_influence(cfg, ctx);
    else if (cfg.experiment == "efron-stein")
        bundle = run_efron_stein(cfg, ctx);
    else if (cfg.experiment == "lindeberg")
        bundle = run_lindeberg(cfg, ctx);
    else if (cfg.experiment == "excursion")
        bundle = run_excursion(cfg, ctx);
    else if (cfg.experiment == "couple-demo")
        bundle = run_couple_demo(cfg, ctx);
    else if (cfg.experiment == "validate")
        bundle = run_validate(cfg, ctx, validate_pass);
    else
        throw ConfigInvalid("experiment: unknown experiment '" + cfg.experiment + "'");

    bundle.record.experiment = cfg.experiment;
    bundle.record.config_hash = manifest.config_hash;
    bundle.record.seed = cfg.seed;
    write_csv(cfg.out_dir + "/replicates.csv", bundle.record.replicate_columns,
              bundle.record.replicate_rows);
    write_csv(cfg.out_dir + "/summary.csv", bundle.record.summary_columns,
              bundle.record.summary_rows);
    std::vector<std::string> files = {"replicates.csv", "summary.csv"};
    if (cfg.dump_env)
        dump_environments(cfg, ctx, files);

    for (const std::string& name : files) {
        std::ifstream f(cfg.out_dir + "/" + name, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        manifest.outputs.push_back(
            Manifest::Output{name, bytes.size(), fnv1a64_hex(bytes)});
    }
    manifest.finished_utc = utc_now();
    {
        std::ofstream mf(cfg.out_dir + "/manifest.json", std::ios::binary);
        if (!mf)
            throw IoError("run_experiment: cannot write manifest");
        mf << manifest.to_json().dump(2) << "\n";
    }

    if (!quiet)
        for (const std::string& line : bundle.lines)
            std::printf("%s\n", line.c_str());
    return cfg.experiment == "validate" && !validate_pass ? 1 : 0;
}

} // namespace polymer
