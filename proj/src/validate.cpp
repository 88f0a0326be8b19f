#include <algorithm>
#include <cmath>
#include <map>

#include "polymer/events.hpp"
#include "polymer/harness.hpp"
#include "polymer/sampling.hpp"
#include "polymer/stats.hpp"

namespace polymer {

namespace {

// Local enumeration-based reference values. These fold over
// lattice::enumerate_paths and hamiltonian only and never touch the DP
// recursion they are checking.

template <class Field>
double oracle_free_energy(Point u, Point v, const Field& field) {
    auto paths = enumerate_paths(u, v, 100000);
    std::vector<double> hs;
    hs.reserve(paths.size());
    for (const auto& p : paths)
        hs.push_back(hamiltonian(p, field));
    const double m = *std::max_element(hs.begin(), hs.end());
    double sum = 0.0;
    for (double h : hs)
        sum += std::exp(h - m);
    return m + std::log(sum);
}

template <class Field>
double oracle_last_passage(Point u, Point v, const Field& field) {
    double best = kNegInf;
    for (const auto& p : enumerate_paths(u, v, 100000))
        best = std::max(best, hamiltonian(p, field));
    return best;
}

template <class Field>
DirectedPath oracle_lex_geodesic(Point u, Point v, const Field& field) {
    auto paths = enumerate_paths(u, v, 100000);
    size_t best = 0;
    double best_h = hamiltonian(paths[0], field);
    for (size_t i = 1; i < paths.size(); ++i) {
        const double h = hamiltonian(paths[i], field);
        if (h > best_h) {
            best_h = h;
            best = i;
        }
    }
    return paths[best];
}

bool oracle_event(const DirectedPath& path, const EventSpec& ev) {
    const auto positions = path.positions();
    const int t0 = path.start().t;
    if (ev.pure_conjunction) {
        for (const auto& p : ev.primitives)
            if (!detail::path_satisfies(positions, t0, p))
                return false;
        return true;
    }
    uint16_t a = 0;
    for (size_t i = 0; i < ev.primitives.size(); ++i)
        if (detail::path_satisfies(positions, t0, ev.primitives[i]))
            a |= static_cast<uint16_t>(1u << i);
    return std::find(ev.satisfying.begin(), ev.satisfying.end(), a) != ev.satisfying.end();
}

template <class Field>
double oracle_event_probability(Point u, Point v, const Field& field, const EventSpec& ev) {
    auto paths = enumerate_paths(u, v, 100000);
    std::vector<double> hs;
    hs.reserve(paths.size());
    for (const auto& p : paths)
        hs.push_back(hamiltonian(p, field));
    const double m = *std::max_element(hs.begin(), hs.end());
    double total = 0.0;
    double inside = 0.0;
    for (size_t i = 0; i < paths.size(); ++i) {
        const double w = std::exp(hs[i] - m);
        total += w;
        if (oracle_event(paths[i], ev))
            inside += w;
    }
    return inside / total;
}

struct InstanceGen {
    CounterRng rng;
    uint64_t next_env_seed = 1;

    explicit InstanceGen(uint64_t seed)
        : rng(hash_words({seed, rng_tag::kEnvSeed, static_cast<uint64_t>(ExperimentId::Validate)})) {}

    std::pair<Query, Environment> next(int64_t max_paths = 10000, int64_t min_paths = 1) {
        for (;;) {
            const int x1 = static_cast<int>(rng.next_u64() % 3);
            const int t = 2 + static_cast<int>(rng.next_u64() % 11);
            int x2 = x1 + static_cast<int>(rng.next_u64() % (2 * static_cast<uint64_t>(t) + 1)) - t;
            if ((x2 - x1 - t) % 2 != 0)
                ++x2;
            if (x2 < 0 || !feasible({x1, 0}, {x2, t}))
                continue;
            const bigint count = count_paths({x1, 0}, {x2, t});
            if (count > max_paths || count < min_paths)
                continue;
            const bool gamma_bulk = rng.next_u64() % 2 == 0;
            const bool gamma_vert = rng.next_u64() % 2 == 0;
            const WeightSpec spec{
                gamma_bulk ? DistributionSpec::gamma(2.0, 2.0) : DistributionSpec::exponential(1.0),
                gamma_vert ? DistributionSpec::gamma(0.7, 0.5)
                           : DistributionSpec::exponential(0.25)};
            const auto env = Environment::sample(spec, Region{0, 30, -1, 16}, next_env_seed++);
            return {Query{Point{x1, 0}, Point{x2, t}, Mode::PositiveTemperature,
                          Geometry::HalfSpace, Mask{}},
                    env};
        }
    }
};

void record(ValidationCheck& check, double err, double tol) {
    ++check.instances;
    check.worst_error = std::max(check.worst_error, err);
    if (!(err <= tol))
        ++check.failures;
}

} // namespace

ValidationReport validate_against_oracle(uint64_t seed, int instance_count, FaultInjection fault) {
    ValidationReport report;
    ValidationCheck free_energy_check{"free_energy_vs_enumeration"};
    ValidationCheck last_passage_check{"last_passage_exact"};
    ValidationCheck geodesic_check{"leftmost_geodesic_vs_oracle"};
    ValidationCheck event_check{"event_probability_vs_ratio"};
    ValidationCheck profile_check{"profile_recombination"};
    ValidationCheck sampler_chi2{"sampler_chi_square_0.1pct"};
    ValidationCheck sampler_density{"sampler_log_density"};
    ValidationCheck coupling_hard{"coupling_order_connected"};
    ValidationCheck coupling_tv{"coupling_marginal_tv"};

    InstanceGen gen(seed);
    for (int i = 0; i < instance_count; ++i) {
        auto [q, env] = gen.next();
        const Point u = q.u;
        const Point v = q.v;

        double f_dp = free_energy(q, env);
        if (fault == FaultInjection::FlipFreeEnergySign)
            f_dp = -f_dp;
        const double f_or = oracle_free_energy(u, v, env);
        record(free_energy_check, std::abs(f_dp - f_or) / std::max(1.0, std::abs(f_or)), 1e-9);

        Query zq = q;
        zq.mode = Mode::ZeroTemperature;
        const double l_dp = free_energy(zq, env);
        const double l_or = oracle_last_passage(u, v, env);
        record(last_passage_check, l_dp == l_or ? 0.0 : std::abs(l_dp - l_or), 0.0);

        const auto geo_dp = leftmost_geodesic(u, v, env);
        const auto geo_or = oracle_lex_geodesic(u, v, env);
        record(geodesic_check, geo_dp == geo_or ? 0.0 : 1.0, 0.0);

        // Event battery: avoid / hit / window / two-primitive combination.
        const int s_lo = u.t + 1;
        const int s_hi = std::max(s_lo, v.t - 1);
        const int mid = (s_lo + s_hi) / 2;
        const int h = u.t + 1 + static_cast<int>(gen.rng.next_u64() %
                                                 static_cast<uint64_t>(v.t - u.t - 1));
        const std::vector<EventSpec> events = {
            EventSpec::avoids(Segment::vertical(0, s_lo, s_hi)),
            EventSpec::hits(Segment::vertical(0, s_lo, s_hi)),
            EventSpec::position_in(h, 0, 1 + static_cast<int>(gen.rng.next_u64() % 3)),
            EventSpec::from_formula(
                {EventSpec::Primitive::avoids(Segment::vertical(0, s_lo, mid)),
                 EventSpec::Primitive::avoids(Segment::vertical(0, mid, s_hi))},
                [](uint16_t a) { return a == 0; }),
        };
        for (const auto& ev : events) {
            const double p_dp = event_probability(q, env, ev);
            const double p_or = oracle_event_probability(u, v, env, ev);
            record(event_check, std::abs(p_dp - p_or), 1e-9);
        }

        if (v.t - u.t >= 2) {
            const int ph = u.t + 1 + static_cast<int>(gen.rng.next_u64() %
                                                      static_cast<uint64_t>(v.t - u.t - 1));
            const auto fwd = profile(q, env, ph, Direction::Forward);
            const auto bwd = profile(q, env, ph, Direction::Backward);
            const double rec =
                recombine(fwd, bwd, q.mode, [&](int x, int t) { return env.weight(x, t); });
            record(profile_check, std::abs(rec - f_or) / std::max(1.0, std::abs(f_or)), 1e-9);
        }
    }

    // Sampler exactness on a fixed subset of instances with <= 1000 paths.
    {
        InstanceGen sampler_gen(hash_words({seed, rng_tag::kDraw, 1}));
        const int sampler_instances = std::min(instance_count, 10);
        for (int i = 0; i < sampler_instances; ++i) {
            auto [q, env] = sampler_gen.next(1000, 10);
            auto paths = enumerate_paths(q.u, q.v, 1000);
            std::vector<double> hs;
            for (const auto& p : paths)
                hs.push_back(hamiltonian(p, env));
            const double m = *std::max_element(hs.begin(), hs.end());
            double total = 0.0;
            for (double hval : hs)
                total += std::exp(hval - m);
            std::map<std::string, size_t> index;
            for (size_t k = 0; k < paths.size(); ++k)
                index[paths[k].step_string()] = k;

            const DpTable fwd = forward_table(q, env);
            CounterRng rng = CounterRng::from_words({seed, rng_tag::kDraw, 100 + static_cast<uint64_t>(i)});
            const int draws = 20000;
            std::vector<int> counts(paths.size(), 0);
            double worst_density = 0.0;
            const double f = fwd.value();
            for (int d = 0; d < draws; ++d) {
                const auto s = sample_polymer(fwd, rng);
                ++counts[index.at(s.path.step_string())];
                const double expect = hamiltonian(s.path, env) - f;
                worst_density = std::max(worst_density, std::abs(s.log_density - expect));
            }
            double chi2 = 0.0;
            for (size_t k = 0; k < paths.size(); ++k) {
                const double expect = std::exp(hs[k] - m) / total * draws;
                chi2 += (counts[k] - expect) * (counts[k] - expect) / expect;
            }
            const double crit =
                chi_square_quantile(0.999, static_cast<double>(paths.size() - 1));
            record(sampler_chi2, chi2 / crit, 1.0);
            record(sampler_density, worst_density, 1e-9);
        }
    }

    // Coupling invariants and marginals.
    {
        InstanceGen couple_gen(hash_words({seed, rng_tag::kDraw, 2}));
        const int pairs = std::min(instance_count, 20);
        for (int i = 0; i < pairs; ++i) {
            auto [q, env] = couple_gen.next();
            const int shift = 2 * static_cast<int>(couple_gen.rng.next_u64() % 3);
            const Point u2{q.u.x + shift, q.u.t};
            const Point v2{q.v.x + shift, q.v.t};
            Region wide = env.region();
            wide.x_max += shift + q.v.t;
            const auto env_wide = Environment::sample(env.spec(), wide, env.seed());
            CoupledSampler sampler(q.u, q.v, u2, v2, env_wide);
            CounterRng rng =
                CounterRng::from_words({seed, rng_tag::kDraw, 200 + static_cast<uint64_t>(i)});
            int bad = 0;
            for (int d = 0; d < 100; ++d) {
                const auto pair = sampler.draw(rng);
                const auto l = pair.left.positions();
                const auto r = pair.right.positions();
                bool ordered = true;
                int runs = 0;
                bool in_run = false;
                for (size_t k = 0; k < l.size(); ++k) {
                    ordered = ordered && l[k] <= r[k];
                    const bool same = l[k] == r[k];
                    if (same && !in_run)
                        ++runs;
                    in_run = same;
                }
                if (!ordered || runs > 1)
                    ++bad;
            }
            record(coupling_hard, static_cast<double>(bad), 0.0);
        }

        // Marginal TV on three fixed moderate instances.
        const int tv_checks = instance_count > 0 ? 3 : 0;
        for (int i = 0; i < tv_checks; ++i) {
            const WeightSpec spec{DistributionSpec::exponential(1.0),
                                  DistributionSpec::exponential(0.25)};
            const auto env = Environment::sample(
                spec, Region{0, 30, 0, 14},
                hash_words({seed, rng_tag::kEnvSeed, 300 + static_cast<uint64_t>(i)}));
            const Point u{0, 0};
            const Point v{0, 12};
            const Point u2{2, 0};
            const Point v2{2, 12};
            CoupledSampler sampler(u, v, u2, v2, env);
            const DpTable direct =
                forward_table(Query{u, v, Mode::PositiveTemperature, Geometry::HalfSpace, Mask{}},
                              env);
            CounterRng rng_c =
                CounterRng::from_words({seed, rng_tag::kDraw, 400 + static_cast<uint64_t>(i)});
            CounterRng rng_d =
                CounterRng::from_words({seed, rng_tag::kDraw, 500 + static_cast<uint64_t>(i)});
            const int draws = 5000;
            std::map<int, double> coupled, direct_hist;
            for (int d = 0; d < draws; ++d) {
                coupled[sampler.draw(rng_c).left.position(6)] += 1.0;
                direct_hist[sample_polymer(direct, rng_d).path.position(6)] += 1.0;
            }
            double tv = 0.0;
            for (const auto& [x, c] : coupled)
                tv += std::abs(c - (direct_hist.count(x) ? direct_hist[x] : 0.0));
            for (const auto& [x, c] : direct_hist)
                if (!coupled.count(x))
                    tv += c;
            tv /= 2.0 * draws;
            record(coupling_tv, tv, 0.03);
        }
    }

    report.checks = {free_energy_check, last_passage_check, geodesic_check,
                     event_check,       profile_check,      sampler_chi2,
                     sampler_density,   coupling_hard,      coupling_tv};
    return report;
}

} // namespace polymer
