#include <doctest.h>

#include <map>

#include "oracle.hpp"
#include "polymer/sampling.hpp"
#include "polymer/stats.hpp"

using namespace polymer;

namespace {

DenseField ones(int size) { return DenseField::filled(Region{0, size, 0, size}, 1.0); }

Environment random_env(uint64_t seed) {
    WeightSpec spec{DistributionSpec::exponential(1.0), DistributionSpec::exponential(0.25)};
    return Environment::sample(spec, Region{0, 40, 0, 40}, seed);
}

} // namespace

TEST_CASE("forced path sampled deterministically") {
    auto env = ones(4);
    CounterRng rng(1);
    for (int i = 0; i < 5; ++i) {
        auto s = sample_polymer({0, 0}, {0, 2}, env, rng);
        CHECK(s.path.positions() == std::vector<int>{0, 1, 0});
        CHECK(s.log_density == doctest::Approx(0.0));
    }
}

TEST_CASE("empirical midpoint frequencies on symmetric and tilted instances") {
    auto env = ones(4);
    const DpTable fwd = forward_table(Query{{0, 0}, {0, 4}, Mode::PositiveTemperature}, env);
    CounterRng rng = CounterRng::from_words({rng_tag::kDraw, 1});
    int at_zero = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i)
        if (sample_polymer(fwd, rng).path.position(2) == 0)
            ++at_zero;
    CHECK(std::abs(static_cast<double>(at_zero) / draws - 0.5) < 0.005);

    auto tilted = ones(4);
    tilted.at(0, 2) = 2.0;
    tilted.at(2, 2) = 1.0;
    const DpTable fwd2 = forward_table(Query{{0, 0}, {0, 4}, Mode::PositiveTemperature}, tilted);
    CounterRng rng2 = CounterRng::from_words({rng_tag::kDraw, 2});
    at_zero = 0;
    for (int i = 0; i < draws; ++i)
        if (sample_polymer(fwd2, rng2).path.position(2) == 0)
            ++at_zero;
    const double expect = std::exp(2.0) / (std::exp(2.0) + std::exp(1.0));
    CHECK(std::abs(static_cast<double>(at_zero) / draws - expect) < 0.005);
}

TEST_CASE("log density equals H - F and sums to one over enumerated paths") {
    auto env = random_env(77);
    const Point u{0, 0};
    const Point v{0, 8};
    const double f = free_energy(Query{u, v, Mode::PositiveTemperature}, env);
    const DpTable fwd = forward_table(Query{u, v, Mode::PositiveTemperature}, env);
    CounterRng rng = CounterRng::from_words({rng_tag::kDraw, 3});
    for (int i = 0; i < 200; ++i) {
        auto s = sample_polymer(fwd, rng);
        CHECK(s.log_density ==
              doctest::Approx(hamiltonian(s.path, env) - f).epsilon(1e-9));
    }
    double total = 0.0;
    for (const auto& p : enumerate_paths(u, v))
        total += std::exp(hamiltonian(p, env) - f);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sampler chi-square against exact path probabilities") {
    // Moderate battery here; the acceptance suite runs the full one.
    for (uint64_t seed : {101, 102, 103}) {
        auto env = random_env(seed);
        const Point u{0, 0};
        const Point v{0, 10};
        auto paths = enumerate_paths(u, v);
        auto probs = oracle::path_distribution(u, v, env);
        std::map<std::string, size_t> index;
        for (size_t i = 0; i < paths.size(); ++i)
            index[paths[i].step_string()] = i;
        const DpTable fwd = forward_table(Query{u, v, Mode::PositiveTemperature}, env);
        CounterRng rng = CounterRng::from_words({rng_tag::kDraw, seed});
        const int draws = 100000;
        std::vector<int> counts(paths.size(), 0);
        for (int i = 0; i < draws; ++i)
            ++counts[index.at(sample_polymer(fwd, rng).path.step_string())];
        double chi2 = 0.0;
        for (size_t i = 0; i < paths.size(); ++i) {
            const double expect = probs[i] * draws;
            chi2 += (counts[i] - expect) * (counts[i] - expect) / expect;
        }
        const double crit = chi_square_quantile(0.999, static_cast<double>(paths.size() - 1));
        CHECK(chi2 < crit);
    }
}

TEST_CASE("leftmost geodesic ties and dominant weights") {
    auto env = ones(4);
    auto g = leftmost_geodesic({0, 0}, {0, 4}, env);
    CHECK(g.positions() == std::vector<int>{0, 1, 0, 1, 0}); // tie broken leftward

    auto f = ones(4);
    f.at(2, 2) = 100.0;
    CHECK(leftmost_geodesic({0, 0}, {0, 4}, f).position(2) == 2);
}

TEST_CASE("leftmost geodesic matches the oracle lexicographic-minimal maximizer") {
    CounterRng rng(31);
    int done = 0;
    for (uint64_t i = 0; done < 200; ++i) {
        const int x1 = static_cast<int>(rng.next_u64() % 3);
        const int t = 2 + static_cast<int>(rng.next_u64() % 11);
        int x2 = x1 + static_cast<int>(rng.next_u64() % (2 * static_cast<uint64_t>(t) + 1)) - t;
        if ((x2 - x1 - t) % 2 != 0)
            ++x2;
        if (x2 < 0 || !feasible({x1, 0}, {x2, t}))
            continue;
        if (count_paths({x1, 0}, {x2, t}) > 3000)
            continue;
        auto env = random_env(70000 + i);
        ++done;
        auto dp = leftmost_geodesic({x1, 0}, {x2, t}, env);
        auto lex = oracle::lex_minimal_geodesic({x1, 0}, {x2, t}, env);
        CHECK(dp == lex);
        // pointwise minimal among all geodesics found by the oracle
        const double l = hamiltonian(lex, env);
        for (const auto& p : enumerate_paths({x1, 0}, {x2, t}))
            if (hamiltonian(p, env) == l)
                for (int h = 0; h <= t; ++h)
                    CHECK(dp.position(h) <= p.position(h));
    }
}

TEST_CASE("coupled pair with identical endpoints collapses to one path") {
    auto env = random_env(5);
    CounterRng rng = CounterRng::from_words({rng_tag::kDraw, 55});
    for (int i = 0; i < 20; ++i) {
        auto pair = coupled_pair({0, 0}, {0, 8}, {0, 0}, {0, 8}, env, rng);
        CHECK(pair.left == pair.right);
        REQUIRE(pair.meet_low.has_value());
        CHECK(pair.meet_low->t == 0);
        CHECK(pair.meet_high->t == 8);
    }
}

TEST_CASE("coupling preconditions") {
    auto env = random_env(6);
    CounterRng rng(1);
    CHECK_THROWS_AS(coupled_pair({2, 0}, {0, 8}, {0, 0}, {0, 8}, env, rng), PreconditionViolated);
    CHECK_THROWS_AS(coupled_pair({0, 0}, {0, 8}, {1, 0}, {1, 8}, env, rng), PreconditionViolated);
    CHECK_THROWS_AS(coupled_pair({0, 0}, {0, 8}, {2, 1}, {2, 8}, env, rng), PreconditionViolated);
}

TEST_CASE("coupling ordering and connected intersection on random instances") {
    CounterRng meta(32);
    int done = 0;
    for (uint64_t i = 0; done < 50; ++i) {
        const int t = 4 + 2 * static_cast<int>(meta.next_u64() % 5);
        const int x1 = 2 * static_cast<int>(meta.next_u64() % 3);
        const int y1 = x1 + 2 * static_cast<int>(meta.next_u64() % 3);
        const int x2 = 2 * static_cast<int>(meta.next_u64() % 3);
        const int y2 = x2 + 2 * static_cast<int>(meta.next_u64() % 3);
        if (!feasible({x1, 0}, {x2, t}) || !feasible({y1, 0}, {y2, t}))
            continue;
        auto env = random_env(90000 + i);
        CoupledSampler sampler({x1, 0}, {x2, t}, {y1, 0}, {y2, t}, env);
        CounterRng rng = CounterRng::from_words({rng_tag::kDraw, 900 + i});
        ++done;
        for (int d = 0; d < 200; ++d) {
            auto pair = sampler.draw(rng);
            auto l = pair.left.positions();
            auto r = pair.right.positions();
            bool was_equal_run_over = false;
            bool connected = true;
            for (size_t h = 0; h < l.size(); ++h) {
                CHECK(l[h] <= r[h]);
                if (l[h] == r[h]) {
                    if (was_equal_run_over)
                        connected = false;
                } else if (h > 0 && l[h - 1] == r[h - 1]) {
                    was_equal_run_over = true;
                }
            }
            CHECK(connected);
        }
    }
}

TEST_CASE("coupling marginals: TV distance of midpoint histograms") {
    auto env = random_env(123);
    const Point u{0, 0};
    const Point v{0, 12};
    const Point u2{2, 0};
    const Point v2{2, 12};
    CoupledSampler sampler(u, v, u2, v2, env);
    const DpTable direct_left = forward_table(Query{u, v, Mode::PositiveTemperature}, env);
    const DpTable direct_right = forward_table(Query{u2, v2, Mode::PositiveTemperature}, env);
    CounterRng rng_c = CounterRng::from_words({rng_tag::kDraw, 7001});
    CounterRng rng_l = CounterRng::from_words({rng_tag::kDraw, 7002});
    CounterRng rng_r = CounterRng::from_words({rng_tag::kDraw, 7003});
    const int draws = 10000;
    std::map<int, double> cl, cr, dl, dr;
    for (int i = 0; i < draws; ++i) {
        auto pair = sampler.draw(rng_c);
        cl[pair.left.position(6)] += 1.0;
        cr[pair.right.position(6)] += 1.0;
        dl[sample_polymer(direct_left, rng_l).path.position(6)] += 1.0;
        dr[sample_polymer(direct_right, rng_r).path.position(6)] += 1.0;
    }
    auto tv = [&](std::map<int, double>& a, std::map<int, double>& b) {
        double d = 0.0;
        for (auto& [x, c] : a)
            d += std::abs(c - (b.count(x) ? b[x] : 0.0));
        for (auto& [x, c] : b)
            if (!a.count(x))
                d += c;
        return d / (2.0 * draws);
    };
    CHECK(tv(cl, dl) <= 0.03);
    CHECK(tv(cr, dr) <= 0.03);
}

TEST_CASE("zero-temperature coupling uses leftmost geodesics") {
    auto env = random_env(321);
    CounterRng rng(1);
    auto pair = coupled_pair({0, 0}, {0, 10}, {2, 0}, {2, 10}, env, rng, Mode::ZeroTemperature);
    CHECK(pair.left == leftmost_geodesic({0, 0}, {0, 10}, env));
    CHECK(pair.right == leftmost_geodesic({2, 0}, {2, 10}, env));
    auto l = pair.left.positions();
    auto r = pair.right.positions();
    for (size_t h = 0; h < l.size(); ++h)
        CHECK(l[h] <= r[h]);
}

TEST_CASE("coalescence summary") {
    auto a = DirectedPath::from_positions(0, {0, 1, 0, 1, 0});
    auto b = DirectedPath::from_positions(0, {0, 1, 0, 1, 0});
    auto full = coalescence_summary({a, b, {}, {}});
    CHECK(full.overlap_interval == std::pair<int, int>{0, 4});
    CHECK(full.overlap_length == 5);

    auto c = DirectedPath::from_positions(0, {2, 3, 2, 3, 2});
    auto disjoint = coalescence_summary({a, c, {}, {}});
    CHECK_FALSE(disjoint.overlap_interval.has_value());
    CHECK(disjoint.overlap_length == 0);
}

TEST_CASE("stage-1 overlap runs from the meeting time to the shared endpoint") {
    auto env = random_env(555);
    const Point u{0, 0};
    const Point v{2, 10};
    const Point u2{4, 0};
    CoupledSampler sampler(u, v, u2, v, env);
    CounterRng rng = CounterRng::from_words({rng_tag::kDraw, 8100});
    for (int i = 0; i < 200; ++i) {
        auto pair = sampler.draw(rng);
        auto sum = coalescence_summary(pair);
        REQUIRE(sum.overlap_interval.has_value()); // shared endpoint forces a meet
        CHECK(sum.overlap_interval->second == v.t);
        // the paths coincide from the first common height onward
        auto l = pair.left.positions();
        auto r = pair.right.positions();
        for (int h = sum.overlap_interval->first; h <= v.t; ++h)
            CHECK(l[static_cast<size_t>(h)] == r[static_cast<size_t>(h)]);
    }
}

TEST_CASE("local highway geometry forces agreement at the block midpoint") {
    // Couple a constrained-start polymer segment with the block polymer; when
    // the block polymer hits the wall near both block ends, planarity plus
    // connectedness force the two to agree at the midpoint.
    const int J = 16;
    const int s = 0;
    const int t = 2 * J;
    const int m = J;
    const int root_j = 4;  // floor(sqrt(16))
    const int w = 8;       // floor(16^{3/4})
    int checked = 0;
    for (uint64_t seed = 0; seed < 40; ++seed) {
        auto env = random_env(100000 + seed);
        CoupledSampler sampler({0, s}, {0, t}, {root_j, s}, {root_j, t}, env);
        CounterRng rng = CounterRng::from_words({rng_tag::kDraw, 8200 + seed});
        for (int d = 0; d < 50; ++d) {
            auto pair = sampler.draw(rng);
            auto g = pair.right.positions();
            bool hits_low = false;
            bool hits_high = false;
            for (int h = s; h <= s + w; ++h)
                hits_low |= g[static_cast<size_t>(h - s)] == 0;
            for (int h = t - w; h <= t; ++h)
                hits_high |= g[static_cast<size_t>(h - s)] == 0;
            if (hits_low && hits_high) {
                ++checked;
                CHECK(pair.left.position(m) == pair.right.position(m));
            }
        }
    }
    CHECK(checked > 100);
}
