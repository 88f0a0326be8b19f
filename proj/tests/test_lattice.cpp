#include <doctest.h>

#include "polymer/environment.hpp"
#include "polymer/lattice.hpp"
#include "polymer/rng.hpp"

using namespace polymer;

TEST_CASE("feasible") {
    CHECK(feasible({0, 0}, {0, 2}));
    CHECK_FALSE(feasible({0, 0}, {0, 3})); // parity mismatch
    CHECK_FALSE(feasible({0, 0}, {5, 3})); // |dx| > dt
    CHECK_FALSE(feasible({0, 0}, {0, 0}));
    CHECK_FALSE(feasible({0, 2}, {0, 0}));
    CHECK(feasible({3, -1}, {0, 2}));
}

TEST_CASE("enumerate_paths forced and small") {
    auto forced = enumerate_paths({0, 0}, {0, 2});
    REQUIRE(forced.size() == 1);
    CHECK(forced[0].positions() == std::vector<int>{0, 1, 0});

    auto rr = enumerate_paths({0, 0}, {2, 2});
    REQUIRE(rr.size() == 1);
    CHECK(rr[0].step_string() == "RR");

    auto two = enumerate_paths({0, 0}, {0, 4});
    REQUIRE(two.size() == 2);
    CHECK(two[0].position(2) == 0);
    CHECK(two[1].position(2) == 2);
    // lexicographic order, LeftUp < RightUp
    CHECK(two[0].step_string() < two[1].step_string());
}

TEST_CASE("enumerate_paths cap") {
    CHECK_THROWS_AS(enumerate_paths({0, 0}, {0, 20}, 10), CapExceeded);
    CHECK_THROWS_AS(enumerate_paths({0, 0}, {1, 2}, 10), PreconditionViolated);
}

TEST_CASE("count_paths") {
    CHECK(count_paths({0, 0}, {0, 4}) == 2);
    CHECK(count_paths({0, 0}, {0, 6}) == 5);
    CHECK(count_paths({0, 0}, {1, 2}) == 0);
    CHECK(count_paths({0, 0}, {0, 24}) == bigint("208012"));
}

TEST_CASE("count_paths equals Catalan numbers, Catalan recurrence") {
    std::vector<bigint> c(13);
    for (int m = 0; m <= 12; ++m)
        c[static_cast<size_t>(m)] = catalan(m);
    // recurrence C_{m+1} = sum C_i C_{m-i}
    for (int m = 0; m < 12; ++m) {
        bigint s = 0;
        for (int i = 0; i <= m; ++i)
            s += c[static_cast<size_t>(i)] * c[static_cast<size_t>(m - i)];
        CHECK(c[static_cast<size_t>(m + 1)] == s);
    }
    for (int m = 1; m <= 12; ++m)
        CHECK(count_paths({0, 0}, {0, 2 * m}) == c[static_cast<size_t>(m)]);
}

TEST_CASE("enumeration count matches counting DP on random instances") {
    CounterRng rng(12345);
    for (int i = 0; i < 40; ++i) {
        const int x1 = static_cast<int>(rng.next_u64() % 4);
        const int t = 2 + static_cast<int>(rng.next_u64() % 11);
        int x2 = x1 + static_cast<int>(rng.next_u64() % (2 * static_cast<uint64_t>(t) + 1)) - t;
        if ((x2 - x1 - t) % 2 != 0)
            ++x2;
        if (x2 < 0 || !feasible({x1, 0}, {x2, t}))
            continue;
        const bigint c = count_paths({x1, 0}, {x2, t});
        REQUIRE(c <= 100000);
        auto paths = enumerate_paths({x1, 0}, {x2, t}, 100000);
        CHECK(bigint(paths.size()) == c);
        for (const auto& p : paths) {
            CHECK(p.start() == Point{x1, 0});
            CHECK(p.end() == Point{x2, t});
        }
    }
}

TEST_CASE("directed path invariants") {
    CHECK_THROWS_AS(DirectedPath({0, 0}, {Step::LeftUp}), PreconditionViolated);
    CHECK_THROWS_AS(DirectedPath::from_positions(0, {0, 2}), PreconditionViolated);
    auto p = DirectedPath::from_positions(3, {1, 0, 1, 2});
    CHECK(p.start() == Point{1, 3});
    CHECK(p.end() == Point{2, 6});
    CHECK(p.size() == 3);
    CHECK(p.step_string() == "LRR");
    CHECK(p.touches(0, 4));
    CHECK_FALSE(p.touches(2, 4));
}

TEST_CASE("hamiltonian") {
    auto path = enumerate_paths({0, 0}, {0, 2})[0];
    auto c2 = DenseField::filled(Region{0, 4, 0, 4}, 2.0);
    CHECK(hamiltonian(path, c2) == doctest::Approx(6.0)); // 3 visited points

    auto ones = DenseField::filled(Region{0, 8, 0, 8}, 1.0);
    for (const auto& p : enumerate_paths({0, 0}, {0, 8}))
        CHECK(hamiltonian(p, ones) == doctest::Approx(9.0)); // n+1 points

    auto f = DenseField::filled(Region{0, 4, 0, 4}, 1.0);
    f.at(0, 0) = 1.0;
    f.at(1, 1) = 2.0;
    f.at(0, 2) = 3.0;
    CHECK(hamiltonian(path, f) == doctest::Approx(6.0));

    auto tiny = DenseField::filled(Region{0, 1, 0, 1}, 1.0);
    CHECK_THROWS_AS(hamiltonian(path, tiny), OutOfRegion);
}

TEST_CASE("hamiltonian additive under concatenation minus shared junction") {
    CounterRng rng(99);
    auto env = Environment::sample(
        WeightSpec{DistributionSpec::exponential(1.0), DistributionSpec::exponential(0.5)},
        Region{0, 20, 0, 20}, 7);
    for (int rep = 0; rep < 20; ++rep) {
        const int t_mid = 2 + static_cast<int>(rng.next_u64() % 4);
        const int t_end = t_mid + 2 + static_cast<int>(rng.next_u64() % 4);
        const int x_mid = static_cast<int>(rng.next_u64() % 3);
        if (!feasible({0, 0}, {x_mid, t_mid}) || !feasible({x_mid, t_mid}, {0, t_end}))
            continue;
        auto lower = enumerate_paths({0, 0}, {x_mid, t_mid})[0];
        auto upper = enumerate_paths({x_mid, t_mid}, {0, t_end})[0];
        auto lo_pos = lower.positions();
        auto hi_pos = upper.positions();
        std::vector<int> joined(lo_pos.begin(), lo_pos.end());
        joined.insert(joined.end(), hi_pos.begin() + 1, hi_pos.end());
        auto whole = DirectedPath::from_positions(0, joined);
        const double expect = hamiltonian(lower, env) + hamiltonian(upper, env) -
                              env.weight(x_mid, t_mid);
        CHECK(hamiltonian(whole, env) == doctest::Approx(expect).epsilon(1e-12));
    }
}
