#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cctsp/pipeline.hpp"

using namespace cctsp;

namespace {

std::vector<Point> random_coords(int n, RngStream& rng) {
    std::vector<Point> coords(static_cast<std::size_t>(n));
    for (auto& p : coords) {
        p.x = rng.next_uniform(0.0, 100.0);
        p.y = rng.next_uniform(0.0, 100.0);
    }
    return coords;
}

double exhaustive_optimum(const std::vector<Point>& coords) {
    std::vector<int> perm(coords.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = tour_length(coords, perm);
    // fix city 0, permute the rest
    while (std::next_permutation(perm.begin() + 1, perm.end()))
        best = std::min(best, tour_length(coords, perm));
    return best;
}

}  // namespace

TEST_CASE("normalization examples") {
    std::vector<Point> in{{10, 10}, {10, 12}, {12, 10}};
    auto out = normalize_subcomponent(in);
    CHECK(out[0].x == doctest::Approx(0.0));
    CHECK(out[0].y == doctest::Approx(0.0));
    CHECK(out[1].x == doctest::Approx(0.0));
    CHECK(out[1].y == doctest::Approx(1.0));
    CHECK(out[2].x == doctest::Approx(1.0));
    CHECK(out[2].y == doctest::Approx(0.0));

    // already in the unit square: identity
    std::vector<Point> unit{{0, 0}, {1, 0.5}, {0.25, 1}};
    auto same = normalize_subcomponent(unit);
    for (std::size_t i = 0; i < unit.size(); ++i) {
        CHECK(same[i].x == doctest::Approx(unit[i].x));
        CHECK(same[i].y == doctest::Approx(unit[i].y));
    }

    // degenerate: one point maps to the center
    auto center = normalize_subcomponent({{37.0, -4.0}});
    CHECK(center[0].x == doctest::Approx(0.5));
    CHECK(center[0].y == doctest::Approx(0.5));

    // rectangle: the longer side spans [0,1], aspect preserved
    std::vector<Point> rect{{0, 0}, {4, 2}};
    auto r = normalize_subcomponent(rect);
    CHECK(r[1].x == doctest::Approx(1.0));
    CHECK(r[1].y == doctest::Approx(0.5));
}

TEST_CASE("normalized output stays in the unit square") {
    RngStream rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        RngStream t = rng.split(std::uint64_t(trial));
        auto coords = random_coords(t.next_int(1, 30), t);
        auto out = normalize_subcomponent(coords);
        for (const auto& p : out) {
            CHECK(p.x >= -1e-12);
            CHECK(p.x <= 1.0 + 1e-12);
            CHECK(p.y >= -1e-12);
            CHECK(p.y <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("held-karp matches exhaustive search") {
    RngStream rng(2);
    for (int n = 3; n <= 9; ++n) {
        for (int trial = 0; trial < 10; ++trial) {
            RngStream t = rng.split(std::uint64_t(n * 100 + trial));
            auto coords = random_coords(n, t);
            auto perm = held_karp(coords);
            validate_permutation(perm, n);
            CHECK(tour_length(coords, perm) ==
                  doctest::Approx(exhaustive_optimum(coords)).epsilon(1e-9));
        }
    }
}

TEST_CASE("held-karp rejects oversized inputs") {
    RngStream rng(3);
    auto coords = random_coords(14, rng);
    CHECK_THROWS_WITH_AS(held_karp(coords), doctest::Contains("13"), Error);
}

TEST_CASE("nearest neighbor is a valid permutation starting at 0") {
    RngStream rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        RngStream t = rng.split(std::uint64_t(trial));
        const int n = t.next_int(1, 40);
        auto coords = random_coords(n, t);
        auto perm = nearest_neighbor(coords);
        validate_permutation(perm, n);
        CHECK(perm[0] == 0);
    }
}

TEST_CASE("two-opt never worsens and reaches local optimality") {
    RngStream rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        RngStream t = rng.split(std::uint64_t(trial));
        const int n = t.next_int(4, 15);
        auto coords = random_coords(n, t);
        std::vector<int> start(static_cast<std::size_t>(n));
        std::iota(start.begin(), start.end(), 0);
        for (int i = n - 1; i > 0; --i)
            std::swap(start[std::size_t(i)], start[t.next_below(static_cast<std::size_t>(i) + 1)]);
        const double before = tour_length(coords, start);
        auto improved = two_opt(coords, start);
        validate_permutation(improved, n);
        const double after = tour_length(coords, improved);
        CHECK(after <= before + 1e-9);
    }
}

TEST_CASE("two-opt result has no improving 2-exchange left") {
    RngStream rng(6);
    auto coords = random_coords(12, rng);
    std::vector<int> start(12);
    std::iota(start.begin(), start.end(), 0);
    auto perm = two_opt(coords, start);
    const double len = tour_length(coords, perm);
    const int n = 12;
    for (int i = 0; i < n - 1; ++i) {
        for (int j = i + 1; j < n; ++j) {
            auto cand = perm;
            std::reverse(cand.begin() + i, cand.begin() + j + 1);
            CHECK(tour_length(coords, cand) >= len - 1e-9);
        }
    }
}

TEST_CASE("combine concatenates sub-tours in cluster order") {
    TspInstance inst;
    inst.name = "toy";
    inst.cities = {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}, {6, 0}, {7, 0}};
    Decomposition d;
    d.k = 3;
    d.clusters = {{4, 2, 7}, {1, 3}, {0, 5, 6}};
    // sub-tours in global city indices, one per cluster
    std::vector<std::vector<int>> subs{{4, 2, 7}, {1, 3}, {0, 5, 6}};
    EliteTour elite = combine(inst, subs, d, "test");
    CHECK(elite.tour.order == std::vector<int>{4, 2, 7, 1, 3, 0, 5, 6});
    REQUIRE(elite.per_cluster_lengths.size() == 3);
    // closed sub-tour lengths in instance units
    std::vector<Point> c0{inst.cities[4], inst.cities[2], inst.cities[7]};
    CHECK(elite.per_cluster_lengths[0] ==
          doctest::Approx(tour_length(c0, {0, 1, 2})));
    CHECK(elite.provenance == "test");
}

TEST_CASE("solve_subcomponents bypasses tiny clusters") {
    TspInstance inst;
    inst.name = "tiny";
    inst.cities = {{0, 0}, {5, 5}, {9, 1}};
    Decomposition d;
    d.k = 2;
    d.clusters = {{0, 2}, {1}};
    RngStream rng(7);
    auto subs = solve_subcomponents(inst, d, RandomSolver{}, rng);
    REQUIRE(subs.size() == 2);
    CHECK(subs[0] == std::vector<int>{0, 2});  // size-2 bypass keeps index order
    CHECK(subs[1] == std::vector<int>{1});
}

TEST_CASE("elite from exact sub-solves dominates nearest neighbor elites") {
    // Guaranteed: the exact solver's splice candidates (optimal path per
    // endpoint pair) are a superset of any cycle-cut layout the greedy
    // solver can offer, so its spliced optimum can never be longer.
    RngStream rng(8);
    int wins = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        RngStream t = rng.split(std::uint64_t(trial));
        TspInstance inst;
        inst.name = "r";
        inst.cities = random_coords(200, t);
        RngStream hk_rng = t.split(1), nn_rng = t.split(1);
        EliteTour hk = build_elite(inst, 10, HeldKarpSolver{}, hk_rng);
        EliteTour nn = build_elite(inst, 10, NearestNeighborSolver{}, nn_rng);
        validate_permutation(hk.tour.order, 200);
        validate_permutation(nn.tour.order, 200);

        if (tour_length(inst.cities, hk.tour.order) <=
            tour_length(inst.cities, nn.tour.order) + 1e-9)
            ++wins;
    }
    CHECK(wins == trials);
}

TEST_CASE("sub-solves are invariant to global translation and scale") {
    RngStream rng(9);
    TspInstance a;
    a.name = "a";
    a.cities = random_coords(40, rng);
    TspInstance b;
    b.name = "b";
    for (const auto& p : a.cities)
        b.cities.push_back({p.x * 3.0 + 1000.0, p.y * 3.0 - 50.0});
    RngStream r1(10), r2(10);
    EliteTour ea = build_elite(a, 8, HeldKarpSolver{}, r1);
    EliteTour eb = build_elite(b, 8, HeldKarpSolver{}, r2);
    CHECK(ea.tour.order == eb.tour.order);
}

TEST_CASE("elite beats the mean random tour") {
    RngStream rng(11);
    TspInstance inst;
    inst.name = "vs-random";
    inst.cities = random_coords(100, rng);
    RngStream erng(12);
    EliteTour elite = build_elite(inst, 10, TwoOptSolver{}, erng);
    const double elite_len = tour_length(inst.cities, elite.tour.order);

    double random_mean = 0.0;
    const int samples = 50;
    for (int i = 0; i < samples; ++i) {
        std::vector<int> perm(100);
        std::iota(perm.begin(), perm.end(), 0);
        for (int j = 99; j > 0; --j)
            std::swap(perm[std::size_t(j)], perm[rng.next_below(static_cast<std::size_t>(j) + 1)]);
        random_mean += tour_length(inst.cities, perm) / samples;
    }
    CHECK(elite_len < 0.7 * random_mean);
}

TEST_CASE("solver errors name the cluster") {
    // a cluster of 14 cities makes Held-Karp fail; the error must say which
    TspInstance inst;
    inst.name = "big-cluster";
    RngStream rng(13);
    inst.cities = random_coords(14, rng);
    Decomposition d;
    d.k = 14;
    d.clusters = {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}};
    RngStream srng(14);
    CHECK_THROWS_WITH_AS(solve_subcomponents(inst, d, HeldKarpSolver{}, srng),
                         doctest::Contains("cluster"), Error);
}
