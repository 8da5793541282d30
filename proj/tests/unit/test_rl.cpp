#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kbrl/error.hpp"
#include "kbrl/rl/cluster.hpp"
#include "kbrl/rl/values.hpp"
#include "numeric_oracles.hpp"

using namespace kbrl;
using namespace kbrl::rl;
using inference::Decision;
using inference::EpisodeRecord;
using namespace kbrl::testing;

TEST_CASE("return formulas") {
    CHECK(state_return(OutcomeKind::Won, 300, 100) == -200.0);
    CHECK(state_return(OutcomeKind::LostRace, 300, 100) == -500.0);
    CHECK(state_return(OutcomeKind::Destroyed, 150, 50) == -900.0);
    CHECK(episode_return(OutcomeKind::Won, 300) == -300.0);
    CHECK(episode_return(OutcomeKind::LostRace, 300) == -600.0);
    CHECK(episode_return(OutcomeKind::Destroyed, 150) == -850.0);
    CHECK_THROWS_AS(episode_return(OutcomeKind::Truncated, 10), Error);
}

TEST_CASE("cluster turn is the mean of the turns spent in the cluster") {
    std::vector<int> turns(25, 0);
    for (int t = 7; t <= 19; ++t) turns[static_cast<std::size_t>(t)] = 3;
    auto tc = episode_cluster_turns(turns);
    CHECK(tc.at(3) == 13.0);

    ClusterModel m;
    update_cluster_turns(m, turns);
    CHECK(m.cluster_turns.at(3).mean == 13.0);
    std::vector<int> later(30, -1);
    later[29] = 3;
    update_cluster_turns(m, later);
    CHECK(m.cluster_turns.at(3).mean == 21.0);
    CHECK(m.cluster_turns.at(3).count == 2);

    Returns r = episode_returns(OutcomeKind::Won, 40, m, {3, 3, 5, -1});
    CHECK(r.episode == -40.0);
    CHECK(r.per_state.size() == 2);
    CHECK(r.per_state.at(3) == -19.0);
    CHECK(r.per_state.at(5) == -40.0);
}

TEST_CASE("table statistics equal a replay of the raw samples") {
    std::mt19937_64 rng(11);
    StateActionTable table;
    std::map<int, std::vector<std::pair<std::string, double>>> raw;
    const std::vector<std::string> names = {"/a", "x/b", "y/c", "y/d"};
    for (int ep = 0; ep < 60; ++ep) {
        EpisodeRecord rec;
        rec.outcome = static_cast<OutcomeKind>(rng() % 4);
        rec.final_turn = 20 + int(rng() % 200);
        Returns ret;
        for (int c = 0; c < 4; ++c) ret.per_state[c] = -double(rng() % 500) / 3.0;
        for (int i = 0, n = int(rng() % 12); i < n; ++i) {
            Decision d;
            d.cluster = int(rng() % 5);
            d.chosen = names[rng() % names.size()];
            rec.decisions.push_back(d);
        }
        std::size_t expect = 0;
        if (rec.outcome != OutcomeKind::Truncated) {
            for (const auto& d : rec.decisions) {
                if (!ret.per_state.count(d.cluster)) continue;
                raw[d.cluster].push_back({d.chosen, ret.per_state.at(d.cluster)});
                ++expect;
            }
        }
        CHECK(update_values(table, rec, ret) == expect);
    }
    std::size_t total = 0;
    for (const auto& [c, samples] : raw) {
        double gbar = 0;
        for (const auto& s : samples) gbar += s.second;
        gbar /= double(samples.size());
        const StateStats* st = table.state(c);
        REQUIRE(st);
        CHECK(st->n == std::int64_t(samples.size()));
        CHECK(st->mean == doctest::Approx(gbar).epsilon(1e-12));
        for (const auto& name : names) {
            double sum = 0, sq = 0;
            int n = 0;
            for (const auto& s : samples) {
                if (s.first != name) continue;
                ++n;
                sum += s.second;
                sq += (s.second - gbar) * (s.second - gbar);
            }
            const ActionStats* a = table.stats(c, name);
            if (n == 0) {
                CHECK_FALSE(a);
                continue;
            }
            REQUIRE(a);
            CHECK(a->n == n);
            CHECK(std::abs(a->mean - sum / n) < 1e-9);
            CHECK(std::abs(table.sigma_raw(c, name) - std::sqrt(sq / n)) < 1e-9);
        }
        total += samples.size();
    }
    CHECK(table.sample_count() == total);
    CHECK_FALSE(table.state(4));
}

TEST_CASE("policy parameters by hand") {
    StateActionTable t;
    for (double g : {-10.0, -20.0}) t.add_sample(0, "a", g);
    t.add_sample(0, "b", -30.0);
    for (double g : {-16.0, -18.0, -20.0}) t.add_sample(0, "c", g);
    // Cluster mean -19, action means -15, -30, -18, range 15.
    auto p = policy_params(t, 0, {"a", "b", "c", "new"});
    CHECK(p.at("a").mu == doctest::Approx(1.0));
    CHECK(p.at("b").mu == doctest::Approx(0.0));
    CHECK(p.at("c").mu == doctest::Approx(0.8));
    CHECK(std::abs(p.at("a").sigma - std::sqrt(41.0) / 15) < 1e-12);
    CHECK(std::abs(p.at("b").sigma - 11.0 / 15) < 1e-12);
    CHECK(std::abs(p.at("c").sigma - std::sqrt(11.0 / 3) / 15) < 1e-12);
    CHECK_FALSE(p.at("new").seen);
    CHECK(p.at("new").mu == 1.0);
    CHECK(p.at("new").sigma == 0.5);

    StateActionTable one;
    one.add_sample(2, "only", -7.0);
    auto q = policy_params(one, 2, {"only"});
    CHECK(one.sigma_raw(2, "only") == 0.0);
    CHECK(q.at("only").sigma == PolicyConfig{}.sigma_floor);
}

TEST_CASE("sigma formula on random sample sets") {
    std::mt19937_64 rng(3);
    for (int set = 0; set < 20; ++set) {
        StateActionTable t;
        std::vector<std::pair<std::string, double>> samples;
        for (int i = 0, n = 2 + int(rng() % 40); i < n; ++i) {
            std::string a = "k" + std::to_string(rng() % 3);
            double g = -double(rng() % 100000) / 37.0;
            samples.push_back({a, g});
            t.add_sample(1, a, g);
        }
        double gbar = 0;
        for (const auto& s : samples) gbar += s.second;
        gbar /= double(samples.size());
        for (const std::string a : {"k0", "k1", "k2"}) {
            double sq = 0;
            int n = 0;
            for (const auto& s : samples) {
                if (s.first == a) {
                    sq += (s.second - gbar) * (s.second - gbar);
                    ++n;
                }
            }
            if (n) CHECK(std::abs(t.sigma_raw(1, a) - std::sqrt(sq / n)) < 1e-9);
        }
    }
}

TEST_CASE("selection probabilities match quadrature of the right tails") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> mu(0.0, 1.0), sg(0.01, 1.0);
    for (int set = 0; set < 100; ++set) {
        std::vector<PolicyEntry> ps(2 + rng() % 5);
        for (auto& p : ps) p = {mu(rng), sg(rng), true};
        auto got = selection_probabilities(ps);
        auto want = quadrature_probabilities(ps);
        double sum = 0;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            CHECK(std::abs(got[i] - want[i]) < 1e-6);
            sum += got[i];
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("policy shape properties") {
    auto p = selection_probabilities({{0.4, 0.2, true}, {0.4, 0.2, true}});
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));

    CHECK(selection_probabilities({{0.3, 0.1, true}}) == std::vector<double>{1.0});

    std::vector<PolicyEntry> ps = {{1.0, 0.3, true}, {0.6, 0.3, true}, {0.2, 0.3, true}, {0.0, 0.3, true}};
    auto q = selection_probabilities(ps);
    for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i - 1] > q[i]);
    for (auto& e : ps) e.sigma *= 0.5;
    CHECK(selection_probabilities(ps)[0] > q[0]);

    // Argmax by mu keeps the largest probability on random unequal-sigma sets.
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int kept = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<PolicyEntry> r(2 + rng() % 5);
        for (auto& e : r) e = {u(rng), 0.01 + u(rng), true};
        auto pr = selection_probabilities(r);
        std::size_t bm = 0, bp = 0;
        for (std::size_t j = 1; j < r.size(); ++j) {
            if (r[j].mu > r[bm].mu) bm = j;
            if (pr[j] > pr[bp]) bp = j;
        }
        kept += bm == bp;
    }
    MESSAGE("argmax preserved in " << kept << " of 1000 unequal-sigma sets");
    CHECK(kept > 0);
}

TEST_CASE("select_action draws from the policy and honours epsilon") {
    std::vector<PolicyEntry> ps = {{1.0, 0.2, true}, {0.5, 0.4, true}, {0.0, 0.1, true}};
    auto p = selection_probabilities(ps);
    Rng rng(5);
    std::vector<int> counts(3, 0);
    const int draws = 200000;
    for (int i = 0; i < draws; ++i) ++counts[select_action(ps, 0.0, rng)];
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(counts[i] / double(draws) - p[i]) < 0.005);

    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < draws; ++i) ++counts[select_action(ps, 1.0, rng)];
    for (int c : counts) CHECK(std::abs(c / double(draws) - 1.0 / 3) < 0.005);

    CHECK(annealed_epsilon(0.1, 0.02, 0, 300) == 0.1);
    CHECK(annealed_epsilon(0.1, 0.02, 299, 300) == doctest::Approx(0.02));
    CHECK(annealed_epsilon(0.1, 0.02, 0, 1) == 0.1);
}

TEST_CASE("Lloyd matches an independent reimplementation") {
    auto pts = blob_points(8, 40, {{0, 0, 0}, {3, 1, 0}, {0, 4, 1}, {5, 5, 5}, {2, -3, 2}}, 0.9);
    REQUIRE(pts.size() == 200);
    for (std::uint64_t seed : {1u, 2u, 99u}) {
        KMeansResult a = lloyd(pts, 5, 300, seed);
        KMeansResult b = lloyd(pts, 5, 300, seed);
        CHECK(a.assignment == b.assignment);
        CHECK(a.inertia == b.inertia);

        std::vector<std::vector<double>> init;
        for (std::size_t r : initial_rows(pts, 5, seed)) init.push_back(pts[r]);
        LloydRef ref = lloyd_reference(pts, init);
        CHECK(a.assignment == ref.assignment);
        CHECK(std::abs(a.inertia - ref.inertia) < 1e-9);
    }
}

TEST_CASE("two blobs are recovered") {
    auto pts = blob_points(4, 100, {{0, 0}, {10, 10}}, 1.0);
    ClusterModel m = fit_clusters(pts, {1.0, 1.0}, {"x", "y"}, 2, 100, 7);
    std::vector<std::vector<double>> means(2, std::vector<double>(2, 0.0));
    std::vector<int> counts(2, 0);
    for (const auto& p : pts) {
        int c = m.assign(p);
        ++counts[static_cast<std::size_t>(c)];
        for (int f = 0; f < 2; ++f) means[static_cast<std::size_t>(c)][static_cast<std::size_t>(f)] += p[static_cast<std::size_t>(f)];
    }
    REQUIRE(counts[0] == 100);
    REQUIRE(counts[1] == 100);
    for (auto& mm : means) {
        for (double& x : mm) x /= 100;
    }
    if (means[0][0] > means[1][0]) std::swap(means[0], means[1]);
    CHECK(std::abs(means[0][0] - 0) < 0.2);
    CHECK(std::abs(means[0][1] - 0) < 0.2);
    CHECK(std::abs(means[1][0] - 10) < 0.2);
    CHECK(std::abs(means[1][1] - 10) < 0.2);
}

TEST_CASE("clustering preconditions and normalization") {
    std::vector<std::vector<double>> pts = {{0, 5}, {10, 5}, {5, 5}};
    CHECK_THROWS_AS(fit_clusters(pts, {1, 1}, {"a", "b"}, 4, 10, 1), ConfigError);
    CHECK_THROWS_AS(fit_clusters({}, {1, 1}, {"a", "b"}, 1, 10, 1), ConfigError);
    NormParams n = fit_norm(pts);
    auto v = normalize({5, 5}, n, {2.0, 3.0});
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 0.0);
    // Repeated rows still yield k distinct starting points when possible.
    std::vector<std::vector<double>> dup = {{1, 1}, {1, 1}, {1, 1}, {2, 2}};
    auto rows = initial_rows(dup, 2, 3);
    REQUIRE(rows.size() == 2);
    CHECK(dup[rows[0]] != dup[rows[1]]);
}

TEST_CASE("artifacts round-trip and reject other versions") {
    auto pts = blob_points(1, 20, {{0, 0}, {4, 4}}, 0.5);
    ClusterModel m = fit_clusters(pts, {1.0, 2.0}, {"x", "y"}, 2, 50, 3);
    update_cluster_turns(m, {0, 0, 1});
    CHECK(cluster_model_from_json(to_json(m)) == m);

    StateActionTable t;
    t.add_sample(0, "/a", -3.25);
    t.add_sample(0, "x/b", -1.0 / 3);
    t.add_sample(4, "/a", -7);
    CHECK(table_from_json(to_json(t)) == t);

    auto jm = to_json(m);
    jm["version"] = kClusterVersion + 1;
    CHECK_THROWS_AS(cluster_model_from_json(jm), SchemaError);
    auto jt = to_json(t);
    jt["version"] = kTableVersion + 1;
    CHECK_THROWS_AS(table_from_json(jt), SchemaError);
    jt = to_json(t);
    jt["schema"] = "something.else";
    CHECK_THROWS_AS(table_from_json(jt), SchemaError);
    CHECK_THROWS_AS(table_from_json(nlohmann::json::object()), SchemaError);
}
