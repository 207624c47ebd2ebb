#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include <json.hpp>

#include "csgm/graph_io.hpp"
#include "csgm/sgm.hpp"
#include "oracle_sgm.hpp"

using namespace csgm;

namespace {
const std::string kDataDir = CSGM_TEST_DATA_DIR;
}

TEST_CASE("propagate_marked follows the flow principles") {
  SECTION("chain with shrinking outflow") {
    // s=1 -> v=2 (100), v -> j=3 (50): v forwards half of the marked 100.
    const auto g = aggregate_edges(
        TransactionGraph::from_edges({{1, 2, 10000, false}, {2, 3, 5000, false}}));
    const auto state = propagate_marked(g, 1);
    CHECK(state.marked_in_of(2) == Rational(10000));
    CHECK(state.marked_out_of(2) == Rational(5000));
    CHECK(state.marked_in_of(3) == Rational(5000));
  }
  SECTION("outflow above inflow forwards everything marked") {
    // v=2 receives 100 (all marked), sends 150 total: marked out stays 100.
    const auto g = aggregate_edges(TransactionGraph::from_edges(
        {{1, 2, 10000, false}, {9, 2, 5000, false}, {2, 3, 15000, false}}));
    const auto state = propagate_marked(g, 1);
    CHECK(state.marked_in_of(2) == Rational(10000));
    CHECK(state.marked_out_of(2) == Rational(10000));
  }
  SECTION("unreachable node holds no marked money") {
    const auto g = aggregate_edges(
        TransactionGraph::from_edges({{1, 2, 100, false}, {3, 4, 100, false}}));
    const auto state = propagate_marked(g, 1);
    CHECK(state.marked_in_of(3) == Rational(0));
    CHECK(state.marked_in_of(4) == Rational(0));
  }
  SECTION("absent source is an error") {
    const auto g = aggregate_edges(TransactionGraph::from_edges({{1, 2, 100, false}}));
    CHECK_THROWS_AS(propagate_marked(g, 42), ValidationError);
  }
  SECTION("multigraph rejected") {
    const auto multi = TransactionGraph::from_edges({{1, 2, 10, false}, {1, 2, 20, false}});
    CHECK_THROWS_AS(propagate_marked(multi, 1), ValidationError);
  }
}

TEST_CASE("detect_sgm on the five-mule fixture") {
  const auto g = aggregate_edges(load_graph(kDataDir + "/fig2_graph.csv"));

  SECTION("threshold 0.4 flags the golden nodes with the golden ratios") {
    std::ifstream in(kDataDir + "/fig2_expected.json");
    REQUIRE(in);
    nlohmann::json golden;
    in >> golden;

    const auto detection =
        detect_sgm(g, golden.at("source").get<AccountId>(), golden.at("threshold").get<double>());
    const auto& expected = golden.at("flagged");
    REQUIRE(detection.flagged.size() == expected.size());
    for (std::size_t i = 0; i < detection.flagged.size(); ++i) {
      CHECK(detection.flagged[i].node == expected[i].at("node").get<AccountId>());
      CHECK_THAT(detection.flagged[i].ratio,
                 Catch::Matchers::WithinAbs(expected[i].at("ratio").get<double>(), 1e-12));
    }
  }
  SECTION("threshold 1.0 flags nothing") {
    CHECK(detect_sgm(g, 1, 1.0).flagged.empty());
  }
  SECTION("raising the threshold never grows the flagged set") {
    std::size_t previous = detect_sgm(g, 1, 0.1).flagged.size();
    for (double threshold : {0.2, 0.4, 0.6, 0.7, 0.9}) {
      const std::size_t current = detect_sgm(g, 1, threshold).flagged.size();
      CHECK(current <= previous);
      previous = current;
    }
  }
}

TEST_CASE("detect_sgm edge cases") {
  SECTION("even star split flags both sinks at one half") {
    const auto g = aggregate_edges(
        TransactionGraph::from_edges({{1, 2, 5000, false}, {1, 3, 5000, false}}));
    const auto detection = detect_sgm(g, 1, 0.5);
    REQUIRE(detection.flagged.size() == 2);
    CHECK(detection.flagged[0].ratio == 0.5);
    CHECK(detection.flagged[1].ratio == 0.5);
  }
  SECTION("source without outflow yields an empty detection") {
    const auto g = aggregate_edges(TransactionGraph::from_edges({{2, 1, 100, false}}));
    CHECK(detect_sgm(g, 1, 0.1).flagged.empty());
  }
  SECTION("directed cycle terminates") {
    const auto g = aggregate_edges(TransactionGraph::from_edges(
        {{1, 2, 1000, false}, {2, 3, 1000, false}, {3, 2, 500, false}}));
    const auto detection = detect_sgm(g, 1, 0.1);
    CHECK(!detection.flagged.empty());
  }
  SECTION("threshold domain is enforced") {
    const auto g = aggregate_edges(TransactionGraph::from_edges({{1, 2, 100, false}}));
    CHECK_THROWS_AS(detect_sgm(g, 1, 0.0), ValidationError);
    CHECK_THROWS_AS(detect_sgm(g, 1, 1.5), ValidationError);
    CHECK_NOTHROW(detect_sgm(g, 1, 1.0));
  }
}

TEST_CASE("run_sgm_all_sources") {
  SECTION("edgeless graph yields nothing") {
    const auto g = TransactionGraph::from_edges({}, {1, 2, 3});
    CHECK(run_sgm_all_sources(g, 0.4, 1).empty());
  }
  SECTION("huge min_group_size drops everything") {
    const auto g = aggregate_edges(
        TransactionGraph::from_edges({{1, 2, 100, false}, {1, 3, 100, false}}));
    CHECK(run_sgm_all_sources(g, 0.1, std::numeric_limits<std::size_t>::max()).empty());
  }
  SECTION("five-mule fixture keeps the planted source") {
    const auto g = aggregate_edges(load_graph(kDataDir + "/fig2_graph.csv"));
    const auto detections = run_sgm_all_sources(g, 0.4, 3);
    REQUIRE(detections.size() == 1);
    CHECK(detections[0].source == 1);
    CHECK(detections[0].flagged.size() == 3);
  }
}

TEST_CASE("conservation cap on random graphs") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 15; ++trial) {
    const auto fixture = oracle::make_random_dag(rng, 30);
    const AccountId source = fixture.topo_order[0];
    const auto state = propagate_marked(fixture.graph, source);
    for (const auto& [node, m_out] : state.marked_out) {
      if (node == source) continue;
      CHECK(m_out <= state.marked_in_of(node));
      CHECK(m_out <= Rational(state.total_out_of(node)));
      CHECK(state.marked_in_of(node) <= Rational(state.total_in_of(node)));
    }
  }
}

TEST_CASE("propagation matches the edge-by-edge topological oracle exactly") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    const auto fixture = oracle::make_random_dag(rng, 40);
    std::uniform_int_distribution<std::size_t> pick(0, fixture.topo_order.size() - 1);
    const AccountId source = fixture.topo_order[pick(rng)];

    const auto expected = oracle::oracle_marked_in(fixture, source);
    const auto state = propagate_marked(fixture.graph, source);
    for (const auto& [node, want] : expected) {
      if (node == source) continue;
      REQUIRE(state.marked_in_of(node) == want);  // exact rational equality
    }
  }
}
