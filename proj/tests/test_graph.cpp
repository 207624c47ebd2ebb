#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "csgm/graph.hpp"
#include "csgm/graph_io.hpp"

using namespace csgm;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

TransactionGraph random_graph(std::mt19937_64& rng, std::size_t nodes = 30,
                              std::size_t edges = 60) {
  std::uniform_int_distribution<AccountId> node(1, nodes);
  std::uniform_int_distribution<Amount> amount(0, 50000);
  std::uniform_int_distribution<int> flag(0, 1);
  std::vector<Edge> es;
  for (std::size_t i = 0; i < edges; ++i)
    es.push_back({node(rng), node(rng), amount(rng), flag(rng) == 1});
  return TransactionGraph::from_edges(std::move(es));
}

}  // namespace

TEST_CASE("amount parsing and formatting") {
  CHECK(parse_amount("100") == 10000);
  CHECK(parse_amount("99.5") == 9950);
  CHECK(parse_amount("99.55") == 9955);
  CHECK(parse_amount("0.07") == 7);
  CHECK(parse_amount("0") == 0);
  CHECK_THROWS_AS(parse_amount("-5"), ValidationError);
  CHECK_THROWS_AS(parse_amount("1.234"), ParseError);
  CHECK_THROWS_AS(parse_amount("abc"), ParseError);
  CHECK_THROWS_AS(parse_amount(""), ParseError);
  CHECK_THROWS_AS(parse_amount("5."), ParseError);

  CHECK(format_amount(10000) == "100");
  CHECK(format_amount(9950) == "99.5");
  CHECK(format_amount(9955) == "99.55");
  CHECK(format_amount(7) == "0.07");
  for (Amount cents : {0L, 1L, 10L, 99L, 100L, 12345L, 1000000L})
    CHECK(parse_amount(format_amount(cents)) == cents);
}

TEST_CASE("load_graph parses the csv schema") {
  SECTION("three rows, multi-edge preserved") {
    const auto path = temp_file("g3.csv",
                                "src,dst,amount,cross\n"
                                "1,2,50,0\n"
                                "2,3,70,1\n"
                                "2,3,30,1\n");
    const auto g = load_graph(path);
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges() == 3);
    CHECK_FALSE(g.aggregated());
  }
  SECTION("header only") {
    const auto g = load_graph(temp_file("g0.csv", "src,dst,amount,cross\n"));
    CHECK(g.num_nodes() == 0);
    CHECK(g.num_edges() == 0);
  }
  SECTION("negative amount is a validation error") {
    const auto path = temp_file("gneg.csv", "src,dst,amount,cross\n1,2,-5,0\n");
    CHECK_THROWS_AS(load_graph(path), ValidationError);
    try {
      load_graph(path);
    } catch (const ValidationError& err) {
      CHECK(std::string(err.what()).find("line 2") != std::string::npos);
    }
  }
  SECTION("malformed row names the line") {
    const auto path = temp_file("gbad.csv", "src,dst,amount,cross\n1,2,50,0\n1,x,1,0\n");
    try {
      load_graph(path);
      FAIL("expected ParseError");
    } catch (const ParseError& err) {
      CHECK(std::string(err.what()).find("line 3") != std::string::npos);
    }
  }
  SECTION("wrong header rejected") {
    CHECK_THROWS_AS(load_graph(temp_file("ghdr.csv", "a,b,c,d\n")), ParseError);
  }
  SECTION("bad cross flag rejected") {
    CHECK_THROWS_AS(load_graph(temp_file("gflag.csv", "src,dst,amount,cross\n1,2,5,2\n")),
                    ParseError);
  }
}

TEST_CASE("aggregate_edges merges ordered pairs") {
  SECTION("amounts sum, flags or") {
    auto g = TransactionGraph::from_edges({{2, 3, 7000, true}, {2, 3, 3000, true}});
    const auto agg = aggregate_edges(g);
    REQUIRE(agg.num_edges() == 1);
    CHECK(agg.edges()[0].amount == 10000);
    CHECK(agg.edges()[0].cross);
    CHECK(agg.aggregated());
  }
  SECTION("idempotent") {
    auto g = aggregate_edges(
        TransactionGraph::from_edges({{1, 2, 100, false}, {2, 3, 50, true}, {2, 3, 20, false}}));
    const auto again = aggregate_edges(g);
    CHECK(again.edges() == g.edges());
    CHECK(again.nodes() == g.nodes());
  }
  SECTION("opposite directions stay apart") {
    const auto agg = aggregate_edges(
        TransactionGraph::from_edges({{1, 2, 1000, false}, {2, 1, 1000, false}}));
    CHECK(agg.num_edges() == 2);
  }
}

TEST_CASE("filter_small_transactions") {
  const auto g = TransactionGraph::from_edges(
      {{1, 2, 10000, false}, {1, 3, 9950, false}, {2, 3, 500000, false}});
  SECTION("threshold keeps >= min") {
    const auto f = filter_small_transactions(g, 10000);
    CHECK(f.num_edges() == 2);
    CHECK(f.num_nodes() == 3);  // isolated node retained
  }
  SECTION("zero threshold is identity") {
    CHECK(filter_small_transactions(g, 0).edges() == g.edges());
  }
  SECTION("everything below leaves nodes intact") {
    const auto f = filter_small_transactions(g, 1000000);
    CHECK(f.num_edges() == 0);
    CHECK(f.nodes() == g.nodes());
  }
  SECTION("composition takes the max threshold") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
      const auto graph = random_graph(rng);
      const Amount m1 = 5000, m2 = 20000;
      const auto chained = filter_small_transactions(filter_small_transactions(graph, m1), m2);
      const auto direct = filter_small_transactions(graph, std::max(m1, m2));
      CHECK(chained.edges() == direct.edges());
    }
  }
}

TEST_CASE("reverse flips edges and is an involution") {
  SECTION("single edge") {
    const auto g = TransactionGraph::from_edges({{1, 2, 777, true}});
    const auto r = reverse(g);
    REQUIRE(r.num_edges() == 1);
    CHECK(r.edges()[0] == Edge{2, 1, 777, true});
  }
  SECTION("edgeless graph unchanged") {
    const auto g = TransactionGraph::from_edges({}, {5, 6});
    const auto r = reverse(g);
    CHECK(r.num_edges() == 0);
    CHECK(r.nodes() == g.nodes());
  }
  SECTION("three-cycle reverses orientation") {
    const auto g =
        TransactionGraph::from_edges({{1, 2, 1, false}, {2, 3, 1, false}, {3, 1, 1, false}});
    const auto r = reverse(g);
    std::vector<Edge> expected{{2, 1, 1, false}, {3, 2, 1, false}, {1, 3, 1, false}};
    CHECK(r.edges() == expected);
  }
  SECTION("involution on random graphs") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 20; ++i) {
      const auto g = random_graph(rng);
      const auto rr = reverse(reverse(g));
      CHECK(rr.edges() == g.edges());
      CHECK(rr.nodes() == g.nodes());
    }
  }
}

TEST_CASE("split_views") {
  const std::unordered_map<AccountId, PartyId> assignment{
      {1, PartyId::A}, {2, PartyId::B}, {3, PartyId::A}};
  SECTION("cross edge lands in both views with both endpoints in boundary") {
    const auto g = TransactionGraph::from_edges({{1, 2, 100, false}});
    const auto [a, b] = split_views(g, assignment);
    REQUIRE(a.graph.num_edges() == 1);
    REQUIRE(b.graph.num_edges() == 1);
    CHECK(a.graph.edges()[0].cross);
    CHECK(b.graph.edges()[0].cross);
    CHECK(a.boundary.contains(1));
    CHECK(a.boundary.contains(2));
    CHECK(b.boundary.contains(1));
    CHECK(b.boundary.contains(2));
  }
  SECTION("internal edge stays in one view") {
    const auto g = TransactionGraph::from_edges({{1, 3, 100, false}});
    const auto [a, b] = split_views(g, assignment);
    REQUIRE(a.graph.num_edges() == 1);
    CHECK_FALSE(a.graph.edges()[0].cross);
    CHECK(b.graph.num_edges() == 0);
  }
  SECTION("all nodes on one side leaves the other empty") {
    const std::unordered_map<AccountId, PartyId> all_a{{1, PartyId::A}, {2, PartyId::A}};
    const auto g = TransactionGraph::from_edges({{1, 2, 100, false}});
    const auto [a, b] = split_views(g, all_a);
    CHECK(a.graph.num_edges() == 1);
    CHECK(b.graph.num_edges() == 0);
    CHECK(b.graph.num_nodes() == 0);
  }
  SECTION("unassigned node is an error") {
    const auto g = TransactionGraph::from_edges({{1, 9, 100, false}});
    CHECK_THROWS_AS(split_views(g, assignment), ValidationError);
  }
  SECTION("edge conservation on random aggregated graphs") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) {
      const auto g = aggregate_edges(random_graph(rng));
      std::unordered_map<AccountId, PartyId> parties;
      std::uniform_int_distribution<int> side(0, 1);
      for (AccountId id : g.nodes())
        parties[id] = side(rng) == 0 ? PartyId::A : PartyId::B;
      const auto [a, b] = split_views(g, parties);
      std::size_t internal_a = 0, internal_b = 0, cross = 0;
      for (const Edge& e : a.graph.edges()) (e.cross ? cross : internal_a) += 1;
      for (const Edge& e : b.graph.edges())
        if (!e.cross) ++internal_b;
      CHECK(internal_a + internal_b + cross == g.num_edges());
    }
  }
}

TEST_CASE("csv round trip is canonical") {
  const std::string canonical =
      "src,dst,amount,cross\n"
      "1,2,50,0\n"
      "2,3,30,1\n"
      "2,3,70,1\n"
      "4,4,0.05,0\n";
  SECTION("load then write reproduces the canonical bytes") {
    const auto shuffled = temp_file("gshuf.csv",
                                    "src,dst,amount,cross\n"
                                    "2,3,70,1\n"
                                    "4,4,0.05,0\n"
                                    "1,2,50,0\n"
                                    "2,3,30,1\n");
    CHECK(graph_to_csv(load_graph(shuffled)) == canonical);
  }
  SECTION("write-load-write is stable on random graphs") {
    std::mt19937_64 rng(19);
    for (int i = 0; i < 10; ++i) {
      const auto g = random_graph(rng);
      const auto once = graph_to_csv(g);
      const auto path = temp_file("gprop.csv", once);
      CHECK(graph_to_csv(load_graph(path)) == once);
    }
  }
}

TEST_CASE("make_view derives boundary from cross flags") {
  const auto g = TransactionGraph::from_edges({{1, 2, 100, true}, {2, 3, 100, false}});
  const auto view = make_view(PartyId::B, g);
  CHECK(view.party == PartyId::B);
  CHECK(view.boundary == std::unordered_set<AccountId>{1, 2});
}

TEST_CASE("require_aggregated guards downstream modules") {
  const auto multi = TransactionGraph::from_edges({{1, 2, 10, false}, {1, 2, 20, false}});
  CHECK_FALSE(multi.aggregated());
  CHECK_THROWS_AS(multi.require_aggregated("test"), ValidationError);
  CHECK_NOTHROW(aggregate_edges(multi).require_aggregated("test"));
}
