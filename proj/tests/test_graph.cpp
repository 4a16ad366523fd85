#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "msb/graph.hpp"
#include "msb/rng.hpp"

using namespace msb;

namespace {

ParsedGraph parse(const std::string& text, ValueKind kind = ValueKind::Rating) {
  std::istringstream in(text);
  return parse_edge_list(in, kind);
}

SignedDigraph random_labeled(std::size_t n, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  std::set<Edge> seen;
  std::vector<Edge> pos, neg;
  while (seen.size() < m) {
    const Edge e{static_cast<NodeId>(rng.index(n)), static_cast<NodeId>(rng.index(n))};
    if (e.src == e.dst || !seen.insert(e).second) continue;
    (rng.uniform() < 0.8 ? pos : neg).push_back(e);
  }
  return SignedDigraph(n, pos, neg);
}

}  // namespace

TEST_CASE("rating CSV is binarized by sign") {
  const auto pg = parse("7,8,5,1289241911\n7,9,-3,1289241942\n9,8,10,1289243140\n");
  CHECK(pg.graph.num_nodes() == 3);
  CHECK(pg.graph.positive_edges().size() == 2);
  CHECK(pg.graph.negative_edges().size() == 1);
  CHECK(pg.node_names == std::vector<std::string>{"7", "8", "9"});
  CHECK(pg.graph.label(0, 2) == EdgeSign::Negative);
  CHECK(pg.graph.label(2, 1) == EdgeSign::Positive);
  CHECK_FALSE(pg.graph.label(1, 0).has_value());
}

TEST_CASE("numeric ids are compacted in numeric order") {
  const auto pg = parse("100 20 1\n3 100 -1\n");
  CHECK(pg.node_names == std::vector<std::string>{"3", "20", "100"});
  CHECK(pg.graph.label(2, 1) == EdgeSign::Positive);
  CHECK(pg.graph.label(0, 2) == EdgeSign::Negative);
}

TEST_CASE("non-numeric ids keep first-appearance order") {
  const auto pg = parse("bob alice 1\ncarol bob -2\n");
  CHECK(pg.node_names == std::vector<std::string>{"bob", "alice", "carol"});
}

TEST_CASE("comments, blank lines, zero ratings, self-loops and duplicates") {
  const auto pg = parse("# header\n\n1 2 3\n1 2 -4  # overrides\n2 2 5\n2 3 0\n3 1 1\n");
  CHECK(pg.stats.records == 5);
  CHECK(pg.stats.zero_ratings_dropped == 1);
  CHECK(pg.stats.self_loops_dropped == 1);
  CHECK(pg.stats.duplicates_replaced == 1);
  CHECK(pg.graph.label(0, 1) == EdgeSign::Negative);
  CHECK(pg.graph.num_labeled() == 2);
}

TEST_CASE("sign format keeps unlabeled edges") {
  const auto pg = parse("0 1 1\n1 2 0\n2 0 -1\n", ValueKind::Sign);
  CHECK(pg.graph.unlabeled_edges().size() == 1);
  CHECK(pg.graph.label(1, 2) == EdgeSign::Unlabeled);
  CHECK_THROWS_AS(parse("0 1 2\n", ValueKind::Sign), ParseError);
}

TEST_CASE("malformed records report their line") {
  try {
    parse("1 2 1\n1 2\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("1 2 x\n"), ParseError);
  CHECK_THROWS_AS(binarize_rating(0), std::invalid_argument);
}

TEST_CASE("graph construction rejects overlaps, loops and bad endpoints") {
  CHECK_THROWS_AS(SignedDigraph(3, {{0, 1}}, {{0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(SignedDigraph(3, {{1, 1}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(SignedDigraph(3, {{0, 3}}, {}), std::invalid_argument);
  CHECK_NOTHROW(SignedDigraph(3, {{0, 1}}, {{1, 0}}));
}

TEST_CASE("graphs compare equal regardless of edge order") {
  const SignedDigraph a(4, {{0, 1}, {2, 3}}, {{1, 2}});
  const SignedDigraph b(4, {{2, 3}, {0, 1}}, {{1, 2}});
  CHECK(a == b);
  CHECK(a.out_neighbors(1).size() == 1);
  CHECK(a.in_neighbors(1).size() == 1);
}

TEST_CASE("canonical form round-trips") {
  const SignedDigraph g = random_labeled(30, 120, 4);
  std::ostringstream out;
  write_canonical(out, g);
  std::istringstream in(out.str());
  const ParsedGraph back = parse_edge_list(in, ValueKind::Sign);
  CHECK(back.graph.num_labeled() == g.num_labeled());
  std::ostringstream again;
  write_canonical(again, back.graph);
  // Isolated nodes vanish, so compare edge text only.
  auto body = [](const std::string& s) { return s.substr(s.find('\n')); };
  CHECK(body(again.str()) == body(out.str()));
}

TEST_CASE("split sizes are floored and parts are disjoint") {
  const SignedDigraph g = random_labeled(40, 100, 1);
  const SplitDataset s = split_dataset(g, 9);
  CHECK(s.val.size() == 5);
  CHECK(s.test.size() == 5);
  CHECK(s.train_unlabeled.size() == 67);
  CHECK(s.train_labeled.size() == 23);
  std::set<Edge> all;
  for (const auto& e : s.val) all.insert(e.edge);
  for (const auto& e : s.test) all.insert(e.edge);
  for (const auto& e : s.train_labeled) all.insert(e.edge);
  for (const auto& e : s.train_unlabeled) all.insert(e);
  CHECK(all.size() == 100);
  CHECK(s.unlabeled_truth.size() == s.train_unlabeled.size());
}

TEST_CASE("splits are a pure function of the seed") {
  const SignedDigraph g = random_labeled(40, 200, 2);
  CHECK(split_manifest(split_dataset(g, 5)) == split_manifest(split_dataset(g, 5)));
  CHECK(split_manifest(split_dataset(g, 5)) != split_manifest(split_dataset(g, 6)));
  CHECK_THROWS_AS(split_dataset(SignedDigraph(3, {{0, 1}}, {}), 0), std::invalid_argument);
}

TEST_CASE("noise flips exactly round(p * |L|) labels") {
  const SignedDigraph g = random_labeled(60, 400, 3);
  const SplitDataset clean = split_dataset(g, 1);
  for (double p : {0.0, 0.1, 0.2, 0.35}) {
    const SplitDataset noisy = inject_noise(clean, {p, 7});
    const auto expected = static_cast<std::size_t>(std::llround(p * static_cast<double>(clean.train_labeled.size())));
    std::size_t changed = 0;
    for (std::size_t i = 0; i < clean.train_labeled.size(); ++i) {
      changed += clean.train_labeled[i].sign != noisy.train_labeled[i].sign ? 1 : 0;
    }
    CHECK(changed == expected);
    CHECK(noisy.flipped.size() == expected);
    CHECK(noisy.val == clean.val);
    CHECK(noisy.test == clean.test);
  }
  CHECK(flip_digest(inject_noise(clean, {0.2, 7})) == flip_digest(inject_noise(clean, {0.2, 7})));
}

TEST_CASE("training graph hides validation and test edges") {
  const SignedDigraph g = random_labeled(50, 300, 8);
  const SplitDataset s = split_dataset(g, 2);
  const SignedDigraph t = training_graph(s);
  CHECK(t.num_labeled() == s.train_labeled.size());
  CHECK(t.unlabeled_edges().size() == s.train_unlabeled.size());
  for (const auto& e : s.test) CHECK_FALSE(t.has_edge(e.edge.src, e.edge.dst));
  for (const auto& e : s.val) CHECK_FALSE(t.has_edge(e.edge.src, e.edge.dst));
}

TEST_CASE("manifest round-trips") {
  const SignedDigraph g = random_labeled(50, 300, 8);
  const SplitDataset s = subsample_unlabeled(inject_noise(split_dataset(g, 3), {0.1, 4}), 0.5, 11);
  const SplitDataset back = split_from_manifest(split_manifest(s));
  CHECK(back.train_labeled == s.train_labeled);
  CHECK(back.train_unlabeled == s.train_unlabeled);
  CHECK(back.unlabeled_truth == s.unlabeled_truth);
  CHECK(back.flipped == s.flipped);
  CHECK(split_manifest(back) == split_manifest(s));
  CHECK_THROWS_AS(split_from_manifest(nlohmann::json{{"num_nodes", 3}}), std::invalid_argument);
}

TEST_CASE("subsampling keeps floor(f * |E^U|) unlabeled edges") {
  const SignedDigraph g = random_labeled(50, 300, 8);
  const SplitDataset s = split_dataset(g, 3);
  const SplitDataset half = subsample_unlabeled(s, 0.5, 1);
  CHECK(half.train_unlabeled.size() == s.train_unlabeled.size() / 2);
  CHECK(half.train_labeled == s.train_labeled);
  CHECK(std::includes(s.train_unlabeled.begin(), s.train_unlabeled.end(), half.train_unlabeled.begin(),
                      half.train_unlabeled.end()));
}

TEST_CASE("unsigned projection counts reciprocal edges twice") {
  const SignedDigraph g(3, {{0, 1}, {1, 0}}, {{1, 2}});
  const UndirectedGraph u = unsigned_projection(g);
  REQUIRE(u.edges().size() == 2);
  CHECK(u.edges()[0].weight == 2.0);
  CHECK(u.edges()[1].weight == 1.0);
  CHECK(u.total_weight() == 3.0);
  CHECK(u.degree(1) == 3.0);
  CHECK_THROWS_AS(UndirectedGraph(2, {{0, 0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(UndirectedGraph(2, {{0, 1, -1.0}}), std::invalid_argument);
}
