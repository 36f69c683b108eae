#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "arttrack/core_model.hpp"
#include "arttrack/errors.hpp"
#include "support.hpp"

using namespace arttrack;

namespace {

ProblemGraph pair_graph(double c0, double c1, double edge_cost) {
  return ProblemGraph::untyped({c0, c1}, {{0, 1, edge_cost}});
}

Detection det(std::int64_t id, int frame, int part, Point pos = {}) {
  return {id, frame, pos, 0.8, part};
}

}  // namespace

TEST_CASE("node_cost is the negated log-odds of the score") {
  CHECK(node_cost(0.5) == 0.0);
  // -ln(0.9 / 0.1), 30-digit reference: -2.19722457733621938279
  CHECK(node_cost(0.9) == doctest::Approx(-2.19722457733621938279).epsilon(1e-15));
  CHECK(node_cost(0.1) == doctest::Approx(2.19722457733621938279).epsilon(1e-15));
  CHECK(node_cost(0.9, CostConvention::Literal) == doctest::Approx(2.19722457733621938279));
  CHECK(node_cost(0.99) < node_cost(0.9));
}

TEST_CASE("node_cost rejects scores outside the open unit interval") {
  CHECK_THROWS_AS(node_cost(0.0), DomainError);
  CHECK_THROWS_AS(node_cost(1.0), DomainError);
  CHECK_THROWS_AS(node_cost(-0.2), DomainError);
  CHECK_THROWS_AS(node_cost(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST_CASE("node_cost is antisymmetric around one half") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 1000; ++k) {
    const double s = testing::uniform(rng, 1e-6, 1 - 1e-6);
    CHECK(std::abs(node_cost(s) + node_cost(1 - s)) <= 1e-12);
  }
}

TEST_CASE("objective sums retained nodes and joined edges") {
  const auto g = pair_graph(-1, -2, -0.5);
  CHECK(objective(g, Solution(2)) == 0.0);
  CHECK(objective(g, Solution(std::vector<int>{0, 0})) == doctest::Approx(-3.5));
  CHECK(objective(g, Solution(std::vector<int>{0, 1})) == doctest::Approx(-3.0));
  CHECK(objective(g, Solution(std::vector<int>{-1, 4})) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(objective(g, Solution(3)), StructuralError);
}

TEST_CASE("objective does not depend on cluster ids") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = testing::random_instance(rng, {.nodes = 7, .constrained_fraction = 0});
    std::vector<int> labels(7);
    for (auto& l : labels) l = static_cast<int>(rng() % 5) - 1;
    std::vector<int> permuted = labels;
    for (auto& l : permuted)
      if (l >= 0) l = 10 + (3 - l);
    CHECK(objective(g, Solution(labels)) == doctest::Approx(objective(g, Solution(permuted))));
  }
}

TEST_CASE("validate accepts connected clusters") {
  const auto triangle = ProblemGraph::untyped({0, 0, 0}, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}});
  CHECK(validate(triangle, Solution(std::vector<int>{0, 0, 0})).empty());

  // Path A-B-C: the cluster is connected through B.
  const auto path = ProblemGraph::untyped({0, 0, 0}, {{0, 1, 1}, {1, 2, 1}});
  CHECK(validate(path, Solution(std::vector<int>{0, 0, 0})).empty());
}

TEST_CASE("validate reports a cluster without a joined path") {
  const auto g = ProblemGraph::untyped({0, 0, 0}, {{0, 2, 1}});
  const auto v = validate(g, Solution(std::vector<int>{0, 0, -1}));
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::DisconnectedCluster);

  // Same pair with the connecting node unselected.
  const auto path = ProblemGraph::untyped({0, 0, 0}, {{0, 1, 1}, {1, 2, 1}});
  const auto w = validate(path, Solution(std::vector<int>{0, -1, 0}));
  REQUIRE(w.size() == 1);
  CHECK(w[0].kind == Violation::Kind::DisconnectedCluster);
}

TEST_CASE("validate checks must-link and must-cut pairs") {
  const auto g = ProblemGraph::untyped({0, 0, 0}, {{0, 1, 1}, {1, 2, 1}}, {{0, 1}}, {{1, 2}});
  CHECK(validate(g, Solution(std::vector<int>{0, 0, 1})).empty());
  auto kinds = [&](std::vector<int> labels) {
    std::vector<Violation::Kind> out;
    for (const auto& v : validate(g, Solution(std::move(labels)))) out.push_back(v.kind);
    return out;
  };
  CHECK(kinds({0, 1, -1}) == std::vector{Violation::Kind::MustLinkSplit});
  CHECK(kinds({0, -1, -1}) == std::vector{Violation::Kind::MustLinkUnselected});
  CHECK(kinds({0, 0, 0}) == std::vector{Violation::Kind::MustCutJoined});
  CHECK(kinds({0}) == std::vector{Violation::Kind::SizeMismatch});
}

TEST_CASE("validate_labeling finds raw labelings that no partition induces") {
  const auto g = ProblemGraph::untyped({0, 0, 0}, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}});
  const std::vector<std::uint8_t> all{1, 1, 1};
  // Two joined edges of a triangle force the third one.
  const std::vector<std::uint8_t> one_cut{1, 1, 0};
  const auto v = validate_labeling(g, all, one_cut);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::CycleInconsistent);

  const std::vector<std::uint8_t> x{1, 0, 1};
  const std::vector<std::uint8_t> y{1, 0, 0};
  const auto w = validate_labeling(g, x, y);
  REQUIRE(w.size() == 1);
  CHECK(w[0].kind == Violation::Kind::JoinedUnselected);
}

TEST_CASE("partition-induced labels satisfy every cycle inequality") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 6);
    const auto g = testing::random_instance(
        rng, {.nodes = n, .edge_probability = 0.6, .constrained_fraction = 0});
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<int>(rng() % 4) - 1;
    const Solution sol(labels);
    const auto y = edge_labels(g, sol);
    CHECK(testing::cycle_violations(testing::enumerate_cycles(g), y) == 0);
    CHECK(validate_labeling(g, node_labels(g, sol), y).empty());
  }
}

TEST_CASE("cycle enumeration oracle catches an inconsistent labeling") {
  const auto g = ProblemGraph::untyped({0, 0, 0, 0}, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {0, 3, 1}});
  const auto cycles = testing::enumerate_cycles(g);
  CHECK(cycles.size() == 2);  // the square, once per orientation
  CHECK(testing::cycle_violations(cycles, {1, 1, 1, 0}) > 0);
  CHECK(testing::cycle_violations(cycles, {1, 1, 0, 0}) == 0);
}

TEST_CASE("Solution canonical form and encoding") {
  const Solution s(std::vector<int>{7, -1, 3, 7, 3});
  CHECK(s.canonical().labels() == std::vector<int>{0, -1, 1, 0, 1});
  CHECK(s.encode() == "0,3|2,4");
  CHECK(s.selected_nodes() == std::vector<NodeIndex>{0, 2, 3, 4});
  CHECK(Solution(std::vector<int>{-1, -1}).encode().empty());
}

TEST_CASE("ProblemGraph enforces its invariants") {
  const auto parts = PartVocabulary::standard14();
  const int neck = parts.require("neck");
  const int wrist = parts.require("r_wrist");
  std::vector<Detection> dets{det(10, 0, neck), det(11, 0, wrist), det(12, 1, wrist), det(13, 0, wrist)};
  std::vector<double> costs(4, 0.0);
  auto build = [&](std::vector<Edge> edges, std::vector<NodePair> ml = {}, std::vector<NodePair> mc = {}) {
    return ProblemGraph(parts, dets, std::move(edges), costs, std::move(ml), std::move(mc));
  };

  CHECK_NOTHROW(build({{0, 1, EdgeKind::RootAttachment, 1.0},
                       {1, 2, EdgeKind::Temporal, 0.0},
                       {3, 1, EdgeKind::SameType, 0.0}}));
  CHECK_THROWS_AS(build({{1, 1, EdgeKind::CrossType, 0}}), StructuralError);
  CHECK_THROWS_AS(build({{0, 1, EdgeKind::CrossType, 0}, {1, 0, EdgeKind::CrossType, 0}}),
                  StructuralError);
  CHECK_THROWS_AS(build({{0, 9, EdgeKind::CrossType, 0}}), StructuralError);
  CHECK_THROWS_AS(build({{1, 3, EdgeKind::Temporal, 0}}), StructuralError);
  CHECK_THROWS_AS(build({{1, 2, EdgeKind::SameType, 0}}), StructuralError);
  CHECK_THROWS_AS(build({{1, 3, EdgeKind::CrossType, 0}}), StructuralError);
  CHECK_THROWS_AS(build({{1, 3, EdgeKind::RootAttachment, 0}}), StructuralError);
  CHECK_THROWS_AS(build({}, {{0, 1}}, {{1, 0}}), StructuralError);
  CHECK_THROWS_AS(build({}, {{0, 5}}), StructuralError);

  const auto g = build({{1, 0, EdgeKind::RootAttachment, 1.0}});
  CHECK(g.edges()[0].u == 0);
  CHECK(g.find_edge(1, 0).has_value());
  CHECK(!g.find_edge(1, 2).has_value());
  CHECK(g.index_of(12) == 2);
  CHECK(g.count_edges(EdgeKind::RootAttachment) == 1);
}

TEST_CASE("PartVocabulary root pair") {
  const auto parts = PartVocabulary::standard14();
  CHECK(parts.size() == 14);
  CHECK(parts[*parts.anchor_root()].name == "neck");
  CHECK(parts[*parts.secondary_root()].name == "head_top");
  CHECK(parts.is_root(parts.require("head_top")));
  CHECK(!parts.is_root(parts.require("l_knee")));
  CHECK_THROWS_AS(parts.require("tail"), StructuralError);
  CHECK_THROWS_AS(PartVocabulary(std::vector<std::string>{"a", "a"}), StructuralError);
  CHECK_THROWS_AS(PartVocabulary({"a", "b"}, std::make_pair(std::string("a"), std::string("a"))),
                  StructuralError);
}
