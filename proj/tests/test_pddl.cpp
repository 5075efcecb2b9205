#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>

#include "doctest.h"
#include "glib/ndr.hpp"
#include "glib/pddl.hpp"

using namespace glib;

namespace {

const char* kMiniDomain = R"((define (domain mini)
  (:requirements :strips :typing :probabilistic-effects)
  (:types thing)
  (:predicates (wet ?x - thing) (dry ?x - thing) (raining))
  (:action soak
    :parameters (?x - thing)
    :precondition (and (dry ?x) (not (raining)))
    :effect (probabilistic
              0.7 (and (wet ?x) (not (dry ?x)))
              0.2 (and (raining)))))
)";

}  // namespace

TEST_CASE("domain parsing recovers types, predicates, and operators") {
  DomainSpec d = parse_domain(kMiniDomain);
  CHECK(d.name.str() == "mini");
  REQUIRE(d.types.size() == 1);
  CHECK(d.types[0].str() == "thing");
  REQUIRE(d.predicates.size() == 3);
  CHECK(d.find_predicate(Symbol::intern("wet"))->arity == 1);
  CHECK(d.find_predicate(Symbol::intern("raining"))->arity == 0);
  REQUIRE(d.operators.size() == 1);
  const auto& op = d.operators[0];
  CHECK(op.name.str() == "soak");
  REQUIRE(op.parameters.size() == 1);
  CHECK(op.parameters[0].str() == "?x");
  CHECK(op.preconditions.literals.size() == 2);
  CHECK(op.preconditions.literals[1].negated);
}

TEST_CASE("residual probability mass becomes an implicit empty outcome") {
  DomainSpec d = parse_domain(kMiniDomain);
  const auto& outs = d.operators[0].outcomes;
  REQUIRE(outs.size() == 3);  // 0.7, 0.2, and the 0.1 residual
  double total = 0;
  bool has_empty = false;
  for (const auto& [p, effects] : outs) {
    total += p;
    if (effects.empty()) {
      has_empty = true;
      CHECK(p == doctest::Approx(0.1));
    }
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(has_empty);
}

TEST_CASE("probability mass above one is rejected") {
  std::string bad = kMiniDomain;
  auto pos = bad.find("0.7");
  bad.replace(pos, 3, "0.9");
  CHECK_THROWS_AS(parse_domain(bad), ParseError);
}

TEST_CASE("parse errors carry line and column positions") {
  try {
    parse_domain("(define (domain broken)\n  (:predicates (p ?x - )))");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line >= 2);
    CHECK(e.column >= 1);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("unsupported constructs raise named errors") {
  const char* with_forall = R"((define (domain u)
    (:requirements :strips :typing)
    (:types t)
    (:predicates (p ?x - t))
    (:action a
      :parameters (?x - t)
      :precondition (forall (?y - t) (p ?y))
      :effect (p ?x)))
  )";
  CHECK_THROWS_AS(parse_domain(with_forall), UnsupportedFeatureError);
  const char* with_or = R"((define (domain u)
    (:requirements :strips :typing)
    (:types t)
    (:predicates (p ?x - t) (q ?x - t))
    (:action a
      :parameters (?x - t)
      :precondition (or (p ?x) (q ?x))
      :effect (p ?x)))
  )";
  CHECK_THROWS_AS(parse_domain(with_or), UnsupportedFeatureError);
}

TEST_CASE("problem parsing checks declarations and arities") {
  DomainSpec d = parse_domain(kMiniDomain);
  ProblemSpec p = parse_problem(R"((define (problem wash)
    (:domain mini)
    (:objects sock - thing shirt - thing)
    (:init (dry sock) (dry shirt))
    (:goal (and (wet sock)))))",
                                d);
  CHECK(p.name.str() == "wash");
  CHECK(p.objects.size() == 2);
  CHECK(p.init.literals().size() == 2);
  CHECK(p.goal.literals.size() == 1);

  CHECK_THROWS_AS(parse_problem(R"((define (problem bad)
    (:domain mini)
    (:objects sock - thing)
    (:init (dry sock) (dry ghost))
    (:goal (and (wet sock)))))",
                                d),
                  ParseError);
  CHECK_THROWS_AS(parse_problem(R"((define (problem bad2)
    (:domain mini)
    (:objects sock - thing)
    (:init (dry sock sock))
    (:goal (and (wet sock)))))",
                                d),
                  ParseError);
}

TEST_CASE("keywords are case-insensitive") {
  std::string upper = kMiniDomain;
  for (auto [from, to] : std::vector<std::pair<const char*, const char*>>{
           {"(:predicates", "(:PREDICATES"}, {":action", ":ACTION"}}) {
    auto pos = upper.find(from);
    REQUIRE(pos != std::string::npos);
    upper.replace(pos, std::string(from).size(), to);
  }
  DomainSpec d = parse_domain(upper);
  CHECK(d.predicates.size() == 3);
  CHECK(d.operators.size() == 1);
}

TEST_CASE("comments are ignored") {
  std::string commented = kMiniDomain;
  commented.insert(commented.find("(:predicates"),
                   "; a remark\n  ;; another\n  ");
  CHECK(parse_domain(commented).predicates.size() == 3);
}

TEST_CASE("learned model serialization round-trips predictions") {
  DomainSpec d = parse_domain(kMiniDomain);
  NDRSet truth = compile_ground_truth(d);
  std::string text = write_ndrs(truth, "mini-rt");
  DomainSpec back = parse_domain(text);
  NDRSet again = compile_ground_truth(back);

  Term sock = Term::object("sock", Symbol::intern("thing"));
  State s({Literal(Symbol::intern("dry"), {sock})}, {sock});
  Literal act(Symbol::intern("soak"), {sock});
  auto before = truth.predict_distribution(s, act);
  auto after = again.predict_distribution(s, act);
  REQUIRE(before.size() == after.size());
  for (size_t i = 0; i < before.size(); ++i) {
    CHECK(before[i].probability ==
          doctest::Approx(after[i].probability).epsilon(1e-9));
    CHECK(before[i].state.has_value() == after[i].state.has_value());
    if (before[i].state) CHECK(*before[i].state == *after[i].state);
  }
}

TEST_CASE("bundled assets all parse and validate") {
  namespace fs = std::filesystem;
  int domains = 0, problems = 0;
  for (const auto& dir : fs::directory_iterator("assets")) {
    if (!dir.is_directory()) continue;
    DomainSpec d = parse_domain(read_file((dir.path() / "domain.ppddl").string()));
    compile_ground_truth(d);  // operators must be well formed
    ++domains;
    for (const char* sub : {"problems", "suite"}) {
      fs::path pd = dir.path() / sub;
      if (!fs::exists(pd)) continue;
      for (const auto& f : fs::directory_iterator(pd)) {
        ProblemSpec p = parse_problem(read_file(f.path().string()), d);
        CHECK(!p.objects.empty());
        CHECK(!p.init.literals().empty());
        ++problems;
      }
    }
  }
  CHECK(domains == 4);
  CHECK(problems >= 24);
}

TEST_CASE("blocks problems are desk-scale") {
  DomainSpec d = parse_domain(read_file("assets/blocks/domain.ppddl"));
  ProblemSpec p = parse_problem(read_file("assets/blocks/problems/p01.ppddl"), d);
  CHECK(p.objects.size() == 5);
  // Plain STRIPS encoding: a 5-block tower problem carries on/ontable/clear
  // per block plus the hand literal.
  CHECK(p.init.literals().size() == 8);
}
