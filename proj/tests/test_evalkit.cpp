#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "ap_oracle.hpp"
#include "ird/common/errors.hpp"
#include "ird/evalkit/aggregate.hpp"
#include "ird/evalkit/ap.hpp"
#include "ird/evalkit/infer.hpp"
#include "ird/evalkit/report_io.hpp"

using namespace ird;
using namespace ird::eval;

namespace {

PredictionRecord pred(Box h, Box o, double score, int image = 0) {
  PredictionRecord p;
  p.image_id = image;
  p.human = h;
  p.object = o;
  p.score = score;
  return p;
}

const Box kUnit{0.0, 0.0, 1.0, 1.0};
const Box kFar{5.0, 5.0, 6.0, 6.0};

// (o,r) classes 0:(0,0) 1:(0,1) 2:(1,0) 3:(1,1)
world::WorldSpec square_spec() {
  world::WorldSpec s;
  s.n_objects = 2;
  s.n_relations = 2;
  s.classes = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  s.class_weights.assign(4, 1.0);
  return s;
}

}  // namespace

TEST_CASE("ap examples") {
  const std::vector<GtPair> one{{0, kUnit, kUnit}};
  // both IoUs 0.6
  const Box b06{0.0, 0.0, 1.0, 0.6};
  CHECK(*match_and_ap({pred(b06, b06, 0.9)}, one) == doctest::Approx(1.0));

  CHECK(*match_and_ap({pred(kUnit, kUnit, 0.9), pred(kFar, kFar, 0.5)}, one) == doctest::Approx(1.0));
  CHECK(*match_and_ap({pred(kFar, kFar, 0.9), pred(kUnit, kUnit, 0.5)}, one) == doctest::Approx(0.5));

  // duplicates: second is a false positive
  const auto tp = greedy_match({pred(kUnit, kUnit, 0.9), pred(kUnit, kUnit, 0.8)}, one);
  CHECK(tp == std::vector<bool>{true, false});

  // IoU exactly 0.5 is not a match
  const Box half{0.0, 0.0, 1.0, 0.5};
  CHECK(*match_and_ap({pred(kUnit, half, 0.9)}, one) == 0.0);

  // other image never matches
  CHECK(*match_and_ap({pred(kUnit, kUnit, 0.9, 1)}, one) == 0.0);
}

TEST_CASE("absent and zero APs") {
  CHECK_FALSE(match_and_ap({}, {}).has_value());
  CHECK(*match_and_ap({pred(kUnit, kUnit, 0.3)}, {}) == 0.0);
  CHECK(*match_and_ap({}, {{0, kUnit, kUnit}}) == 0.0);
}

TEST_CASE("greedy matching claims the best unclaimed gt") {
  const std::vector<GtPair> gts{{0, kUnit, {0.0, 0.0, 1.0, 0.7}}, {0, kUnit, kUnit}};
  // first prediction overlaps both, takes gt 1 (min IoU 1.0)
  // second then claims gt 0 (min IoU 0.7)
  const auto tp = greedy_match({pred(kUnit, kUnit, 0.9), pred(kUnit, kUnit, 0.8)}, gts);
  CHECK(tp == std::vector<bool>{true, true});
  // order of input does not matter, only scores
  const auto tp2 = greedy_match({pred(kUnit, kUnit, 0.2), pred(kUnit, kUnit, 0.8)}, gts);
  CHECK(tp2 == std::vector<bool>{true, true});
}

TEST_CASE("average precision of ranked flags") {
  CHECK(average_precision({true, false, true}, 2) == doctest::Approx(0.5 + 0.5 * 2.0 / 3.0));
  CHECK(average_precision({false, false}, 3) == 0.0);
  CHECK(average_precision({true, true}, 4) == doctest::Approx(0.5));
  CHECK(average_precision({}, 0) == 0.0);
}

TEST_CASE("match_and_ap equals the brute-force oracle") {
  Rng rng(2024);
  auto ui = [](Rng& r, std::size_t n) { return uniform_index(r, n); };
  std::vector<PredictionRecord> preds;
  std::vector<GtPair> gts;
  int matched = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    oracle::micro_instance(rng, ui, 3, 5, preds, gts);
    const auto got = match_and_ap(preds, gts);
    const auto want = oracle::ap(preds, gts);
    CAPTURE(trial);
    REQUIRE(got.has_value() == want.has_value());
    if (!got) continue;
    CHECK(std::abs(*got - *want) <= 1e-12);
    if (*want > 0) ++matched;

    // flags agree exactly
    const auto flags = greedy_match(preds, gts);
    const auto order = oracle::rank(preds);
    const auto ref = oracle::ranked_tp(preds, gts);
    for (std::size_t k = 0; k < order.size(); ++k) CHECK(flags[order[k]] == ref[k]);
  }
  CHECK(matched > 500);
}

TEST_CASE("scaling scores leaves AP unchanged") {
  Rng rng(9);
  auto ui = [](Rng& r, std::size_t n) { return uniform_index(r, n); };
  std::vector<PredictionRecord> preds;
  std::vector<GtPair> gts;
  for (int trial = 0; trial < 300; ++trial) {
    oracle::micro_instance(rng, ui, 3, 5, preds, gts);
    const auto base = match_and_ap(preds, gts);
    for (double k : {0.5, 0.01, 1.0 / 3.0}) {
      auto scaled = preds;
      for (auto& p : scaled) p.score *= k;
      CHECK(match_and_ap(scaled, gts) == base);
    }
  }
}

TEST_CASE("aggregate examples") {
  const auto spec = square_spec();
  const auto plan = cur::assign_plan(spec, {}, {1, 2, 2, 0}, 2);
  const std::vector<std::size_t> counts{50, 3, 50, 0};
  std::map<int, Metric> aps{{0, 1.0}, {1, 0.0}, {2, 0.5}, {3, 0.25}};

  const auto r1 = aggregate(plan, aps, 1, counts, {0, 1, 2, 3}, {});
  CHECK_FALSE(r1.old_map.has_value());
  CHECK_FALSE(r1.rid.has_value());
  CHECK_FALSE(r1.rid_phase.has_value());
  CHECK(*r1.full == doctest::Approx(1.0));
  CHECK(r1.uc_set.empty());

  const auto r2 = aggregate(plan, aps, 2, counts, {0, 1, 2, 3}, {});
  CHECK(*r2.old_map == doctest::Approx(1.0));
  CHECK(*r2.full == doctest::Approx(0.5));
  CHECK(r2.rare_set == std::vector<int>{1});
  CHECK(*r2.rare == doctest::Approx(0.0));
  CHECK(*r2.non_rare == doctest::Approx(0.75));
  // phase 2 reuses relation 0 (class 2) -> class 0 drifts
  CHECK(r2.rid_set == std::vector<int>{0});
  CHECK(*r2.rid_phase == doctest::Approx(1.0));
  // (1,1) is an unseen combination
  CHECK(r2.uc_set == std::vector<int>{3});
  CHECK(*r2.uc == doctest::Approx(0.25));

  const std::vector<Metric> prev{0.4, std::nullopt};
  const auto r3 = aggregate(plan, aps, 2, counts, {0, 1, 2, 3}, prev);
  CHECK(*r3.rid == doctest::Approx(0.7));
}

TEST_CASE("rid phase mean over a hand-built drift set") {
  // old APs {1.0, 0.0, 0.5}; phase 2 reuses relation 0, which only the
  // first two old classes carry
  world::WorldSpec s;
  s.n_objects = 4;
  s.n_relations = 2;
  s.classes = {{0, 0}, {1, 0}, {2, 1}, {3, 0}};
  s.class_weights.assign(4, 1.0);
  const auto plan = cur::assign_plan(s, {}, {1, 1, 1, 2}, 2);
  std::map<int, Metric> aps{{0, 1.0}, {1, 0.0}, {2, 0.5}, {3, 0.9}};
  const auto r = aggregate(plan, aps, 2, {20, 20, 20, 20}, {}, {});
  CHECK(r.rid_set == std::vector<int>{0, 1});
  CHECK(*r.rid_phase == doctest::Approx(0.5));
}

TEST_CASE("constant AP field gives constant aggregates") {
  const auto spec = square_spec();
  const auto plan = cur::assign_plan(spec, {}, {1, 2, 2, 0}, 2);
  std::map<int, Metric> aps{{0, 0.5}, {1, 0.5}, {2, 0.5}, {3, 0.5}};
  const auto r = aggregate(plan, aps, 2, {1, 20, 1, 20}, {0, 1, 2, 3}, {});
  for (const auto& m : {r.old_map, r.full, r.rare, r.non_rare, r.rid, r.uc}) CHECK(*m == doctest::Approx(0.5));
}

TEST_CASE("metric sets are consistent on random plans") {
  world::World w(world::default_world_spec(3));
  const auto train = world::generate_dataset(w, 1500, world::Split::Train);
  Rng rng(4);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    cur::PlanOptions o;
    o.seed = seed;
    const auto plan = cur::build_plan(w.spec(), train, o);
    const auto counts = cur::training_counts(plan, train);
    std::map<int, Metric> aps;
    for (std::size_t c = 0; c < w.spec().classes.size(); ++c) aps[static_cast<int>(c)] = uniform01(rng);
    std::vector<int> c_test(w.spec().classes.size());
    std::iota(c_test.begin(), c_test.end(), 0);
    for (int t = 1; t <= plan.phase_count; ++t) {
      const auto r = aggregate(plan, aps, t, counts, c_test, {});
      std::vector<int> u = r.old_set;
      for (int c : plan.phase_classes(t)) u.push_back(c);
      std::sort(u.begin(), u.end());
      CHECK(u == r.full_set);
      for (int c : r.rid_set) CHECK(std::binary_search(r.old_set.begin(), r.old_set.end(), c));
      CHECK(r.rare_set.size() + r.non_rare_set.size() == r.full_set.size());
      if (t == 1) CHECK_FALSE(r.old_map.has_value());
    }
  }
}

TEST_CASE("absent APs are skipped rather than counted as zero") {
  std::map<int, Metric> aps{{0, 0.8}, {1, std::nullopt}};
  CHECK(*mean_ap(aps, {0, 1}) == doctest::Approx(0.8));
  CHECK_FALSE(mean_ap(aps, {1}).has_value());
  CHECK_FALSE(mean_ap(aps, {}).has_value());
}

TEST_CASE("inference records") {
  world::World w(world::default_world_spec(5));
  const auto imgs = world::generate_dataset(w, 25, world::Split::Test);
  rel::BranchConfig cfg;
  cfg.encoder.input_dim = rel::pair_input_dim(w.spec().feature_dim(), w.spec().global_dim);
  Rng rng(3);
  rel::RelationBranch model(cfg, rng);
  model.grow_head({0, 2, 4}, rng);
  det::DetectorConfig dc;

  const auto a = infer(w, model, imgs, dc, 7);
  const auto b = infer(w, model, imgs, dc, 7);
  CHECK(a == b);
  std::map<int, std::size_t> per_image;
  for (const auto& p : a) {
    ++per_image[p.image_id];
    CHECK(p.score >= 0.0);
    CHECK(p.score <= 1.0);
    CHECK(w.spec().class_id(p.object_class, p.relation) >= 0);
    CHECK((p.relation == 0 || p.relation == 2 || p.relation == 4));
  }
  for (const auto& [id, n] : per_image) CHECK(n <= 7);
  CHECK_FALSE(a.empty());

  rel::ImagePairs empty;
  empty.image_id = 3;
  CHECK(infer(w.spec(), model, {empty}, 100).empty());
}

TEST_CASE("prediction and report files round trip") {
  Rng rng(12);
  std::vector<PredictionRecord> preds;
  for (int i = 0; i < 20; ++i) {
    PredictionRecord p;
    p.image_id = i;
    p.human = {uniform01(rng), 0.1, 0.9, 0.95};
    p.object = {0.2, uniform01(rng) * 0.5, 0.7, 0.8};
    p.object_class = i % 3;
    p.relation = i % 2;
    p.score = uniform01(rng);
    preds.push_back(p);
  }
  std::stringstream ps;
  write_predictions(ps, preds);
  CHECK(read_predictions(ps) == preds);

  const auto spec = square_spec();
  const auto plan = cur::assign_plan(spec, {}, {1, 2, 2, 0}, 2);
  std::map<int, Metric> aps{{0, 1.0 / 3.0}, {1, std::nullopt}, {2, 0.123456789}, {3, 0.25}};
  const auto r = aggregate(plan, aps, 2, {50, 3, 50, 0}, {0, 1, 2, 3}, {});
  std::stringstream rs;
  write_report(rs, r, spec.classes);
  CHECK(read_report(rs) == r);
  CHECK(format_metric(std::nullopt) == "NA");
  const auto j = report_json(r, spec.classes);
  CHECK(j["metrics"]["full"].get<double>() == doctest::Approx(*r.full));
  CHECK(j["class_ap"].size() == r.class_ap.size());
}
