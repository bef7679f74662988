#include <doctest.h>

#include <cmath>
#include <deque>
#include <map>
#include <sstream>

#include "ird/common/errors.hpp"
#include "ird/distillcore/dictionary.hpp"
#include "ird/distillcore/losses.hpp"
#include "ird/distillcore/teacher.hpp"
#include "ird/distillcore/total_loss.hpp"
#include "ird/numkit/grad_check.hpp"
#include "ird/numkit/ops.hpp"

using namespace ird;
using namespace ird::distill;

namespace {

rel::RelationBranch small_branch(std::uint64_t seed, std::vector<int> rels, std::size_t in = 7) {
  rel::BranchConfig cfg;
  cfg.encoder.input_dim = in;
  cfg.encoder.hidden = {8};
  cfg.encoder.feature_dim = 5;
  Rng rng(seed);
  rel::RelationBranch b(cfg, rng);
  b.grow_head(rels, rng);
  return b;
}

num::Tensor randn(num::Shape shape, Rng& rng, double sd = 1.0) {
  num::Tensor t(std::move(shape));
  for (double& v : t.storage()) v = normal(rng, sd);
  return t;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Softmax cross-entropy written out directly.
double cdd_reference(const std::vector<double>& cur, const std::vector<double>& prev, std::size_t n, double t) {
  double zc = 0, zp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    zc += std::exp(cur[i] / t);
    zp += std::exp(prev[i] / t);
  }
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s -= std::exp(prev[i] / t) / zp * std::log(std::exp(cur[i] / t) / zc);
  return s;
}

}  // namespace

TEST_CASE("default loss weights") {
  LossWeights w;
  CHECK(w.alpha0 == 2.5);
  CHECK(w.alpha1 == 0.05);
  CHECK(w.alpha2 == 0.05);
  CHECK(w.t_cdd == 1.0);
  CHECK_NOTHROW(w.validate());
  w.alpha1 = -0.1;
  CHECK_THROWS_AS(w.validate(), InvalidInput);
  w = {};
  w.t_cdd = 0.0;
  CHECK_THROWS_AS(w.validate(), InvalidInput);
}

TEST_CASE("focal loss examples") {
  const std::vector<double> one{1.0}, pos{1.0}, neg{0.0};
  CHECK(focal_loss(one, pos, 0.2, 0.5) == doctest::Approx(0.0).epsilon(1e-8));
  const std::vector<double> half{0.5};
  CHECK(focal_loss(half, pos, 2.0, 0.25) == doctest::Approx(0.25 * 0.25 * std::log(2.0)).epsilon(1e-12));
  CHECK(focal_loss(half, pos, 2.0, 0.25) == doctest::Approx(0.0433).epsilon(1e-3));

  const std::vector<double> p{0.3, 0.8, 0.05}, t{1, 0, 1};
  double bce = 0;
  for (std::size_t i = 0; i < p.size(); ++i) bce -= t[i] * std::log(p[i]) + (1 - t[i]) * std::log(1 - p[i]);
  CHECK(focal_loss(p, t, 0.0, 0.5) == doctest::Approx(0.5 * bce).epsilon(1e-12));

  CHECK_THROWS_AS(focal_loss(p, pos, 0.2, 0.5), InvalidInput);
}

TEST_CASE("tape focal loss matches the plain one and honors the mask") {
  Rng rng(3);
  auto logits = randn({4, 3}, rng, 3.0);
  num::Tensor targets(num::Shape{4, 3});
  for (double& v : targets.storage()) v = uniform01(rng) < 0.4 ? 1.0 : 0.0;
  num::Tensor mask(num::Shape{4, 3}, 1.0);
  mask.at(1, 2) = 0.0;
  mask.at(3, 0) = 0.0;

  num::Tape tape;
  auto v = focal_loss(tape.variable(logits), targets, mask, 0.2, 0.5);
  double ref = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 3; ++k) {
      if (mask.at(i, k) == 0.0) continue;
      const std::vector<double> pp{sigmoid(logits.at(i, k))}, tt{targets.at(i, k)};
      ref += focal_loss(pp, tt, 0.2, 0.5);
    }
  CHECK(v.value().item() == doctest::Approx(ref).epsilon(1e-12));

  tape.backward(v);
  auto g = tape.grad(num::Var{&tape, 0});
  CHECK(g.at(1, 2) == 0.0);
  CHECK(g.at(3, 0) == 0.0);
}

TEST_CASE("cdd examples") {
  const std::vector<double> zero{0, 0}, l3{std::log(3.0), 0};
  CHECK(cdd_loss(zero, zero, 2, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(cdd_loss(l3, zero, 2, 1.0) == doctest::Approx(-(0.5 * std::log(0.75) + 0.5 * std::log(0.25))).epsilon(1e-12));
  CHECK(cdd_loss(l3, zero, 2, 1.0) == doctest::Approx(0.8370).epsilon(1e-3));
  CHECK(cdd_loss(l3, zero, 0, 1.0) == 0.0);

  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> c(5), p(5);
    for (double& x : c) x = 4 * normal(rng);
    for (double& x : p) x = 4 * normal(rng);
    const double t = 0.5 + 2 * uniform01(rng);
    const std::size_t n = 1 + uniform_index(rng, 5);
    CHECK(cdd_loss(c, p, n, t) == doctest::Approx(cdd_reference(c, p, n, t)).epsilon(1e-10));
  }
}

TEST_CASE("cdd gradient vanishes at matched logits") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = randn({3, 6}, rng, 5.0);
    num::Tape tape;
    auto x = tape.variable(s);
    tape.backward(cdd_loss(x, s, 4, 1.0));
    auto g = tape.grad(x);
    CHECK(std::sqrt(num::squared_norm(g.data())) < 1e-10);
  }
}

TEST_CASE("cdd over zero old classes is zero") {
  num::Tape tape;
  auto x = tape.variable(num::Tensor::matrix({{1, 2}}));
  auto v = cdd_loss(x, num::Tensor::matrix({{3, 4}}), 0, 1.0);
  CHECK(v.value().item() == 0.0);
}

TEST_CASE("feature distillation examples") {
  const std::vector<double> a{1, 0}, b{0, 1};
  CHECK(mfd_loss(a, b) == doctest::Approx(2.0));
  CHECK(mfd_loss(a, a) == 0.0);
  const std::vector<double> f{3, 4}, zero{0, 0};
  CHECK(cfd_loss(f, zero) == doctest::Approx(25.0));
  CHECK(cfd_loss(f, f) == 0.0);

  num::Tape tape;
  auto cur = tape.variable(num::Tensor::matrix({{3, 4}, {1, -2}}));
  const auto ref = num::Tensor::matrix({{0, 0}, {1, 1}});
  auto loss = cfd_loss(cur, ref);
  CHECK(loss.value().item() == doctest::Approx(25.0 + 9.0));
  tape.backward(loss);
  auto g = tape.grad(cur);
  CHECK(g == num::Tensor::matrix({{6, 8}, {0, -6}}));
}

TEST_CASE("ema update examples") {
  auto cur = small_branch(1, {0, 1});
  auto init = small_branch(2, {0, 1});
  // copy the head so only values differ
  init.params().at("cls.weight") = cur.params().at("cls.weight");
  for (double& v : init.params().at("cls.weight").storage()) v += 1.0;

  MomentumTeacher keep(init, 1.0);
  keep.ema_update(cur);
  CHECK(keep.branch().params() == init.params());

  MomentumTeacher copy(init, 0.0);
  copy.ema_update(cur);
  CHECK(copy.branch().params() == cur.params());

  rel::RelationBranch ones = init, zeros = init;
  for (auto& t : ones.params().values()) std::fill(t.storage().begin(), t.storage().end(), 1.0);
  for (auto& t : zeros.params().values()) std::fill(t.storage().begin(), t.storage().end(), 0.0);
  MomentumTeacher one_step(ones, 0.999);
  one_step.ema_update(zeros);
  for (const auto& t : one_step.branch().params().values())
    for (double v : t.storage()) CHECK(v == doctest::Approx(0.999).epsilon(1e-15));
}

TEST_CASE("ema converges geometrically") {
  auto cur = small_branch(5, {0, 1, 2});
  auto start = small_branch(6, {0, 1, 2});
  const double m = 0.9;
  MomentumTeacher t(start, m);
  for (int k = 1; k <= 60; ++k) {
    t.ema_update(cur);
    const double f = std::pow(m, k);
    for (std::size_t p = 0; p < cur.params().size(); ++p) {
      const auto& s = t.branch().params().value(p).storage();
      const auto& c = cur.params().value(p).storage();
      const auto& s0 = start.params().value(p).storage();
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double d0 = s0[i] - c[i];
        CHECK(std::abs((s[i] - c[i]) - f * d0) <= 1e-12 * std::max(1.0, std::abs(d0)));
      }
    }
  }
}

TEST_CASE("teacher must grow before following a larger head") {
  auto cur = small_branch(7, {0, 1});
  MomentumTeacher t(cur);
  Rng rng(1);
  cur.grow_head({2}, rng);
  CHECK_THROWS_AS(t.ema_update(cur), InvalidInput);
  t.grow(cur);
  CHECK(t.branch().relations() == cur.relations());
  CHECK(t.branch().params().at("cls.weight") == cur.params().at("cls.weight"));
  CHECK_NOTHROW(t.ema_update(cur));
}

TEST_CASE("dictionary basics") {
  ConceptDictionary d(10);
  CHECK_FALSE(d.contains(3));
  d.store(3, {1.0, 2.0});
  CHECK(d.contains(3));
  CHECK(d.size(3) == 1);
  for (int i = 0; i < 10; ++i) d.store(3, {static_cast<double>(i + 10), 0.0});
  CHECK(d.size(3) == 10);
  CHECK(d.queue(3).front().feature == std::vector<double>{10.0, 0.0});
  CHECK_FALSE(d.contains(5));
  d.store(5, {7.0, 7.0});
  CHECK(d.size(3) == 10);
  CHECK(d.size(5) == 1);
  CHECK_THROWS_AS(d.store(5, {1.0}), InvalidInput);

  Rng rng(2);
  const std::vector<int> absent{1, 2};
  CHECK_FALSE(d.retrieve(absent, rng).has_value());
  const std::vector<int> only5{5};
  auto hit = d.retrieve(only5, rng);
  REQUIRE(hit);
  CHECK(hit->concept_id == 5);
  CHECK(hit->feature == std::vector<double>{7.0, 7.0});
}

TEST_CASE("dictionary retrieval is uniform within a queue") {
  ConceptDictionary d(10);
  for (int i = 0; i < 10; ++i) d.store(4, {static_cast<double>(i)});
  Rng rng(77);
  std::vector<int> counts(10, 0);
  const std::vector<int> c{4};
  for (int k = 0; k < 10000; ++k) counts[static_cast<std::size_t>(d.retrieve(c, rng)->feature[0])]++;
  for (int n : counts) {
    CHECK(n >= 850);
    CHECK(n <= 1150);
  }
}

TEST_CASE("dictionary matches a list model") {
  const std::size_t cap = 10;
  ConceptDictionary d(cap);
  std::map<int, std::deque<std::vector<double>>> model;
  Rng rng(31);
  for (int op = 0; op < 5000; ++op) {
    const int c = static_cast<int>(uniform_index(rng, 6));
    if (uniform01(rng) < 0.6) {
      std::vector<double> f{static_cast<double>(op), normal(rng)};
      d.store(c, f);
      auto& q = model[c];
      q.push_back(f);
      if (q.size() > cap) q.pop_front();
    } else {
      std::vector<int> concepts{c, static_cast<int>(uniform_index(rng, 6))};
      auto hit = d.retrieve(concepts, rng);
      const bool any = (model.count(concepts[0]) && !model[concepts[0]].empty()) ||
                       (model.count(concepts[1]) && !model[concepts[1]].empty());
      REQUIRE(hit.has_value() == any);
      if (hit) {
        const auto& q = model.at(hit->concept_id);
        CHECK(std::find(q.begin(), q.end(), hit->feature) != q.end());
      }
    }
    for (const auto& [k, q] : model) {
      REQUIRE(d.size(k) == q.size());
      REQUIRE(d.size(k) <= cap);
      std::size_t i = 0;
      for (const auto& s : d.queue(k)) CHECK(s.feature == q[i++]);
    }
  }
}

TEST_CASE("dictionary dump round trip") {
  ConceptDictionary d(4);
  Rng rng(8);
  for (int i = 0; i < 20; ++i) d.store(static_cast<int>(uniform_index(rng, 3)), {normal(rng), normal(rng), 1e-300});
  std::stringstream ss;
  d.dump(ss);
  CHECK(ConceptDictionary::load(ss) == d);
  std::stringstream bad("ird-dictionary 1 capacity 4 clock 0 concepts 1\nconcept 0 9 2\n");
  CHECK_THROWS(ConceptDictionary::load(bad));
}

namespace {

struct Micro {
  rel::RelationBranch current, previous;
  MomentumTeacher teacher;
  ConceptDictionary dict{10};
  LossBatch batch;
};

// Two supervised pairs and one negative; the head has one new relation.
Micro make_micro(std::uint64_t seed) {
  Rng rng(seed);
  Micro m{small_branch(seed, {0, 1}), {}, {}, ConceptDictionary(10), {}};
  m.previous = m.current;
  for (auto& t : m.previous.params().values())
    for (double& v : t.storage()) v += normal(rng, 0.1);
  m.current.grow_head({2}, rng);
  rel::RelationBranch tb = m.current;
  for (auto& t : tb.params().values())
    for (double& v : t.storage()) v += normal(rng, 0.1);
  m.teacher = MomentumTeacher(tb);
  m.batch.inputs = randn({3, 7}, rng);
  m.batch.targets = {{true, {0, 2}, {}}, {true, {1}, {}}, {false, {}, {1}}};
  for (int c : {0, 1, 2}) {
    std::vector<double> f(5);
    for (double& v : f) v = normal(rng);
    m.dict.store(c, f);
  }
  return m;
}

}  // namespace

TEST_CASE("total loss with zero weights is plain focal training") {
  Micro m = make_micro(3);
  LossWeights w;
  w.alpha0 = w.alpha1 = w.alpha2 = 0.0;
  DistillContext ctx{&m.previous, &m.teacher, &m.dict};
  const ConceptDictionary before = m.dict;
  Rng rng(1);
  num::Tape tape;
  auto bound = num::bind(tape, m.current.params(), true);
  auto out = total_loss(tape, m.current, bound, m.batch, ctx, w, rng);
  CHECK(out.terms.total == out.terms.rel);
  CHECK(out.terms.cdd == 0.0);
  CHECK(out.terms.mfd == 0.0);
  CHECK(out.terms.cfd == 0.0);
  CHECK(m.dict == before);
}

TEST_CASE("total loss without supervised pairs leaves the dictionary alone") {
  Micro m = make_micro(4);
  for (auto& t : m.batch.targets) t = {false, {}, {}};
  DistillContext ctx{&m.previous, &m.teacher, &m.dict};
  const ConceptDictionary before = m.dict;
  Rng rng(1);
  num::Tape tape;
  auto bound = num::bind(tape, m.current.params(), true);
  auto out = total_loss(tape, m.current, bound, m.batch, ctx, LossWeights{}, rng);
  CHECK(out.terms.supervised == 0);
  CHECK(out.terms.total == out.terms.rel);
  CHECK(m.dict == before);
}

TEST_CASE("total loss equals the sum of independently computed terms") {
  Micro m = make_micro(5);
  const LossWeights w;
  DistillContext ctx{&m.previous, &m.teacher, &m.dict};
  // one feature per concept, so retrieval is deterministic whichever concept is picked
  ConceptDictionary single(10);
  for (int c : {0, 1}) single.store(c, m.dict.queue(c).back().feature);
  single.store(2, m.dict.queue(0).back().feature);
  m.dict = single;

  const auto z = m.current.encode(m.batch.inputs);
  const auto s = m.current.classify(z);
  const auto zt = m.teacher.branch().encode(m.batch.inputs);
  const auto sp = m.previous.classify(m.previous.encode(m.batch.inputs));
  double expect = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> p, t;
    for (std::size_t k = 0; k < 3; ++k) {
      const int rel = m.current.relations()[k];
      const auto& tg = m.batch.targets[i];
      if (std::find(tg.ignored.begin(), tg.ignored.end(), rel) != tg.ignored.end()) continue;
      p.push_back(sigmoid(s.at(i, k)));
      t.push_back(std::find(tg.positives.begin(), tg.positives.end(), rel) != tg.positives.end() ? 1.0 : 0.0);
    }
    expect += focal_loss(p, t, w.gamma, w.alpha_f);
    if (!m.batch.targets[i].supervised) continue;
    std::vector<double> cur(s.row(i).begin(), s.row(i).end()), prev(sp.row(i).begin(), sp.row(i).end());
    expect += w.alpha0 * cdd_reference(cur, prev, 2, w.t_cdd);
    std::vector<double> zi(z.row(i).begin(), z.row(i).end()), zti(zt.row(i).begin(), zt.row(i).end());
    expect += w.alpha1 * mfd_loss(zti, zi);
    // pair 0 has concepts {0,2} whose single features are equal; pair 1 has {1}
    const auto& ref = m.dict.queue(i == 0 ? 0 : 1).back().feature;
    expect += w.alpha2 * cfd_loss(zi, ref);
  }

  Rng rng(9);
  num::Tape tape;
  auto bound = num::bind(tape, m.current.params(), true);
  auto out = total_loss(tape, m.current, bound, m.batch, ctx, w, rng);
  CHECK(out.value.value().item() == doctest::Approx(expect).epsilon(1e-10));
  CHECK(out.terms.cfd_pairs == 2);
  CHECK(out.terms.stored == 2);
  // stored features are teacher features
  CHECK(m.dict.queue(1).back().feature == std::vector<double>(zt.row(1).begin(), zt.row(1).end()));
}

TEST_CASE("new concepts are stored without retrieval") {
  Micro m = make_micro(6);
  m.dict = ConceptDictionary(10);
  DistillContext ctx{&m.previous, &m.teacher, &m.dict};
  Rng rng(2);
  num::Tape tape;
  auto bound = num::bind(tape, m.current.params(), true);
  auto out = total_loss(tape, m.current, bound, m.batch, ctx, LossWeights{}, rng);
  CHECK(out.terms.cfd_pairs == 0);
  CHECK(out.terms.cfd == 0.0);
  CHECK(m.dict.size(0) == 1);
  CHECK(m.dict.size(1) == 1);
  CHECK(m.dict.size(2) == 1);
}

TEST_CASE("frozen models get no gradient and stay unchanged") {
  Micro m = make_micro(7);
  const auto prev_before = m.previous.params();
  const auto teacher_before = m.teacher.branch().params();
  DistillContext ctx{&m.previous, &m.teacher, &m.dict};
  Rng rng(3);
  num::Tape tape;
  auto bound = num::bind(tape, m.current.params(), true);
  // frozen snapshots bound as constants never get a gradient slot
  auto frozen = num::bind(tape, m.teacher.branch().params(), false);
  auto out = total_loss(tape, m.current, bound, m.batch, ctx, LossWeights{}, rng);
  tape.backward(out.value);
  for (const auto& v : frozen) {
    CHECK_FALSE(tape.requires_grad(v));
    CHECK(tape.grad_slot(v) == nullptr);
  }
  const auto grads = num::gradients(tape, bound);
  double total = 0;
  for (const auto& g : grads) total += num::squared_norm(g.data());
  CHECK(total > 0.0);
  CHECK(m.previous.params() == prev_before);
  CHECK(m.teacher.branch().params() == teacher_before);
}

TEST_CASE("mfd gradient flows into the current features only") {
  num::Tape tape;
  auto cur = tape.variable(num::Tensor::matrix({{0, 1}}));
  const auto teacher = num::Tensor::matrix({{1, 0}});
  auto loss = mfd_loss(cur, teacher);
  CHECK(loss.value().item() == doctest::Approx(2.0));
  tape.backward(loss);
  CHECK(tape.grad(cur) == num::Tensor::matrix({{-2, 2}}));
  CHECK(tape.grad_buffers() >= 1);
}

TEST_CASE("a small step on CFD decreases it") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    auto b = small_branch(100 + static_cast<std::uint64_t>(trial), {0});
    auto x = randn({4, 7}, rng);
    auto ref = randn({4, 5}, rng);
    auto eval = [&](const rel::RelationBranch& br) {
      num::Tape tape;
      auto bound = num::bind(tape, br.params(), true);
      auto v = cfd_loss(br.encode(bound, tape.constant(x)), ref);
      tape.backward(v);
      return std::make_pair(v.value().item(), num::gradients(tape, bound));
    };
    auto [l0, g] = eval(b);
    for (std::size_t p = 0; p < g.size(); ++p)
      for (std::size_t i = 0; i < g[p].size(); ++i) b.params().value(p)[i] -= 1e-4 * g[p][i];
    CHECK(eval(b).first < l0);
  }
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(55);
  for (int trial = 0; trial < 5; ++trial) {
    auto logits = randn({3, 4}, rng, 2.0);
    num::Tensor targets(num::Shape{3, 4});
    for (double& v : targets.storage()) v = uniform01(rng) < 0.5 ? 1.0 : 0.0;
    num::Tensor mask(num::Shape{3, 4}, 1.0);
    mask.at(0, 1) = 0.0;
    CHECK(num::grad_check([&](num::Tape&, std::span<const num::Var> p) { return focal_loss(p[0], targets, mask, 0.2, 0.5); },
                          {logits}) < 1e-6);
    auto prev = randn({3, 4}, rng, 2.0);
    CHECK(num::grad_check([&](num::Tape&, std::span<const num::Var> p) { return cdd_loss(p[0], prev, 3, 1.0); }, {logits}) <
          1e-6);
    auto ref = randn({3, 4}, rng);
    CHECK(num::grad_check([&](num::Tape&, std::span<const num::Var> p) { return mfd_loss(p[0], ref); }, {logits}) < 1e-6);
    CHECK(num::grad_check([&](num::Tape&, std::span<const num::Var> p) { return cfd_loss(p[0], ref); }, {logits}) < 1e-6);
  }
}
