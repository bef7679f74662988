#include "ird/runner/experiment.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ird/common/errors.hpp"
#include "ird/common/hash.hpp"
#include "ird/evalkit/infer.hpp"
#include "ird/evalkit/report_io.hpp"
#include "ird/numkit/adamw.hpp"
#include "ird/numkit/checkpoint.hpp"

namespace ird::run {
namespace {

// Per-pair supervision for every image of a phase, in pair order.
struct PhaseTargets {
  std::vector<int> image_ids;
  std::vector<std::vector<distill::PairTarget>> targets;  // parallel to image_ids
};

PhaseTargets phase_targets(const ExperimentData& data, int t) {
  PhaseTargets out;
  for (const auto& pi : cur::phase_dataset(data.plan, data.train, t)) {
    const auto& cands = data.train_pairs.at(static_cast<std::size_t>(pi.image.id));
    std::vector<distill::PairTarget> tg(cands.pairs.size());
    for (std::size_t i = 0; i < cands.pairs.size(); ++i) {
      const auto& m = cands.pairs[i].match;
      if (!m) continue;
      const auto g = static_cast<std::size_t>(m->instance);
      tg[i].positives = pi.image.instances[g].relations;
      tg[i].ignored = pi.ignored[g];
      tg[i].supervised = !tg[i].positives.empty();
    }
    out.image_ids.push_back(pi.image.id);
    out.targets.push_back(std::move(tg));
  }
  return out;
}

distill::LossBatch make_batch(const ExperimentData& data, const PhaseTargets& pt, std::span<const std::size_t> idx,
                              std::size_t input_dim) {
  distill::LossBatch b;
  std::vector<double> rows;
  for (std::size_t k : idx) {
    const auto& cands = data.train_pairs[static_cast<std::size_t>(pt.image_ids[k])];
    rows.insert(rows.end(), cands.inputs.storage().begin(), cands.inputs.storage().end());
    b.targets.insert(b.targets.end(), pt.targets[k].begin(), pt.targets[k].end());
  }
  b.inputs = num::Tensor(num::Shape{b.targets.size(), input_dim}, std::move(rows));
  return b;
}

num::Checkpoint model_checkpoint(const rel::RelationBranch& m, int phase, const std::string& role) {
  num::Checkpoint c;
  c.params = m.params();
  std::string rels;
  for (std::size_t i = 0; i < m.relations().size(); ++i) rels += (i ? "," : "") + std::to_string(m.relations()[i]);
  c.meta["phase"] = std::to_string(phase);
  c.meta["relations"] = rels.empty() ? "-" : rels;
  c.meta["role"] = role;
  return c;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream os(p);
  if (!os) throw RuntimeFailure("cannot write " + p.string());
  os << s;
}

std::string metric_csv(const eval::Metric& m) { return m ? eval::format_metric(m) : ""; }

void write_curves(const std::filesystem::path& dir, const std::vector<eval::EvalReport>& reports) {
  std::ostringstream os;
  os << "phase,full,old,rare,non_rare,rid_phase,rid,uc\n";
  for (const auto& r : reports) {
    os << r.phase << ',' << metric_csv(r.full) << ',' << metric_csv(r.old_map) << ',' << metric_csv(r.rare) << ','
       << metric_csv(r.non_rare) << ',' << metric_csv(r.rid_phase) << ',' << metric_csv(r.rid) << ','
       << metric_csv(r.uc) << '\n';
  }
  write_text(dir / "curves.csv", os.str());
}

void write_log(const std::filesystem::path& dir, const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os.precision(10);
  os << "phase,epoch,lr,steps,rel,cdd,mfd,cfd,total\n";
  for (const auto& e : log) {
    os << e.phase << ',' << e.epoch << ',' << e.lr << ',' << e.steps << ',' << e.rel << ',' << e.cdd << ','
       << e.mfd << ',' << e.cfd << ',' << e.total << '\n';
  }
  write_text(dir / "train_log.csv", os.str());
}

void write_summary(const std::filesystem::path& dir, const ExperimentConfig& cfg, const ExperimentResult& res,
                   const std::vector<world::HoiClass>& table, bool complete) {
  std::ostringstream man;
  man << "mode " << to_string(cfg.mode) << '\n'
      << "seed " << cfg.plan_seed << '\n'
      << "config_hash " << hex64(cfg.hash()) << '\n'
      << "plan_checksum " << hex64(res.plan_checksum) << '\n'
      << "phases " << res.reports.size() << '\n'
      << "complete " << (complete ? "true" : "false") << '\n'
      << "digest " << res.digest << '\n';
  write_text(dir / "run.txt", man.str());
  write_curves(dir, res.reports);
  write_log(dir, res.log);
  nlohmann::json j;
  j["mode"] = to_string(cfg.mode);
  j["config_hash"] = hex64(cfg.hash());
  j["digest"] = res.digest;
  j["complete"] = complete;
  j["phases"] = nlohmann::json::array();
  for (const auto& r : res.reports) j["phases"].push_back(eval::report_json(r, table));
  write_text(dir / "summary.json", j.dump(2) + "\n");
}

}  // namespace

world::WorldSpec world_spec_for(const ExperimentConfig& cfg) {
  if (cfg.world_spec.empty()) return world::default_world_spec(cfg.world_seed);
  std::ifstream is(cfg.world_spec);
  if (!is) throw RuntimeFailure("cannot open world spec " + cfg.world_spec);
  return world::read_world_spec(is);
}

ExperimentData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  world::World w(world_spec_for(cfg));
  auto train = world::generate_dataset(w, cfg.train_images, world::Split::Train);
  auto test = world::generate_dataset(w, cfg.test_images, world::Split::Test);
  cur::PlanOptions po;
  po.phase_count = cfg.phase_count;
  po.seed = cfg.plan_seed;
  po.holdout_count = cfg.holdout;
  cur::PhasePlan base = cur::build_plan(w.spec(), train, po);
  cur::PhasePlan plan = cfg.mode == Mode::Joint ? cur::joint_plan(base) : base;

  ExperimentData d{std::move(w), std::move(train), std::move(test), std::move(base), std::move(plan), {}, {}, {}, {}};
  d.c_test = cur::classes_present(d.world.spec(), d.test);
  d.train_counts = cur::training_counts(d.plan, d.train);
  d.train_pairs.reserve(d.train.size());
  for (const auto& img : d.train) d.train_pairs.push_back(rel::image_pairs(d.world, img, cfg.detector));
  d.test_pairs.reserve(d.test.size());
  for (const auto& img : d.test) d.test_pairs.push_back(rel::image_pairs(d.world, img, cfg.detector));
  return d;
}

CarriedState initial_state(const ExperimentConfig& cfg, const ExperimentData& data) {
  rel::BranchConfig bc;
  bc.encoder.input_dim = rel::pair_input_dim(data.world.spec().feature_dim(), data.world.spec().global_dim);
  bc.encoder.hidden = cfg.hidden;
  bc.encoder.feature_dim = cfg.feature_dim;
  bc.eta_init = cfg.eta_init;
  bc.lambda = cfg.lambda;
  Rng rng(derive_seed(cfg.init_seed, tag("model-init")));
  rel::RelationBranch model(bc, rng);
  distill::MomentumTeacher teacher(model, cfg.momentum);
  return CarriedState{std::move(model), std::nullopt, std::move(teacher),
                      distill::ConceptDictionary(cfg.queue_capacity), {}};
}

eval::EvalReport evaluate(const ExperimentConfig& cfg, const ExperimentData& data, const rel::RelationBranch& model,
                          int t, std::span<const eval::Metric> previous_rid) {
  const auto preds = eval::infer(data.world.spec(), model, data.test_pairs, cfg.top_k);
  std::vector<int> all(data.world.spec().classes.size());
  std::iota(all.begin(), all.end(), 0);
  const auto aps = eval::per_class_ap(data.world.spec(), preds, data.test, all);
  return eval::aggregate(data.plan, aps, t, data.train_counts, data.c_test, previous_rid, cfg.rare_threshold);
}

eval::EvalReport run_phase(const ExperimentConfig& cfg, const ExperimentData& data, int t, CarriedState& state,
                           std::vector<EpochLog>& log, const StepObserver& observer) {
  const distill::LossWeights weights = effective_weights(cfg);
  const Schedule sched = effective_schedule(cfg);

  // Freeze the end of phase t-1, then grow both heads for the new relations.
  state.previous.reset();
  if (t >= 2) state.previous = state.model;
  Rng grow_rng(derive_seed(cfg.init_seed, tag("head-growth"), static_cast<std::uint64_t>(t)));
  state.model.grow_head(data.plan.new_relations(t), grow_rng);
  state.teacher.grow(state.model);

  const PhaseTargets pt = phase_targets(data, t);
  const std::size_t input_dim = state.model.config().encoder.input_dim;
  Rng order_rng(derive_seed(cfg.data_seed, tag("data-order"), static_cast<std::uint64_t>(t)));
  Rng retrieval_rng(derive_seed(cfg.data_seed, tag("retrieval"), static_cast<std::uint64_t>(t)));

  num::AdamW opt({sched.lr, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay});
  distill::DistillContext ctx{state.previous ? &*state.previous : nullptr, &state.teacher, &state.dictionary};

  std::vector<std::size_t> order(pt.image_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  for (int epoch = 0; epoch < sched.epochs; ++epoch) {
    const double lr = epoch >= sched.decay_epoch ? sched.lr * sched.decay_factor : sched.lr;
    opt.set_lr(lr);
    std::shuffle(order.begin(), order.end(), order_rng);
    EpochLog el{t, epoch + 1, lr, 0, 0, 0, 0, 0, 0};
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      distill::LossBatch batch = make_batch(data, pt, std::span(order).subspan(b, e - b), input_dim);
      if (batch.targets.empty()) continue;

      num::Tape tape;
      const auto vars = num::bind(tape, state.model.params(), true);
      const distill::TotalLoss loss =
          distill::total_loss(tape, state.model, vars, batch, ctx, weights, retrieval_rng);
      const auto& tm = loss.terms;
      if (!std::isfinite(tm.total)) {
        std::ostringstream msg;
        msg << "non-finite loss at phase " << t << " epoch " << epoch + 1 << " step " << step << ": rel=" << tm.rel
            << " cdd=" << tm.cdd << " mfd=" << tm.mfd << " cfd=" << tm.cfd;
        throw RuntimeFailure(msg.str());
      }
      if ((weights.alpha0 == 0.0 && tm.cdd != 0.0) || (weights.alpha1 == 0.0 && tm.mfd != 0.0) ||
          (weights.alpha2 == 0.0 && tm.cfd != 0.0)) {
        throw RuntimeFailure("a disabled loss term contributed to the step loss");
      }
      tape.backward(loss.value);
      opt.step(state.model.params(), num::gradients(tape, vars));
      state.teacher.ema_update(state.model);

      el.rel += tm.rel;
      el.cdd += tm.cdd;
      el.mfd += tm.mfd;
      el.cfd += tm.cfd;
      el.total += tm.total;
      ++el.steps;
      if (observer) observer({t, epoch + 1, step, tm, state});
      ++step;
    }
    if (el.steps > 0) {
      const double n = static_cast<double>(el.steps);
      el.rel /= n, el.cdd /= n, el.mfd /= n, el.cfd /= n, el.total /= n;
    }
    log.push_back(el);
  }

  eval::EvalReport report = evaluate(cfg, data, state.model, t, state.rid_history);
  if (t >= 2) state.rid_history.push_back(report.rid_phase);
  return report;
}

std::string report_digest(const std::vector<eval::EvalReport>& reports, const std::vector<world::HoiClass>& table) {
  std::ostringstream os;
  for (const auto& r : reports) eval::write_report(os, r, table);
  return hex64(fnv1a(os.str()));
}

std::filesystem::path run_directory(const ExperimentConfig& cfg) {
  return std::filesystem::path(cfg.out_dir) / hex64(cfg.hash());
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const StepObserver& observer) {
  const ExperimentData data = prepare_data(cfg);
  return run_experiment(cfg, data, observer);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                                const StepObserver& observer) {
  cfg.validate();
  ExperimentResult res;
  res.plan_checksum = cur::plan_checksum(data.base_plan);
  const auto& table = data.world.spec().classes;
  std::filesystem::path dir;
  if (cfg.save_artifacts) {
    dir = run_directory(cfg);
    std::filesystem::create_directories(dir);
    res.run_dir = dir;
    write_text(dir / "config.txt", cfg.to_text());
    std::ostringstream ps;
    cur::write_plan(ps, data.base_plan);
    write_text(dir / "plan.txt", ps.str());
  }

  CarriedState state = initial_state(cfg, data);
  const int phases = data.plan.phase_count;
  try {
    for (int t = 1; t <= phases; ++t) {
      eval::EvalReport r = run_phase(cfg, data, t, state, res.log, observer);
      res.reports.push_back(r);
      if (!dir.empty()) {
        const std::string tag_t = std::to_string(t);
        num::save_checkpoint(dir / ("model_phase" + tag_t + ".ckpt"), model_checkpoint(state.model, t, "current"));
        num::save_checkpoint(dir / ("teacher_phase" + tag_t + ".ckpt"),
                             model_checkpoint(state.teacher.branch(), t, "teacher"));
        std::ostringstream ds, rs;
        state.dictionary.dump(ds);
        write_text(dir / ("dictionary_phase" + tag_t + ".txt"), ds.str());
        eval::write_report(rs, r, table);
        write_text(dir / ("report_phase" + tag_t + ".txt"), rs.str());
        write_text(dir / ("report_phase" + tag_t + ".json"), eval::report_json(r, table).dump(2) + "\n");
      }
    }
  } catch (...) {
    res.digest = report_digest(res.reports, table);
    if (!dir.empty()) write_summary(dir, cfg, res, table, false);
    throw;
  }
  res.digest = report_digest(res.reports, table);
  if (!dir.empty()) write_summary(dir, cfg, res, table, true);
  return res;
}

}  // namespace ird::run
