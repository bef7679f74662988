// Command-line front end: world generation, planning, training, evaluation
// and run comparison.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "ird/common/errors.hpp"
#include "ird/common/hash.hpp"
#include "ird/curriculum/plan.hpp"
#include "ird/evalkit/report_io.hpp"
#include "ird/numkit/checkpoint.hpp"
#include "ird/runner/compare.hpp"
#include "ird/runner/experiment.hpp"

using namespace ird;

namespace {

// --config plus one --<key> flag per config key.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_given = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "flat key = value config file");
    app->add_option_function<std::uint64_t>(
        "--seed", [this](std::uint64_t s) { seed = s, seed_given = true; },
        "sets world_seed, plan_seed, init_seed and data_seed");
    for (const auto& key : run::ExperimentConfig::keys()) {
      app->add_option_function<std::string>("--" + key, [this, key](const std::string& v) { overrides[key] = v; });
    }
  }

  run::ExperimentConfig resolve() const {
    run::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = run::load_config(config_path);
    if (seed_given) run::apply_seed(cfg, seed);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    cfg.validate();
    return cfg;
  }
};

void print_metric_line(const eval::EvalReport& r) {
  std::cout << "phase " << r.phase;
  for (const auto& m : run::summary_metrics()) std::cout << "  " << m << '=' << eval::format_metric(run::summary_metric(r, m));
  std::cout << '\n';
}

std::vector<run::RunSummary> load_runs(const std::vector<std::string>& dirs) {
  std::vector<run::RunSummary> out;
  for (const auto& d : dirs) out.push_back(run::load_run(d));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"incremental HOI relation distillation on a synthetic world"};
  app.require_subcommand(1);

  // gen-world
  auto* gen = app.add_subcommand("gen-world", "write a world spec and optionally train/test datasets");
  std::string world_out, train_out, test_out;
  std::uint64_t world_seed = 1;
  std::size_t n_train = 2000, n_test = 600;
  gen->add_option("--out", world_out, "world spec file")->required();
  gen->add_option("--world_seed", world_seed);
  gen->add_option("--train-out", train_out);
  gen->add_option("--test-out", test_out);
  gen->add_option("--train_images", n_train);
  gen->add_option("--test_images", n_test);

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "build a phase plan");
  ConfigFlags plan_flags;
  plan_flags.attach(plan_cmd);
  std::string plan_out;
  plan_cmd->add_option("--out", plan_out, "plan file")->required();

  // validate-plan
  auto* val = app.add_subcommand("validate-plan", "check a plan file against the world and training set");
  ConfigFlags val_flags;
  val_flags.attach(val);
  std::string plan_in;
  val->add_option("--plan", plan_in)->required();

  // train
  auto* train = app.add_subcommand("train", "run an incremental experiment");
  ConfigFlags train_flags;
  train_flags.attach(train);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a saved model checkpoint");
  ConfigFlags eval_flags;
  eval_flags.attach(ev);
  std::string ckpt_path, eval_json;
  int eval_phase = 0;
  ev->add_option("--checkpoint", ckpt_path)->required();
  ev->add_option("--phase", eval_phase, "phase the checkpoint belongs to (default: from checkpoint)");
  ev->add_option("--json", eval_json, "also write the report as JSON");

  // report
  auto* rep = app.add_subcommand("report", "summarize one or more run directories");
  std::vector<std::string> report_dirs;
  rep->add_option("runs", report_dirs)->required();

  // compare
  auto* cmp = app.add_subcommand("compare", "per-seed ordering of two run sets");
  std::vector<std::string> cmp_a, cmp_b;
  cmp->add_option("--a", cmp_a)->required();
  cmp->add_option("--b", cmp_b)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto spec = world::default_world_spec(world_seed);
      std::ofstream os(world_out);
      if (!os) throw RuntimeFailure("cannot write " + world_out);
      world::write_world_spec(os, spec);
      const world::World w(spec);
      if (!train_out.empty()) world::save_dataset(train_out, world::generate_dataset(w, n_train, world::Split::Train));
      if (!test_out.empty()) world::save_dataset(test_out, world::generate_dataset(w, n_test, world::Split::Test));
      std::cout << "world: " << spec.classes.size() << " classes -> " << world_out << '\n';
    } else if (*plan_cmd) {
      const auto cfg = plan_flags.resolve();
      const world::World w(run::world_spec_for(cfg));
      const auto train_set = world::generate_dataset(w, cfg.train_images, world::Split::Train);
      const auto test_set = world::generate_dataset(w, cfg.test_images, world::Split::Test);
      const auto plan = cur::build_plan(w.spec(), train_set, {cfg.phase_count, cfg.plan_seed, cfg.holdout, 2000});
      cur::save_plan(plan_out, plan);
      std::cout << "phase,hoi,relations,objects,images,drift,unseen\n";
      for (const auto& s : cur::plan_stats(plan, cur::classes_present(w.spec(), test_set))) {
        std::cout << s.phase << ',' << s.hoi << ',' << s.relations << ',' << s.objects << ',' << s.images << ','
                  << s.drift << ',' << s.unseen << '\n';
      }
      std::cout << "checksum " << hex64(cur::plan_checksum(plan)) << '\n';
    } else if (*val) {
      const auto cfg = val_flags.resolve();
      const world::World w(run::world_spec_for(cfg));
      const auto train_set = world::generate_dataset(w, cfg.train_images, world::Split::Train);
      const auto plan = cur::load_plan(plan_in);
      const auto violations = cur::validate_plan(plan, w.spec(), &train_set);
      for (const auto& v : violations) std::cout << cur::to_string(v.kind) << ": " << v.message << '\n';
      if (!violations.empty()) return 1;
      std::cout << "ok\n";
    } else if (*train) {
      const auto cfg = train_flags.resolve();
      const auto res = run::run_experiment(cfg);
      for (const auto& r : res.reports) print_metric_line(r);
      std::cout << "digest " << res.digest << '\n';
      if (!res.run_dir.empty()) std::cout << "run_dir " << res.run_dir.string() << '\n';
    } else if (*ev) {
      const auto cfg = eval_flags.resolve();
      const auto data = run::prepare_data(cfg);
      auto state = run::initial_state(cfg, data);
      const auto ckpt = num::load_checkpoint(ckpt_path);
      std::vector<int> rels;
      if (auto it = ckpt.meta.find("relations"); it != ckpt.meta.end() && it->second != "-") {
        std::istringstream is(it->second);
        std::string part;
        while (std::getline(is, part, ',')) rels.push_back(std::stoi(part));
      }
      state.model.set_relations(rels);
      if (state.model.params().names() != ckpt.params.names()) {
        throw InvalidInput("checkpoint does not match the configured model");
      }
      state.model.params() = ckpt.params;
      int t = eval_phase;
      if (t == 0) t = std::stoi(ckpt.meta.at("phase"));
      std::vector<eval::Metric> prior;
      const auto r = run::evaluate(cfg, data, state.model, t, prior);
      eval::write_report(std::cout, r, data.world.spec().classes);
      if (!eval_json.empty()) {
        std::ofstream os(eval_json);
        os << eval::report_json(r, data.world.spec().classes).dump(2) << '\n';
      }
    } else if (*rep) {
      const auto runs = load_runs(report_dirs);
      for (std::size_t i = 0; i < runs.size(); ++i) {
        std::cout << report_dirs[i] << " (" << runs[i].mode << ", seed " << runs[i].seed << ")\n  ";
        print_metric_line(runs[i].final_report);
      }
      if (runs.size() > 1) run::write_batch_csv(std::cout, run::batch_stats(runs));
    } else if (*cmp) {
      run::write_comparison(std::cout, run::compare(load_runs(cmp_a), load_runs(cmp_b)));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
