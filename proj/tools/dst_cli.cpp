#include "dst/io.hpp"
#include "dst/synth.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct DataArgs {
  std::string data;
  std::string dstc2_root;
  std::string dstc2_list;
  std::string ontology;
};

void add_data_flags(CLI::App* app, DataArgs& args, bool need_corpus = true) {
  app->add_option("--ontology", args.ontology, "ontology JSON file")
      ->required();
  if (need_corpus) {
    app->add_option("--data", args.data, "canonical dialog file (JSONL)");
    app->add_option("--dstc2-root", args.dstc2_root,
                    "DSTC2 data root (default: $DST_DATA_ROOT)");
    app->add_option("--dstc2-list", args.dstc2_list,
                    "DSTC2 session list file");
  }
}

std::vector<dst::Dialog> load_corpus(const DataArgs& args) {
  if (!args.data.empty()) return dst::io::load_dialogs(args.data);
  if (!args.dstc2_list.empty()) {
    std::string root = args.dstc2_root;
    if (root.empty()) {
      const char* env = std::getenv("DST_DATA_ROOT");
      if (env) root = env;
    }
    if (root.empty())
      throw std::runtime_error(
          "--dstc2-root or DST_DATA_ROOT required with --dstc2-list");
    dst::io::LoadStats stats;
    auto dialogs = dst::io::load_dstc2(root, args.dstc2_list, &stats);
    if (stats.skipped > 0)
      std::cerr << "warning: skipped " << stats.skipped << " sessions\n";
    return dialogs;
  }
  throw std::runtime_error("no corpus given (--data or --dstc2-list)");
}

std::vector<dst::tracker::TrackerParams> load_models(
    const std::vector<std::string>& paths, const std::string& dir,
    const dst::Ontology& ontology) {
  std::vector<std::string> files = paths;
  if (!dir.empty()) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".json")
        files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) throw std::runtime_error("no model files given");
  std::vector<dst::tracker::TrackerParams> models;
  for (const auto& file : files)
    models.push_back(dst::io::load_model(file, ontology.hash()).params);
  return models;
}

json beliefs_to_json(const std::vector<dst::Vec>& beliefs,
                     const dst::Ontology& ontology) {
  json slots = json::object();
  for (std::size_t s = 0; s < ontology.slots().size(); ++s) {
    const auto& slot = ontology.slots()[s];
    const dst::Vec& h = beliefs[s];
    json entries = json::array();
    entries.push_back(json::array({"None", h[0]}));
    for (int i = 1; i < h.size(); ++i)
      entries.push_back(json::array({ontology.values(slot)[i - 1], h[i]}));
    slots[slot] = std::move(entries);
  }
  return slots;
}

int run(int argc, char** argv) {
  CLI::App app{"hybrid dialog state tracker"};
  app.require_subcommand(1);
  app.fallthrough();  // let --jobs appear after the subcommand too
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  app.add_option("--jobs", jobs, "worker threads")->capture_default_str();

  // --- synth ---
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  dst::synth::SynthConfig synth_cfg;
  std::string synth_out, synth_ontology_out;
  synth_cmd->add_option("--out", synth_out, "output dialog file")->required();
  synth_cmd->add_option("--ontology-out", synth_ontology_out,
                        "output ontology file");
  synth_cmd->add_option("--dialogs", synth_cfg.n_dialogs);
  synth_cmd->add_option("--slots", synth_cfg.n_slots);
  synth_cmd->add_option("--values", synth_cfg.n_values);
  synth_cmd->add_option("--noise", synth_cfg.slu_noise);
  synth_cmd->add_option("--goal-change-rate", synth_cfg.goal_change_rate);
  synth_cmd->add_option("--seed", synth_cfg.seed);

  // --- train ---
  auto* train_cmd = app.add_subcommand("train", "train a group of trackers");
  DataArgs train_data;
  add_data_flags(train_cmd, train_data);
  dst::train::TrainConfig train_cfg;
  std::string group = "A";
  int count = 1;
  std::uint64_t base_seed = 1;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = ".";
  int min_count = 5;
  std::string rule_case = "source-none";
  train_cmd->add_option("--group", group, "A (AdaGrad) or B (Adam)")
      ->check(CLI::IsMember({"A", "B"}));
  train_cmd->add_option("--count", count, "number of trackers");
  train_cmd->add_option("--seed", base_seed,
                        "base seed; run i uses seed base+i");
  train_cmd->add_option("--seeds", seeds, "explicit per-run seeds");
  train_cmd->add_option("--epochs", train_cfg.epochs);
  train_cmd->add_option("--mask-rate", train_cfg.mask_rate);
  train_cmd->add_option("--hidden", train_cfg.hidden_size);
  train_cmd->add_option("--min-count", min_count,
                        "machine-act token frequency threshold");
  train_cmd->add_option("--out-dir", out_dir);
  train_cmd->add_option("--rule-case", rule_case)
      ->check(CLI::IsMember({"source-none", "target-none"}));

  // --- eval ---
  auto* eval_cmd = app.add_subcommand("eval", "score an ensemble");
  DataArgs eval_data;
  add_data_flags(eval_cmd, eval_data);
  std::vector<std::string> model_paths;
  std::string model_dir, report_path, export_path;
  int ensemble_size = 0, trials = 1;
  std::uint64_t eval_seed = 1;
  bool schedule2 = false, as_json = false;
  std::string dev_data;
  eval_cmd->add_option("--model", model_paths, "model file(s)");
  eval_cmd->add_option("--model-dir", model_dir, "directory of model files");
  eval_cmd->add_option("--ensemble-size", ensemble_size,
                       "members per ensemble (0 = all models)");
  eval_cmd->add_option("--trials", trials, "random ensembles to draw");
  eval_cmd->add_option("--dev-data", dev_data,
                       "dev corpus for ensemble selection");
  eval_cmd->add_option("--seed", eval_seed);
  eval_cmd->add_flag("--schedule2", schedule2,
                     "score only turns after the first tracked-slot mention");
  eval_cmd->add_flag("--json", as_json, "print the report as JSON");
  eval_cmd->add_option("--report", report_path, "write the report here");
  eval_cmd->add_option("--export", export_path,
                       "write per-turn tracker output here");

  // --- inspect ---
  auto* inspect_cmd =
      app.add_subcommand("inspect", "dump per-turn coefficient trajectories");
  DataArgs inspect_data;
  add_data_flags(inspect_cmd, inspect_data);
  std::string inspect_model, dialog_id;
  inspect_cmd->add_option("--model", inspect_model)->required();
  inspect_cmd->add_option("--dialog-id", dialog_id)->required();

  // --- track ---
  auto* track_cmd =
      app.add_subcommand("track", "stream turns on stdin, beliefs on stdout");
  DataArgs track_data;
  add_data_flags(track_cmd, track_data, false);
  std::string track_model;
  track_cmd->add_option("--model", track_model)->required();

  CLI11_PARSE(app, argc, argv);

  if (synth_cmd->parsed()) {
    auto dialogs = dst::synth::generate(synth_cfg);
    dst::io::save_dialogs(dialogs, synth_out);
    if (!synth_ontology_out.empty()) {
      const auto ontology = dst::synth::make_ontology(synth_cfg);
      json j;
      j["slots"] = ontology.slots();
      for (const auto& slot : ontology.slots())
        j["values"][slot] = ontology.values(slot);
      std::ofstream out(synth_ontology_out);
      out << j.dump(2) << "\n";
    }
    std::cout << "wrote " << dialogs.size() << " dialogs to " << synth_out
              << "\n";
    return 0;
  }

  if (train_cmd->parsed()) {
    if (count == 0) {
      std::cerr << "warning: --count 0, nothing to train\n";
      return 0;
    }
    const auto ontology = dst::io::load_ontology(train_data.ontology);
    const auto corpus = load_corpus(train_data);
    const auto vocab = dst::slu::build_vocab(corpus, min_count);
    std::cerr << "vocab size " << vocab.size() << ", corpus "
              << corpus.size() << " dialogs\n";
    train_cfg.rule_case = rule_case == "target-none"
                              ? dst::rules::CoefficientCase::TargetNone
                              : dst::rules::CoefficientCase::SourceNone;
    if (seeds.empty()) {
      for (int i = 0; i < count; ++i) seeds.push_back(base_seed + i);
    }
    if (static_cast<int>(seeds.size()) != count)
      throw std::runtime_error("--seeds must list exactly --count seeds");

    const int count_a = group == "A" ? count : 0;
    const int count_b = group == "B" ? count : 0;
    auto models = dst::train::train_groups(train_cfg, corpus, vocab, ontology,
                                           count_a, count_b, seeds, jobs);
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < models.size(); ++i) {
      dst::train::TrainConfig cfg = train_cfg;
      cfg.group = i < static_cast<std::size_t>(count_a)
                      ? dst::train::TrainConfig::Group::AdaGrad
                      : dst::train::TrainConfig::Group::Adam;
      cfg.seed = seeds[i];
      const fs::path path =
          fs::path(out_dir) / ("tracker-" + group + "-" +
                               std::to_string(seeds[i]) + ".json");
      dst::io::save_model(models[i], cfg, path);
    }
    std::cout << "trained " << models.size() << " group-" << group
              << " trackers into " << out_dir << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    const auto ontology = dst::io::load_ontology(eval_data.ontology);
    const auto corpus = load_corpus(eval_data);
    auto pool = load_models(model_paths, model_dir, ontology);
    const auto mode = schedule2
                          ? dst::ensemble::ScheduleMode::AfterFirstInform
                          : dst::ensemble::ScheduleMode::AllLabeledTurns;

    std::vector<dst::tracker::TrackerParams> members;
    if (ensemble_size > 0 &&
        ensemble_size < static_cast<int>(pool.size())) {
      std::vector<dst::Dialog> dev =
          dev_data.empty() ? corpus : dst::io::load_dialogs(dev_data);
      const auto spec = dst::ensemble::select_ensemble(
          pool, ensemble_size, trials, dev, ontology, eval_seed, mode, jobs);
      for (int idx : spec.member_indices) members.push_back(pool[idx]);
    } else {
      members = std::move(pool);
    }

    const auto runs =
        dst::ensemble::ensemble_track_corpus(members, ontology, corpus, jobs);
    const auto report = dst::ensemble::score(runs, corpus, ontology, mode);
    dst::io::write_score_report(report, std::cout, as_json);
    if (!report_path.empty()) {
      std::ofstream out(report_path);
      dst::io::write_score_report(report, out, true);
    }
    if (!export_path.empty()) {
      std::ofstream out(export_path);
      dst::io::export_tracker_output(runs, ontology, out);
    }
    return 0;
  }

  if (inspect_cmd->parsed()) {
    const auto ontology = dst::io::load_ontology(inspect_data.ontology);
    const auto corpus = load_corpus(inspect_data);
    auto model = dst::io::load_model(inspect_model);
    const auto it =
        std::find_if(corpus.begin(), corpus.end(),
                     [&](const dst::Dialog& d) { return d.id == dialog_id; });
    if (it == corpus.end())
      throw std::runtime_error("unknown dialog id: " + dialog_id);
    const auto run = dst::tracker::track_dialog(model.params, ontology, *it);
    for (std::size_t t = 0; t < it->turns.size(); ++t) {
      for (std::size_t s = 0; s < ontology.slots().size(); ++s) {
        const auto& slot = ontology.slots()[s];
        const auto& c = run.per_slot[s].coefficients[t];
        const dst::Vec& h = run.per_slot[s].beliefs[t];
        std::vector<std::pair<double, std::string>> top;
        top.emplace_back(h[0], "None");
        for (int i = 1; i < h.size(); ++i)
          top.emplace_back(h[i], ontology.values(slot)[i - 1]);
        std::stable_sort(top.rbegin(), top.rend());
        json row{{"turn", t},
                 {"slot", slot},
                 {"c_new", c.c_new},
                 {"c_override", c.c_override}};
        json top3 = json::array();
        for (std::size_t i = 0; i < top.size() && i < 3; ++i)
          top3.push_back(json::array({top[i].second, top[i].first}));
        row["top3"] = std::move(top3);
        std::cout << row << "\n";
      }
    }
    return 0;
  }

  if (track_cmd->parsed()) {
    const auto ontology = dst::io::load_ontology(track_data.ontology);
    auto model = dst::io::load_model(track_model);
    if (model.params.ontology_hash != ontology.hash())
      throw std::runtime_error("model/ontology hash mismatch");
    dst::tracker::StreamingTracker tracker(model.params, ontology);
    std::string line;
    long turn_no = 0;
    while (std::getline(std::cin, line)) {
      if (line.empty()) continue;
      try {
        const json j = json::parse(line);
        if (j.contains("reset")) {
          tracker.reset(j["reset"].get<std::string>());
          turn_no = 0;
          continue;
        }
        dst::Turn turn;
        for (const auto& ja : j.value("machine_acts", json::array())) {
          dst::DialogAct act;
          act.raw = ja.at("act").get<std::string>();
          act.type = dst::parse_act_type(act.raw);
          if (ja.contains("slot"))
            act.slot = dst::normalize_value(ja["slot"]);
          if (ja.contains("value"))
            act.value = dst::normalize_value(ja["value"]);
          turn.machine_acts.push_back(std::move(act));
        }
        for (const auto& jh : j.value("slu_nbest", json::array())) {
          dst::SluHypothesis hyp;
          hyp.score = jh.at("score").get<double>();
          for (const auto& ja : jh.value("acts", json::array())) {
            dst::DialogAct act;
            act.raw = ja.at("act").get<std::string>();
            act.type = dst::parse_act_type(act.raw);
            if (ja.contains("slot"))
              act.slot = dst::normalize_value(ja["slot"]);
            if (ja.contains("value"))
              act.value = dst::normalize_value(ja["value"]);
            hyp.acts.push_back(std::move(act));
          }
          turn.slu_nbest.push_back(std::move(hyp));
        }
        dst::renormalize_nbest(turn);
        const auto result = tracker.step(turn);
        json out{{"dialog", tracker.dialog_id()},
                 {"turn", turn_no++},
                 {"slots", beliefs_to_json(result.beliefs, ontology)}};
        std::cout << out << "\n";
      } catch (const std::exception& e) {
        std::cout << json{{"error", e.what()}} << "\n";
      }
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const dst::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
