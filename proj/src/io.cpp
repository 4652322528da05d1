#include "dst/io.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace dst::io {

using nlohmann::json;

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t weights_checksum(const Vec& w) {
  std::uint64_t h = kFnvOffset;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(w[i]);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= kFnvPrime;
    }
  }
  return h;
}

json act_to_json(const DialogAct& act) {
  json j;
  j["act"] = act_type_token(act);
  if (act.slot) j["slot"] = *act.slot;
  if (act.value) j["value"] = *act.value;
  return j;
}

DialogAct act_from_json(const json& j) {
  DialogAct act;
  act.raw = j.at("act").get<std::string>();
  act.type = parse_act_type(act.raw);
  if (j.contains("slot")) act.slot = normalize_value(j["slot"]);
  if (j.contains("value")) act.value = normalize_value(j["value"]);
  return act;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

}  // namespace

Ontology load_ontology(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  json j = json::parse(in);

  std::vector<std::string> slots;
  std::map<std::string, std::vector<std::string>> values;
  if (j.contains("informable")) {
    // DSTC2 ontology file; only the tracked slots are kept.
    for (const char* slot : {"food", "pricerange", "area"}) {
      if (!j["informable"].contains(slot)) continue;
      slots.push_back(slot);
      values[slot] = j["informable"][slot].get<std::vector<std::string>>();
    }
  } else {
    slots = j.at("slots").get<std::vector<std::string>>();
    for (const auto& slot : slots)
      values[normalize_value(slot)] =
          j.at("values").at(slot).get<std::vector<std::string>>();
  }
  return Ontology(std::move(slots), std::move(values));
}

json dialog_to_json(const Dialog& dialog) {
  json turns = json::array();
  for (const auto& turn : dialog.turns) {
    json jt;
    jt["machine_acts"] = json::array();
    for (const auto& act : turn.machine_acts)
      jt["machine_acts"].push_back(act_to_json(act));
    jt["slu_nbest"] = json::array();
    for (const auto& hyp : turn.slu_nbest) {
      json jh;
      jh["score"] = hyp.score;
      jh["acts"] = json::array();
      for (const auto& act : hyp.acts) jh["acts"].push_back(act_to_json(act));
      jt["slu_nbest"].push_back(std::move(jh));
    }
    if (turn.goal_labels) {
      jt["goal_labels"] = json::object();
      for (const auto& [slot, value] : *turn.goal_labels)
        jt["goal_labels"][slot] = value;
    }
    turns.push_back(std::move(jt));
  }
  return json{{"format", kDialogFormatVersion},
              {"id", dialog.id},
              {"turns", std::move(turns)}};
}

Dialog dialog_from_json(const json& j) {
  if (j.value("format", kDialogFormatVersion) !=
      std::string(kDialogFormatVersion))
    throw std::runtime_error("unsupported dialog format version");
  Dialog dialog;
  dialog.id = j.at("id").get<std::string>();
  for (const auto& jt : j.at("turns")) {
    Turn turn;
    for (const auto& ja : jt.value("machine_acts", json::array()))
      turn.machine_acts.push_back(act_from_json(ja));
    for (const auto& jh : jt.value("slu_nbest", json::array())) {
      SluHypothesis hyp;
      hyp.score = jh.at("score").get<double>();
      if (hyp.score < 0.0 || hyp.score > 1.0 + 1e-9)
        throw std::runtime_error("slu score outside [0,1] in " + dialog.id);
      for (const auto& ja : jh.value("acts", json::array()))
        hyp.acts.push_back(act_from_json(ja));
      turn.slu_nbest.push_back(std::move(hyp));
    }
    if (jt.contains("goal_labels")) {
      std::map<std::string, std::string> labels;
      for (const auto& [slot, value] : jt["goal_labels"].items())
        labels[normalize_value(slot)] =
            normalize_value(value.get<std::string>());
      turn.goal_labels = std::move(labels);
    }
    renormalize_nbest(turn);
    dialog.turns.push_back(std::move(turn));
  }
  if (dialog.turns.empty())
    throw std::runtime_error("dialog without turns: " + dialog.id);
  return dialog;
}

std::vector<Dialog> load_dialogs(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<Dialog> dialogs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    dialogs.push_back(dialog_from_json(json::parse(line)));
  }
  return dialogs;
}

void save_dialogs(const std::vector<Dialog>& dialogs,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& dialog : dialogs) out << dialog_to_json(dialog) << "\n";
}

namespace {

std::vector<DialogAct> parse_dstc2_acts(const json& acts) {
  std::vector<DialogAct> out;
  for (const auto& ja : acts) {
    const std::string act = ja.at("act").get<std::string>();
    const auto& slots = ja.value("slots", json::array());
    if (slots.empty()) {
      out.push_back(make_act(parse_act_type(act)));
      out.back().raw = normalize_value(act);
      continue;
    }
    for (const auto& pair : slots) {
      DialogAct a;
      a.type = parse_act_type(act);
      a.raw = normalize_value(act);
      if (pair.size() >= 1 && pair[0].is_string())
        a.slot = normalize_value(pair[0].get<std::string>());
      if (pair.size() >= 2) {
        if (pair[1].is_string())
          a.value = normalize_value(pair[1].get<std::string>());
        else if (!pair[1].is_null())
          a.value = normalize_value(pair[1].dump());
      }
      // request acts carry ["slot", <name>]; fold the name into the slot
      if (a.type == ActType::Request && a.slot == "slot" && a.value) {
        a.slot = a.value;
        a.value.reset();
      }
      out.push_back(std::move(a));
    }
  }
  return out;
}

Dialog parse_dstc2_session(const std::filesystem::path& dir) {
  auto log_in = open_or_throw(dir / "log.json");
  json log = json::parse(log_in);
  json label;
  {
    std::ifstream label_in(dir / "label.json");
    if (label_in) label = json::parse(label_in);
  }

  Dialog dialog;
  dialog.id = log.value("session-id", dir.filename().string());
  const auto& turns = log.at("turns");
  std::map<std::string, std::string> cumulative;  // forward-filled goals

  for (std::size_t t = 0; t < turns.size(); ++t) {
    Turn turn;
    turn.machine_acts =
        parse_dstc2_acts(turns[t].at("output").at("dialog-acts"));
    for (const auto& jh :
         turns[t].at("input").at("live").at("slu-hyps")) {
      SluHypothesis hyp;
      hyp.score = jh.at("score").get<double>();
      hyp.acts = parse_dstc2_acts(jh.at("slu-hyp"));
      turn.slu_nbest.push_back(std::move(hyp));
    }
    renormalize_nbest(turn);
    if (!label.is_null() && t < label.at("turns").size()) {
      const json goals =
          label["turns"][t].value("goal-labels", json::object());
      for (const auto& [slot, value] : goals.items())
        cumulative[normalize_value(slot)] =
            normalize_value(value.get<std::string>());
      turn.goal_labels = cumulative;
    }
    dialog.turns.push_back(std::move(turn));
  }
  if (dialog.turns.empty()) throw std::runtime_error("empty session");
  return dialog;
}

}  // namespace

std::vector<Dialog> load_dstc2(const std::filesystem::path& root,
                               const std::filesystem::path& list_file,
                               LoadStats* stats) {
  auto in = open_or_throw(list_file);
  std::vector<Dialog> dialogs;
  std::string line;
  while (std::getline(in, line)) {
    std::string entry = line;  // trim only; session paths are case-sensitive
    entry.erase(0, entry.find_first_not_of(" \t\r\n"));
    entry.erase(entry.find_last_not_of(" \t\r\n") + 1);
    if (entry.empty()) continue;
    try {
      dialogs.push_back(parse_dstc2_session(root / entry));
    } catch (const std::exception& e) {
      if (stats) ++stats->skipped;
      std::cerr << "warning: skipping " << entry << ": " << e.what() << "\n";
    }
  }
  if (stats) stats->dialogs = static_cast<long>(dialogs.size());
  return dialogs;
}

namespace {

json config_to_json(const train::TrainConfig& config) {
  return json{
      {"group",
       config.group == train::TrainConfig::Group::AdaGrad ? "adagrad"
                                                          : "adam"},
      {"epochs", config.epochs},
      {"seed", config.seed},
      {"mask_rate", config.mask_rate},
      {"hidden_size", config.hidden_size},
      {"adagrad_lr", config.adagrad_lr},
      {"adagrad_clip", config.adagrad_clip},
      {"adam_lr", config.adam_lr},
      {"beta1", config.beta1},
      {"beta2", config.beta2},
  };
}

train::TrainConfig config_from_json(const json& j) {
  train::TrainConfig config;
  config.group = j.value("group", "adagrad") == std::string("adam")
                     ? train::TrainConfig::Group::Adam
                     : train::TrainConfig::Group::AdaGrad;
  config.epochs = j.value("epochs", config.epochs);
  config.seed = j.value("seed", config.seed);
  config.mask_rate = j.value("mask_rate", config.mask_rate);
  config.hidden_size = j.value("hidden_size", config.hidden_size);
  config.adagrad_lr = j.value("adagrad_lr", config.adagrad_lr);
  config.adagrad_clip = j.value("adagrad_clip", config.adagrad_clip);
  config.adam_lr = j.value("adam_lr", config.adam_lr);
  config.beta1 = j.value("beta1", config.beta1);
  config.beta2 = j.value("beta2", config.beta2);
  return config;
}

}  // namespace

void save_model(const tracker::TrackerParams& params,
                const train::TrainConfig& config,
                const std::filesystem::path& path) {
  json j;
  j["format"] = kModelFormatVersion;
  j["ontology_hash"] = params.ontology_hash;
  j["input_size"] = params.net.input_size();
  j["hidden_size"] = params.net.hidden_size();
  j["vocab"] = params.vocab.tokens;
  j["min_count"] = params.vocab.min_count;
  if (!params.fm_mask.empty()) j["fm_mask"] = params.fm_mask;
  j["rule_case"] = params.rule_case == rules::CoefficientCase::SourceNone
                       ? "source-none"
                       : "target-none";
  std::vector<double> weights(params.net.flat().data(),
                              params.net.flat().data() + params.net.count());
  j["weights"] = weights;
  j["checksum"] = weights_checksum(params.net.flat());
  j["config"] = config_to_json(config);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump() << "\n";
}

LoadedModel load_model(const std::filesystem::path& path,
                       std::uint64_t expected_ontology_hash) {
  auto in = open_or_throw(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt model file " + path.string() + ": " +
                             e.what());
  }
  if (j.value("format", "") != std::string(kModelFormatVersion))
    throw std::runtime_error("model format version mismatch in " +
                             path.string());

  LoadedModel model;
  model.params.ontology_hash = j.at("ontology_hash").get<std::uint64_t>();
  if (expected_ontology_hash != 0 &&
      model.params.ontology_hash != expected_ontology_hash)
    throw std::runtime_error("model " + path.string() +
                             " was trained against a different ontology");
  model.params.vocab.tokens = j.at("vocab").get<std::vector<std::string>>();
  model.params.vocab.min_count = j.value("min_count", 5);
  if (j.contains("fm_mask"))
    model.params.fm_mask = j["fm_mask"].get<std::vector<std::uint8_t>>();
  model.params.rule_case = j.value("rule_case", "source-none") ==
                                   std::string("target-none")
                               ? rules::CoefficientCase::TargetNone
                               : rules::CoefficientCase::SourceNone;

  const int input_size = j.at("input_size").get<int>();
  const int hidden_size = j.at("hidden_size").get<int>();
  model.params.net = net::NetParams(input_size, hidden_size);
  const auto weights = j.at("weights").get<std::vector<double>>();
  if (static_cast<std::int64_t>(weights.size()) != model.params.net.count())
    throw std::runtime_error("model weight count mismatch in " +
                             path.string());
  for (std::size_t i = 0; i < weights.size(); ++i)
    model.params.net.flat()[static_cast<Eigen::Index>(i)] = weights[i];
  if (weights_checksum(model.params.net.flat()) !=
      j.at("checksum").get<std::uint64_t>())
    throw std::runtime_error("model checksum failure in " + path.string());

  model.config = config_from_json(j.value("config", json::object()));
  return model;
}

void export_tracker_output(const std::vector<tracker::TrackerRun>& runs,
                           const Ontology& ontology, std::ostream& out) {
  for (const auto& run : runs) {
    json turns = json::array();
    const std::size_t n_turns =
        run.per_slot.empty() ? 0 : run.per_slot[0].beliefs.size();
    for (std::size_t t = 0; t < n_turns; ++t) {
      json jt = json::object();
      for (std::size_t s = 0; s < ontology.slots().size(); ++s) {
        const auto& slot = ontology.slots()[s];
        const Vec& h = run.per_slot[s].beliefs[t];
        std::vector<std::pair<std::string, double>> entries;
        entries.emplace_back("None", h[0]);
        for (int i = 1; i < h.size(); ++i)
          entries.emplace_back(ontology.values(slot)[i - 1], h[i]);
        std::stable_sort(entries.begin(), entries.end(),
                         [](const auto& a, const auto& b) {
                           return a.second > b.second;
                         });
        json je = json::array();
        for (const auto& [value, p] : entries)
          je.push_back(json::array(
              {value, std::round(p * 1e6) / 1e6}));
        jt[slot] = std::move(je);
      }
      turns.push_back(std::move(jt));
    }
    out << json{{"id", run.dialog_id}, {"turns", std::move(turns)}} << "\n";
  }
}

void write_score_report(const ensemble::ScoreReport& report,
                        std::ostream& out, bool as_json) {
  if (as_json) {
    json j{{"joint_accuracy", report.joint_accuracy},
           {"joint_l2", report.joint_l2},
           {"scored_turns", report.scored_turns},
           {"slot_accuracy", report.slot_accuracy}};
    out << j.dump(2) << "\n";
    return;
  }
  out << "scored turns:    " << report.scored_turns << "\n";
  out << "joint accuracy:  " << report.joint_accuracy << "\n";
  out << "joint L2:        " << report.joint_l2 << "\n";
  for (const auto& [slot, acc] : report.slot_accuracy)
    out << "  " << slot << " accuracy: " << acc << "\n";
}

}  // namespace dst::io
