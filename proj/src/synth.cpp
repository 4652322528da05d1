#include "dst/synth.hpp"

#include <random>

namespace dst::synth {

namespace {

std::string slot_name(int s) { return "slot" + std::to_string(s); }
std::string value_name(int s, int v) {
  return slot_name(s) + "_v" + std::to_string(v);
}

}  // namespace

Ontology make_ontology(const SynthConfig& config) {
  std::vector<std::string> slots;
  std::map<std::string, std::vector<std::string>> values;
  for (int s = 0; s < config.n_slots; ++s) {
    slots.push_back(slot_name(s));
    auto& vals = values[slot_name(s)];
    for (int v = 0; v < config.n_values; ++v)
      vals.push_back(value_name(s, v));
  }
  return Ontology(std::move(slots), std::move(values));
}

std::vector<Dialog> generate(const SynthConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> value_dist(0, config.n_values - 1);

  auto empty_hyp = [](double score) {
    SluHypothesis h;
    h.score = score;
    return h;
  };
  auto inform_hyp = [](int s, int v, double score) {
    SluHypothesis h;
    h.score = score;
    h.acts.push_back(
        make_act(ActType::Inform, slot_name(s), value_name(s, v)));
    return h;
  };

  std::vector<Dialog> dialogs;
  dialogs.reserve(config.n_dialogs);
  for (int d = 0; d < config.n_dialogs; ++d) {
    Dialog dialog;
    dialog.id = "synth-" + std::to_string(d);
    std::map<std::string, std::string> stated;  // true goal so far

    auto push_turn = [&](Turn turn) {
      renormalize_nbest(turn);
      turn.goal_labels = stated;
      dialog.turns.push_back(std::move(turn));
    };

    {
      Turn welcome;
      welcome.machine_acts.push_back(make_act(ActType::Other));
      welcome.machine_acts.back().raw = "welcomemsg";
      push_turn(std::move(welcome));
    }

    // User states each goal once; noisy turns get a correction later.
    struct PendingFix {
      int slot, correct, heard;
    };
    std::vector<PendingFix> fixes;
    for (int s = 0; s < config.n_slots; ++s) {
      if (unit(rng) < 0.15) continue;  // no goal for this slot
      const int goal = value_dist(rng);
      stated[slot_name(s)] = value_name(s, goal);

      Turn turn;
      turn.machine_acts.push_back(make_act(ActType::Request, slot_name(s)));
      if (unit(rng) < config.slu_noise) {
        int wrong = value_dist(rng);
        if (wrong == goal) wrong = (wrong + 1) % config.n_values;
        turn.slu_nbest.push_back(inform_hyp(s, wrong, 0.55));
        turn.slu_nbest.push_back(inform_hyp(s, goal, 0.25));
        turn.slu_nbest.push_back(empty_hyp(0.2));
        fixes.push_back({s, goal, wrong});
      } else {
        const double score = 0.65 + 0.25 * unit(rng);
        turn.slu_nbest.push_back(inform_hyp(s, goal, score));
        turn.slu_nbest.push_back(empty_hyp(1.0 - score));
      }
      push_turn(std::move(turn));
    }

    // System confirms the mishearing; user denies and restates.
    for (const auto& fix : fixes) {
      Turn turn;
      turn.machine_acts.push_back(make_act(
          ActType::ExplConf, slot_name(fix.slot),
          value_name(fix.slot, fix.heard)));
      SluHypothesis hyp;
      hyp.score = 0.8 + 0.15 * unit(rng);
      hyp.acts.push_back(make_act(ActType::Negate));
      hyp.acts.push_back(make_act(ActType::Inform, slot_name(fix.slot),
                                  value_name(fix.slot, fix.correct)));
      turn.slu_nbest.push_back(std::move(hyp));
      turn.slu_nbest.push_back(empty_hyp(1.0 - turn.slu_nbest[0].score));
      push_turn(std::move(turn));
    }

    // Occasional goal change, restated cleanly.
    if (!stated.empty() && unit(rng) < config.goal_change_rate) {
      std::uniform_int_distribution<int> slot_dist(0, config.n_slots - 1);
      int s = slot_dist(rng);
      while (!stated.count(slot_name(s))) s = slot_dist(rng);
      int next = value_dist(rng);
      const std::string old = stated[slot_name(s)];
      while (value_name(s, next) == old) next = value_dist(rng);
      stated[slot_name(s)] = value_name(s, next);

      Turn turn;
      turn.machine_acts.push_back(make_act(ActType::Other));
      turn.machine_acts.back().raw = "canthelp";
      const double score = 0.7 + 0.2 * unit(rng);
      turn.slu_nbest.push_back(inform_hyp(s, next, score));
      turn.slu_nbest.push_back(empty_hyp(1.0 - score));
      push_turn(std::move(turn));
    }

    // Confirmation the user affirms, exercising the affirm rewrite.
    if (!stated.empty() && unit(rng) < 0.3) {
      auto it = stated.begin();
      Turn turn;
      turn.machine_acts.push_back(
          make_act(ActType::ExplConf, it->first, it->second));
      SluHypothesis hyp;
      hyp.score = 0.9;
      hyp.acts.push_back(make_act(ActType::Affirm));
      turn.slu_nbest.push_back(std::move(hyp));
      turn.slu_nbest.push_back(empty_hyp(0.1));
      push_turn(std::move(turn));
    }

    {
      Turn closing;
      closing.machine_acts.push_back(make_act(ActType::Other));
      closing.machine_acts.back().raw = "offer";
      push_turn(std::move(closing));
    }
    dialogs.push_back(std::move(dialog));
  }
  return dialogs;
}

}  // namespace dst::synth
