#include "dst/slu.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace dst::slu {

namespace {
std::atomic<std::uint64_t> g_unknown_values{0};
}

std::uint64_t unknown_value_count() { return g_unknown_values.load(); }
void reset_unknown_value_count() { g_unknown_values.store(0); }

int FeatureVocab::index(const std::string& token) const {
  auto it = std::find(tokens.begin(), tokens.end(), token);
  return it == tokens.end() ? -1 : static_cast<int>(it - tokens.begin());
}

std::vector<DialogAct> rewrite_affirm(
    const std::vector<DialogAct>& machine_acts,
    const std::vector<DialogAct>& user_acts) {
  std::vector<DialogAct> out;
  out.reserve(user_acts.size());
  for (const auto& act : user_acts) {
    if (act.type != ActType::Affirm) {
      out.push_back(act);
      continue;
    }
    for (const auto& m : machine_acts) {
      if (m.is_confirm() && m.slot && m.value) {
        out.push_back(make_act(ActType::Inform, m.slot, m.value));
      }
    }
  }
  return out;
}

InformMarginal marginalize_informs(const Turn& turn, const std::string& slot,
                                   const Ontology& ontology) {
  InformMarginal m;
  m.per_value = Vec::Zero(ontology.belief_dim(slot));
  for (const auto& hyp : turn.slu_nbest) {
    const auto acts = rewrite_affirm(turn.machine_acts, hyp.acts);
    std::set<int> informed;  // indicator per hypothesis, not per act
    for (const auto& act : acts) {
      if (act.type != ActType::Inform || !act.slot || !act.value) continue;
      if (*act.slot != slot) continue;
      const int idx = ontology.value_index(slot, *act.value);
      if (idx < 0) {
        ++g_unknown_values;
        continue;
      }
      informed.insert(idx);
    }
    for (int idx : informed) m.per_value[idx] += hyp.score;
  }
  m.per_value = m.per_value.cwiseMin(1.0).cwiseMax(0.0);
  m.total_mass = m.per_value.sum();
  // A hypothesis informing two values for the same slot can push the total
  // past 1; scale back so the rule engine's mass bound holds.
  if (m.total_mass > 1.0) {
    m.per_value /= m.total_mass;
    m.total_mass = 1.0;
  }
  return m;
}

std::vector<std::string> act_tokens(const DialogAct& act) {
  std::vector<std::string> tokens{act_type_token(act)};
  if (act.slot) tokens.push_back(*act.slot);
  if (act.value) tokens.push_back(*act.value);
  return tokens;
}

FeatureVocab build_vocab(const std::vector<Dialog>& dialogs, int min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::map<std::string, int> counts;
  std::vector<std::string> order;
  for (const auto& dialog : dialogs) {
    for (const auto& turn : dialog.turns) {
      for (const auto& act : turn.machine_acts) {
        for (const auto& token : act_tokens(act)) {
          if (counts[token]++ == 0) order.push_back(token);
        }
      }
    }
  }
  FeatureVocab vocab;
  vocab.min_count = min_count;
  for (const auto& token : order) {
    if (counts[token] > min_count) vocab.tokens.push_back(token);
  }
  return vocab;
}

Vec summarize_marginal(const InformMarginal& marginal) {
  Vec summary = Vec::Zero(kSummaryDim);
  summary[0] = marginal.total_mass;
  std::vector<double> probs;
  for (int i = 1; i < marginal.per_value.size(); ++i) {
    if (marginal.per_value[i] > 0.0) probs.push_back(marginal.per_value[i]);
  }
  std::sort(probs.rbegin(), probs.rend());
  const int top = std::min<int>(kSummaryDim - 1, probs.size());
  for (int i = 0; i < top; ++i) summary[1 + i] = probs[i];
  return summary;
}

TurnFeatures featurize(const Turn& turn, const std::string& slot,
                       const FeatureVocab& vocab, const Ontology& ontology,
                       const InformMarginal& marginal) {
  const int slot_idx = ontology.slot_index(slot);
  if (slot_idx < 0) throw std::invalid_argument("untracked slot: " + slot);

  TurnFeatures f;
  f.f_s = Vec::Zero(ontology.slots().size());
  f.f_s[slot_idx] = 1.0;

  f.f_m = Vec::Zero(vocab.size());
  for (const auto& act : turn.machine_acts) {
    for (const auto& token : act_tokens(act)) {
      const int j = vocab.index(token);
      if (j >= 0) f.f_m[j] = 1.0;
    }
  }

  f.i_summary = summarize_marginal(marginal);
  return f;
}

}  // namespace dst::slu
