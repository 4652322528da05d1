#include "dst/types.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace dst {

std::string normalize_value(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  out.erase(out.begin(), std::find_if(out.begin(), out.end(), not_space));
  out.erase(std::find_if(out.rbegin(), out.rend(), not_space).base(),
            out.end());
  return out;
}

Ontology::Ontology(std::vector<std::string> slots,
                   std::map<std::string, std::vector<std::string>> values)
    : slots_(std::move(slots)), values_(std::move(values)) {
  std::map<std::string, int> seen_slot;
  for (auto& s : slots_) {
    s = normalize_value(s);
    if (!seen_slot.emplace(s, 1).second)
      throw std::invalid_argument("duplicate slot: " + s);
    auto it = values_.find(s);
    if (it == values_.end() || it->second.empty())
      throw std::invalid_argument("slot without values: " + s);
    auto& idx = index_[s];
    int i = 1;
    for (auto& v : it->second) {
      v = normalize_value(v);
      if (!idx.emplace(v, i).second)
        throw std::invalid_argument("duplicate value " + v + " in " + s);
      ++i;
    }
  }
}

const std::vector<std::string>& Ontology::values(
    const std::string& slot) const {
  auto it = values_.find(slot);
  if (it == values_.end())
    throw std::out_of_range("unknown slot: " + slot);
  return it->second;
}

int Ontology::slot_index(const std::string& slot) const {
  auto it = std::find(slots_.begin(), slots_.end(), slot);
  return it == slots_.end() ? -1 : static_cast<int>(it - slots_.begin());
}

int Ontology::value_index(const std::string& slot,
                          const std::string& value) const {
  auto it = index_.find(slot);
  if (it == index_.end()) return -1;
  auto vit = it->second.find(value);
  return vit == it->second.end() ? -1 : vit->second;
}

int Ontology::belief_dim(const std::string& slot) const {
  return 1 + static_cast<int>(values(slot).size());
}

namespace {
constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t& h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  h ^= 0xff;
  h *= kFnvPrime;
}
}  // namespace

std::uint64_t Ontology::hash() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& s : slots_) {
    fnv_mix(h, s);
    for (const auto& v : values(s)) fnv_mix(h, v);
  }
  return h;
}

ActType parse_act_type(const std::string& token) {
  const std::string t = normalize_value(token);
  if (t == "inform") return ActType::Inform;
  if (t == "request") return ActType::Request;
  if (t == "affirm") return ActType::Affirm;
  if (t == "negate") return ActType::Negate;
  if (t == "confirm" || t == "expl-conf") return ActType::ExplConf;
  if (t == "impl-conf") return ActType::ImplConf;
  if (t == "deny") return ActType::Deny;
  return ActType::Other;
}

std::string act_type_token(const DialogAct& act) {
  switch (act.type) {
    case ActType::Inform: return "inform";
    case ActType::Request: return "request";
    case ActType::Affirm: return "affirm";
    case ActType::Negate: return "negate";
    case ActType::ExplConf: return "expl-conf";
    case ActType::ImplConf: return "impl-conf";
    case ActType::Deny: return "deny";
    case ActType::Other: return act.raw.empty() ? "other" : act.raw;
  }
  return "other";
}

DialogAct make_act(ActType type, std::optional<std::string> slot,
                   std::optional<std::string> value) {
  DialogAct act;
  act.type = type;
  if (slot) act.slot = normalize_value(*slot);
  if (value) act.value = normalize_value(*value);
  act.raw = act_type_token(act);
  return act;
}

void renormalize_nbest(Turn& turn) {
  double total = 0.0;
  for (const auto& h : turn.slu_nbest) total += h.score;
  if (total > 1.0 + 1e-6) {
    for (auto& h : turn.slu_nbest) h.score /= total;
  }
}

BeliefState initial_belief(const Ontology& ontology) {
  BeliefState b;
  b.per_slot.reserve(ontology.slots().size());
  for (const auto& slot : ontology.slots()) {
    Vec v = Vec::Zero(ontology.belief_dim(slot));
    v[0] = 1.0;
    b.per_slot.push_back(std::move(v));
  }
  return b;
}

std::map<std::string, std::optional<std::string>> joint_top_hypothesis(
    const BeliefState& belief, const Ontology& ontology) {
  std::map<std::string, std::optional<std::string>> out;
  for (std::size_t s = 0; s < ontology.slots().size(); ++s) {
    const auto& slot = ontology.slots()[s];
    const Vec& h = belief.per_slot.at(s);
    int best = 0;
    for (int i = 1; i < h.size(); ++i) {
      if (h[i] > h[best]) best = i;  // strict: ties keep the lowest index
    }
    if (best == 0) {
      out[slot] = std::nullopt;
    } else {
      out[slot] = ontology.values(slot)[best - 1];
    }
  }
  return out;
}

bool is_distribution(const Vec& v, double tol) {
  if (v.size() == 0) return false;
  if ((v.array() < -tol).any()) return false;
  return std::abs(v.sum() - 1.0) <= tol;
}

}  // namespace dst
