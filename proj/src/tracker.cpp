#include "dst/tracker.hpp"

#include <cmath>
#include <stdexcept>

namespace dst::tracker {

Vec assemble_input(const slu::TurnFeatures& features,
                   const std::vector<std::uint8_t>& fm_mask) {
  Vec f_m = features.f_m;
  if (!fm_mask.empty()) {
    if (static_cast<Eigen::Index>(fm_mask.size()) != f_m.size())
      throw std::invalid_argument("assemble_input: mask size mismatch");
    for (Eigen::Index j = 0; j < f_m.size(); ++j) {
      if (!fm_mask[j]) f_m[j] = 0.0;
    }
  }
  Vec x(features.f_s.size() + f_m.size() + features.i_summary.size());
  x << features.f_s, f_m, features.i_summary;
  return x;
}

SlotTrajectory run_slot(const TrackerParams& params, const Ontology& ontology,
                        const Dialog& dialog, const std::string& slot,
                        SlotForwardCache* cache) {
  if (dialog.turns.empty())
    throw std::invalid_argument("run_slot: empty dialog " + dialog.id);
  if (ontology.slot_index(slot) < 0)
    throw std::invalid_argument("run_slot: unknown slot " + slot);

  SlotTrajectory traj;
  const std::size_t n_turns = dialog.turns.size();
  traj.beliefs.reserve(n_turns);
  traj.coefficients.reserve(n_turns);
  traj.states.reserve(n_turns);

  Vec h = Vec::Zero(ontology.belief_dim(slot));
  h[0] = 1.0;
  net::LstmState state = net::zero_state(params.net.hidden_size());

  for (const Turn& turn : dialog.turns) {
    const auto marginal = slu::marginalize_informs(turn, slot, ontology);
    const auto features =
        slu::featurize(turn, slot, params.vocab, ontology, marginal);
    const Vec x = assemble_input(features, params.fm_mask);

    net::LstmStepCache step_cache;
    state = net::lstm_step(params.net, state, x,
                           cache ? &step_cache : nullptr);
    Vec pre;
    const auto c = net::head_forward(params.net, state, &pre);
    h = rules::rule_update(h, marginal.per_value, c, params.rule_case);
    if (std::abs(h.sum() - 1.0) > 1e-9 || (h.array() < -1e-12).any())
      throw std::runtime_error("run_slot: belief left the simplex");

    traj.beliefs.push_back(h);
    traj.coefficients.push_back(c);
    traj.states.push_back(state);
    if (cache) {
      cache->steps.push_back(std::move(step_cache));
      cache->head_pre.push_back(std::move(pre));
      cache->inputs.push_back(x);
      cache->marginals.push_back(marginal.per_value);
    }
  }
  return traj;
}

TrackerRun track_dialog(const TrackerParams& params, const Ontology& ontology,
                        const Dialog& dialog) {
  TrackerRun run;
  run.dialog_id = dialog.id;
  run.per_slot.reserve(ontology.slots().size());
  for (const auto& slot : ontology.slots()) {
    run.per_slot.push_back(run_slot(params, ontology, dialog, slot));
  }
  return run;
}

std::vector<std::pair<double, double>> coefficient_trajectory(
    const TrackerRun& run, const Ontology& ontology, const std::string& slot) {
  const int idx = ontology.slot_index(slot);
  if (idx < 0)
    throw std::invalid_argument("coefficient_trajectory: unknown slot " +
                                slot);
  std::vector<std::pair<double, double>> out;
  for (const auto& c : run.per_slot.at(idx).coefficients) {
    out.emplace_back(c.c_new, c.c_override);
  }
  return out;
}

StreamingTracker::StreamingTracker(TrackerParams params, Ontology ontology)
    : params_(std::move(params)), ontology_(std::move(ontology)) {
  reset("");
}

void StreamingTracker::reset(const std::string& dialog_id) {
  dialog_id_ = dialog_id;
  beliefs_.clear();
  states_.clear();
  for (const auto& slot : ontology_.slots()) {
    Vec h = Vec::Zero(ontology_.belief_dim(slot));
    h[0] = 1.0;
    beliefs_.push_back(std::move(h));
    states_.push_back(net::zero_state(params_.net.hidden_size()));
  }
}

StreamingTracker::StepResult StreamingTracker::step(const Turn& turn) {
  StepResult result;
  for (std::size_t s = 0; s < ontology_.slots().size(); ++s) {
    const auto& slot = ontology_.slots()[s];
    const auto marginal = slu::marginalize_informs(turn, slot, ontology_);
    const auto features =
        slu::featurize(turn, slot, params_.vocab, ontology_, marginal);
    const Vec x = assemble_input(features, params_.fm_mask);
    states_[s] = net::lstm_step(params_.net, states_[s], x);
    const auto c = net::head_forward(params_.net, states_[s]);
    beliefs_[s] =
        rules::rule_update(beliefs_[s], marginal.per_value, c,
                           params_.rule_case);
    result.beliefs.push_back(beliefs_[s]);
    result.coefficients.push_back(c);
  }
  return result;
}

}  // namespace dst::tracker
