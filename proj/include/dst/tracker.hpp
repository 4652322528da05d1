#ifndef DST_TRACKER_HPP
#define DST_TRACKER_HPP

#include "dst/net.hpp"
#include "dst/rules.hpp"
#include "dst/slu.hpp"
#include "dst/types.hpp"

#include <cstdint>
#include <utility>

namespace dst::tracker {

// Everything needed to run one tracker: weights, feature vocabulary,
// optional f_m mask, and the rule interpretation switch.
struct TrackerParams {
  net::NetParams net;
  slu::FeatureVocab vocab;
  std::vector<std::uint8_t> fm_mask;  // per-token keep flag; empty = no mask
  std::uint64_t ontology_hash = 0;
  rules::CoefficientCase rule_case = rules::CoefficientCase::SourceNone;

  int input_size(const Ontology& ontology) const {
    return static_cast<int>(ontology.slots().size()) + vocab.size() +
           slu::kSummaryDim;
  }
};

struct SlotTrajectory {
  std::vector<Vec> beliefs;  // h^s_t per turn
  std::vector<rules::RuleCoefficients> coefficients;
  std::vector<net::LstmState> states;
};

struct TrackerRun {
  std::string dialog_id;
  std::vector<SlotTrajectory> per_slot;  // ontology slot order
};

// Caches retained by the forward pass so the trainer can run BPTT.
struct SlotForwardCache {
  std::vector<net::LstmStepCache> steps;
  std::vector<Vec> head_pre;
  std::vector<Vec> inputs;     // assembled x per turn
  std::vector<Vec> marginals;  // i^s per turn
};

// Input vector [f_s | masked f_m | i_summary] for one turn.
Vec assemble_input(const slu::TurnFeatures& features,
                   const std::vector<std::uint8_t>& fm_mask);

// One recurrent pass for one slot; h^s_0 = delta_None, l_0 = 0. The net
// is shared across slots and distinguished only by f_s.
SlotTrajectory run_slot(const TrackerParams& params, const Ontology& ontology,
                        const Dialog& dialog, const std::string& slot,
                        SlotForwardCache* cache = nullptr);

TrackerRun track_dialog(const TrackerParams& params, const Ontology& ontology,
                        const Dialog& dialog);

std::vector<std::pair<double, double>> coefficient_trajectory(
    const TrackerRun& run, const Ontology& ontology, const std::string& slot);

// Online variant of track_dialog: consumes turns one at a time and emits
// the same beliefs bit for bit.
class StreamingTracker {
 public:
  StreamingTracker(TrackerParams params, Ontology ontology);

  void reset(const std::string& dialog_id);
  const std::string& dialog_id() const { return dialog_id_; }

  struct StepResult {
    std::vector<Vec> beliefs;  // ontology slot order
    std::vector<rules::RuleCoefficients> coefficients;
  };
  StepResult step(const Turn& turn);

 private:
  TrackerParams params_;
  Ontology ontology_;
  std::string dialog_id_;
  std::vector<Vec> beliefs_;
  std::vector<net::LstmState> states_;
};

}  // namespace dst::tracker

#endif
