#ifndef DST_ENSEMBLE_HPP
#define DST_ENSEMBLE_HPP

#include "dst/tracker.hpp"

#include <map>

namespace dst::ensemble {

enum class ScheduleMode {
  AllLabeledTurns,  // every turn carrying a goal label is scored
  AfterFirstInform,  // compat: only once some tracked slot was mentioned
};

struct EnsembleSpec {
  std::vector<int> member_indices;  // into the tracker pool
};

struct ScoreReport {
  double joint_accuracy = 0.0;
  double joint_l2 = 0.0;
  std::map<std::string, double> slot_accuracy;
  long scored_turns = 0;
};

// Arithmetic mean of member beliefs per slot per turn. Each member runs
// its own full recurrence; coefficients are not averaged, so the returned
// run carries none. member_runs, when given, receives the raw runs.
tracker::TrackerRun ensemble_track(
    const std::vector<tracker::TrackerParams>& members,
    const Ontology& ontology, const Dialog& dialog,
    std::vector<tracker::TrackerRun>* member_runs = nullptr);

// Joint accuracy and joint L2 over the scored turns. Labels come from the
// dialogs' goal annotations; a slot missing from a label means None.
// L2 is computed over the cross product of per-slot truncated supports
// (None + top 10 + gold).
ScoreReport score(const std::vector<tracker::TrackerRun>& runs,
                  const std::vector<Dialog>& dialogs,
                  const Ontology& ontology,
                  ScheduleMode mode = ScheduleMode::AllLabeledTurns);

// Draws `trials` random k-subsets of the pool, scores each on the dev
// corpus, returns the one with the best joint accuracy (first on ties).
EnsembleSpec select_ensemble(const std::vector<tracker::TrackerParams>& pool,
                             int k, int trials,
                             const std::vector<Dialog>& dev,
                             const Ontology& ontology, std::uint64_t seed,
                             ScheduleMode mode = ScheduleMode::AllLabeledTurns,
                             int jobs = 1);

// Runs every dialog through the ensemble; parallel across dialogs.
std::vector<tracker::TrackerRun> ensemble_track_corpus(
    const std::vector<tracker::TrackerParams>& members,
    const Ontology& ontology, const std::vector<Dialog>& dialogs,
    int jobs = 1);

}  // namespace dst::ensemble

#endif
