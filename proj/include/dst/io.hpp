#ifndef DST_IO_HPP
#define DST_IO_HPP

#include "dst/ensemble.hpp"
#include "dst/tracker.hpp"
#include "dst/trainer.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <iosfwd>

namespace dst::io {

// Canonical dialog format: JSON lines, one dialog per line. Schema version
// is frozen; see docs/formats.md.
inline constexpr const char* kDialogFormatVersion = "dst-dialog-1";
inline constexpr const char* kModelFormatVersion = "dst-model-1";

struct LoadStats {
  long dialogs = 0;
  long skipped = 0;  // per-dialog parse failures
};

// --- ontology -----------------------------------------------------------
// Accepts either {"slots": [...], "values": {slot: [...]}} or a DSTC2
// ontology file with an "informable" map (tracked slots only).
Ontology load_ontology(const std::filesystem::path& path);

// --- canonical dialogs --------------------------------------------------
nlohmann::json dialog_to_json(const Dialog& dialog);
Dialog dialog_from_json(const nlohmann::json& j);

std::vector<Dialog> load_dialogs(const std::filesystem::path& path);
void save_dialogs(const std::vector<Dialog>& dialogs,
                  const std::filesystem::path& path);

// --- DSTC2 logs ---------------------------------------------------------
// list_file holds one session directory per line, relative to root; each
// directory carries log.json and label.json. Malformed sessions are
// skipped and counted.
std::vector<Dialog> load_dstc2(const std::filesystem::path& root,
                               const std::filesystem::path& list_file,
                               LoadStats* stats = nullptr);

// --- model files --------------------------------------------------------
void save_model(const tracker::TrackerParams& params,
                const train::TrainConfig& config,
                const std::filesystem::path& path);

struct LoadedModel {
  tracker::TrackerParams params;
  train::TrainConfig config;
};

// expected_ontology_hash 0 skips the guard; a nonzero mismatch is refused.
LoadedModel load_model(const std::filesystem::path& path,
                       std::uint64_t expected_ontology_hash = 0);

// --- tracker output export ----------------------------------------------
// One JSON line per dialog: per turn, per slot, value -> probability maps
// sorted descending, probabilities rounded to 6 decimals.
void export_tracker_output(const std::vector<tracker::TrackerRun>& runs,
                           const Ontology& ontology, std::ostream& out);

void write_score_report(const ensemble::ScoreReport& report,
                        std::ostream& out, bool as_json);

}  // namespace dst::io

#endif
