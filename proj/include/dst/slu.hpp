#ifndef DST_SLU_HPP
#define DST_SLU_HPP

#include "dst/types.hpp"

#include <atomic>
#include <cstdint>

namespace dst::slu {

// Width of the fixed inform-evidence summary fed to the recurrent net:
// [total_mass, top-5 marginal probabilities sorted descending, zero-padded].
constexpr int kSummaryDim = 6;

// Marginal probability of informed values for one slot, aligned with the
// slot's belief indexing. Entry 0 (None) is always 0.
struct InformMarginal {
  Vec per_value;
  double total_mass = 0.0;
};

struct FeatureVocab {
  std::vector<std::string> tokens;  // first-seen order, train-set only
  int min_count = 5;

  int index(const std::string& token) const;
  int size() const { return static_cast<int>(tokens.size()); }
};

struct TurnFeatures {
  Vec f_s;        // one-hot tracked slot, dim = #tracked slots
  Vec f_m;        // binary bag of machine-act tokens, dim = |vocab|
  Vec i_summary;  // kSummaryDim
};

// Values seen in SLU informs but missing from the ontology are dropped;
// this counter tracks how many.
std::uint64_t unknown_value_count();
void reset_unknown_value_count();

// Expands each Affirm() into Inform(slot=value) for every confirm-family
// machine act; an affirm with nothing to confirm is dropped. Everything
// else passes through unchanged.
std::vector<DialogAct> rewrite_affirm(
    const std::vector<DialogAct>& machine_acts,
    const std::vector<DialogAct>& user_acts);

InformMarginal marginalize_informs(const Turn& turn, const std::string& slot,
                                   const Ontology& ontology);

// Tokens contributed by one machine act: act type, slot, value (if present).
std::vector<std::string> act_tokens(const DialogAct& act);

FeatureVocab build_vocab(const std::vector<Dialog>& dialogs, int min_count);

Vec summarize_marginal(const InformMarginal& marginal);

TurnFeatures featurize(const Turn& turn, const std::string& slot,
                       const FeatureVocab& vocab, const Ontology& ontology,
                       const InformMarginal& marginal);

}  // namespace dst::slu

#endif
