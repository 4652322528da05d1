#ifndef DST_SYNTH_HPP
#define DST_SYNTH_HPP

#include "dst/types.hpp"

#include <cstdint>

namespace dst::synth {

struct SynthConfig {
  int n_dialogs = 200;
  int n_slots = 3;
  int n_values = 5;
  double slu_noise = 0.10;        // chance the top hypothesis is wrong
  double goal_change_rate = 0.15;  // chance a dialog changes one goal
  std::uint64_t seed = 0;
};

Ontology make_ontology(const SynthConfig& config);

// Seeded restaurant-style corpus: users state each goal once (twice after
// a goal change), the system requests and confirms, SLU scores are noisy.
std::vector<Dialog> generate(const SynthConfig& config);

}  // namespace dst::synth

#endif
