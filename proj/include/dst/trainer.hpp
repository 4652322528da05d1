#ifndef DST_TRAINER_HPP
#define DST_TRAINER_HPP

#include "dst/tracker.hpp"

#include <cstdint>

namespace dst::train {

struct TrainConfig {
  enum class Group { AdaGrad, Adam };
  Group group = Group::AdaGrad;
  int epochs = 10;
  std::uint64_t seed = 0;
  double mask_rate = 0.2;  // fraction of f_m coordinates zeroed (Adam group)
  int hidden_size = 5;

  double adagrad_lr = 0.5;
  double adagrad_clip = 10.0;
  double adam_lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;

  rules::CoefficientCase rule_case = rules::CoefficientCase::SourceNone;
  bool quiet = false;  // suppress per-epoch stderr log
};

// One (dialog, slot) pair with the per-turn gold value index. 0 = None.
struct TrainingSample {
  int dialog_index = 0;
  std::string slot;
  std::vector<int> gold;
};

std::vector<TrainingSample> extract_samples(const std::vector<Dialog>& dialogs,
                                            const Ontology& ontology);

struct DialogLoss {
  double loss = 0.0;
  std::vector<Vec> belief_grads;  // d loss / d h^s_t per turn
};

// Per-turn cross-entropy of the slot belief against the gold index,
// summed over turns. Floor of 1e-12 inside the log.
DialogLoss dialog_loss(const tracker::SlotTrajectory& trajectory,
                       const TrainingSample& sample);

// Full forward + backward for one sample; accumulates parameter gradients
// and returns the sample loss.
double sample_gradient(const tracker::TrackerParams& params,
                       const Ontology& ontology, const Dialog& dialog,
                       const TrainingSample& sample,
                       net::NetGradients& grads);

tracker::TrackerParams train_one(const TrainConfig& config,
                                 const std::vector<Dialog>& corpus,
                                 const slu::FeatureVocab& vocab,
                                 const Ontology& ontology);

// count_a AdaGrad runs followed by count_b Adam runs. seeds must hold one
// entry per run; members train concurrently on up to `jobs` threads.
std::vector<tracker::TrackerParams> train_groups(
    const TrainConfig& base, const std::vector<Dialog>& corpus,
    const slu::FeatureVocab& vocab, const Ontology& ontology, int count_a,
    int count_b, const std::vector<std::uint64_t>& seeds, int jobs = 1);

}  // namespace dst::train

#endif
