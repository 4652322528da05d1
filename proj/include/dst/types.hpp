#ifndef DST_TYPES_HPP
#define DST_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dst {

// Raised when training or an update step produces non-finite values.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Lowercase + trim; applied to every slot/value string at ingestion.
std::string normalize_value(const std::string& s);

// Slot names and their legal value sets. The None hypothesis is implicit
// index 0 of every belief vector and is never stored in the value lists.
class Ontology {
 public:
  Ontology() = default;
  Ontology(std::vector<std::string> slots,
           std::map<std::string, std::vector<std::string>> values);

  const std::vector<std::string>& slots() const { return slots_; }
  const std::vector<std::string>& values(const std::string& slot) const;

  int slot_index(const std::string& slot) const;  // -1 if untracked
  // 0 = None; 1..K follow the ontology value order; -1 if unknown.
  int value_index(const std::string& slot, const std::string& value) const;
  int belief_dim(const std::string& slot) const;  // 1 + K

  std::uint64_t hash() const;

 private:
  std::vector<std::string> slots_;
  std::map<std::string, std::vector<std::string>> values_;
  std::map<std::string, std::map<std::string, int>> index_;
};

enum class ActType {
  Inform,
  Request,
  Affirm,
  Negate,
  ExplConf,
  ImplConf,
  Deny,
  Other,
};

struct DialogAct {
  ActType type = ActType::Other;
  std::string raw;  // original act token, kept for Other and tokenization
  std::optional<std::string> slot;
  std::optional<std::string> value;

  bool is_confirm() const {
    return type == ActType::ExplConf || type == ActType::ImplConf;
  }
  bool operator==(const DialogAct&) const = default;
};

ActType parse_act_type(const std::string& token);
std::string act_type_token(const DialogAct& act);

DialogAct make_act(ActType type, std::optional<std::string> slot = {},
                   std::optional<std::string> value = {});

struct SluHypothesis {
  std::vector<DialogAct> acts;
  double score = 0.0;  // in [0,1]
};

struct Turn {
  std::vector<DialogAct> machine_acts;
  std::vector<SluHypothesis> slu_nbest;
  // Cumulative true goal at this turn; absent slot means None.
  std::optional<std::map<std::string, std::string>> goal_labels;
};

// Scales n-best scores down when their sum exceeds 1.
void renormalize_nbest(Turn& turn);

struct Dialog {
  std::string id;
  std::vector<Turn> turns;
};

// Per-slot probability vector indexed [None, v_1, ..., v_K], in ontology
// slot order.
struct BeliefState {
  std::vector<Vec> per_slot;
};

BeliefState initial_belief(const Ontology& ontology);

// Per-slot argmax; ties go to the lowest index (None first). nullopt = None.
std::map<std::string, std::optional<std::string>> joint_top_hypothesis(
    const BeliefState& belief, const Ontology& ontology);

bool is_distribution(const Vec& v, double tol = 1e-9);

}  // namespace dst

#endif
