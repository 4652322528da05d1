#ifndef DST_RULES_HPP
#define DST_RULES_HPP

#include "dst/types.hpp"

namespace dst::rules {

struct RuleCoefficients {
  double c_new = 0.5;       // ease of leaving the None hypothesis
  double c_override = 0.5;  // ease of overriding an instantiated value
};

// Which endpoint of a transfer selects c_new. SourceNone: mass moving out
// of None uses c_new (the default). TargetNone: mass moving into None uses
// c_new (the alternative case split, kept for ablation).
enum class CoefficientCase { SourceNone, TargetNone };

struct RuleGradients {
  Vec d_h_prev;
  Vec d_i;
  double d_c_new = 0.0;
  double d_c_override = 0.0;
};

// One belief update step. h_prev and i share indexing (0 = None). Total
// mass is conserved exactly; no renormalization is applied.
Vec rule_update(const Vec& h_prev, const Vec& i, const RuleCoefficients& c,
                CoefficientCase cc = CoefficientCase::SourceNone);

// Exact partials of rule_update contracted with an upstream gradient.
RuleGradients rule_update_backward(const Vec& h_prev, const Vec& i,
                                   const RuleCoefficients& c,
                                   const Vec& upstream,
                                   CoefficientCase cc =
                                       CoefficientCase::SourceNone);

}  // namespace dst::rules

#endif
