#include "dst/rules.hpp"

#include <stdexcept>

namespace dst::rules {

namespace {
void check_dims(const Vec& h_prev, const Vec& i) {
  if (h_prev.size() != i.size())
    throw std::invalid_argument("rule_update: dimension mismatch");
  if (h_prev.size() == 0)
    throw std::invalid_argument("rule_update: empty belief");
}
}  // namespace

// a(v1, v2) gives the fraction of h_prev[v2] eligible to flow to v1 under
// evidence. SourceNone: a = c_new when v2 is None, c_override otherwise.
// TargetNone flips the case split to v1. Both reduce to per-index
// coefficient vectors, so the quadratic double sums collapse to O(n).
Vec rule_update(const Vec& h_prev, const Vec& i, const RuleCoefficients& c,
                CoefficientCase cc) {
  check_dims(h_prev, i);
  const int n = static_cast<int>(h_prev.size());
  const double total_i = i.sum();
  Vec h_t(n);
  if (cc == CoefficientCase::SourceNone) {
    auto cs = [&](int v) { return v == 0 ? c.c_new : c.c_override; };
    double weighted_h = 0.0;  // T = sum_v h_prev[v] * cs[v]
    for (int v = 0; v < n; ++v) weighted_h += h_prev[v] * cs(v);
    for (int v = 0; v < n; ++v) {
      const double out = h_prev[v] * cs(v) * (total_i - i[v]);
      const double in = i[v] * (weighted_h - h_prev[v] * cs(v));
      h_t[v] = h_prev[v] - out + in;
    }
  } else {
    auto ct = [&](int v) { return v == 0 ? c.c_new : c.c_override; };
    double weighted_i = 0.0;  // U = sum_v i[v] * ct[v]
    const double total_h = h_prev.sum();
    for (int v = 0; v < n; ++v) weighted_i += i[v] * ct(v);
    for (int v = 0; v < n; ++v) {
      const double out = h_prev[v] * (weighted_i - i[v] * ct(v));
      const double in = i[v] * ct(v) * (total_h - h_prev[v]);
      h_t[v] = h_prev[v] - out + in;
    }
  }
  return h_t;
}

RuleGradients rule_update_backward(const Vec& h_prev, const Vec& i,
                                   const RuleCoefficients& c,
                                   const Vec& upstream, CoefficientCase cc) {
  check_dims(h_prev, i);
  if (upstream.size() != h_prev.size())
    throw std::invalid_argument("rule_update_backward: upstream mismatch");
  const int n = static_cast<int>(h_prev.size());
  const Vec& u = upstream;
  const double S = i.sum();
  const double H = h_prev.sum();

  RuleGradients g;
  g.d_h_prev = Vec(n);
  g.d_i = Vec(n);

  if (cc == CoefficientCase::SourceNone) {
    auto cs = [&](int v) { return v == 0 ? c.c_new : c.c_override; };
    double T = 0.0, P = 0.0, Q = 0.0, uh_inst = 0.0;
    for (int v = 0; v < n; ++v) {
      T += h_prev[v] * cs(v);
      P += u[v] * i[v];
      Q += u[v] * h_prev[v] * cs(v);
      if (v != 0) uh_inst += u[v] * h_prev[v];
    }
    for (int k = 0; k < n; ++k) {
      g.d_h_prev[k] =
          u[k] * (1.0 - cs(k) * (S - i[k])) + cs(k) * (P - u[k] * i[k]);
      g.d_i[k] = u[k] * (T - h_prev[k] * cs(k)) - Q + u[k] * h_prev[k] * cs(k);
    }
    g.d_c_new = h_prev[0] * (P - u[0] * S);
    g.d_c_override = -S * uh_inst + (H - h_prev[0]) * P;
  } else {
    auto ct = [&](int v) { return v == 0 ? c.c_new : c.c_override; };
    double U = 0.0, Pc = 0.0, R = 0.0, ui_inst = 0.0;
    for (int v = 0; v < n; ++v) {
      U += i[v] * ct(v);
      Pc += u[v] * i[v] * ct(v);
      R += u[v] * h_prev[v];
      if (v != 0) ui_inst += u[v] * i[v];
    }
    for (int k = 0; k < n; ++k) {
      g.d_h_prev[k] =
          u[k] * (1.0 - U + i[k] * ct(k)) + Pc - u[k] * i[k] * ct(k);
      g.d_i[k] =
          ct(k) * (u[k] * (H - h_prev[k]) - (R - u[k] * h_prev[k]));
    }
    g.d_c_new = i[0] * (u[0] * H - R);
    g.d_c_override = -(S - i[0]) * R + H * ui_inst;
  }
  return g;
}

}  // namespace dst::rules
