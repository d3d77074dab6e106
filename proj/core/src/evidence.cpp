#include "soe/evidence.hpp"

#include <cmath>

#include "soe/error.hpp"

namespace soe {

EvidenceInputs EvidenceInputs::make(double p_obs, double power, double prior, double bias_u) {
  EvidenceInputs in;
  in.p_obs = p_obs;
  in.power = power;
  in.prior = prior;
  in.bias_u = bias_u;
  in.prior_odds = prior / (1.0 - prior);
  in.validate();
  return in;
}

void EvidenceInputs::validate() const {
  if (!(p_obs > 0.0 && p_obs <= 1.0)) throw Error(ErrorKind::Parameter, "p_obs must lie in (0, 1]");
  if (!(power > 0.0 && power <= 1.0)) throw Error(ErrorKind::Parameter, "power must lie in (0, 1]");
  if (!(prior > 0.0 && prior < 1.0)) throw Error(ErrorKind::Parameter, "prior must lie in (0, 1)");
  if (!(bias_u >= 0.0 && bias_u <= 1.0)) throw Error(ErrorKind::Parameter, "bias_u must lie in [0, 1]");
  const double odds = prior / (1.0 - prior);
  if (!(prior_odds > 0.0) || std::fabs(prior_odds - odds) > 1e-12 * std::fmax(1.0, odds)) {
    throw Error(ErrorKind::Parameter, "prior_odds inconsistent with prior");
  }
}

double ppv_basic(const EvidenceInputs& in) {
  const double hit = in.prior * in.power;
  return hit / (hit + (1.0 - in.prior) * in.p_obs);
}

double ppv_biased(const EvidenceInputs& in) {
  const double r = in.prior_odds;
  const double beta = 1.0 - in.power;
  const double a = in.p_obs;
  const double u = in.bias_u;
  const double numerator = (1.0 - beta) * r + u * beta * r;
  const double denominator = r + a - beta * r + u - u * a + u * beta * r;
  return numerator / denominator;
}

double lr_plt(const EvidenceInputs& in) {
  if (!(in.p_obs > 0.0)) throw Error(ErrorKind::Domain, "likelihood ratio undefined for p_obs = 0");
  return in.power / in.p_obs;
}

double rbp(const EvidenceInputs& in, double fpr_target) {
  if (!(fpr_target > 0.0 && fpr_target < 1.0)) throw Error(ErrorKind::Parameter, "fpr_target must lie in (0, 1)");
  const double null_mass = in.p_obs * (1.0 - fpr_target);
  return null_mass / (null_mass + in.power * fpr_target);
}

EvidenceMetrics evaluate(const EvidenceInputs& in, double fpr_target) {
  EvidenceMetrics m;
  m.power = in.power;
  m.ppv = ppv_biased(in);
  m.fpr = 1.0 - m.ppv;
  m.lr = lr_plt(in);
  m.rbp = rbp(in, fpr_target);
  return m;
}

ExpectedPositives expected_true_positives(std::span<const EvidenceMetrics> metrics) {
  ExpectedPositives out;
  if (metrics.empty()) return out;
  for (const auto& m : metrics) out.expected_true += m.ppv;
  const auto count = static_cast<double>(metrics.size());
  out.expected_false = count - out.expected_true;
  out.fraction_true = out.expected_true / count;
  return out;
}

}  // namespace soe
