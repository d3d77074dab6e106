#pragma once

#include <optional>
#include <span>

namespace soe {

/// Inputs to the strength-of-evidence formulas.
///
/// `p_obs` plays the role of P[D|H0] (the observed or MCC-adjusted p-value),
/// `power` that of P[D|H1] at the assumed effect-size threshold, and `prior`
/// that of P[H1]. `prior_odds` is kept alongside the prior because the
/// bias-adjusted PPV is written in odds; `make` derives it and `validate`
/// checks the two agree.
struct EvidenceInputs {
  double p_obs = 0.05;
  double power = 0.8;
  double prior = 0.5;
  double bias_u = 0.0;
  double prior_odds = 1.0;

  static EvidenceInputs make(double p_obs, double power, double prior, double bias_u = 0.0);

  /// Throws Error(Parameter) on out-of-range fields or inconsistent odds.
  void validate() const;
};

struct EvidenceMetrics {
  double power = 0.0;
  double ppv = 0.0;
  double fpr = 1.0;
  double lr = 1.0;
  double rbp = 0.0;
  bool significant_raw = false;
  bool significant_adjusted = false;

  bool operator==(const EvidenceMetrics&) const = default;
};

/// prior * power / (prior * power + (1 - prior) * p_obs)
double ppv_basic(const EvidenceInputs& in);

/// Ioannidis' PPV under bias u with beta = 1 - power, alpha' = p_obs and
/// R = prior odds:
///   ((1 - beta) R + u beta R) / (R + alpha' - beta R + u - u alpha' + u beta R)
double ppv_biased(const EvidenceInputs& in);

/// Likelihood ratio in the p-less-than reading: power / p_obs.
double lr_plt(const EvidenceInputs& in);

/// Prior needed to reach `fpr_target` given p_obs and power.
double rbp(const EvidenceInputs& in, double fpr_target);

/// Bias-adjusted PPV, its complement, LR and RBP in one record. The
/// significance flags are left for the caller.
EvidenceMetrics evaluate(const EvidenceInputs& in, double fpr_target);

struct ExpectedPositives {
  double expected_true = 0.0;
  double expected_false = 0.0;
  std::optional<double> fraction_true;  // absent for an empty collection

  bool operator==(const ExpectedPositives&) const = default;
};

/// Expected true and false positives among `metrics`, which the caller has
/// already restricted to significant reports.
ExpectedPositives expected_true_positives(std::span<const EvidenceMetrics> metrics);

}  // namespace soe
