#include <algorithm>
#include <cmath>

#include "soe/error.hpp"
#include "soe/model.hpp"

namespace soe {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::DegenerateEffect: return "degenerate effect";
    case ErrorKind::InsufficientN: return "insufficient n";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

std::string_view family_tag(TestFamily family) {
  switch (family) {
    case TestFamily::IndependentT: return "t_ind";
    case TestFamily::PairedT: return "t_paired";
    case TestFamily::ChiSquare1: return "chi2_1";
    case TestFamily::CorrelationR: return "r";
    case TestFamily::OneWayF: return "F_oneway";
    case TestFamily::ZTest: return "Z";
  }
  return "?";
}

std::optional<TestFamily> parse_family_tag(std::string_view tag) {
  for (auto f : {TestFamily::IndependentT, TestFamily::PairedT, TestFamily::ChiSquare1, TestFamily::CorrelationR,
                 TestFamily::OneWayF, TestFamily::ZTest}) {
    if (family_tag(f) == tag) return f;
  }
  return std::nullopt;
}

std::string_view mcc_tag(MccMethod method) {
  switch (method) {
    case MccMethod::None: return "none";
    case MccMethod::Bonferroni: return "bonferroni";
    case MccMethod::Holm: return "holm";
  }
  return "?";
}

std::optional<MccMethod> parse_mcc_tag(std::string_view tag) {
  for (auto m : {MccMethod::None, MccMethod::Bonferroni, MccMethod::Holm}) {
    if (mcc_tag(m) == tag) return m;
  }
  return std::nullopt;
}

std::size_t Dataset::test_count() const {
  std::size_t n = 0;
  for (const auto& s : studies) n += s.tests.size();
  return n;
}

const StudyRecord* Dataset::find_study(std::string_view study_id) const {
  auto it = std::find_if(studies.begin(), studies.end(), [&](const StudyRecord& s) { return s.study_id == study_id; });
  return it == studies.end() ? nullptr : &*it;
}

void AnalysisConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Parameter, what); };
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (thresholds.empty()) fail("thresholds must be nonempty");
  if (biases.empty()) fail("biases must be nonempty");
  if (priors.empty()) fail("priors must be nonempty");
  for (double d : thresholds) {
    if (!(d > 0.0) || !std::isfinite(d)) fail("thresholds must be positive");
  }
  for (double u : biases) {
    if (!(u >= 0.0 && u <= 1.0)) fail("biases must lie in [0, 1]");
  }
  for (double p : priors) {
    if (!(p > 0.0 && p < 1.0)) fail("priors must lie in (0, 1)");
  }
  if (!(fpr_target > 0.0 && fpr_target < 1.0)) fail("fpr_target must lie in (0, 1)");
  if (!(smooth_span > 0.0 && smooth_span <= 1.0)) fail("smooth_span must lie in (0, 1]");
}

}  // namespace soe
