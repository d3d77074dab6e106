#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace soe {

/// Statistical test families that can be coded from a publication.
enum class TestFamily {
  IndependentT,
  PairedT,
  ChiSquare1,
  CorrelationR,
  OneWayF,
  ZTest,
};

/// CSV tag of a family (`t_ind`, `t_paired`, `chi2_1`, `r`, `F_oneway`, `Z`).
std::string_view family_tag(TestFamily family);
std::optional<TestFamily> parse_family_tag(std::string_view tag);

/// One reported statistical inference, tied to a study.
struct CodedTest {
  std::string study_id;
  std::string test_id;
  TestFamily family = TestFamily::IndependentT;
  std::optional<double> statistic;
  std::optional<std::int64_t> df1;
  std::optional<std::int64_t> df2;
  std::int64_t n_total = 0;
  std::optional<std::int64_t> n1;
  std::optional<std::int64_t> n2;
  std::optional<double> p_reported;
  std::optional<double> effect_d;

  bool operator==(const CodedTest&) const = default;
};

struct StudyRecord {
  std::string study_id;
  int year = 0;
  double acpa = 0.0;  // average citations per annum
  std::vector<CodedTest> tests;

  bool operator==(const StudyRecord&) const = default;
};

/// Immutable after construction; studies keep first-appearance order.
struct Dataset {
  std::vector<StudyRecord> studies;
  std::string provenance;

  std::size_t test_count() const;
  const StudyRecord* find_study(std::string_view study_id) const;

  bool operator==(const Dataset&) const = default;
};

enum class MccMethod { None, Bonferroni, Holm };

std::string_view mcc_tag(MccMethod method);
std::optional<MccMethod> parse_mcc_tag(std::string_view tag);

struct AnalysisConfig {
  double alpha = 0.05;
  std::vector<double> thresholds{0.2, 0.5, 0.8};
  std::vector<double> biases{0.0, 0.2, 0.3, 0.8};
  std::vector<double> priors{0.1, 0.2, 0.5};
  MccMethod mcc_method = MccMethod::Holm;
  double fpr_target = 0.05;
  double smooth_span = 0.75;
  bool two_sided = true;

  /// Throws Error(Parameter) naming the first offending field.
  void validate() const;

  bool operator==(const AnalysisConfig&) const = default;
};

}  // namespace soe
