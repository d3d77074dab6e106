#include "soe/ingest.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "soe/error.hpp"
#include "soe/text.hpp"

namespace soe {
namespace {

constexpr std::size_t kColumns = 13;

void add(Verdict& v, std::string code, std::string detail = {}) {
  v.push_back({std::move(code), std::move(detail)});
}

bool requires_df1(const CodedTest& t) {
  switch (t.family) {
    case TestFamily::IndependentT:
    case TestFamily::PairedT:
      return t.statistic.has_value();
    case TestFamily::ChiSquare1:
    case TestFamily::OneWayF:
      return true;
    case TestFamily::CorrelationR:
    case TestFamily::ZTest:
      return false;
  }
  return false;
}

std::string na_or(const std::optional<double>& v) { return v ? text::format_double(*v) : "NA"; }
std::string na_or(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : "NA"; }

}  // namespace

Verdict validate_record(const CodedTest& t) {
  Verdict v;
  if (t.study_id.empty() || t.test_id.empty()) add(v, "missing id", "study_id and test_id are required");
  if (t.n_total < 1) add(v, "invalid n", "n_total must be positive");
  if ((t.n1 && *t.n1 < 1) || (t.n2 && *t.n2 < 1)) add(v, "invalid n", "group sizes must be positive");
  if (t.n1 && t.n2 && *t.n1 + *t.n2 != t.n_total) {
    add(v, "group sizes inconsistent", "n1 + n2 != n_total");
  } else if ((t.n1 && !t.n2 && *t.n1 >= t.n_total) || (t.n2 && !t.n1 && *t.n2 >= t.n_total)) {
    add(v, "group sizes inconsistent", "single group size leaves no second group");
  }
  if (t.p_reported && !(*t.p_reported > 0.0 && *t.p_reported <= 1.0)) {
    add(v, "p out of range", "p_reported must lie in (0, 1]");
  }
  if ((t.df1 && *t.df1 < 0) || (t.df2 && *t.df2 < 0)) add(v, "invalid df", "degrees of freedom must be nonnegative");
  if ((t.statistic && !std::isfinite(*t.statistic)) || (t.effect_d && !std::isfinite(*t.effect_d))) {
    add(v, "non-finite value");
  }

  bool missing_df = requires_df1(t) && !t.df1;
  switch (t.family) {
    case TestFamily::ChiSquare1:
      if (t.df1 && *t.df1 != 1) add(v, "df not supported", "chi-square without contingency needs df1 = 1");
      if (t.statistic && *t.statistic < 0.0) add(v, "statistic out of range", "chi-square must be >= 0");
      break;
    case TestFamily::OneWayF:
      if (t.df1 && *t.df1 < 1) add(v, "df not supported", "one-way F needs df1 >= 1");
      if (t.statistic && !t.df2) missing_df = true;
      if (t.df1 && t.n_total > 0 && *t.df1 + 1 >= t.n_total) add(v, "df not supported", "k = df1 + 1 must be < n_total");
      if (t.statistic && *t.statistic < 0.0) add(v, "statistic out of range", "F must be >= 0");
      break;
    case TestFamily::CorrelationR:
      if (t.statistic && std::fabs(*t.statistic) >= 1.0) add(v, "statistic out of range", "|r| must be < 1");
      break;
    default:
      break;
  }
  if (missing_df) add(v, "missing df", std::string(family_tag(t.family)) + " requires degrees of freedom");

  const bool statistic_usable = t.statistic && !missing_df;
  if (!statistic_usable && !t.p_reported && !t.effect_d) {
    add(v, "no evidence fields", "needs a statistic with df, p_reported or effect_d");
  }
  return v;
}

ParseResult parse_dataset(std::istream& in, std::string provenance) {
  ParseResult result;
  result.dataset.provenance = std::move(provenance);

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Schema, "missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetHeader) throw Error(ErrorKind::Schema, "unexpected header: expected " + std::string(kDatasetHeader));

  std::map<std::string, std::size_t> study_index;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++result.rows_read;

    Verdict v;
    const auto f = text::split_csv(line);
    if (f.size() != kColumns) {
      add(v, "wrong field count", std::to_string(f.size()) + " fields, expected " + std::to_string(kColumns));
      result.rejected.push_back({row, std::move(v)});
      continue;
    }

    CodedTest t;
    t.study_id = f[0];
    t.test_id = f[1];
    if (auto fam = parse_family_tag(f[2])) {
      t.family = *fam;
    } else {
      add(v, "unknown family", f[2]);
    }
    auto opt_double = [&](std::size_t i, const char* name) -> std::optional<double> {
      if (f[i] == "NA") return std::nullopt;
      auto d = text::parse_double(f[i]);
      if (!d) add(v, "unparseable field", std::string(name) + "='" + f[i] + "'");
      return d;
    };
    auto opt_int = [&](std::size_t i, const char* name) -> std::optional<std::int64_t> {
      if (f[i] == "NA") return std::nullopt;
      auto n = text::parse_int(f[i]);
      if (!n) add(v, "unparseable field", std::string(name) + "='" + f[i] + "'");
      return n;
    };
    t.statistic = opt_double(3, "statistic");
    t.df1 = opt_int(4, "df1");
    t.df2 = opt_int(5, "df2");
    if (auto n = opt_int(6, "n_total")) {
      t.n_total = *n;
    } else if (f[6] == "NA") {
      add(v, "invalid n", "n_total is required");
    }
    t.n1 = opt_int(7, "n1");
    t.n2 = opt_int(8, "n2");
    t.p_reported = opt_double(9, "p_reported");
    t.effect_d = opt_double(10, "effect_d");
    const auto year = opt_int(11, "year");
    const auto acpa = opt_double(12, "acpa");
    if (!year) add(v, "missing study metadata", "year is required");
    if (!acpa) {
      add(v, "missing study metadata", "acpa is required");
    } else if (*acpa < 0.0) {
      add(v, "acpa out of range", "acpa must be >= 0");
    }

    if (v.empty()) {
      for (auto& issue : validate_record(t)) v.push_back(std::move(issue));
    }
    if (v.empty() && seen.contains({t.study_id, t.test_id})) {
      add(v, "duplicate", "(study_id, test_id) already present");
    }
    auto existing = study_index.find(t.study_id);
    if (v.empty() && existing != study_index.end()) {
      const auto& s = result.dataset.studies[existing->second];
      if (s.year != *year || s.acpa != *acpa) add(v, "study metadata mismatch", "year/acpa differ from earlier rows");
    }
    if (!v.empty()) {
      result.rejected.push_back({row, std::move(v)});
      continue;
    }

    seen.insert({t.study_id, t.test_id});
    if (existing == study_index.end()) {
      study_index.emplace(t.study_id, result.dataset.studies.size());
      StudyRecord s;
      s.study_id = t.study_id;
      s.year = static_cast<int>(*year);
      s.acpa = *acpa;
      result.dataset.studies.push_back(std::move(s));
      existing = study_index.find(t.study_id);
    }
    result.dataset.studies[existing->second].tests.push_back(std::move(t));
  }

  if (result.rows_read > 0 && result.dataset.studies.empty()) {
    throw Error(ErrorKind::Validation, "all " + std::to_string(result.rows_read) + " data rows failed validation");
  }
  return result;
}

ParseResult parse_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  // The file name alone, so results do not depend on where the data lives.
  return parse_dataset(in, std::filesystem::path(path).filename().string());
}

std::string serialize_dataset(const Dataset& ds) {
  std::ostringstream out;
  out << kDatasetHeader << '\n';
  for (const auto& s : ds.studies) {
    for (const auto& t : s.tests) {
      out << text::csv_field(t.study_id) << ',' << text::csv_field(t.test_id) << ',' << family_tag(t.family) << ','
          << na_or(t.statistic) << ',' << na_or(t.df1) << ',' << na_or(t.df2) << ',' << t.n_total << ','
          << na_or(t.n1) << ',' << na_or(t.n2) << ',' << na_or(t.p_reported) << ',' << na_or(t.effect_d) << ','
          << s.year << ',' << text::format_double(s.acpa) << '\n';
    }
  }
  return out.str();
}

}  // namespace soe
