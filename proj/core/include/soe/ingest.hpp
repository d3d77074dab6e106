#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "soe/model.hpp"

namespace soe {

/// Column order of the coded-test CSV schema.
inline constexpr const char* kDatasetHeader =
    "study_id,test_id,family,statistic,df1,df2,n_total,n1,n2,p_reported,effect_d,year,acpa";

struct Violation {
  std::string code;    // stable short tag, e.g. "missing df"
  std::string detail;  // human-readable context

  bool operator==(const Violation&) const = default;
};

/// Empty means the record is acceptable.
using Verdict = std::vector<Violation>;

Verdict validate_record(const CodedTest& test);

struct RejectedRow {
  std::size_t row;  // 1-based line number in the source, header is row 1
  std::vector<Violation> violations;
};

struct ParseResult {
  Dataset dataset;
  std::vector<RejectedRow> rejected;
  std::size_t rows_read = 0;
};

/// Parses the documented CSV schema. Invalid rows are collected in
/// `rejected`; throws Error(Schema) on a bad header and Error(Validation)
/// when data rows exist but none survive.
ParseResult parse_dataset(std::istream& in, std::string provenance = {});
ParseResult parse_dataset_file(const std::string& path);

/// Writes `ds` in the CSV schema; numbers use shortest round-trip form.
std::string serialize_dataset(const Dataset& ds);

}  // namespace soe
