#pragma once

// Machine-readable verification reports (`--json`), schema version 1.

#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "sepinv/invgen.hpp"
#include "sepinv/oracle.hpp"

namespace sepinv {

inline constexpr int kReportVersion = 1;

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A verified function together with the optional small-model checks, one
/// per top-level loop.
struct VerifyRecord {
  FunctionReport report;
  std::vector<InvariantCheck> oracle;
};

nlohmann::ordered_json to_json(const Timing& t);
nlohmann::ordered_json to_json(const InvariantReport& r);
nlohmann::ordered_json to_json(const VerifyRecord& r);

/// `{"report_version": 1, "file": ..., "backend": ..., "functions": [...]}`.
nlohmann::ordered_json make_report(const std::string& file, const std::string& backend,
                                   const std::vector<VerifyRecord>& records);

/// Checks every field of a report against the schema; throws ReportError.
void validate_report(const nlohmann::json& j);

/// Rebuilds the records of a report, parsing assertions against `preds`.
/// Counter-models are not restored.
std::vector<VerifyRecord> records_from_report(const nlohmann::json& j, const PredicateRegistry& preds);

}  // namespace sepinv
