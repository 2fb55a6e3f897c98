#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bqms/gradientflow.hpp"

namespace bqms::cli {

using Json = nlohmann::ordered_json;

// Input problems end the run with exit code 1.
class InputError : public std::runtime_error {
 public:
  InputError(std::string kind, const std::string& what, int line = 0, int column = 0);
  const std::string& kind() const { return kind_; }  // ParseError, ShapeError, IoError, InputError
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  std::string kind_;
  int line_, column_;
};

enum ExitCode { Success = 0, InputFailure = 1, VerificationFailure = 2 };

struct RunOptions {
  std::optional<std::string> out_dir;
  std::map<std::string, double> tolerances;  // KEY=VAL overrides, applied after the scenario's own
  std::optional<unsigned long> seed;
  bool timestamp = true;
};

// One asserted identity. op names the library operation whose claim is checked.
struct Assertion {
  std::string op;
  std::string name;
  double value = 0;
  double limit = 0;
  bool upper = true;  // value <= limit when true, value >= limit otherwise
  bool passed = false;
};

struct RunResult {
  Json report;
  std::vector<Assertion> assertions;
  std::vector<std::string> failures;
  std::map<std::string, FlowTrace> traces;  // csv file stem -> trace
  int exit_code = Success;
};

Json parse_json(const std::string& text);
CMatrix parse_matrix(const Json& j, const std::string& what);
Json matrix_json(const CMatrix& a);

// Check-specific limits used by run and verify-paper; keys accepted by --tol.
std::map<std::string, double> default_check_limits();

RunResult run_scenario(const Json& scenario, const RunOptions& opts);
// Reads, runs, writes artifacts; returns the exit code.
int run_file(const std::string& path, const RunOptions& opts, std::ostream& out, std::ostream& err);

RunResult verify_paper(const RunOptions& opts);
int verify_paper_main(const RunOptions& opts, std::ostream& out, std::ostream& err);

// header t,entropy,metric_norm,lsi_margin,talagrand_slack; 17 significant digits
void emit_csv(const FlowTrace& trace, const std::string& path);
std::string csv_text(const FlowTrace& trace);

std::string report_text(const Json& report);
// Report with the timestamp field removed, for comparisons.
Json without_timestamp(Json report);

}  // namespace bqms::cli
