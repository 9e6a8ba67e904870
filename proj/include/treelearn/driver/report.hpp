#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "treelearn/comm/collective.hpp"

namespace treelearn {

// One line of a worker's run report. Times and counters are cumulative from
// the start of training.
struct ReportRow {
  uint32_t rank = 0;
  std::string phase;
  int step = 0;
  int passes = 0;  // data passes so far; an L-BFGS iteration counts as one
  std::optional<double> objective;
  std::optional<double> grad_norm;
  double seconds = 0.0;
  double comm_seconds = 0.0;
  uint64_t vector_calls = 0;
  uint64_t scalar_calls = 0;
  uint64_t bytes_sent = 0;
  uint64_t bytes_received = 0;
  std::optional<double> test_auroc, test_auprc, test_nll;

  double compute_seconds() const { return seconds - comm_seconds; }
};

struct RunReport {
  std::vector<ReportRow> rows;

  const ReportRow* last(const std::string& phase) const;
};

extern const char* const kReportHeader;

void write_report_csv(std::ostream& out, const RunReport& report);
// Throws ParseError on a malformed file.
RunReport read_report_csv(std::istream& in);

}  // namespace treelearn
