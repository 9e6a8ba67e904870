#include "treelearn/driver/report.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "treelearn/errors.hpp"

namespace treelearn {

const char* const kReportHeader =
    "rank,phase,step,passes,objective,grad_norm,seconds,comm_seconds,compute_seconds,vector_calls,scalar_calls,"
    "bytes_sent,bytes_received,test_auroc,test_auprc,test_nll";

namespace {

void put(std::ostream& out, const std::optional<double>& v) {
  if (v) out << *v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <class T>
T number(const std::string& cell, size_t line) {
  T v{};
  auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || p != cell.data() + cell.size()) throw ParseError("bad number '" + cell + "'", line);
  return v;
}

std::optional<double> maybe(const std::string& cell, size_t line) {
  if (cell.empty()) return std::nullopt;
  return number<double>(cell, line);
}

}  // namespace

const ReportRow* RunReport::last(const std::string& phase) const {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (it->phase == phase) return &*it;
  }
  return nullptr;
}

void write_report_csv(std::ostream& out, const RunReport& report) {
  out << kReportHeader << '\n';
  out.precision(17);
  for (const ReportRow& r : report.rows) {
    out << r.rank << ',' << r.phase << ',' << r.step << ',' << r.passes << ',';
    put(out, r.objective);
    out << ',';
    put(out, r.grad_norm);
    out << ',' << r.seconds << ',' << r.comm_seconds << ',' << r.compute_seconds() << ',' << r.vector_calls << ','
        << r.scalar_calls << ',' << r.bytes_sent << ',' << r.bytes_received << ',';
    put(out, r.test_auroc);
    out << ',';
    put(out, r.test_auprc);
    out << ',';
    put(out, r.test_nll);
    out << '\n';
  }
}

RunReport read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw ParseError("missing report header", 1);
  RunReport report;
  size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto c = split(line);
    if (c.size() != 16) throw ParseError("expected 16 columns", n);
    ReportRow r;
    r.rank = number<uint32_t>(c[0], n);
    r.phase = c[1];
    r.step = number<int>(c[2], n);
    r.passes = number<int>(c[3], n);
    r.objective = maybe(c[4], n);
    r.grad_norm = maybe(c[5], n);
    r.seconds = number<double>(c[6], n);
    r.comm_seconds = number<double>(c[7], n);
    r.vector_calls = number<uint64_t>(c[9], n);
    r.scalar_calls = number<uint64_t>(c[10], n);
    r.bytes_sent = number<uint64_t>(c[11], n);
    r.bytes_received = number<uint64_t>(c[12], n);
    r.test_auroc = maybe(c[13], n);
    r.test_auprc = maybe(c[14], n);
    r.test_nll = maybe(c[15], n);
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace treelearn
