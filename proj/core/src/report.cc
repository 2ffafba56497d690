#include "postavg/report.h"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <vector>

#include <boost/algorithm/string.hpp>

#include "postavg/errors.h"

namespace postavg {
namespace {

const std::vector<std::string>& Columns() {
  static const std::vector<std::string> cols = {
      "dataset",          "attack",        "sampler",      "aggregation",  "epsilon",
      "radius",           "K",             "miss_k",       "k",            "samples",
      "adv",              "clean_undef",   "attacked_undef", "clean_def",  "attacked_def",
      "defence_rate",     "data_seed",     "model_seed",   "attack_seed",  "defense_seed"};
  return cols;
}

std::string FormatReal(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string> Cells(const ReportRow& r) {
  return {r.dataset,
          r.attack,
          r.sampler,
          r.aggregation,
          FormatReal(r.epsilon),
          FormatReal(r.radius),
          std::to_string(r.directions),
          std::to_string(r.miss_k),
          std::to_string(r.k),
          std::to_string(r.samples),
          std::to_string(r.adv_count),
          FormatRate(r.clean_acc_undefended),
          FormatRate(r.attacked_acc_undefended),
          FormatRate(r.clean_acc_defended),
          FormatRate(r.attacked_acc_defended),
          r.defence_rate ? FormatRate(*r.defence_rate) : "n/a",
          std::to_string(r.data_seed),
          std::to_string(r.model_seed),
          std::to_string(r.attack_seed),
          std::to_string(r.defense_seed)};
}

template <typename T>
T ParseCell(const std::string& text, int line, const std::string& column) {
  std::istringstream ss(text);
  T v{};
  char extra = 0;
  if (!(ss >> v) || (ss >> extra)) throw ParseError(line, "column " + column + ": bad value '" + text + "'");
  return v;
}

}  // namespace

std::string FormatRate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void WriteReportTsv(const EvaluationReport& report, std::ostream& out) {
  out << "postavg-report v1\n";
  out << boost::join(Columns(), "\t") << '\n';
  for (const ReportRow& r : report.rows) out << boost::join(Cells(r), "\t") << '\n';
}

EvaluationReport ReadReportTsv(std::istream& in) {
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line) || boost::trim_copy(line) != "postavg-report v1") {
    throw ParseError(1, "expected header 'postavg-report v1'");
  }
  ++line_no;
  if (!std::getline(in, line)) throw ParseError(2, "missing column header");
  ++line_no;
  boost::trim_right_if(line, boost::is_any_of("\r"));
  if (line != boost::join(Columns(), "\t")) throw ParseError(line_no, "unexpected column header");
  EvaluationReport report;
  while (std::getline(in, line)) {
    ++line_no;
    boost::trim_right_if(line, boost::is_any_of("\r"));
    if (line.empty()) continue;
    std::vector<std::string> c;
    boost::split(c, line, boost::is_any_of("\t"));
    if (c.size() != Columns().size()) {
      throw ParseError(line_no, "expected " + std::to_string(Columns().size()) + " columns, got " +
                                    std::to_string(c.size()));
    }
    const auto& names = Columns();
    ReportRow r;
    r.dataset = c[0];
    r.attack = c[1];
    r.sampler = c[2];
    r.aggregation = c[3];
    r.epsilon = ParseCell<double>(c[4], line_no, names[4]);
    r.radius = ParseCell<double>(c[5], line_no, names[5]);
    r.directions = ParseCell<int>(c[6], line_no, names[6]);
    r.miss_k = ParseCell<int>(c[7], line_no, names[7]);
    r.k = ParseCell<int>(c[8], line_no, names[8]);
    r.samples = ParseCell<int>(c[9], line_no, names[9]);
    r.adv_count = ParseCell<int>(c[10], line_no, names[10]);
    r.clean_acc_undefended = ParseCell<double>(c[11], line_no, names[11]);
    r.attacked_acc_undefended = ParseCell<double>(c[12], line_no, names[12]);
    r.clean_acc_defended = ParseCell<double>(c[13], line_no, names[13]);
    r.attacked_acc_defended = ParseCell<double>(c[14], line_no, names[14]);
    if (c[15] != "n/a") r.defence_rate = ParseCell<double>(c[15], line_no, names[15]);
    r.data_seed = ParseCell<std::uint64_t>(c[16], line_no, names[16]);
    r.model_seed = ParseCell<std::uint64_t>(c[17], line_no, names[17]);
    r.attack_seed = ParseCell<std::uint64_t>(c[18], line_no, names[18]);
    r.defense_seed = ParseCell<std::uint64_t>(c[19], line_no, names[19]);
    report.rows.push_back(std::move(r));
  }
  return report;
}

void WriteReportTable(const EvaluationReport& report, std::ostream& out) {
  static const std::vector<std::size_t> shown = {1, 2, 5, 6, 8, 10, 11, 12, 13, 14, 15};
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head;
  for (std::size_t i : shown) head.push_back(Columns()[i]);
  grid.push_back(head);
  for (const ReportRow& r : report.rows) {
    const std::vector<std::string> cells = Cells(r);
    std::vector<std::string> row;
    for (std::size_t i : shown) row.push_back(cells[i]);
    grid.push_back(std::move(row));
  }
  std::vector<std::size_t> width(shown.size(), 0);
  for (const auto& row : grid) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::string line;
    for (std::size_t i = 0; i < grid[g].size(); ++i) {
      if (i > 0) line += "  ";
      const std::string& cell = grid[g][i];
      const std::string pad(width[i] - cell.size(), ' ');
      line += i < 2 ? cell + pad : pad + cell;  // text left, numbers right
    }
    boost::trim_right(line);
    out << line << '\n';
    if (g == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  for (const std::string& w : report.warnings) out << "warning: " << w << '\n';
}

}  // namespace postavg
