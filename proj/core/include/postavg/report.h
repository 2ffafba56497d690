#ifndef POSTAVG_REPORT_H_
#define POSTAVG_REPORT_H_

#include <iosfwd>
#include <string>

#include "postavg/harness.h"

namespace postavg {

// Tab-separated records: a "postavg-report v1" line, a column header, then
// one row per (attack, sampler, radius, K, k). Rates use 6 decimals;
// an undefined defence rate is written as "n/a".
void WriteReportTsv(const EvaluationReport& report, std::ostream& out);
EvaluationReport ReadReportTsv(std::istream& in);

// Human-readable aligned table of the same rows.
void WriteReportTable(const EvaluationReport& report, std::ostream& out);

std::string FormatRate(double v);

}  // namespace postavg

#endif  // POSTAVG_REPORT_H_
