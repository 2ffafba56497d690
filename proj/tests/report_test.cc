#include "postavg/report.h"

#include <sstream>

#include <gtest/gtest.h>

#include "postavg/errors.h"

namespace postavg {
namespace {

ReportRow Row(std::optional<double> rate) {
  ReportRow r;
  r.dataset = "moons";
  r.attack = "pgd";
  r.sampler = "random";
  r.aggregation = "logits";
  r.epsilon = 0.3;
  r.radius = 0.5;
  r.directions = 6;
  r.k = 1;
  r.samples = 200;
  r.adv_count = rate ? 100 : 0;
  r.clean_acc_undefended = 0.995;
  r.attacked_acc_undefended = 0.495;
  r.clean_acc_defended = 0.985;
  r.attacked_acc_defended = 0.76;
  r.defence_rate = rate;
  r.data_seed = 1;
  r.model_seed = 2;
  r.attack_seed = 3;
  r.defense_seed = 4;
  return r;
}

TEST(ReportTsvTest, GoldenHeaderAndRow) {
  EvaluationReport report;
  report.rows.push_back(Row(0.55));
  std::ostringstream out;
  WriteReportTsv(report, out);
  EXPECT_EQ(out.str(),
            "postavg-report v1\n"
            "dataset\tattack\tsampler\taggregation\tepsilon\tradius\tK\tmiss_k\tk\tsamples\tadv\t"
            "clean_undef\tattacked_undef\tclean_def\tattacked_def\tdefence_rate\t"
            "data_seed\tmodel_seed\tattack_seed\tdefense_seed\n"
            "moons\tpgd\trandom\tlogits\t0.3\t0.5\t6\t1\t1\t200\t100\t"
            "0.995000\t0.495000\t0.985000\t0.760000\t0.550000\t1\t2\t3\t4\n");
}

TEST(ReportTsvTest, RoundTripKeepsUndefinedRates) {
  EvaluationReport report;
  report.rows = {Row(0.25), Row(std::nullopt)};
  std::stringstream ss;
  WriteReportTsv(report, ss);
  const EvaluationReport back = ReadReportTsv(ss);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[0].defence_rate, 0.25);
  EXPECT_FALSE(back.rows[1].defence_rate.has_value());
  EXPECT_EQ(back.rows[0].attack, "pgd");
  EXPECT_EQ(back.rows[0].clean_acc_defended, 0.985);
  EXPECT_EQ(back.rows[1].defense_seed, 4u);
}

TEST(ReportTsvTest, RejectsMalformedRows) {
  std::istringstream wrong_header("postavg-report v2\n");
  EXPECT_THROW(ReadReportTsv(wrong_header), ParseError);
  EvaluationReport report;
  report.rows.push_back(Row(0.5));
  std::ostringstream out;
  WriteReportTsv(report, out);
  std::string text = out.str();
  text.replace(text.find("0.500000"), 8, "half");
  std::istringstream bad(text);
  try {
    ReadReportTsv(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(ReportTableTest, AlignsColumnsAndListsWarnings) {
  EvaluationReport report;
  report.rows = {Row(0.55), Row(std::nullopt)};
  report.warnings.push_back("approx K=6: layer 0 has fewer units than requested");
  std::ostringstream out;
  WriteReportTable(report, out);
  const std::string text = out.str();
  EXPECT_NE(text.find("defence_rate"), std::string::npos);
  EXPECT_NE(text.find("n/a"), std::string::npos);
  EXPECT_NE(text.find("warning: approx K=6"), std::string::npos);
  std::istringstream lines(text);
  std::string header, rule, first;
  std::getline(lines, header);
  std::getline(lines, rule);
  std::getline(lines, first);
  EXPECT_EQ(rule.find_first_not_of('-'), std::string::npos);
  EXPECT_EQ(header.size(), first.size());
}

}  // namespace
}  // namespace postavg
