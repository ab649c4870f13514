#include <sstream>

#include "doctest.h"
#include "losflow/csv.hpp"
#include "losflow/dataset.hpp"
#include "losflow/table.hpp"

using namespace losflow;

namespace {

const char* kThreeRows =
    "encounter_id,patient_hash,triage_time,admit_decision_time,los_hours,lab_na,service\n"
    "e1,p1,0,1.5,30,140,med\n"
    "e2,p2,2,3,100,,surg\n"
    "e3,p1,5,6,80,137,med\n";

EncounterTable three_rows() {
  std::istringstream in(kThreeRows);
  return load_encounters(in);
}

}  // namespace

TEST_CASE("csv quoting round trip") {
  std::ostringstream out;
  csv::write_row(out, {"plain", "with,comma", "with \"quote\"", "multi\nline", ""});
  std::istringstream in("a,b,c,d,e\n" + out.str());
  const auto doc = csv::read(in);
  REQUIRE(doc.rows.size() == 1);
  CHECK(doc.rows[0] == csv::Row{"plain", "with,comma", "with \"quote\"", "multi\nline", ""});
  CHECK(doc.column("c") == std::optional<std::size_t>(2));
  CHECK_FALSE(doc.column("z").has_value());
}

TEST_CASE("csv edge cases") {
  std::istringstream bom("\xEF\xBB\xBFx,y\r\n1,2\r\n");
  const auto doc = csv::read(bom);
  CHECK(doc.header == csv::Row{"x", "y"});
  CHECK(doc.rows[0] == csv::Row{"1", "2"});

  std::istringstream ragged("x,y\n1\n");
  CHECK_THROWS_AS(csv::read(ragged), DataError);
  std::istringstream open_quote("x\n\"abc\n");
  CHECK_THROWS_AS(csv::read(open_quote), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(csv::read(empty), DataError);
}

TEST_CASE("numeric text") {
  CHECK(csv::parse_double("1.25") == 1.25);
  CHECK(csv::parse_double("-3e2") == -300.0);
  CHECK_FALSE(csv::parse_double("").has_value());
  CHECK_FALSE(csv::parse_double("1.5x").has_value());
  CHECK_FALSE(csv::parse_double("abc").has_value());
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5}) {
    CHECK(*csv::parse_double(csv::format_double(v)) == v);
  }
  CHECK(csv::format_double(2.0) == "2");
}

TEST_CASE("encounter csv loads features with missing ratios") {
  const auto t = three_rows();
  REQUIRE(t.size() == 3);
  CHECK(t.encounter(1).encounter_id == "e2");
  CHECK(t.encounter(1).los_hours == 100.0);
  const auto& lab = t.column("lab_na");
  CHECK(lab.kind == FeatureKind::numeric);
  CHECK(lab.missing_ratio() == doctest::Approx(1.0 / 3.0));
  CHECK(t.column("service").kind == FeatureKind::categorical);
  const auto meta = t.feature_meta();
  REQUIRE(meta.size() == 2);
  CHECK(meta[0].name == "lab_na");
  const auto labels = t.labels();
  CHECK(labels == std::vector<ClassLabel>{ClassLabel::SS, ClassLabel::LS, ClassLabel::LS});
}

TEST_CASE("encounter csv schema errors name the column") {
  std::istringstream in("encounter_id,patient_hash,triage_time,admit_decision_time\ne1,p,0,1\n");
  try {
    load_encounters(in);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("los_hours") != std::string::npos);
  }
}

TEST_CASE("malformed required cell reports the row") {
  std::istringstream in(
      "encounter_id,patient_hash,triage_time,admit_decision_time,los_hours\n"
      "e1,p,0,1,10\n"
      "e2,p,0,1,soon\n");
  try {
    load_encounters(in);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  std::istringstream backwards(
      "encounter_id,patient_hash,triage_time,admit_decision_time,los_hours\n"
      "e1,p,5,1,10\n");
  CHECK_THROWS_AS(load_encounters(backwards), DataError);
}

TEST_CASE("iso8601 timestamps") {
  CHECK(parse_iso8601_hours("1970-01-01") == 0.0);
  CHECK(parse_iso8601_hours("1970-01-02T06:30") == doctest::Approx(30.5));
  CHECK(parse_iso8601_hours("1970-01-01 00:00:36") == doctest::Approx(0.01));
  CHECK(parse_iso8601_hours("2014-01-01T00:00:00") - parse_iso8601_hours("2013-12-31T23:00:00") ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(parse_iso8601_hours("2014-13-01"), DataError);
  CHECK_THROWS_AS(parse_iso8601_hours("yesterday"), DataError);

  std::istringstream in(
      "encounter_id,patient_hash,triage_time,admit_decision_time,los_hours\n"
      "e1,p,2014-01-01T00:00,2014-01-01T02:00,10\n");
  const auto t = load_encounters(in, {TimestampFormat::iso8601});
  CHECK(t.encounter(0).admit_decision_time - t.encounter(0).triage_time == doctest::Approx(2.0));
  CHECK(t.encounter(0).los_hours == 10.0);
}

TEST_CASE("encounter csv write and reload") {
  const auto t = three_rows();
  std::ostringstream out;
  write_encounters(out, t);
  std::istringstream in(out.str());
  const auto back = load_encounters(in);
  REQUIRE(back.size() == t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    CHECK(back.encounter(r).encounter_id == t.encounter(r).encounter_id);
    CHECK(back.encounter(r).los_hours == t.encounter(r).los_hours);
  }
  CHECK(back.column("lab_na").values == t.column("lab_na").values);
  CHECK(back.column("service").values == t.column("service").values);
}

TEST_CASE("table column management") {
  auto t = three_rows();
  CHECK_THROWS_AS(t.add_column({"lab_na", FeatureKind::numeric, {1.0, 2.0, 3.0}}), DataError);
  CHECK_THROWS_AS(t.add_column({"short", FeatureKind::numeric, {1.0}}), InvariantError);
  t.remove_column("service");
  CHECK_FALSE(t.find_column("service").has_value());
  CHECK_THROWS_AS(t.to_matrix(), DataError);  // lab_na has a missing cell
  const std::vector<std::size_t> rows{0, 2};
  const auto sub = t.select_rows(rows);
  CHECK(sub.size() == 2);
  const auto m = sub.to_matrix();
  CHECK(m(1, 0) == 137.0);
}

TEST_CASE("matrix helpers") {
  Matrix m(0, 2);
  m.append_row(std::vector<double>{1, 2});
  m.append_row(std::vector<double>{3, 4});
  CHECK(m.rows() == 2);
  CHECK(m.column(1) == std::vector<double>{2, 4});
  const std::vector<std::size_t> pick{1};
  CHECK(m.select_rows(pick)(0, 0) == 3.0);
  CHECK_THROWS_AS(m.append_row(std::vector<double>{1}), InvariantError);
}

TEST_CASE("dataset from a numeric table") {
  auto t = three_rows();
  t.remove_column("service");
  t.remove_column("lab_na");
  t.add_column({"x", FeatureKind::numeric, {1.0, 2.0, 3.0}});
  const auto d = Dataset::from_table(t);
  CHECK(d.size() == 3);
  CHECK(d.count(ClassLabel::LS) == 2);
  CHECK(d.ids[2] == "e3");
  CHECK(d.feature_names == std::vector<std::string>{"x"});
  const std::vector<std::size_t> rows{2, 0};
  const auto s = d.select(rows);
  CHECK(s.ids == std::vector<std::string>{"e3", "e1"});
  CHECK(s.features(0, 0) == 3.0);
}
