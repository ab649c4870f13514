#include "losflow/table.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "losflow/csv.hpp"

namespace losflow {

std::string_view to_string(FeatureKind kind) { return kind == FeatureKind::numeric ? "numeric" : "categorical"; }

std::size_t FeatureColumn::missing_count() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), is_missing));
}

double FeatureColumn::missing_ratio() const {
  if (values.empty()) return 0.0;
  return static_cast<double>(missing_count()) / static_cast<double>(values.size());
}

std::optional<double> FeatureColumn::number(std::size_t row) const {
  if (kind != FeatureKind::numeric) throw DataError("feature '" + name + "' is categorical");
  if (const auto* v = std::get_if<double>(&values[row])) return *v;
  return std::nullopt;
}

std::optional<std::size_t> EncounterTable::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

const FeatureColumn& EncounterTable::column(std::string_view name) const {
  auto idx = find_column(name);
  if (!idx) throw DataError("unknown feature '" + std::string(name) + "'");
  return columns_[*idx];
}

std::vector<std::string> EncounterTable::feature_names() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& c : columns_) names.push_back(c.name);
  return names;
}

std::vector<FeatureMeta> EncounterTable::feature_meta() const {
  std::vector<FeatureMeta> meta;
  meta.reserve(columns_.size());
  for (const auto& c : columns_) meta.push_back({c.name, c.kind, c.missing_ratio()});
  return meta;
}

void EncounterTable::add_column(FeatureColumn column) {
  if (find_column(column.name)) throw DataError("duplicate feature '" + column.name + "'");
  if (column.values.size() != encounters_.size()) {
    throw InvariantError("feature '" + column.name + "' length does not match row count");
  }
  columns_.push_back(std::move(column));
}

void EncounterTable::remove_column(std::string_view name) {
  auto idx = find_column(name);
  if (!idx) throw DataError("unknown feature '" + std::string(name) + "'");
  columns_.erase(columns_.begin() + static_cast<std::ptrdiff_t>(*idx));
}

void EncounterTable::replace_column(FeatureColumn column) {
  auto idx = find_column(column.name);
  if (!idx) throw DataError("unknown feature '" + column.name + "'");
  if (column.values.size() != encounters_.size()) {
    throw InvariantError("feature '" + column.name + "' length does not match row count");
  }
  columns_[*idx] = std::move(column);
}

void EncounterTable::append_row(Encounter encounter, std::vector<FeatureValue> cells) {
  if (cells.size() != columns_.size()) throw InvariantError("append_row: cell count does not match columns");
  encounters_.push_back(std::move(encounter));
  for (std::size_t c = 0; c < cells.size(); ++c) columns_[c].values.push_back(std::move(cells[c]));
}

EncounterTable EncounterTable::select_rows(std::span<const std::size_t> rows) const {
  EncounterTable out;
  out.encounters_.reserve(rows.size());
  for (auto r : rows) out.encounters_.push_back(encounters_[r]);
  out.columns_.reserve(columns_.size());
  for (const auto& c : columns_) {
    FeatureColumn nc{c.name, c.kind, {}};
    nc.values.reserve(rows.size());
    for (auto r : rows) nc.values.push_back(c.values[r]);
    out.columns_.push_back(std::move(nc));
  }
  return out;
}

std::vector<ClassLabel> EncounterTable::labels(double threshold_hours) const {
  std::vector<ClassLabel> out;
  out.reserve(encounters_.size());
  for (const auto& e : encounters_) out.push_back(label_from_los(e.los_hours, threshold_hours));
  return out;
}

Matrix EncounterTable::to_matrix() const {
  Matrix m(encounters_.size(), columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const auto& col = columns_[c];
    if (col.kind != FeatureKind::numeric) {
      throw DataError("feature '" + col.name + "' is categorical; one-hot encode it first");
    }
    for (std::size_t r = 0; r < encounters_.size(); ++r) {
      const auto* v = std::get_if<double>(&col.values[r]);
      if (!v) throw DataError("feature '" + col.name + "' has missing values; impute first");
      m(r, c) = *v;
    }
  }
  return m;
}

double parse_iso8601_hours(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double s = 0.0;
  auto fail = [&] { return DataError("invalid ISO-8601 timestamp '" + std::string(text) + "'"); };
  auto read_int = [&](std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) throw fail();
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') throw fail();
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') throw fail();
  y = read_int(0, 4);
  mo = read_int(5, 2);
  d = read_int(8, 2);
  std::string_view rest = text.substr(10);
  if (rest.ends_with('Z')) rest.remove_suffix(1);
  if (!rest.empty()) {
    if (rest[0] != 'T' && rest[0] != ' ') throw fail();
    if (rest.size() < 6 || rest[3] != ':') throw fail();
    h = read_int(11, 2);
    mi = read_int(14, 2);
    if (rest.size() > 6) {
      if (rest[6] != ':') throw fail();
      auto sec = csv::parse_double(rest.substr(7));
      if (!sec) throw fail();
      s = *sec;
    }
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s < 0.0 || s >= 61.0) throw fail();
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days) * 24.0 + h + mi / 60.0 + s / 3600.0;
}

namespace {

constexpr std::string_view kRequired[] = {"encounter_id", "patient_hash", "triage_time", "admit_decision_time",
                                          "los_hours"};

double required_number(const csv::Row& row, std::size_t col, std::size_t row_index, std::string_view name,
                       TimestampFormat fmt, bool is_timestamp) {
  const std::string& cell = row[col];
  try {
    if (is_timestamp && fmt == TimestampFormat::iso8601) return parse_iso8601_hours(cell);
    if (auto v = csv::parse_double(cell); v && std::isfinite(*v)) return *v;
  } catch (const DataError&) {
  }
  throw DataError("row " + std::to_string(row_index) + ": malformed " + std::string(name) + " '" + cell + "'");
}

}  // namespace

EncounterTable load_encounters(std::istream& in, const CsvSchema& schema) {
  const auto doc = csv::read(in);
  std::size_t idx[5];
  for (std::size_t i = 0; i < 5; ++i) {
    auto c = doc.column(kRequired[i]);
    if (!c) throw DataError("schema error: missing required column '" + std::string(kRequired[i]) + "'");
    idx[i] = *c;
  }
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < doc.header.size(); ++c) {
    if (std::find(std::begin(idx), std::end(idx), c) == std::end(idx)) feature_cols.push_back(c);
  }

  std::vector<Encounter> encounters;
  encounters.reserve(doc.rows.size());
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    Encounter e;
    e.encounter_id = row[idx[0]];
    if (e.encounter_id.empty()) throw DataError("row " + std::to_string(r) + ": empty encounter_id");
    e.patient_hash = row[idx[1]];
    e.triage_time = required_number(row, idx[2], r, "triage_time", schema.timestamps, true);
    e.admit_decision_time = required_number(row, idx[3], r, "admit_decision_time", schema.timestamps, true);
    e.los_hours = required_number(row, idx[4], r, "los_hours", schema.timestamps, false);
    try {
      e.validate();
    } catch (const DataError& err) {
      throw DataError("row " + std::to_string(r) + ": " + err.what());
    }
    encounters.push_back(std::move(e));
  }

  EncounterTable table(std::move(encounters));
  for (auto c : feature_cols) {
    FeatureColumn col{doc.header[c], FeatureKind::numeric, {}};
    bool numeric = true;
    for (const auto& row : doc.rows) {
      if (!row[c].empty() && !csv::parse_double(row[c])) {
        numeric = false;
        break;
      }
    }
    col.kind = numeric ? FeatureKind::numeric : FeatureKind::categorical;
    col.values.reserve(doc.rows.size());
    for (const auto& row : doc.rows) {
      if (row[c].empty()) {
        col.values.emplace_back(std::monostate{});
      } else if (numeric) {
        col.values.emplace_back(*csv::parse_double(row[c]));
      } else {
        col.values.emplace_back(row[c]);
      }
    }
    table.add_column(std::move(col));
  }
  return table;
}

EncounterTable load_encounters_file(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_encounters(in, schema);
}

void write_encounters(std::ostream& out, const EncounterTable& table) {
  csv::Row header(std::begin(kRequired), std::end(kRequired));
  for (const auto& c : table.columns()) header.push_back(c.name);
  csv::write_row(out, header);
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto& e = table.encounter(r);
    csv::Row row{e.encounter_id, e.patient_hash, csv::format_double(e.triage_time),
                 csv::format_double(e.admit_decision_time), csv::format_double(e.los_hours)};
    for (const auto& c : table.columns()) {
      const auto& v = c.values[r];
      if (const auto* d = std::get_if<double>(&v)) {
        row.push_back(csv::format_double(*d));
      } else if (const auto* s = std::get_if<std::string>(&v)) {
        row.push_back(*s);
      } else {
        row.emplace_back();
      }
    }
    csv::write_row(out, row);
  }
}

}  // namespace losflow
