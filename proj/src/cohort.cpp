#include "losflow/cohort.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>

#include "losflow/random.hpp"

namespace losflow {

namespace {

const boost::math::normal kStdNormal;

double normal_cdf(double z) { return boost::math::cdf(kStdNormal, z); }
double normal_quantile(double p) { return boost::math::quantile(kStdNormal, p); }

std::string family_name(LosDistribution::Family f) {
  switch (f) {
    case LosDistribution::Family::lognormal:
      return "lognormal";
    case LosDistribution::Family::shifted_lognormal:
      return "shifted_lognormal";
    case LosDistribution::Family::uniform:
      return "uniform";
  }
  return "lognormal";
}

// Probability mass a lognormal puts on the class range.
double class_mass(const LosDistribution& d, double threshold, bool long_stay) {
  const double below = normal_cdf((std::log(threshold) - d.mu) / d.sigma);
  return long_stay ? 1.0 - below : below;
}

void validate_distribution(const LosDistribution& d, double threshold, bool long_stay) {
  const std::string which = long_stay ? "ls_los" : "ss_los";
  using F = LosDistribution::Family;
  if (d.family != F::uniform && !(d.sigma > 0.0)) throw DataError(which + ": sigma must be positive");
  switch (d.family) {
    case F::shifted_lognormal:
      if (!long_stay) throw DataError(which + ": shifted_lognormal places all mass above the threshold");
      break;
    case F::lognormal:
      if (class_mass(d, threshold, long_stay) < 1e-12) {
        throw DataError(which + ": lognormal has no mass " + (long_stay ? "above" : "below") +
                        " the threshold after truncation");
      }
      break;
    case F::uniform:
      if (!(d.min <= d.max)) throw DataError(which + ": uniform min exceeds max");
      if (long_stay ? d.min < threshold : (d.min < 0.0 || d.max > threshold || d.max <= 0.0)) {
        throw DataError(which + ": uniform support lies outside the class LOS range");
      }
      break;
  }
}

// Uniform on the open interval (0,1).
double open_uniform(Rng& rng) {
  return (static_cast<double>(rng.engine()() >> 11) + 0.5) * 0x1.0p-53;
}

double sample_los(const LosDistribution& d, double threshold, bool long_stay, Rng& rng) {
  using F = LosDistribution::Family;
  double x = 0.0;
  switch (d.family) {
    case F::shifted_lognormal:
      x = threshold + std::exp(d.mu + d.sigma * normal_quantile(open_uniform(rng)));
      break;
    case F::lognormal: {
      // Inverse CDF restricted to the class range.
      const double below = normal_cdf((std::log(threshold) - d.mu) / d.sigma);
      const double lo = long_stay ? below : 0.0;
      const double hi = long_stay ? 1.0 : below;
      const double p = std::clamp(lo + (hi - lo) * open_uniform(rng), 1e-300, 1.0 - 1e-16);
      x = std::exp(d.mu + d.sigma * normal_quantile(p));
      break;
    }
    case F::uniform:
      x = rng.uniform(d.min, d.max);
      break;
  }
  x = quantize_hours(x);
  // Keep the label consistent after quantization.
  if (long_stay && x <= threshold) x = quantize_hours(threshold + kTimeResolutionHours);
  if (!long_stay) x = std::clamp(x, kTimeResolutionHours, quantize_hours(threshold));
  return x;
}

config::Json distribution_to_json(const LosDistribution& d) {
  if (d.family == LosDistribution::Family::uniform) {
    return {{"family", "uniform"}, {"min", d.min}, {"max", d.max}};
  }
  return {{"family", family_name(d.family)}, {"mu", d.mu}, {"sigma", d.sigma}};
}

LosDistribution distribution_from_json(const config::Reader& r, const LosDistribution& fallback) {
  LosDistribution d = fallback;
  const auto family = r.string("family", family_name(fallback.family));
  if (family == "lognormal") {
    d.family = LosDistribution::Family::lognormal;
  } else if (family == "shifted_lognormal") {
    d.family = LosDistribution::Family::shifted_lognormal;
  } else if (family == "uniform") {
    d.family = LosDistribution::Family::uniform;
  } else {
    r.fail("family", "unknown distribution family '" + family + "'");
  }
  d.mu = r.number("mu", d.mu);
  d.sigma = r.number("sigma", d.sigma);
  d.min = r.number("min", d.min);
  d.max = r.number("max", d.max);
  return d;
}

const char* kServices[] = {"GIM", "CARD", "RESP", "NEPH"};
constexpr double kServiceWeights[] = {0.55, 0.2, 0.15, 0.1};
constexpr double kLabMissing[] = {0.05, 0.1, 0.15, 0.2, 0.3, 0.8, 0.85, 0.95};

}  // namespace

// Divides like to_hours so grid values convert to ticks and back unchanged.
double quantize_hours(double hours) { return std::round(hours * 1e6) / 1e6; }

void CohortConfig::validate() const {
  if (n_patients <= 0) throw DataError("cohort: n_patients must be positive");
  if (!(arrival_rate_per_day > 0.0)) throw DataError("cohort: arrival_rate_per_day must be positive");
  if (!(ls_fraction > 0.0 && ls_fraction < 1.0)) throw DataError("cohort: ls_fraction must lie in (0,1)");
  if (!(threshold_hours > 0.0)) throw DataError("cohort: threshold_hours must be positive");
  if (feature_dim <= 0) throw DataError("cohort: feature_dim must be positive");
  if (!(class_separation >= 0.0)) throw DataError("cohort: class_separation must be non-negative");
  if (!(repeat_visit_probability >= 0.0 && repeat_visit_probability <= 1.0)) {
    throw DataError("cohort: repeat_visit_probability must lie in [0,1]");
  }
  if (!(wait_sigma > 0.0)) throw DataError("cohort: wait_sigma must be positive");
  if (hourly_multipliers) {
    double total = 0.0;
    for (double m : *hourly_multipliers) {
      if (!(m >= 0.0)) throw DataError("cohort: hourly multipliers must be non-negative");
      total += m;
    }
    if (!(total > 0.0)) throw DataError("cohort: hourly multipliers must not all be zero");
  }
  validate_distribution(ss_los, threshold_hours, false);
  validate_distribution(ls_los, threshold_hours, true);
}

config::Json to_json(const CohortConfig& c) {
  config::Json j = {
      {"schema_version", CohortConfig::kSchemaVersion},
      {"n_patients", c.n_patients},
      {"arrival_rate_per_day", c.arrival_rate_per_day},
      {"ls_fraction", c.ls_fraction},
      {"threshold_hours", c.threshold_hours},
      {"ss_los_distribution", distribution_to_json(c.ss_los)},
      {"ls_los_distribution", distribution_to_json(c.ls_los)},
      {"wait_mu", c.wait_mu},
      {"wait_sigma", c.wait_sigma},
      {"feature_dim", c.feature_dim},
      {"class_separation", c.class_separation},
      {"repeat_visit_probability", c.repeat_visit_probability},
      {"start_hours", c.start_hours},
      {"seed", c.seed},
  };
  if (c.hourly_multipliers) j["hourly_multipliers"] = *c.hourly_multipliers;
  return j;
}

CohortConfig cohort_config_from_json(const config::Reader& r) {
  r.check_schema_version(CohortConfig::kSchemaVersion);
  CohortConfig c;
  c.n_patients = r.integer("n_patients", c.n_patients);
  c.arrival_rate_per_day = r.number("arrival_rate_per_day", c.arrival_rate_per_day);
  c.ls_fraction = r.number("ls_fraction", c.ls_fraction);
  c.threshold_hours = r.number("threshold_hours", c.threshold_hours);
  if (auto d = r.optional_child("ss_los_distribution")) c.ss_los = distribution_from_json(*d, c.ss_los);
  if (auto d = r.optional_child("ls_los_distribution")) c.ls_los = distribution_from_json(*d, c.ls_los);
  c.wait_mu = r.number("wait_mu", c.wait_mu);
  c.wait_sigma = r.number("wait_sigma", c.wait_sigma);
  c.feature_dim = r.integer("feature_dim", c.feature_dim);
  c.class_separation = r.number("class_separation", c.class_separation);
  c.repeat_visit_probability = r.number("repeat_visit_probability", c.repeat_visit_probability);
  c.start_hours = r.number("start_hours", c.start_hours);
  c.seed = r.seed("seed", c.seed);
  if (r.has("hourly_multipliers")) {
    const auto& arr = r.node().at("hourly_multipliers");
    if (!arr.is_array() || arr.size() != 24) r.fail("hourly_multipliers", "expected an array of 24 numbers");
    std::array<double, 24> m{};
    for (std::size_t h = 0; h < 24; ++h) {
      if (!arr[h].is_number()) r.fail("hourly_multipliers", "expected an array of 24 numbers");
      m[h] = arr[h].get<double>();
    }
    c.hourly_multipliers = m;
  }
  try {
    c.validate();
  } catch (const DataError& e) {
    throw ConfigError(r.path() + ": " + e.what());
  }
  return c;
}

EncounterTable generate_cohort(const CohortConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(config.n_patients);
  const auto d = static_cast<std::size_t>(config.feature_dim);
  Rng rng(config.seed);

  // Thinned Poisson process over hour-of-day intensity.
  std::array<double, 24> mult;
  mult.fill(1.0);
  if (config.hourly_multipliers) {
    mult = *config.hourly_multipliers;
    const double mean = std::accumulate(mult.begin(), mult.end(), 0.0) / 24.0;
    for (auto& m : mult) m /= mean;
  }
  const double peak = *std::max_element(mult.begin(), mult.end());
  const double rate_per_hour = config.arrival_rate_per_day / 24.0 * peak;

  std::vector<std::string> columns;
  for (std::size_t k = 0; k < d; ++k) columns.push_back((k < 10 ? "f0" : "f") + std::to_string(k));
  columns.insert(columns.end(), {"age", "admitting_service"});
  for (int k = 1; k <= 8; ++k) columns.push_back("lab_0" + std::to_string(k));
  columns.insert(columns.end(), {"vit_hr", "vit_temp", "vit_sbp_1", "vit_sbp_2", "vit_sbp_3", "ip_diag_count"});

  std::vector<Encounter> encounters;
  encounters.reserve(n);
  std::vector<std::vector<FeatureValue>> cells(columns.size());
  for (auto& c : cells) c.reserve(n);

  const double shift = config.class_separation / std::sqrt(static_cast<double>(d));
  std::vector<std::string> seen_hashes;
  std::size_t next_patient = 0;
  double t = config.start_hours;
  std::poisson_distribution<int> diag_dist(3.0);

  for (std::size_t i = 0; i < n; ++i) {
    do {
      t += rng.exponential(rate_per_hour);
    } while (rng.uniform() * peak >= mult[static_cast<std::size_t>(std::fmod(std::floor(t), 24.0) + 24.0) % 24]);

    const bool ls = rng.bernoulli(config.ls_fraction);
    Encounter e;
    e.encounter_id = "E" + std::to_string(i + 1);
    if (!seen_hashes.empty() && rng.bernoulli(config.repeat_visit_probability)) {
      e.patient_hash = seen_hashes[rng.index(seen_hashes.size())];
    } else {
      e.patient_hash = "P" + std::to_string(++next_patient);
    }
    seen_hashes.push_back(e.patient_hash);
    e.triage_time = quantize_hours(t);
    e.admit_decision_time = quantize_hours(e.triage_time + std::exp(rng.normal(config.wait_mu, config.wait_sigma)));
    e.los_hours = sample_los(ls ? config.ls_los : config.ss_los, config.threshold_hours, ls, rng);
    encounters.push_back(std::move(e));

    std::size_t c = 0;
    for (std::size_t k = 0; k < d; ++k) cells[c++].emplace_back(rng.normal(ls ? 0.5 * shift : -0.5 * shift, 1.0));
    cells[c++].emplace_back(std::round(std::clamp(rng.normal(65.0, 15.0), 18.0, 100.0)));
    {
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t s = 0;
      for (; s + 1 < std::size(kServices); ++s) {
        acc += kServiceWeights[s];
        if (u < acc) break;
      }
      cells[c++].emplace_back(std::string(kServices[s]));
    }
    for (double missing : kLabMissing) {
      const double value = std::exp(rng.normal(1.5, 0.6));
      if (rng.bernoulli(missing)) {
        cells[c++].emplace_back(std::monostate{});
      } else {
        cells[c++].emplace_back(value);
      }
    }
    auto vital = [&](double mean, double sd, double missing) {
      const double value = rng.normal(mean, sd);
      if (rng.bernoulli(missing)) {
        cells[c++].emplace_back(std::monostate{});
      } else {
        cells[c++].emplace_back(std::round(value * 10.0) / 10.0);
      }
    };
    vital(85.0, 15.0, 0.05);
    vital(37.0, 0.6, 0.1);
    vital(128.0, 22.0, 0.02);
    vital(128.0, 22.0, 0.4);
    vital(128.0, 22.0, 0.7);
    cells[c++].emplace_back(static_cast<double>(diag_dist(rng.engine())));
  }

  EncounterTable table(std::move(encounters));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    table.add_column({columns[c], columns[c] == "admitting_service" ? FeatureKind::categorical : FeatureKind::numeric,
                      std::move(cells[c])});
  }
  return table;
}

}  // namespace losflow
