// Copyright 2026 The strec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "strec/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "strec/metrics.hpp"
#include "strec/rng.hpp"

namespace strec {
namespace {

constexpr std::uint64_t kImpressionTag = 0x696d7073ull;  // dataset impressions
constexpr std::uint64_t kMcTag = 0x62617965ull;          // Monte-Carlo oracle
constexpr std::uint64_t kUserVecTag = 0x75766563ull;
constexpr std::uint64_t kItemVecTag = 0x69766563ull;
constexpr std::uint64_t kWeekWTag = 0x7765656bull;
constexpr std::uint64_t kHourWTag = 0x686f7572ull;
constexpr std::uint64_t kGeoWTag = 0x67656f77ull;
constexpr std::uint64_t kCityWTag = 0x63697479ull;
constexpr std::uint64_t kAoiWTag = 0x616f6977ull;

constexpr std::int64_t kBaseTs = 1735689600;   // 2025-01-01 00:00:00 UTC
constexpr std::int64_t kTsSpread = 2592000;    // decisions span 30 days
constexpr const char* kCellAlphabet = "0123456789bcdefghjkmnpqrstuvwxyz";

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

double sigmoid_stable(double x) { return 0.5 * (1.0 + std::tanh(0.5 * x)); }

bool all_finite(const std::vector<double>& w) {
  for (double v : w)
    if (!std::isfinite(v)) return false;
  return true;
}

double weight_at(const std::vector<double>& w, std::size_t i) {
  return w.empty() ? 0.0 : w[i];
}

// Closed form of ramp_pattern(size)[i], so per-impression interaction terms
// need no table allocation.
double ramp_value(std::int64_t size, std::int64_t i) {
  if (size <= 1) return 0.0;
  const double half = std::sqrt(3.0 * static_cast<double>(size - 1) /
                                static_cast<double>(size + 1));
  return -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(size - 1);
}

constexpr std::array<const char*, 5> kPlantedSlotNames = {"week", "hour", "geo",
                                                          "city", "aoi"};

std::int64_t slot_cardinality(const GenConfig& cfg, PlantedSlot slot) {
  switch (slot) {
    case PlantedSlot::kWeek: return 7;
    case PlantedSlot::kHour: return 24;
    case PlantedSlot::kGeo: return cfg.n_geo;
    case PlantedSlot::kCity: return cfg.n_city;
    case PlantedSlot::kAoi: return cfg.n_aoi;
  }
  fail("slot_cardinality: bad slot");
}

std::int64_t slot_value(const Sample& s, std::uint64_t geo, PlantedSlot slot) {
  switch (slot) {
    case PlantedSlot::kWeek: return s.context.week;
    case PlantedSlot::kHour: return s.context.hour;
    case PlantedSlot::kGeo: return static_cast<std::int64_t>(geo);
    case PlantedSlot::kCity: return static_cast<std::int64_t>(s.context.city_id);
    case PlantedSlot::kAoi: return static_cast<std::int64_t>(s.context.aoi_id);
  }
  fail("slot_value: bad slot");
}

double interaction_logit(const GenConfig& cfg, const Sample& s, std::uint64_t geo) {
  double sum = 0.0;
  for (const PlantedInteraction& it : cfg.interactions) {
    sum += it.scale *
           ramp_value(slot_cardinality(cfg, it.slot_a), slot_value(s, geo, it.slot_a)) *
           ramp_value(slot_cardinality(cfg, it.slot_b), slot_value(s, geo, it.slot_b));
  }
  return sum;
}

std::vector<std::string> gen_config_problems(const GenConfig& cfg) {
  std::vector<std::string> p;
  if (cfg.n_users < 1) p.push_back("n_users must be >= 1");
  if (cfg.n_items < 1) p.push_back("n_items must be >= 1");
  if (cfg.n_impressions < 1) p.push_back("n_impressions must be >= 1");
  if (cfg.n_geo < 1 || cfg.n_geo > 33554432) p.push_back("n_geo must be in [1, 32^5]");
  if (cfg.n_city < 1) p.push_back("n_city must be >= 1");
  if (cfg.n_aoi < 1) p.push_back("n_aoi must be >= 1");
  if (!std::isfinite(cfg.b0)) p.push_back("b0 must be finite");

  const auto check_table = [&p](const std::vector<double>& w, std::int64_t size,
                                const char* name) {
    if (!w.empty() && static_cast<std::int64_t>(w.size()) != size)
      p.push_back(std::string(name) + " must be empty or have " +
                  std::to_string(size) + " entries");
    if (!all_finite(w)) p.push_back(std::string(name) + " must be finite");
  };
  check_table(cfg.w_week, 7, "w_week");
  check_table(cfg.w_hour, 24, "w_hour");
  check_table(cfg.w_geo, cfg.n_geo, "w_geo");
  check_table(cfg.w_city, cfg.n_city, "w_city");
  check_table(cfg.w_aoi, cfg.n_aoi, "w_aoi");

  for (std::size_t i = 0; i < cfg.interactions.size(); ++i) {
    const PlantedInteraction& it = cfg.interactions[i];
    const std::string where = "interactions[" + std::to_string(i) + "]";
    const auto bad = [](PlantedSlot s) {
      return static_cast<int>(s) < 0 || static_cast<int>(s) > 4;
    };
    if (bad(it.slot_a) || bad(it.slot_b))
      p.push_back(where + ": slot outside week|hour|geo|city|aoi");
    else if (it.slot_a == it.slot_b)
      p.push_back(where + ": slots must differ");
    if (!std::isfinite(it.scale)) p.push_back(where + ": scale must be finite");
  }

  if (cfg.affinity_rank < 1) p.push_back("affinity_rank must be >= 1");
  if (!std::isfinite(cfg.affinity_scale)) p.push_back("affinity_scale must be finite");
  if (!std::isfinite(cfg.seq_scale)) p.push_back("seq_scale must be finite");
  if (!(cfg.seq_half_life_s > 0.0)) p.push_back("seq_half_life_s must be > 0");
  if (cfg.min_events < 0) p.push_back("min_events must be >= 0");
  if (cfg.max_events < cfg.min_events)
    p.push_back("max_events must be >= min_events");
  if (cfg.min_gap_s < 1) p.push_back("min_gap_s must be >= 1");
  if (cfg.max_gap_s < cfg.min_gap_s) p.push_back("max_gap_s must be >= min_gap_s");
  return p;
}

// Latent affinity vector of one entity, drawn from its own substream.
std::vector<double> latent_vector(std::uint64_t seed, std::uint64_t tag,
                                  std::uint64_t id, int rank) {
  Rng rng = Rng::substream(seed, tag, id);
  std::vector<double> v(static_cast<std::size_t>(rank));
  for (double& x : v) x = rng.normal();
  return v;
}

double affinity(const GenConfig& cfg, std::uint64_t user, std::uint64_t item) {
  if (cfg.affinity_scale == 0.0) return 0.0;
  const auto u = latent_vector(cfg.seed, kUserVecTag, user, cfg.affinity_rank);
  const auto v = latent_vector(cfg.seed, kItemVecTag, item, cfg.affinity_rank);
  double dot = 0.0;
  for (int i = 0; i < cfg.affinity_rank; ++i)
    dot += u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
  return cfg.affinity_scale * dot / std::sqrt(static_cast<double>(cfg.affinity_rank));
}

struct DrawnImpression {
  Sample sample;
  double logit = 0.0;
};

// All randomness of one impression comes from one substream, drawn in a
// fixed order so the layout never shifts between builds.
DrawnImpression draw_impression(const GenConfig& cfg, std::uint64_t stream_tag,
                                std::uint64_t index) {
  Rng rng = Rng::substream(cfg.seed, stream_tag, index);
  DrawnImpression out;
  Sample& s = out.sample;

  s.user_id = rng.below(static_cast<std::uint64_t>(cfg.n_users));
  s.item_id = rng.below(static_cast<std::uint64_t>(cfg.n_items));
  s.context.week = static_cast<int>(rng.below(7));
  s.context.hour = static_cast<int>(rng.below(24));
  const std::uint64_t geo = rng.below(static_cast<std::uint64_t>(cfg.n_geo));
  s.context.geohash = geo_cell_name(static_cast<std::int64_t>(geo));
  s.context.city_id = rng.below(static_cast<std::uint64_t>(cfg.n_city));
  s.context.aoi_id = rng.below(static_cast<std::uint64_t>(cfg.n_aoi));
  s.decision_ts = kBaseTs + static_cast<std::int64_t>(
                                rng.below(static_cast<std::uint64_t>(kTsSpread)));

  const std::uint64_t span =
      static_cast<std::uint64_t>(cfg.max_events - cfg.min_events) + 1;
  const std::int64_t n_events =
      cfg.min_events + static_cast<std::int64_t>(rng.below(span));
  const double log_lo = std::log(static_cast<double>(cfg.min_gap_s));
  const double log_hi = std::log(static_cast<double>(cfg.max_gap_s));

  std::vector<std::pair<double, std::uint64_t>> events;  // (age seconds, item)
  events.reserve(static_cast<std::size_t>(n_events));
  for (std::int64_t j = 0; j < n_events; ++j) {
    const std::uint64_t item = rng.below(static_cast<std::uint64_t>(cfg.n_items));
    const double age = std::exp(rng.uniform(log_lo, log_hi));
    events.emplace_back(age, item);
  }
  std::sort(events.begin(), events.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  double seq_effect = 0.0;
  const std::uint64_t target_cat = item_category(s.item_id);
  for (const auto& [age, item] : events) {
    BehaviorEvent ev;
    ev.item_id = item;
    ev.ts = s.decision_ts - static_cast<std::int64_t>(age);
    ev.geohash = geo_cell_name(static_cast<std::int64_t>(
        rng.below(static_cast<std::uint64_t>(cfg.n_geo))));
    s.behavior.push_back(std::move(ev));
    if (item_category(item) == target_cat)
      seq_effect += std::exp2(-age / cfg.seq_half_life_s);
  }

  out.logit = cfg.b0 + weight_at(cfg.w_week, static_cast<std::size_t>(s.context.week)) +
              weight_at(cfg.w_hour, static_cast<std::size_t>(s.context.hour)) +
              weight_at(cfg.w_geo, static_cast<std::size_t>(geo)) +
              weight_at(cfg.w_city, static_cast<std::size_t>(s.context.city_id)) +
              weight_at(cfg.w_aoi, static_cast<std::size_t>(s.context.aoi_id)) +
              interaction_logit(cfg, s, geo) +
              affinity(cfg, s.user_id, s.item_id) + cfg.seq_scale * seq_effect;
  s.label = rng.uniform() < sigmoid_stable(out.logit) ? 1 : 0;
  return out;
}

double context_logit(const GenConfig& cfg, const Sample& s, std::uint64_t geo) {
  return weight_at(cfg.w_week, static_cast<std::size_t>(s.context.week)) +
         weight_at(cfg.w_hour, static_cast<std::size_t>(s.context.hour)) +
         weight_at(cfg.w_geo, static_cast<std::size_t>(geo)) +
         weight_at(cfg.w_city, static_cast<std::size_t>(s.context.city_id)) +
         weight_at(cfg.w_aoi, static_cast<std::size_t>(s.context.aoi_id)) +
         interaction_logit(cfg, s, geo);
}

}  // namespace

void validate_gen_config(const GenConfig& cfg) {
  const std::vector<std::string> problems = gen_config_problems(cfg);
  if (!problems.empty()) fail("gen config: " + join(problems, "; "));
}

std::vector<double> ramp_pattern(std::int64_t size) {
  if (size < 1) fail("ramp_pattern: size must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(size), 0.0);
  if (size == 1) return w;
  // Symmetric uniform grid with zero mean and exactly unit variance;
  // size 7 comes out as {-1.5, -1, -0.5, 0, 0.5, 1, 1.5}.
  const double half = std::sqrt(3.0 * static_cast<double>(size - 1) /
                                static_cast<double>(size + 1));
  for (std::int64_t i = 0; i < size; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(size - 1);
    w[static_cast<std::size_t>(i)] = -half + 2.0 * half * t;
  }
  return w;
}

void plant_patterned_effects(GenConfig& cfg, double week_scale, double hour_scale,
                             double geo_scale, double city_scale,
                             double aoi_scale) {
  const auto scaled = [](std::vector<double> w, double scale) {
    for (double& v : w) v *= scale;
    return w;
  };
  cfg.w_week = scaled(ramp_pattern(7), week_scale);
  cfg.w_hour.assign(24, 0.0);
  for (int h = 0; h < 24; ++h)
    cfg.w_hour[static_cast<std::size_t>(h)] =
        hour_scale * std::sqrt(2.0) * std::sin(2.0 * std::numbers::pi * h / 24.0);
  cfg.w_geo = scaled(ramp_pattern(cfg.n_geo), geo_scale);
  cfg.w_city = scaled(ramp_pattern(cfg.n_city), city_scale);
  cfg.w_aoi = scaled(ramp_pattern(cfg.n_aoi), aoi_scale);
}

void plant_random_effects(GenConfig& cfg, double week_scale, double hour_scale,
                          double geo_scale, double city_scale, double aoi_scale) {
  const auto draw = [&cfg](std::uint64_t tag, std::int64_t size, double scale) {
    Rng rng = Rng::substream(cfg.seed, tag);
    std::vector<double> w(static_cast<std::size_t>(size));
    for (double& v : w) v = scale * rng.normal();
    return w;
  };
  cfg.w_week = draw(kWeekWTag, 7, week_scale);
  cfg.w_hour = draw(kHourWTag, 24, hour_scale);
  cfg.w_geo = draw(kGeoWTag, cfg.n_geo, geo_scale);
  cfg.w_city = draw(kCityWTag, cfg.n_city, city_scale);
  cfg.w_aoi = draw(kAoiWTag, cfg.n_aoi, aoi_scale);
}

std::string geo_cell_name(std::int64_t cell) {
  if (cell < 0 || cell > 33554431) fail("geo_cell_name: cell outside [0, 32^5)");
  std::string name(5, '0');
  std::uint64_t v = static_cast<std::uint64_t>(cell);
  for (int i = 4; i >= 0; --i) {
    name[static_cast<std::size_t>(i)] = kCellAlphabet[v & 31];
    v >>= 5;
  }
  return name;
}

Sample sample_impression(const GenConfig& cfg, std::uint64_t index,
                         double* logit_out) {
  validate_gen_config(cfg);
  DrawnImpression d = draw_impression(cfg, kImpressionTag, index);
  if (logit_out) *logit_out = d.logit;
  return std::move(d.sample);
}

Dataset generate(const GenConfig& cfg) {
  validate_gen_config(cfg);
  Dataset data;
  data.reserve(static_cast<std::size_t>(cfg.n_impressions));
  for (std::int64_t i = 0; i < cfg.n_impressions; ++i)
    data.push_back(
        draw_impression(cfg, kImpressionTag, static_cast<std::uint64_t>(i)).sample);
  return data;
}

BayesAuc bayes_auc(const GenConfig& cfg, std::int64_t n_mc) {
  return bayes_auc_part(cfg, n_mc, LogitPart::kFull);
}

BayesAuc bayes_auc_part(const GenConfig& cfg, std::int64_t n_mc, LogitPart part) {
  validate_gen_config(cfg);
  if (n_mc < 100000) fail("bayes_auc: n_mc must be >= 100000");

  std::vector<double> scores(static_cast<std::size_t>(n_mc));
  std::vector<int> labels(static_cast<std::size_t>(n_mc));
  for (std::int64_t i = 0; i < n_mc; ++i) {
    DrawnImpression d = draw_impression(cfg, kMcTag, static_cast<std::uint64_t>(i));
    double score = d.logit;
    if (part != LogitPart::kFull) {
      // Recover the geo index from the cell name's planted index range.
      std::uint64_t geo = 0;
      for (char c : d.sample.context.geohash) {
        geo = (geo << 5) +
              static_cast<std::uint64_t>(
                  std::string_view(kCellAlphabet).find(c));
      }
      const double ctx = context_logit(cfg, d.sample, geo);
      score = part == LogitPart::kContextOnly ? ctx : d.logit - ctx;
    }
    scores[static_cast<std::size_t>(i)] = score;
    labels[static_cast<std::size_t>(i)] = d.sample.label;
  }

  const auto overall = auc(scores, labels);
  if (!overall)
    throw std::runtime_error("bayes_auc: sampled labels are single-class");

  // Batch-means standard error over 10 contiguous batches.
  constexpr int kBatches = 10;
  const std::int64_t per = n_mc / kBatches;
  std::vector<double> batch_aucs;
  for (int b = 0; b < kBatches; ++b) {
    const auto lo = static_cast<std::size_t>(b * per);
    const auto hi = static_cast<std::size_t>(b == kBatches - 1 ? n_mc : (b + 1) * per);
    const std::vector<double> s(scores.begin() + static_cast<std::ptrdiff_t>(lo),
                                scores.begin() + static_cast<std::ptrdiff_t>(hi));
    const std::vector<int> y(labels.begin() + static_cast<std::ptrdiff_t>(lo),
                             labels.begin() + static_cast<std::ptrdiff_t>(hi));
    const auto a = auc(s, y);
    if (a) batch_aucs.push_back(*a);
  }
  double se = 0.0;
  if (batch_aucs.size() > 1) {
    double mean = 0.0;
    for (double a : batch_aucs) mean += a;
    mean /= static_cast<double>(batch_aucs.size());
    double var = 0.0;
    for (double a : batch_aucs) var += (a - mean) * (a - mean);
    var /= static_cast<double>(batch_aucs.size() - 1);
    se = std::sqrt(var / static_cast<double>(batch_aucs.size()));
  }
  return {*overall, se, n_mc};
}

nlohmann::ordered_json make_manifest(const GenConfig& cfg, const Dataset& data,
                                     const BayesAuc& bayes) {
  std::size_t clicks = 0;
  for (const Sample& s : data) clicks += static_cast<std::size_t>(s.label);
  nlohmann::ordered_json j;
  j["format"] = "strec-dataset-manifest";
  j["version"] = 1;
  j["config"] = gen_config_to_json(cfg);
  j["n_impressions"] = data.size();
  j["empirical_ctr"] =
      data.empty() ? 0.0 : static_cast<double>(clicks) / static_cast<double>(data.size());
  j["bayes_auc"] = {{"value", bayes.value}, {"se", bayes.se}, {"n_mc", bayes.n_mc}};
  return j;
}

void generate_files(const GenConfig& cfg, const std::filesystem::path& dataset_path,
                    const std::filesystem::path& manifest_path, std::int64_t n_mc) {
  const Dataset data = generate(cfg);
  const BayesAuc bayes = bayes_auc(cfg, n_mc);
  save_dataset(data, dataset_path.string());
  std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) fail("generate_files: cannot write " + manifest_path.string());
  out << make_manifest(cfg, data, bayes).dump(2) << "\n";
  if (!out) fail("generate_files: write failed for " + manifest_path.string());
}

nlohmann::ordered_json gen_config_to_json(const GenConfig& cfg) {
  nlohmann::ordered_json j;
  j["n_users"] = cfg.n_users;
  j["n_items"] = cfg.n_items;
  j["n_impressions"] = cfg.n_impressions;
  j["n_geo"] = cfg.n_geo;
  j["n_city"] = cfg.n_city;
  j["n_aoi"] = cfg.n_aoi;
  j["seed"] = cfg.seed;
  j["b0"] = cfg.b0;
  j["w_week"] = cfg.w_week;
  j["w_hour"] = cfg.w_hour;
  j["w_geo"] = cfg.w_geo;
  j["w_city"] = cfg.w_city;
  j["w_aoi"] = cfg.w_aoi;
  nlohmann::ordered_json inter = nlohmann::ordered_json::array();
  for (const PlantedInteraction& it : cfg.interactions) {
    nlohmann::ordered_json o;
    o["slot_a"] = kPlantedSlotNames[static_cast<std::size_t>(it.slot_a)];
    o["slot_b"] = kPlantedSlotNames[static_cast<std::size_t>(it.slot_b)];
    o["scale"] = it.scale;
    inter.push_back(std::move(o));
  }
  j["interactions"] = inter;
  j["affinity_rank"] = cfg.affinity_rank;
  j["affinity_scale"] = cfg.affinity_scale;
  j["seq_scale"] = cfg.seq_scale;
  j["seq_half_life_s"] = cfg.seq_half_life_s;
  j["min_events"] = cfg.min_events;
  j["max_events"] = cfg.max_events;
  j["min_gap_s"] = cfg.min_gap_s;
  j["max_gap_s"] = cfg.max_gap_s;
  return j;
}

GenConfig gen_config_from_json(const nlohmann::json& j,
                               std::vector<std::string>* errors) {
  GenConfig cfg;
  std::vector<std::string> local;
  std::vector<std::string>& errs = errors ? *errors : local;

  if (!j.is_object()) {
    errs.push_back("gen config must be a JSON object");
  } else {
    static const std::vector<std::string> known = {
        "n_users",        "n_items",        "n_impressions", "n_geo",
        "n_city",         "n_aoi",          "seed",          "b0",
        "w_week",         "w_hour",         "w_geo",         "w_city",
        "w_aoi",          "interactions",   "affinity_rank",  "affinity_scale",
        "seq_scale",      "seq_half_life_s", "min_events",    "max_events",
        "min_gap_s",      "max_gap_s"};
    for (const auto& [key, value] : j.items()) {
      (void)value;
      bool ok = false;
      for (const std::string& k : known) ok = ok || k == key;
      if (!ok) errs.push_back("unknown gen config field '" + key + "'");
    }

    auto get_int = [&](const char* key, std::int64_t fallback) -> std::int64_t {
      if (!j.contains(key)) return fallback;
      const nlohmann::json& v = j.at(key);
      if (!v.is_number_integer() && !v.is_number_unsigned()) {
        errs.push_back(std::string(key) + " must be an integer");
        return fallback;
      }
      return v.get<std::int64_t>();
    };
    auto get_double = [&](const char* key, double fallback) -> double {
      if (!j.contains(key)) return fallback;
      const nlohmann::json& v = j.at(key);
      if (!v.is_number()) {
        errs.push_back(std::string(key) + " must be a number");
        return fallback;
      }
      return v.get<double>();
    };
    auto get_weights = [&](const char* key, std::vector<double>& target) {
      if (!j.contains(key)) return;
      const nlohmann::json& a = j.at(key);
      if (!a.is_array()) {
        errs.push_back(std::string(key) + " must be an array of numbers");
        return;
      }
      std::vector<double> w;
      for (const nlohmann::json& v : a) {
        if (!v.is_number()) {
          errs.push_back(std::string(key) + " must be an array of numbers");
          return;
        }
        w.push_back(v.get<double>());
      }
      target = std::move(w);
    };

    cfg.n_users = get_int("n_users", cfg.n_users);
    cfg.n_items = get_int("n_items", cfg.n_items);
    cfg.n_impressions = get_int("n_impressions", cfg.n_impressions);
    cfg.n_geo = get_int("n_geo", cfg.n_geo);
    cfg.n_city = get_int("n_city", cfg.n_city);
    cfg.n_aoi = get_int("n_aoi", cfg.n_aoi);
    cfg.seed = static_cast<std::uint64_t>(
        get_int("seed", static_cast<std::int64_t>(cfg.seed)));
    cfg.b0 = get_double("b0", cfg.b0);
    get_weights("w_week", cfg.w_week);
    get_weights("w_hour", cfg.w_hour);
    get_weights("w_geo", cfg.w_geo);
    get_weights("w_city", cfg.w_city);
    get_weights("w_aoi", cfg.w_aoi);

    if (j.contains("interactions")) {
      const nlohmann::json& arr = j.at("interactions");
      if (!arr.is_array()) {
        errs.push_back("interactions must be an array of objects");
      } else {
        auto slot_from = [&](const nlohmann::json& o, const char* key,
                             const std::string& where, PlantedSlot fallback) {
          if (!o.contains(key) || !o.at(key).is_string()) {
            errs.push_back(where + "." + key + " must be one of week|hour|geo|city|aoi");
            return fallback;
          }
          const std::string name = o.at(key).get<std::string>();
          for (std::size_t s = 0; s < kPlantedSlotNames.size(); ++s)
            if (name == kPlantedSlotNames[s]) return static_cast<PlantedSlot>(s);
          errs.push_back(where + "." + key + " must be one of week|hour|geo|city|aoi, got '" +
                         name + "'");
          return fallback;
        };
        for (std::size_t i = 0; i < arr.size(); ++i) {
          const nlohmann::json& o = arr[i];
          const std::string where = "interactions[" + std::to_string(i) + "]";
          PlantedInteraction it;
          if (!o.is_object()) {
            errs.push_back(where + " must be an object");
            continue;
          }
          for (const auto& [key, value] : o.items()) {
            (void)value;
            if (key != "slot_a" && key != "slot_b" && key != "scale")
              errs.push_back("unknown field '" + where + "." + key + "'");
          }
          it.slot_a = slot_from(o, "slot_a", where, it.slot_a);
          it.slot_b = slot_from(o, "slot_b", where, it.slot_b);
          if (!o.contains("scale") || !o.at("scale").is_number())
            errs.push_back(where + ".scale must be a number");
          else
            it.scale = o.at("scale").get<double>();
          cfg.interactions.push_back(it);
        }
      }
    }
    cfg.affinity_rank = static_cast<int>(get_int("affinity_rank", cfg.affinity_rank));
    cfg.affinity_scale = get_double("affinity_scale", cfg.affinity_scale);
    cfg.seq_scale = get_double("seq_scale", cfg.seq_scale);
    cfg.seq_half_life_s = get_double("seq_half_life_s", cfg.seq_half_life_s);
    cfg.min_events = get_int("min_events", cfg.min_events);
    cfg.max_events = get_int("max_events", cfg.max_events);
    cfg.min_gap_s = get_int("min_gap_s", cfg.min_gap_s);
    cfg.max_gap_s = get_int("max_gap_s", cfg.max_gap_s);
  }

  for (const std::string& p : gen_config_problems(cfg)) errs.push_back(p);
  if (!errors && !errs.empty()) fail("gen config: " + join(errs, "; "));
  return cfg;
}

GenConfig preset(const std::string& name, std::uint64_t seed) {
  GenConfig cfg;
  cfg.seed = seed;
  if (name == "acceptance_default") {
    cfg.n_users = 512;
    cfg.n_items = 256;
    cfg.n_impressions = 200000;
    cfg.n_geo = 32;
    cfg.n_city = 8;
    cfg.n_aoi = 24;
    cfg.min_events = 5;
    cfg.max_events = 30;
    cfg.affinity_scale = 0.26;
    cfg.seq_scale = 0.26;
    cfg.seq_half_life_s = 3600.0;
    plant_patterned_effects(cfg, 0.73, 0.19, 0.19, 0.19, 0.19);
    return cfg;
  }
  if (name == "noise2") {
    // Four informative slots plus two high-cardinality pure-noise slots
    // (geohash, AOI). Dense users and items and no sequence signal keep the
    // context fields as the only thing worth learning.
    cfg.n_users = 64;
    cfg.n_items = 64;
    cfg.n_impressions = 120000;
    cfg.n_geo = 512;
    cfg.n_city = 8;
    cfg.n_aoi = 512;
    cfg.min_events = 5;
    cfg.max_events = 30;
    cfg.affinity_scale = 0.0;
    cfg.seq_scale = 0.0;
    cfg.seq_half_life_s = 3600.0;
    plant_patterned_effects(cfg, 0.9, 0.9, 0.0, 0.9, 0.0);
    return cfg;
  }
  if (name == "recency") {
    cfg.n_users = 512;
    cfg.n_items = 256;
    cfg.n_impressions = 120000;
    cfg.n_geo = 32;
    cfg.n_city = 8;
    cfg.n_aoi = 24;
    cfg.min_events = 10;
    cfg.max_events = 30;
    cfg.affinity_scale = 0.2;
    cfg.seq_scale = 2.0;
    cfg.seq_half_life_s = 1800.0;
    plant_patterned_effects(cfg, 0.2, 0.2, 0.2, 0.2, 0.2);
    return cfg;
  }
  fail("unknown preset '" + name + "'; expected one of acceptance_default, noise2, recency");
}

std::vector<std::string> preset_names() {
  return {"acceptance_default", "noise2", "recency"};
}

}  // namespace strec
