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

#ifndef STREC_DATAGEN_HPP_
#define STREC_DATAGEN_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "strec/features.hpp"
#include "strec/models.hpp"

namespace strec {

// Ground-truth recipe for the synthetic clickstream. The click probability
// of an impression is sigmoid of
//
//   b0 + w_week[week] + w_hour[hour] + w_geo[cell] + w_city[city]
//      + w_aoi[aoi] + affinity(user, item) + seq_effect
//
// where affinity is a rank-r bilinear form over seed-derived latent vectors
// and seq_effect is a recency-weighted count of behavior events whose
// category (item id mod 16) matches the candidate's.
// Planted-table identifiers for interaction terms, in w_* declaration order.
enum class PlantedSlot { kWeek = 0, kHour = 1, kGeo = 2, kCity = 3, kAoi = 4 };

// Multiplicative effect between two categorical fields. The contribution is
// scale * ramp_a[value_a] * ramp_b[value_b] over unit-RMS ramps, independent
// of the additive w_* tables, so a field can matter only conditionally.
struct PlantedInteraction {
  PlantedSlot slot_a = PlantedSlot::kWeek;
  PlantedSlot slot_b = PlantedSlot::kHour;
  double scale = 0.0;

  bool operator==(const PlantedInteraction&) const = default;
};

struct GenConfig {
  std::int64_t n_users = 512;
  std::int64_t n_items = 256;
  std::int64_t n_impressions = 10000;
  std::int64_t n_geo = 32;
  std::int64_t n_city = 8;
  std::int64_t n_aoi = 24;
  std::uint64_t seed = 0;

  double b0 = 0.0;
  // Effect weight per category value; an empty vector means all zeros.
  std::vector<double> w_week;  // size 7
  std::vector<double> w_hour;  // size 24
  std::vector<double> w_geo;   // size n_geo
  std::vector<double> w_city;  // size n_city
  std::vector<double> w_aoi;   // size n_aoi

  std::vector<PlantedInteraction> interactions;

  int affinity_rank = 4;
  double affinity_scale = 0.0;

  double seq_scale = 0.0;
  double seq_half_life_s = 1800.0;
  std::int64_t min_events = 0;
  std::int64_t max_events = 30;
  // Behavior-event age is log-uniform over [min_gap_s, max_gap_s] seconds.
  std::int64_t min_gap_s = 60;
  std::int64_t max_gap_s = 1209600;
};

// Throws std::invalid_argument listing every violated constraint.
void validate_gen_config(const GenConfig& cfg);

nlohmann::ordered_json gen_config_to_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const nlohmann::json& j,
                               std::vector<std::string>* errors = nullptr);

// Fixed zero-mean, unit-RMS weight pattern of the given size (a symmetric
// ramp), so scaled effects are reproducible without extra randomness.
std::vector<double> ramp_pattern(std::int64_t size);

// Fills every weight table with scale * ramp_pattern(size). The hour table
// instead uses a unit-RMS sinusoid over the day so adjacent hours stay
// similar.
void plant_patterned_effects(GenConfig& cfg, double week_scale,
                             double hour_scale, double geo_scale,
                             double city_scale, double aoi_scale);

// Fills every weight table with i.i.d. normal(0, scale) draws from
// substreams of cfg.seed.
void plant_random_effects(GenConfig& cfg, double week_scale, double hour_scale,
                          double geo_scale, double city_scale,
                          double aoi_scale);

// Deterministic 5-character base-32 cell name for a geo index.
std::string geo_cell_name(std::int64_t cell);

// Category of an item for the sequence effect.
inline std::uint64_t item_category(std::uint64_t item_id) { return item_id % 16; }

// Draws impression `index` from its own (seed, index)-derived substream, so
// generation can be sharded at any granularity without changing the output.
// When logit_out is given it receives the true logit.
Sample sample_impression(const GenConfig& cfg, std::uint64_t index,
                         double* logit_out = nullptr);

Dataset generate(const GenConfig& cfg);

// Monte-Carlo AUC of the true logit as a scorer against labels resampled
// from the ground truth, with a batch-means standard error.
struct BayesAuc {
  double value = 0.0;
  double se = 0.0;
  std::int64_t n_mc = 0;
};

BayesAuc bayes_auc(const GenConfig& cfg, std::int64_t n_mc);

// Like bayes_auc but scoring with only part of the logit: context terms
// only, or everything except them. Used to size how much of the signal the
// context features carry.
enum class LogitPart { kFull, kContextOnly, kNonContext };
BayesAuc bayes_auc_part(const GenConfig& cfg, std::int64_t n_mc, LogitPart part);

nlohmann::ordered_json make_manifest(const GenConfig& cfg, const Dataset& data,
                                     const BayesAuc& bayes);

// Writes the dataset (line-delimited JSON samples) and its manifest.
void generate_files(const GenConfig& cfg, const std::filesystem::path& dataset_path,
                    const std::filesystem::path& manifest_path, std::int64_t n_mc);

// Named ground-truth presets used by the experiment suites:
//   acceptance_default  week-dominant context signal
//   noise2              hour/week/city informative, geohash/aoi pure noise
//   recency             sequence recency carries most of the signal
GenConfig preset(const std::string& name, std::uint64_t seed);
std::vector<std::string> preset_names();

}  // namespace strec

#endif  // STREC_DATAGEN_HPP_
