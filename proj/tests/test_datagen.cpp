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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "strec/datagen.hpp"
#include "strec/metrics.hpp"

using namespace strec;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {}
  ~TempFile() { std::filesystem::remove(path); }
};

GenConfig zero_config(std::int64_t n) {
  GenConfig cfg;
  cfg.n_impressions = n;
  cfg.seed = 100;
  cfg.min_events = 0;
  cfg.max_events = 10;
  return cfg;
}

double empirical_ctr(const Dataset& data) {
  std::size_t clicks = 0;
  for (const Sample& s : data) clicks += static_cast<std::size_t>(s.label);
  return static_cast<double>(clicks) / static_cast<double>(data.size());
}

// Max - min of per-value empirical CTR for one context feature.
template <typename ValueFn>
double ctr_spread(const Dataset& data, int n_values, ValueFn value_of) {
  std::vector<double> clicks(static_cast<std::size_t>(n_values), 0.0);
  std::vector<double> counts(static_cast<std::size_t>(n_values), 0.0);
  for (const Sample& s : data) {
    const auto v = static_cast<std::size_t>(value_of(s));
    clicks[v] += s.label;
    counts[v] += 1.0;
  }
  double lo = 1.0, hi = 0.0;
  for (std::size_t v = 0; v < clicks.size(); ++v) {
    if (counts[v] == 0.0) continue;
    const double ctr = clicks[v] / counts[v];
    lo = std::min(lo, ctr);
    hi = std::max(hi, ctr);
  }
  return hi - lo;
}

}  // namespace

TEST_CASE("all-zero effects give CTR 0.5 within three standard errors") {
  const GenConfig cfg = zero_config(20000);
  const Dataset data = generate(cfg);
  REQUIRE(data.size() == 20000);
  const double se = 0.5 / std::sqrt(20000.0);
  CHECK(std::abs(empirical_ctr(data) - 0.5) < 3.0 * se);
}

TEST_CASE("samples validate and events stay within the configured shape") {
  GenConfig cfg = zero_config(300);
  cfg.min_events = 2;
  cfg.max_events = 6;
  const Dataset data = generate(cfg);
  for (const Sample& s : data) {
    validate_sample(s);
    CHECK(s.behavior.size() >= 2);
    CHECK(s.behavior.size() <= 6);
    CHECK(s.user_id < 512);
    CHECK(s.item_id < 256);
    for (const BehaviorEvent& ev : s.behavior) {
      CHECK(ev.ts <= s.decision_ts);
      CHECK(s.decision_ts - ev.ts >= cfg.min_gap_s);
    }
  }
}

TEST_CASE("generation is byte-identical for a fixed seed") {
  GenConfig cfg = zero_config(500);
  plant_patterned_effects(cfg, 1.0, 0.3, 0.3, 0.3, 0.3);
  cfg.affinity_scale = 0.4;
  cfg.seq_scale = 0.4;

  TempFile d1("strec_gen_a.jsonl"), m1("strec_gen_a.manifest.json");
  TempFile d2("strec_gen_b.jsonl"), m2("strec_gen_b.manifest.json");
  generate_files(cfg, d1.path, m1.path, 100000);
  generate_files(cfg, d2.path, m2.path, 100000);
  CHECK(slurp(d1.path) == slurp(d2.path));
  CHECK(slurp(m1.path) == slurp(m2.path));
  CHECK_FALSE(slurp(d1.path).empty());

  // A different seed changes the bytes.
  cfg.seed = 101;
  TempFile d3("strec_gen_c.jsonl"), m3("strec_gen_c.manifest.json");
  generate_files(cfg, d3.path, m3.path, 100000);
  CHECK(slurp(d1.path) != slurp(d3.path));
}

TEST_CASE("each impression is its own substream") {
  GenConfig cfg = zero_config(50);
  plant_patterned_effects(cfg, 1.0, 0.5, 0.5, 0.5, 0.5);
  const Dataset data = generate(cfg);
  for (std::uint64_t i : {std::uint64_t{0}, std::uint64_t{7}, std::uint64_t{49}}) {
    const Sample one = sample_impression(cfg, i);
    const Sample& row = data[i];
    CHECK(one.user_id == row.user_id);
    CHECK(one.item_id == row.item_id);
    CHECK(one.label == row.label);
    CHECK(one.decision_ts == row.decision_ts);
    CHECK(one.context.geohash == row.context.geohash);
    CHECK(one.behavior.size() == row.behavior.size());
  }
}

TEST_CASE("dominant week weights order the per-week empirical CTR") {
  GenConfig cfg = zero_config(100000);
  plant_patterned_effects(cfg, 2.0, 0.3, 0.3, 0.3, 0.3);
  const Dataset data = generate(cfg);

  std::array<double, 7> clicks{}, counts{};
  for (const Sample& s : data) {
    clicks[static_cast<std::size_t>(s.context.week)] += s.label;
    counts[static_cast<std::size_t>(s.context.week)] += 1.0;
  }
  std::array<int, 7> by_weight{0, 1, 2, 3, 4, 5, 6};
  std::sort(by_weight.begin(), by_weight.end(), [&](int a, int b) {
    return cfg.w_week[static_cast<std::size_t>(a)] <
           cfg.w_week[static_cast<std::size_t>(b)];
  });
  double prev = -1.0;
  for (int w : by_weight) {
    const double ctr = clicks[static_cast<std::size_t>(w)] /
                       counts[static_cast<std::size_t>(w)];
    CHECK(ctr > prev);
    prev = ctr;
  }
}

TEST_CASE("increasing one feature's weight scale widens its CTR spread") {
  double previous_spread = -1.0;
  for (double scale : {0.3, 1.0, 2.5}) {
    GenConfig cfg = zero_config(60000);
    plant_random_effects(cfg, 0.0, scale, 0.0, 0.0, 0.0);
    const Dataset data = generate(cfg);
    const double spread =
        ctr_spread(data, 24, [](const Sample& s) { return s.context.hour; });
    CHECK(spread >= previous_spread);
    previous_spread = spread;
  }
}

TEST_CASE("bayes auc of an uninformative scorer is one half") {
  const GenConfig cfg = zero_config(1000);
  const BayesAuc bayes = bayes_auc(cfg, 100000);
  CHECK(std::abs(bayes.value - 0.5) <= 0.005);
  CHECK(bayes.n_mc == 100000);
}

TEST_CASE("bayes auc matches the closed-form two-point mixture") {
  // +4 logit on half the samples (hours 0-11), 0 on the rest.
  GenConfig cfg = zero_config(1000);
  cfg.w_hour.assign(24, 0.0);
  for (int h = 0; h < 12; ++h) cfg.w_hour[static_cast<std::size_t>(h)] = 4.0;

  const long double p_hi = 1.0L / (1.0L + std::exp(-4.0L));
  const long double p_lo = 0.5L;
  const long double pos_hi = p_hi / (p_hi + p_lo);   // P(z=4 | clicked)
  const long double neg_hi = (1.0L - p_hi) / (2.0L - p_hi - p_lo);
  const long double closed_form =
      pos_hi * (1.0L - neg_hi) +
      0.5L * (pos_hi * neg_hi + (1.0L - pos_hi) * (1.0L - neg_hi));

  const BayesAuc bayes = bayes_auc(cfg, 200000);
  CHECK(std::abs(bayes.value - static_cast<double>(closed_form)) < 0.01);
}

TEST_CASE("bayes auc standard error shrinks like one over sqrt(n_mc)") {
  GenConfig cfg = zero_config(1000);
  plant_patterned_effects(cfg, 1.0, 0.0, 0.0, 0.0, 0.0);
  const BayesAuc small = bayes_auc(cfg, 100000);
  const BayesAuc large = bayes_auc(cfg, 400000);
  REQUIRE(small.se > 0.0);
  REQUIRE(large.se > 0.0);
  const double ratio = small.se / large.se;  // expected 2 for 4x the samples
  CHECK(ratio > 1.0);
  CHECK(ratio < 4.0);
  CHECK(std::abs(small.value - large.value) < 6.0 * small.se);
}

TEST_CASE("bayes auc rejects underpowered requests") {
  CHECK_THROWS_AS(bayes_auc(zero_config(100), 50000), std::invalid_argument);
}

TEST_CASE("partial logits split into context and non-context shares") {
  GenConfig cfg = zero_config(1000);
  plant_patterned_effects(cfg, 1.2, 0.3, 0.3, 0.3, 0.3);
  cfg.affinity_scale = 0.3;
  cfg.seq_scale = 0.3;
  const BayesAuc full = bayes_auc_part(cfg, 100000, LogitPart::kFull);
  const BayesAuc ctx = bayes_auc_part(cfg, 100000, LogitPart::kContextOnly);
  const BayesAuc rest = bayes_auc_part(cfg, 100000, LogitPart::kNonContext);
  CHECK(full.value > ctx.value);
  CHECK(ctx.value > rest.value);
  CHECK(rest.value > 0.5);
}

TEST_CASE("manifest records config, CTR, and the bayes oracle") {
  GenConfig cfg = zero_config(400);
  plant_patterned_effects(cfg, 1.0, 0.2, 0.2, 0.2, 0.2);
  const Dataset data = generate(cfg);
  const BayesAuc bayes{0.71, 0.002, 100000};
  const auto manifest = make_manifest(cfg, data, bayes);
  CHECK(manifest.at("format") == "strec-dataset-manifest");
  CHECK(manifest.at("n_impressions") == 400);
  CHECK(manifest.at("bayes_auc").at("value") == 0.71);
  CHECK(manifest.at("config").at("w_week").size() == 7);
  const double ctr = manifest.at("empirical_ctr").get<double>();
  CHECK(ctr == empirical_ctr(data));

  const GenConfig back = gen_config_from_json(manifest.at("config"));
  CHECK(back.w_week == cfg.w_week);
  CHECK(back.seed == cfg.seed);
  CHECK(back.n_impressions == cfg.n_impressions);
}

TEST_CASE("gen config JSON collects every problem in one pass") {
  nlohmann::json j = gen_config_to_json(zero_config(100));
  j["mystery"] = true;
  j["n_users"] = 0;
  j["w_week"] = {1.0, 2.0};  // wrong length
  j["seq_half_life_s"] = -5.0;
  std::vector<std::string> errors;
  gen_config_from_json(j, &errors);
  std::string joined;
  for (const auto& e : errors) joined += e + "; ";
  CHECK(joined.find("mystery") != std::string::npos);
  CHECK(joined.find("n_users") != std::string::npos);
  CHECK(joined.find("w_week") != std::string::npos);
  CHECK(joined.find("seq_half_life_s") != std::string::npos);
  CHECK_THROWS_AS(gen_config_from_json(j), std::invalid_argument);
}

TEST_CASE("planted interactions multiply unit ramps into the true logit") {
  GenConfig cfg = zero_config(2000);
  cfg.max_events = 0;
  cfg.interactions.push_back({PlantedSlot::kHour, PlantedSlot::kWeek, 2.5});
  const std::vector<double> week_ramp = ramp_pattern(7);
  const std::vector<double> hour_ramp = ramp_pattern(24);
  for (std::uint64_t i = 0; i < 200; ++i) {
    double logit = 0.0;
    const Sample s = sample_impression(cfg, i, &logit);
    const double want = 2.5 * hour_ramp[static_cast<std::size_t>(s.context.hour)] *
                        week_ramp[static_cast<std::size_t>(s.context.week)];
    CHECK(logit == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("interaction-only effects shape conditional CTR") {
  GenConfig cfg = zero_config(60000);
  cfg.interactions.push_back({PlantedSlot::kHour, PlantedSlot::kWeek, 2.5});
  const Dataset data = generate(cfg);
  // Pool the sign classes: the product is positive when both ramps share a
  // sign and negative when they differ, so split on (hour < 12, week < 3).
  double pos_clicks = 0, pos_n = 0, neg_clicks = 0, neg_n = 0;
  for (const Sample& s : data) {
    if (s.context.hour == 11 || s.context.hour == 12) continue;  // near-zero ramp
    if (s.context.week == 3) continue;
    const bool same_sign = (s.context.hour < 12) == (s.context.week < 3);
    if (same_sign) {
      pos_clicks += s.label;
      pos_n += 1;
    } else {
      neg_clicks += s.label;
      neg_n += 1;
    }
  }
  const double pos_ctr = pos_clicks / pos_n;
  const double neg_ctr = neg_clicks / neg_n;
  CHECK(pos_ctr > neg_ctr + 0.05);
  // Both marginals stay centered: the effect is purely conditional.
  CHECK(std::abs(pos_ctr + neg_ctr - 1.0) < 0.05);
}

TEST_CASE("interaction config survives JSON and rejects malformed entries") {
  GenConfig cfg = zero_config(500);
  cfg.interactions.push_back({PlantedSlot::kCity, PlantedSlot::kWeek, -1.25});
  cfg.interactions.push_back({PlantedSlot::kHour, PlantedSlot::kAoi, 0.5});
  const GenConfig back = gen_config_from_json(gen_config_to_json(cfg));
  REQUIRE(back.interactions.size() == 2);
  CHECK(back.interactions[0] == cfg.interactions[0]);
  CHECK(back.interactions[1] == cfg.interactions[1]);

  nlohmann::json j = gen_config_to_json(cfg);
  j["interactions"] = {{{"slot_a", "hour"}, {"slot_b", "hour"}, {"scale", 1.0}},
                       {{"slot_a", "moon"}, {"slot_b", "week"}, {"scale", 1.0}},
                       {{"slot_a", "city"}, {"slot_b", "week"}, {"scale", "x"}, {"junk", 1}}};
  std::vector<std::string> errors;
  gen_config_from_json(j, &errors);
  std::string joined;
  for (const auto& e : errors) joined += e + "; ";
  CHECK(joined.find("interactions[0]: slots must differ") != std::string::npos);
  CHECK(joined.find("interactions[1].slot_a") != std::string::npos);
  CHECK(joined.find("interactions[2].scale") != std::string::npos);
  CHECK(joined.find("interactions[2].junk") != std::string::npos);
}

TEST_CASE("ramp pattern is zero-mean with unit variance") {
  for (std::int64_t n : {std::int64_t{7}, std::int64_t{8}, std::int64_t{24},
                         std::int64_t{256}}) {
    const std::vector<double> w = ramp_pattern(n);
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) /
                        static_cast<double>(n);
    double var = 0.0;
    for (double v : w) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  }
  const std::vector<double> w7 = ramp_pattern(7);
  CHECK(w7.front() == doctest::Approx(-1.5).epsilon(1e-15));
  CHECK(w7.back() == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("geo cell names are valid and distinct") {
  CHECK(geo_cell_name(0).size() == 5);
  CHECK(geo_cell_name(0) == "00000");
  CHECK(geo_cell_name(31) == "0000z");
  CHECK(geo_cell_name(32) == "00010");
  CHECK(geo_cell_name(0) != geo_cell_name(1));
  CHECK_THROWS_AS(geo_cell_name(-1), std::invalid_argument);
}

TEST_CASE("presets exist and produce valid configs") {
  for (const std::string& name : preset_names()) {
    CAPTURE(name);
    const GenConfig cfg = preset(name, 11);
    validate_gen_config(cfg);
    CHECK(cfg.seed == 11);
    CHECK(cfg.n_impressions > 0);
  }
  CHECK_THROWS_AS(preset("bogus", 1), std::invalid_argument);

  // The default acceptance preset plants week as the strongest effect.
  const GenConfig acc = preset("acceptance_default", 11);
  const auto rms = [](const std::vector<double>& w) {
    double s = 0.0;
    for (double v : w) s += v * v;
    return std::sqrt(s / static_cast<double>(w.size()));
  };
  CHECK(rms(acc.w_week) > rms(acc.w_hour));
  CHECK(rms(acc.w_week) > rms(acc.w_geo));
  CHECK(rms(acc.w_week) > rms(acc.w_city));
  CHECK(rms(acc.w_week) > rms(acc.w_aoi));

  // The noise preset leaves geohash and aoi with exactly zero effect.
  const GenConfig noise = preset("noise2", 11);
  CHECK(rms(noise.w_geo) == 0.0);
  CHECK(rms(noise.w_aoi) == 0.0);
  CHECK(rms(noise.w_hour) > 0.0);
}

TEST_CASE("invalid gen configs are rejected") {
  GenConfig cfg = zero_config(100);
  cfg.max_events = -1;
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
  GenConfig bad_gap = zero_config(100);
  bad_gap.min_gap_s = 100;
  bad_gap.max_gap_s = 10;
  CHECK_THROWS_AS(generate(bad_gap), std::invalid_argument);
}
