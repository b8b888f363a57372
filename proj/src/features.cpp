/*
 * Copyright 2026 The strec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "strec/features.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "strec/rng.hpp"

namespace strec {

namespace {

constexpr const char* kGeohashAlphabet = "0123456789bcdefghjkmnpqrstuvwxyz";

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

bool valid_geohash(const std::string& s) {
  if (s.size() != 5) return false;
  for (char c : s) {
    if (std::string_view(kGeohashAlphabet).find(c) == std::string_view::npos) return false;
  }
  return true;
}

void require_valid(const TimeDiffBucketizer& b) {
  if (b.boundaries.empty()) throw std::invalid_argument("time bucketizer: boundary table is empty");
  for (std::size_t i = 1; i < b.boundaries.size(); ++i) {
    if (b.boundaries[i] <= b.boundaries[i - 1]) {
      throw std::invalid_argument("time bucketizer: boundaries must be strictly increasing");
    }
  }
}

}  // namespace

TimePeriod time_period_of_hour(int hour) {
  if (hour < 0 || hour > 23) {
    throw std::invalid_argument("hour " + std::to_string(hour) + " outside 0-23");
  }
  if (hour >= 21 || hour <= 4) return TimePeriod::kSupper;
  if (hour <= 9) return TimePeriod::kBreakfast;
  if (hour <= 13) return TimePeriod::kLunch;
  if (hour <= 16) return TimePeriod::kAfternoonTea;
  return TimePeriod::kDinner;
}

std::string to_string(TimePeriod p) {
  switch (p) {
    case TimePeriod::kBreakfast: return "breakfast";
    case TimePeriod::kLunch: return "lunch";
    case TimePeriod::kAfternoonTea: return "afternoon_tea";
    case TimePeriod::kDinner: return "dinner";
    case TimePeriod::kSupper: return "supper";
  }
  return "supper";
}

int hour_of_ts(std::int64_t ts) { return static_cast<int>(floor_mod(ts, 86400) / 3600); }

// Unix day 0 was a Thursday; +3 re-anchors to Monday = 0.
int week_of_ts(std::int64_t ts) { return static_cast<int>(floor_mod(floor_div(ts, 86400) + 3, 7)); }

std::uint64_t hash_id(std::uint64_t raw_id, std::uint64_t vocab_size) {
  if (vocab_size == 0) throw std::invalid_argument("hash_id: vocab_size must be positive");
  return mix64(raw_id) % vocab_size;
}

std::string geohash_encode(double lat, double lon, int precision) {
  if (!(lat >= -90.0 && lat <= 90.0)) throw std::invalid_argument("geohash_encode: latitude outside [-90, 90]");
  if (!(lon >= -180.0 && lon <= 180.0)) throw std::invalid_argument("geohash_encode: longitude outside [-180, 180]");
  if (precision < 1 || precision > 12) throw std::invalid_argument("geohash_encode: precision outside 1-12");

  double lat_lo = -90.0, lat_hi = 90.0;
  double lon_lo = -180.0, lon_hi = 180.0;
  std::string out;
  out.reserve(static_cast<std::size_t>(precision));
  int bits = 0, value = 0;
  bool even_bit = true;  // longitude first
  while (static_cast<int>(out.size()) < precision) {
    if (even_bit) {
      const double mid = (lon_lo + lon_hi) / 2.0;
      if (lon >= mid) {
        value = (value << 1) | 1;
        lon_lo = mid;
      } else {
        value <<= 1;
        lon_hi = mid;
      }
    } else {
      const double mid = (lat_lo + lat_hi) / 2.0;
      if (lat >= mid) {
        value = (value << 1) | 1;
        lat_lo = mid;
      } else {
        value <<= 1;
        lat_hi = mid;
      }
    }
    even_bit = !even_bit;
    if (++bits == 5) {
      out.push_back(kGeohashAlphabet[value]);
      bits = 0;
      value = 0;
    }
  }
  return out;
}

const char* context_slot_name(int slot) {
  static constexpr const char* kNames[kContextSlots] = {"hour", "time_period", "week",
                                                        "geohash", "city", "aoi"};
  if (slot < 0 || slot >= kContextSlots) throw std::invalid_argument("context slot outside 0-5");
  return kNames[slot];
}

Index context_index(const ContextFeatures& c, int slot, const VocabConfig& vocabs) {
  switch (slot) {
    case 0:
      if (c.hour < 0 || c.hour > 23) throw std::invalid_argument("hour outside 0-23");
      return c.hour;
    case 1:
      return static_cast<Index>(c.time_period());
    case 2:
      if (c.week < 0 || c.week > 6) throw std::invalid_argument("week outside 0-6");
      return c.week;
    case 3:
      return static_cast<Index>(hash_id(fnv1a64(c.geohash), static_cast<std::uint64_t>(vocabs.geohash)));
    case 4:
      return static_cast<Index>(hash_id(c.city_id, static_cast<std::uint64_t>(vocabs.city)));
    case 5:
      return static_cast<Index>(hash_id(c.aoi_id, static_cast<std::uint64_t>(vocabs.aoi)));
    default:
      throw std::invalid_argument("context slot outside 0-5");
  }
}

Index context_vocab(int slot, const VocabConfig& vocabs) {
  switch (slot) {
    case 0: return 24;
    case 1: return 5;
    case 2: return 7;
    case 3: return vocabs.geohash;
    case 4: return vocabs.city;
    case 5: return vocabs.aoi;
    default: throw std::invalid_argument("context slot outside 0-5");
  }
}

EmbeddingTable make_table(std::string name, Index vocab_size, Index dim) {
  if (vocab_size < 1 || dim < 1) {
    throw std::invalid_argument("embedding table '" + name + "' needs positive vocab and dim");
  }
  EmbeddingTable t;
  t.name = std::move(name);
  t.vocab_size = vocab_size;
  t.dim = dim;
  t.weights = Tensor::zeros({vocab_size, dim});
  return t;
}

Tensor embed_context(const ContextFeatures& c, const std::vector<EmbeddingTable>& tables,
                     const VocabConfig& vocabs) {
  if (tables.size() != kContextSlots) {
    throw std::invalid_argument("embed_context: expected 6 tables (hour, time_period, week, geohash, city, aoi), got " +
                                std::to_string(tables.size()));
  }
  const Index dim = tables[0].dim;
  for (int slot = 0; slot < kContextSlots; ++slot) {
    const EmbeddingTable& t = tables[static_cast<std::size_t>(slot)];
    if (t.name != context_slot_name(slot)) {
      throw std::invalid_argument("embed_context: table " + std::to_string(slot) + " is '" + t.name +
                                  "', expected '" + context_slot_name(slot) + "'");
    }
    if (t.dim != dim) throw std::invalid_argument("embed_context: tables must share one dim");
    if (t.vocab_size != context_vocab(slot, vocabs)) {
      throw std::invalid_argument("embed_context: table '" + t.name + "' vocab " + std::to_string(t.vocab_size) +
                                  " does not match configured " + std::to_string(context_vocab(slot, vocabs)));
    }
  }

  Tensor out = Tensor::zeros({kContextSlots, dim});
  for (int slot = 0; slot < kContextSlots; ++slot) {
    const Index idx = context_index(c, slot, vocabs);
    out.mat(kContextSlots, dim).row(slot) =
        tables[static_cast<std::size_t>(slot)].weights.mat2d().row(idx);
  }
  return out;
}

TimeDiffBucketizer TimeDiffBucketizer::default_table() {
  TimeDiffBucketizer b;
  for (int j = 0; j <= 14; ++j) b.boundaries.push_back(60ll << j);
  return b;
}

int TimeDiffBucketizer::bucket(std::int64_t delta) const {
  if (delta < 0) throw std::invalid_argument("time bucketizer: negative time difference");
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), delta);
  return static_cast<int>(it - boundaries.begin());
}

int time_diff_bucket(std::int64_t decision_ts, std::int64_t event_ts, const TimeDiffBucketizer& bucketizer) {
  require_valid(bucketizer);
  if (event_ts > decision_ts) {
    throw std::invalid_argument("time_diff_bucket: event at " + std::to_string(event_ts) +
                                " is after the decision at " + std::to_string(decision_ts));
  }
  return bucketizer.bucket(decision_ts - event_ts);
}

SequenceIndices encode_sequence(const std::vector<BehaviorEvent>& behavior, std::int64_t decision_ts,
                                Index l_max, const VocabConfig& vocabs, const TimeDiffBucketizer& bucketizer) {
  if (l_max < 1) throw std::invalid_argument("encode_sequence: l_max must be positive");
  if (vocabs.seq_item < 2) throw std::invalid_argument("encode_sequence: sequence vocab needs a padding row");
  require_valid(bucketizer);

  SequenceIndices out;
  out.item.assign(static_cast<std::size_t>(l_max), 0);
  out.time.assign(static_cast<std::size_t>(l_max), 0);
  out.mask = Tensor::zeros({l_max});

  // Oldest events beyond l_max are dropped.
  const std::size_t start = behavior.size() > static_cast<std::size_t>(l_max)
                                ? behavior.size() - static_cast<std::size_t>(l_max)
                                : 0;
  for (std::size_t i = start; i < behavior.size(); ++i) {
    const std::size_t row = i - start;
    const BehaviorEvent& ev = behavior[i];
    out.item[row] = 1 + static_cast<Index>(hash_id(ev.item_id, static_cast<std::uint64_t>(vocabs.seq_item - 1)));
    out.time[row] = 1 + time_diff_bucket(decision_ts, ev.ts, bucketizer);
    out.mask[static_cast<Index>(row)] = 1.0;
  }
  return out;
}

SequenceEmbedding embed_sequence(const std::vector<BehaviorEvent>& behavior, std::int64_t decision_ts,
                                 const EmbeddingTable& item_table, const EmbeddingTable& time_table,
                                 const TimeDiffBucketizer& bucketizer, Index l_max, const VocabConfig& vocabs) {
  if (item_table.vocab_size != vocabs.seq_item) {
    throw std::invalid_argument("embed_sequence: item table vocab " + std::to_string(item_table.vocab_size) +
                                " does not match configured " + std::to_string(vocabs.seq_item));
  }
  if (time_table.vocab_size != bucketizer.bucket_count() + 1) {
    throw std::invalid_argument("embed_sequence: time table vocab " + std::to_string(time_table.vocab_size) +
                                " does not match bucket count + padding = " +
                                std::to_string(bucketizer.bucket_count() + 1));
  }

  const SequenceIndices idx = encode_sequence(behavior, decision_ts, l_max, vocabs, bucketizer);
  const Index d = item_table.dim + time_table.dim;
  SequenceEmbedding out;
  out.embeddings = Tensor::zeros({l_max, d});
  out.mask = idx.mask;
  for (Index row = 0; row < l_max; ++row) {
    if (idx.mask[row] == 0.0) continue;  // padding rows stay zero
    out.embeddings.mat(l_max, d).block(row, 0, 1, item_table.dim) =
        item_table.weights.mat2d().row(idx.item[static_cast<std::size_t>(row)]);
    out.embeddings.mat(l_max, d).block(row, item_table.dim, 1, time_table.dim) =
        time_table.weights.mat2d().row(idx.time[static_cast<std::size_t>(row)]);
  }
  return out;
}

void validate_sample(const Sample& s) {
  if (s.label != 0 && s.label != 1) throw std::invalid_argument("label must be 0 or 1");
  if (s.context.hour < 0 || s.context.hour > 23) throw std::invalid_argument("context.hour outside 0-23");
  if (s.context.week < 0 || s.context.week > 6) throw std::invalid_argument("context.week outside 0-6");
  if (!valid_geohash(s.context.geohash)) {
    throw std::invalid_argument("context.geohash '" + s.context.geohash + "' is not a 5-character base-32 cell");
  }
  for (std::size_t i = 0; i < s.behavior.size(); ++i) {
    const BehaviorEvent& ev = s.behavior[i];
    if (!valid_geohash(ev.geohash)) {
      throw std::invalid_argument("behavior[" + std::to_string(i) + "].geohash '" + ev.geohash +
                                  "' is not a 5-character base-32 cell");
    }
    if (ev.ts > s.decision_ts) {
      throw std::invalid_argument("behavior[" + std::to_string(i) + "] at " + std::to_string(ev.ts) +
                                  " is after the decision at " + std::to_string(s.decision_ts));
    }
    if (i > 0 && ev.ts < s.behavior[i - 1].ts) {
      throw std::invalid_argument("behavior timestamps must be sorted ascending (position " + std::to_string(i) + ")");
    }
  }
}

namespace {

using nlohmann::json;

std::uint64_t get_u64(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer() && it->get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(it->get<std::int64_t>());
  }
  throw std::invalid_argument(std::string("field '") + key + "' must be a non-negative integer");
}

std::int64_t get_i64(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  if (!it->is_number_integer() && !it->is_number_unsigned()) {
    throw std::invalid_argument(std::string("field '") + key + "' must be an integer");
  }
  return it->get<std::int64_t>();
}

std::string get_str(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  if (!it->is_string()) throw std::invalid_argument(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

Sample parse_sample(const std::string& line) {
  const json j = json::parse(line);
  if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");

  Sample s;
  s.user_id = get_u64(j, "user_id");
  s.item_id = get_u64(j, "item_id");
  s.decision_ts = get_i64(j, "decision_ts");
  s.label = static_cast<int>(get_i64(j, "label"));

  const auto ctx_it = j.find("context");
  if (ctx_it == j.end() || !ctx_it->is_object()) throw std::invalid_argument("missing object field 'context'");
  const json& ctx = *ctx_it;
  if (ctx.contains("time_period")) {
    throw std::invalid_argument("context.time_period is derived from hour and must not be stored");
  }
  s.context.hour = static_cast<int>(get_i64(ctx, "hour"));
  s.context.week = static_cast<int>(get_i64(ctx, "week"));
  s.context.geohash = get_str(ctx, "geohash");
  s.context.city_id = get_u64(ctx, "city_id");
  s.context.aoi_id = get_u64(ctx, "aoi_id");

  const auto beh_it = j.find("behavior");
  if (beh_it == j.end() || !beh_it->is_array()) throw std::invalid_argument("missing array field 'behavior'");
  for (const json& e : *beh_it) {
    if (!e.is_object()) throw std::invalid_argument("behavior entries must be objects");
    BehaviorEvent ev;
    ev.item_id = get_u64(e, "item_id");
    ev.ts = get_i64(e, "ts");
    ev.geohash = get_str(e, "geohash");
    s.behavior.push_back(std::move(ev));
  }

  validate_sample(s);
  return s;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      data.push_back(parse_sample(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset '" + path + "'");
  for (const Sample& s : data) {
    validate_sample(s);
    nlohmann::ordered_json j;
    j["user_id"] = s.user_id;
    j["item_id"] = s.item_id;
    j["decision_ts"] = s.decision_ts;
    j["label"] = s.label;
    j["context"] = {{"hour", s.context.hour},
                    {"week", s.context.week},
                    {"geohash", s.context.geohash},
                    {"city_id", s.context.city_id},
                    {"aoi_id", s.context.aoi_id}};
    j["behavior"] = nlohmann::ordered_json::array();
    for (const BehaviorEvent& ev : s.behavior) {
      j["behavior"].push_back({{"item_id", ev.item_id}, {"ts", ev.ts}, {"geohash", ev.geohash}});
    }
    out << j.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed for dataset '" + path + "'");
}

}  // namespace strec
