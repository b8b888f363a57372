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
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "strec/tensor.hpp"

// Impression records, spatiotemporal context fields, vocabularies and
// embedding lookup.
namespace strec {

enum class TimePeriod { kBreakfast = 0, kLunch, kAfternoonTea, kDinner, kSupper };

// Hour buckets: breakfast 05-09, lunch 10-13, afternoon_tea 14-16,
// dinner 17-20, supper 21-04.
TimePeriod time_period_of_hour(int hour);
std::string to_string(TimePeriod p);

// Hour of day / day of week (Monday = 0) from unix seconds, UTC.
int hour_of_ts(std::int64_t ts);
int week_of_ts(std::int64_t ts);

struct ContextFeatures {
  int hour = 0;               // 0-23
  int week = 0;               // 0-6, Monday = 0
  std::string geohash;        // 5-character base-32 cell
  std::uint64_t city_id = 0;
  std::uint64_t aoi_id = 0;

  TimePeriod time_period() const { return time_period_of_hour(hour); }
};

struct BehaviorEvent {
  std::uint64_t item_id = 0;
  std::int64_t ts = 0;
  std::string geohash;
};

struct Sample {
  std::uint64_t user_id = 0;
  std::uint64_t item_id = 0;  // candidate
  std::int64_t decision_ts = 0;
  int label = 0;
  ContextFeatures context;
  std::vector<BehaviorEvent> behavior;  // ascending ts, most recent last
};

// Stable hashed index in [0, vocab_size). Identical across runs and
// platforms (splitmix64 finalizer then modulo).
std::uint64_t hash_id(std::uint64_t raw_id, std::uint64_t vocab_size);

// Base-32 geohash of a lat/lon pair.
std::string geohash_encode(double lat, double lon, int precision = 5);

// The six context slots in their fixed layout order.
inline constexpr int kContextSlots = 6;
const char* context_slot_name(int slot);  // hour, time_period, week, geohash, city, aoi

struct VocabConfig {
  Index user = 2048;
  Index item = 1024;      // candidate item table
  Index seq_item = 1024;  // behavior item table; index 0 reserved for padding
  Index geohash = 256;
  Index city = 64;
  Index aoi = 256;
};

// Index of context slot `slot` for context c (hour/time_period/week are
// direct, the rest hashed).
Index context_index(const ContextFeatures& c, int slot, const VocabConfig& vocabs);

// Vocabulary extent of context slot `slot`.
Index context_vocab(int slot, const VocabConfig& vocabs);

struct EmbeddingTable {
  std::string name;
  Index vocab_size = 0;
  Index dim = 0;
  Tensor weights;  // [vocab_size, dim]
};

EmbeddingTable make_table(std::string name, Index vocab_size, Index dim);

// Rows in context-slot order; tables must arrive in that same order.
Tensor embed_context(const ContextFeatures& c, const std::vector<EmbeddingTable>& tables,
                     const VocabConfig& vocabs);

// Δt bucket table; bucket j holds Δt in [boundaries[j-1], boundaries[j]),
// saturating past the last boundary.
struct TimeDiffBucketizer {
  std::vector<std::int64_t> boundaries;  // strictly increasing

  static TimeDiffBucketizer default_table();  // 60 * 2^j seconds, j = 0..14
  int bucket_count() const { return static_cast<int>(boundaries.size()) + 1; }
  int bucket(std::int64_t delta) const;
};

// Bucket of decision_ts - event_ts; future events are invalid.
int time_diff_bucket(std::int64_t decision_ts, std::int64_t event_ts, const TimeDiffBucketizer& bucketizer);

// Per-event index encoding of a behavior sequence, padded to l_max.
// Index 0 is the padding row in both the item and the time-bucket tables;
// real entries are offset by one.
struct SequenceIndices {
  std::vector<Index> item;  // [l_max]
  std::vector<Index> time;  // [l_max]
  Tensor mask;              // [l_max], 1 for valid positions
};

SequenceIndices encode_sequence(const std::vector<BehaviorEvent>& behavior, std::int64_t decision_ts,
                                Index l_max, const VocabConfig& vocabs, const TimeDiffBucketizer& bucketizer);

// Per-event embeddings [l_max, item_dim + time_dim] plus the mask. The
// item and time tables both reserve row 0 for padding.
struct SequenceEmbedding {
  Tensor embeddings;
  Tensor mask;
};

SequenceEmbedding embed_sequence(const std::vector<BehaviorEvent>& behavior, std::int64_t decision_ts,
                                 const EmbeddingTable& item_table, const EmbeddingTable& time_table,
                                 const TimeDiffBucketizer& bucketizer, Index l_max, const VocabConfig& vocabs);

// Throws with a description of the first violated field.
void validate_sample(const Sample& s);

using Dataset = std::vector<Sample>;

// Line-delimited JSON records; diagnostics carry 1-based line numbers.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& data, const std::string& path);

}  // namespace strec
