// Copyright 2026 QITS Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QITS_TIMESTAMP_FILE_HPP
#define QITS_TIMESTAMP_FILE_HPP

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "qits/detector.hpp"

namespace qits {

// Binary timestamp format, little-endian throughout:
//   header: magic "QITS", version u16, tick_picoseconds u32, channel_count u8
//   records: (tick u64, channel u8), sorted by (tick, channel)
//
// The acquisition duration is not part of the format; readers infer it as
// max tick + 1. Commands that need the exact span accept it as a flag.

inline constexpr uint16_t kTimestampFileVersion = 1;

/// Serializes the streams (one per channel id, which must be 0..n-1 and share
/// a tick unit) as a single record sequence sorted by (tick, channel).
void write_timestamp_file(std::ostream& out, std::span<const TimestampStream> streams);
void write_timestamp_file(const std::filesystem::path& path, std::span<const TimestampStream> streams);

/// Reads every channel of a timestamp file. Duration is inferred as the
/// largest tick + 1 (uniform across channels). Malformed input raises
/// DataError naming the byte offset.
std::vector<TimestampStream> read_timestamp_file(std::istream& in);
std::vector<TimestampStream> read_timestamp_file(const std::filesystem::path& path);

}  // namespace qits

#endif
