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

#include "qits/timestamp_file.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "qits/errors.hpp"

namespace qits {

namespace {

constexpr std::array<char, 4> kMagic{'Q', 'I', 'T', 'S'};
constexpr size_t kHeaderSize = 4 + 2 + 4 + 1;
constexpr size_t kRecordSize = 8 + 1;

void put_u16(std::ostream& out, uint16_t v) {
    char b[2] = {char(v & 0xFF), char(v >> 8)};
    out.write(b, 2);
}

void put_u32(std::ostream& out, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; i++) {
        b[i] = char((v >> (8 * i)) & 0xFF);
    }
    out.write(b, 4);
}

void put_u64(std::ostream& out, uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; i++) {
        b[i] = char((v >> (8 * i)) & 0xFF);
    }
    out.write(b, 8);
}

uint64_t get_u64(const unsigned char* b) {
    uint64_t v = 0;
    for (int i = 0; i < 8; i++) {
        v |= uint64_t(b[i]) << (8 * i);
    }
    return v;
}

[[noreturn]] void fail_at(size_t offset, const std::string& what) {
    throw DataError("timestamp file: " + what + " at byte " + std::to_string(offset));
}

}  // namespace

void write_timestamp_file(std::ostream& out, std::span<const TimestampStream> streams) {
    if (streams.empty() || streams.size() > 255) {
        throw DataError("timestamp file: channel count must be in [1, 255]");
    }
    uint32_t tick_ps = streams[0].tick_ps;
    for (size_t ch = 0; ch < streams.size(); ch++) {
        if (streams[ch].channel_id != ch) {
            throw DataError("timestamp file: streams must be ordered by channel id 0..n-1");
        }
        if (streams[ch].tick_ps != tick_ps) {
            throw DataError("timestamp file: all channels must share one tick unit");
        }
        if (!streams[ch].is_sorted()) {
            throw DataError("timestamp file: stream ticks must be sorted");
        }
    }

    out.write(kMagic.data(), kMagic.size());
    put_u16(out, kTimestampFileVersion);
    put_u32(out, tick_ps);
    out.put(char(streams.size()));

    // Merge the per-channel streams into one (tick, channel)-sorted record
    // sequence.
    std::vector<size_t> cursor(streams.size(), 0);
    for (;;) {
        size_t best = streams.size();
        for (size_t ch = 0; ch < streams.size(); ch++) {
            if (cursor[ch] >= streams[ch].ticks.size()) {
                continue;
            }
            if (best == streams.size() || streams[ch].ticks[cursor[ch]] < streams[best].ticks[cursor[best]]) {
                best = ch;
            }
        }
        if (best == streams.size()) {
            break;
        }
        put_u64(out, streams[best].ticks[cursor[best]]);
        out.put(char(best));
        cursor[best]++;
    }
    if (!out) {
        throw DataError("timestamp file: write failed");
    }
}

void write_timestamp_file(const std::filesystem::path& path, std::span<const TimestampStream> streams) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("timestamp file: cannot open " + path.string() + " for writing");
    }
    write_timestamp_file(out, streams);
}

std::vector<TimestampStream> read_timestamp_file(std::istream& in) {
    unsigned char header[kHeaderSize];
    in.read(reinterpret_cast<char*>(header), kHeaderSize);
    if (size_t(in.gcount()) != kHeaderSize) {
        fail_at(size_t(in.gcount()), "truncated header");
    }
    if (std::memcmp(header, kMagic.data(), 4) != 0) {
        fail_at(0, "bad magic");
    }
    uint16_t version = uint16_t(header[4]) | uint16_t(header[5]) << 8;
    if (version != kTimestampFileVersion) {
        fail_at(4, "unsupported version " + std::to_string(version));
    }
    uint32_t tick_ps = 0;
    for (int i = 0; i < 4; i++) {
        tick_ps |= uint32_t(header[6 + i]) << (8 * i);
    }
    if (tick_ps == 0) {
        fail_at(6, "tick_picoseconds must be > 0");
    }
    uint8_t channel_count = header[10];
    if (channel_count == 0) {
        fail_at(10, "channel count must be > 0");
    }

    std::vector<TimestampStream> streams(channel_count);
    for (size_t ch = 0; ch < channel_count; ch++) {
        streams[ch].channel_id = uint8_t(ch);
        streams[ch].tick_ps = tick_ps;
    }

    size_t offset = kHeaderSize;
    uint64_t max_tick = 0;
    bool any = false;
    unsigned char record[kRecordSize];
    for (;;) {
        in.read(reinterpret_cast<char*>(record), kRecordSize);
        size_t got = size_t(in.gcount());
        if (got == 0) {
            break;
        }
        if (got != kRecordSize) {
            fail_at(offset, "truncated record");
        }
        uint64_t tick = get_u64(record);
        uint8_t channel = record[8];
        if (channel >= channel_count) {
            fail_at(offset + 8, "channel " + std::to_string(channel) + " out of range");
        }
        auto& ticks = streams[channel].ticks;
        if (!ticks.empty() && tick < ticks.back()) {
            fail_at(offset, "records out of order on channel " + std::to_string(channel));
        }
        ticks.push_back(tick);
        max_tick = std::max(max_tick, tick);
        any = true;
        offset += kRecordSize;
    }

    uint64_t duration = any ? max_tick + 1 : 0;
    for (auto& stream : streams) {
        stream.duration_ticks = duration;
    }
    return streams;
}

std::vector<TimestampStream> read_timestamp_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("timestamp file: cannot open " + path.string());
    }
    return read_timestamp_file(in);
}

}  // namespace qits
