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

#include "qits/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qits/errors.hpp"
#include "qits/pairgen.hpp"
#include "qits/rng.hpp"

namespace qits {

namespace {

// Target number of materialized photons per time slice.
constexpr double kSliceEventBudget = 4e6;

/// Sorted holding pen for events that may still be overtaken by jittered
/// stragglers from the next slice.
class TimeSpill {
  public:
    void insert(std::vector<double>&& chunk, bool chunk_sorted) {
        size_t first_new = pending_.size();
        pending_.insert(pending_.end(), chunk.begin(), chunk.end());
        if (!chunk_sorted) {
            std::sort(pending_.begin() + first_new, pending_.end());
        }
        std::inplace_merge(pending_.begin(), pending_.begin() + first_new, pending_.end());
    }

    /// Moves every pending event earlier than `watermark` into `out`.
    void drain_below(double watermark, std::vector<double>& out) {
        size_t n = 0;
        while (n < pending_.size() && pending_[n] < watermark) {
            n++;
        }
        out.insert(out.end(), pending_.begin(), pending_.begin() + n);
        pending_.erase(pending_.begin(), pending_.begin() + n);
    }

  private:
    std::vector<double> pending_;
};

void merge_sorted(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& out) {
    out.clear();
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
}

}  // namespace

SimulatedStreams simulate_streams(const ExperimentConfig& config, double slice_hint_seconds) {
    config.validate();
    const double duration = config.duration;

    PairSource pairs(config.source);
    NoiseSource noise(config.noise, config.seed);
    RngStream channel_pairs_rng(config.seed, Substream::channel_pairs);
    RngStream channel_noise_rng(config.seed, Substream::channel_noise);
    StreamingDetector signal_detector(config.signal_detector, 0,
                                      RngStream(config.seed, Substream::detector, 0));
    StreamingDetector reference_detector(config.reference_detector, 1,
                                         RngStream(config.seed, Substream::detector, 1));

    const double p_pair = pair_survival_probability(config.channel, config.source.signal_polarization);
    const double p_noise = noise_survival_probability(config.channel, config.noise.polarized);

    double total_rate = 2.0 * config.source.pair_rate + config.noise.noise_rate;
    double slice = total_rate > 0.0 ? kSliceEventBudget / total_rate : duration;
    if (slice_hint_seconds > 0.0) {
        slice = slice_hint_seconds;
    }
    slice = std::clamp(slice, std::min(duration, 1e-3), duration);

    SimulatedStreams out;
    std::vector<PairEmission> pair_chunk;
    std::vector<RawEvent> raw_noise;
    std::vector<double> survivors;
    std::vector<double> reference_chunk;
    std::vector<double> noise_chunk;
    std::vector<double> signal_ready;
    std::vector<double> noise_ready;
    std::vector<double> merged;
    TimeSpill signal_spill;
    TimeSpill noise_spill;

    double t0 = 0.0;
    while (t0 < duration) {
        double t1 = std::min(duration, t0 + slice);

        pair_chunk.clear();
        pairs.pull_raw(t1, pair_chunk);
        out.pairs_generated += pair_chunk.size();

        // Thin in emission order so the draw-to-photon pairing does not
        // depend on the slice size, then sort the survivors.
        survivors.clear();
        reference_chunk.clear();
        for (const PairEmission& p : pair_chunk) {
            reference_chunk.push_back(p.reference_time);
            if (channel_pairs_rng.bernoulli(p_pair)) {
                survivors.push_back(p.signal_time);
            }
        }
        signal_spill.insert(std::move(survivors), /*chunk_sorted=*/false);
        survivors = {};

        noise_chunk.clear();
        raw_noise.clear();
        noise.pull(t1, raw_noise);
        out.noise_generated += raw_noise.size();
        for (const RawEvent& e : raw_noise) {
            if (channel_noise_rng.bernoulli(p_noise)) {
                noise_chunk.push_back(e.time);
            }
        }
        noise_spill.insert(std::move(noise_chunk), /*chunk_sorted=*/true);
        noise_chunk = {};

        bool last = t1 >= duration;
        double watermark = last ? std::numeric_limits<double>::infinity()
                                : std::min(t1, pairs.signal_watermark());
        signal_ready.clear();
        noise_ready.clear();
        signal_spill.drain_below(watermark, signal_ready);
        noise_spill.drain_below(watermark, noise_ready);
        merge_sorted(signal_ready, noise_ready, merged);
        signal_detector.feed_times(merged, watermark);
        reference_detector.feed_times(reference_chunk,
                                      last ? std::numeric_limits<double>::infinity()
                                           : pairs.reference_watermark());

        t0 = t1;
    }

    out.signal = signal_detector.finish(duration);
    out.reference = reference_detector.finish(duration);
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::optional<int64_t> gate_center_lag) {
    ExperimentResult result;
    result.streams = simulate_streams(config);
    result.corr = correlogram(result.streams.signal, result.streams.reference, config.correlator);

    if (result.streams.signal.ticks.empty() || result.streams.reference.ticks.empty()) {
        result.g2_valid = false;
        result.g2_estimate = G2Estimate{};
        result.g2_estimate.peak_g2 = std::numeric_limits<double>::quiet_NaN();
    } else {
        result.g2_estimate = g2(result.corr);
        result.g2_valid = true;
    }

    size_t gate_bin;
    if (gate_center_lag.has_value()) {
        int64_t lag = *gate_center_lag;
        if (lag < config.correlator.lag_min || lag >= config.correlator.lag_max) {
            throw DataError("run_experiment: gate lag outside the correlogram range");
        }
        gate_bin = size_t((lag - config.correlator.lag_min) / config.correlator.bin_width);
    } else {
        // Fall back to the correlogram peak (meaningful when there is one).
        size_t best = 0;
        for (size_t k = 1; k < result.corr.counts.size(); k++) {
            if (result.corr.counts[k] > result.corr.counts[best]) {
                best = k;
            }
        }
        gate_bin = best;
    }
    result.gate_bin = gate_bin;
    result.gate_counts = result.corr.window_counts(gate_bin, size_t(config.gate_half_width_bins));
    return result;
}

}  // namespace qits
