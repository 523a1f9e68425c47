#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "turngrab/segmentation.hpp"

namespace turngrab {

/// Sample set as stored on disk: a manifest JSON, a flat little-endian float32
/// tensor [N, T, C], and a JSON-lines index with one record per sample.
struct SampleSet {
    int seq_len = 0;
    int channels = kNumChannels;
    std::uint64_t seed = 0;
    nlohmann::ordered_json config;  // echo of the producing configuration
    std::vector<Sample> samples;
};

/// Writes <manifest>, and next to it <stem>.f32 and <stem>.index.jsonl.
void write_sample_set(const SampleSet& set, const std::filesystem::path& manifest);
SampleSet read_sample_set(const std::filesystem::path& manifest);

/// Samples with a usable binary label under `mode`, plus their labels.
struct LabeledView {
    std::vector<const Sample*> samples;
    std::vector<bool> labels;
};
LabeledView labeled_view(const std::vector<Sample>& samples, MergeMode mode);

}  // namespace turngrab
