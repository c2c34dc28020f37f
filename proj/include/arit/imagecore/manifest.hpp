#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "arit/common/error.hpp"

namespace arit::img {

// Describes a dataset on disk: which frames exist, how they are split, and the
// generator settings that produced them.
//
// JSON schema (all fields except "splits" optional, defaults shown):
//   {
//     "root_path": ".",
//     "resolution": 64,
//     "seed": 0,
//     "splits": {"train": [..], "val": [..], "test": [..]},
//     "generator_params": {"key": "value", ...}
//   }
// An optional "frames" array, when present, must equal the union of the splits.
struct DatasetManifest {
    std::string root_path = ".";
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
    int resolution = 64;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> generator_params;

    // Splits must be disjoint (no frame id listed twice anywhere).
    void validate() const;

    // Sorted union of all split frame ids.
    std::vector<int> all_frames() const;

    const std::vector<int>& split(const std::string& name) const;
};

DatasetManifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const DatasetManifest& manifest);

} // namespace arit::img
