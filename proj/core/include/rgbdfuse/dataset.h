#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rgbdfuse/image.h"

namespace rgbdfuse {

struct ManifestEntry {
  std::string rgb;    // relative to the manifest root, or absolute
  std::string depth;
  int class_id = 0;
  int instance_id = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

// JSON-lines manifest, one {"rgb","depth","class","instance"} object per
// line. Class names come from an optional classes.txt beside the manifest.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
  std::vector<std::string> classes;

  int num_classes() const { return static_cast<int>(classes.size()); }

  // Class ids in range and each instance owned by one class; with
  // check_files, every referenced file must exist. Throws kFormat / kIo.
  void Validate(bool check_files) const;
};

DatasetManifest ReadManifest(const std::filesystem::path& path);
void WriteManifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path);

struct Sample {
  EncodedImage rgb;
  DepthImage depth;
  int class_id = 0;
  int instance_id = 0;
};

struct Dataset {
  std::vector<std::string> classes;
  std::vector<Sample> samples;

  int num_classes() const { return static_cast<int>(classes.size()); }
};

// Decodes every entry; `stride` keeps every stride-th frame of each instance.
Dataset LoadDataset(const DatasetManifest& manifest, int stride = 1);

// Writes rgb/ and depth/ PNGs plus manifest.jsonl and classes.txt under dir.
DatasetManifest SaveDataset(const Dataset& dataset,
                            const std::filesystem::path& dir);

struct InstanceKey {
  int class_id = 0;
  int instance_id = 0;
};

// One held-out (test) instance per class; everything else trains.
struct SplitSpec {
  std::vector<int> held_out;  // indexed by class id
  std::uint64_t seed = 0;

  bool IsTest(int class_id, int instance_id) const {
    return held_out.at(class_id) == instance_id;
  }

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

// Split i holds out, for every class, entry (i mod n) of a seeded
// permutation of that class's instances. Throws kTooFewInstances when a
// class has fewer than two instances.
std::vector<SplitSpec> MakeSplits(std::span<const InstanceKey> items,
                                  int num_classes, int n_splits,
                                  std::uint64_t seed);
std::vector<SplitSpec> MakeSplits(const DatasetManifest& manifest,
                                  int n_splits, std::uint64_t seed);
std::vector<SplitSpec> MakeSplits(const Dataset& dataset, int n_splits,
                                  std::uint64_t seed);

void WriteSplits(std::span<const SplitSpec> splits,
                 const std::filesystem::path& path);
std::vector<SplitSpec> ReadSplits(const std::filesystem::path& path);

}  // namespace rgbdfuse
