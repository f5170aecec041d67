#include "rgbdfuse/dataset.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>

#include "rgbdfuse/error.h"
#include "rgbdfuse/png_io.h"
#include "rgbdfuse/random.h"

namespace rgbdfuse {

using nlohmann::json;

namespace {

std::filesystem::path Resolve(const std::filesystem::path& root,
                              const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : root / path;
}

}  // namespace

void DatasetManifest::Validate(bool check_files) const {
  std::map<int, int> owner;
  for (const auto& e : entries) {
    if (e.class_id < 0 || e.class_id >= num_classes()) {
      throw Error(ErrorCode::kFormat,
                  "class id " + std::to_string(e.class_id) + " outside [0, " +
                      std::to_string(num_classes()) + ")");
    }
    const auto [it, inserted] = owner.emplace(e.instance_id, e.class_id);
    if (!inserted && it->second != e.class_id) {
      throw Error(ErrorCode::kFormat,
                  "instance " + std::to_string(e.instance_id) +
                      " appears under two classes");
    }
    if (check_files) {
      for (const auto& f : {e.rgb, e.depth}) {
        if (!std::filesystem::exists(Resolve(root, f))) {
          throw Error(ErrorCode::kIo, "missing file " + f);
        }
      }
    }
  }
}

DatasetManifest ReadManifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  DatasetManifest m;
  m.root = path.parent_path();
  std::string line;
  int max_class = -1;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ManifestEntry e;
      e.rgb = j.at("rgb").get<std::string>();
      e.depth = j.at("depth").get<std::string>();
      e.class_id = j.at("class").get<int>();
      e.instance_id = j.at("instance").get<int>();
      max_class = std::max(max_class, e.class_id);
      m.entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kFormat, path.string() + ":" +
                                          std::to_string(line_no) + ": " +
                                          ex.what());
    }
  }
  std::ifstream names(m.root / "classes.txt");
  for (std::string name; std::getline(names, name);) {
    if (!name.empty()) m.classes.push_back(name);
  }
  for (int c = static_cast<int>(m.classes.size()); c <= max_class; ++c) {
    m.classes.push_back("class_" + std::to_string(c));
  }
  m.Validate(false);
  return m;
}

void WriteManifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  for (const auto& e : manifest.entries) {
    const json j = {{"rgb", e.rgb},
                    {"depth", e.depth},
                    {"class", e.class_id},
                    {"instance", e.instance_id}};
    os << j.dump() << '\n';
  }
  std::ofstream names(path.parent_path() / "classes.txt");
  for (const auto& c : manifest.classes) names << c << '\n';
}

Dataset LoadDataset(const DatasetManifest& manifest, int stride) {
  if (stride <= 0) throw Error(ErrorCode::kConfig, "stride must be positive");
  manifest.Validate(true);
  Dataset ds;
  ds.classes = manifest.classes;
  std::map<int, int> seen;  // frames seen per instance
  for (const auto& e : manifest.entries) {
    if (seen[e.instance_id]++ % stride != 0) continue;
    Sample s;
    s.rgb = ReadRgbPng(Resolve(manifest.root, e.rgb));
    s.depth = ReadDepthPng(Resolve(manifest.root, e.depth));
    s.class_id = e.class_id;
    s.instance_id = e.instance_id;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

DatasetManifest SaveDataset(const Dataset& dataset,
                            const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "rgb");
  std::filesystem::create_directories(dir / "depth");
  DatasetManifest m;
  m.root = dir;
  m.classes = dataset.classes;
  char name[64];
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const Sample& s = dataset.samples[i];
    std::snprintf(name, sizeof(name), "%06zu.png", i);
    ManifestEntry e{std::string("rgb/") + name, std::string("depth/") + name,
                    s.class_id, s.instance_id};
    WriteRgbPng(s.rgb, dir / e.rgb);
    WriteDepthPng(s.depth, dir / e.depth);
    m.entries.push_back(std::move(e));
  }
  WriteManifest(m, dir / "manifest.jsonl");
  return m;
}

std::vector<SplitSpec> MakeSplits(std::span<const InstanceKey> items,
                                  int num_classes, int n_splits,
                                  std::uint64_t seed) {
  if (n_splits <= 0) throw Error(ErrorCode::kConfig, "need at least one split");
  std::vector<std::set<int>> instances(num_classes);
  for (const auto& it : items) {
    if (it.class_id < 0 || it.class_id >= num_classes) {
      throw Error(ErrorCode::kFormat, "class id out of range in split input");
    }
    instances[it.class_id].insert(it.instance_id);
  }
  std::vector<std::vector<int>> orders(num_classes);
  Rng rng(seed);
  for (int c = 0; c < num_classes; ++c) {
    if (instances[c].size() < 2) {
      throw Error(ErrorCode::kTooFewInstances,
                  "class " + std::to_string(c) + " has " +
                      std::to_string(instances[c].size()) +
                      " instance(s); leave-one-out needs two");
    }
    auto& order = orders[c];
    order.assign(instances[c].begin(), instances[c].end());
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.Index(i)]);
    }
  }
  std::vector<SplitSpec> splits(n_splits);
  for (int s = 0; s < n_splits; ++s) {
    splits[s].seed = seed;
    for (int c = 0; c < num_classes; ++c) {
      splits[s].held_out.push_back(orders[c][s % orders[c].size()]);
    }
  }
  return splits;
}

std::vector<SplitSpec> MakeSplits(const DatasetManifest& manifest,
                                  int n_splits, std::uint64_t seed) {
  std::vector<InstanceKey> keys;
  for (const auto& e : manifest.entries) {
    keys.push_back({e.class_id, e.instance_id});
  }
  return MakeSplits(keys, manifest.num_classes(), n_splits, seed);
}

std::vector<SplitSpec> MakeSplits(const Dataset& dataset, int n_splits,
                                  std::uint64_t seed) {
  std::vector<InstanceKey> keys;
  for (const auto& s : dataset.samples) {
    keys.push_back({s.class_id, s.instance_id});
  }
  return MakeSplits(keys, dataset.num_classes(), n_splits, seed);
}

void WriteSplits(std::span<const SplitSpec> splits,
                 const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& s : splits) {
    arr.push_back({{"held_out", s.held_out}, {"seed", s.seed}});
  }
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  os << json{{"splits", arr}}.dump(1) << '\n';
}

std::vector<SplitSpec> ReadSplits(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    const json j = json::parse(is);
    std::vector<SplitSpec> out;
    for (const auto& s : j.at("splits")) {
      SplitSpec spec;
      spec.held_out = s.at("held_out").get<std::vector<int>>();
      spec.seed = s.value("seed", std::uint64_t{0});
      out.push_back(std::move(spec));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, "bad splits file: " + std::string(e.what()));
  }
}

}  // namespace rgbdfuse
