#include "rgbdfuse/mask_io.h"

#include <fstream>
#include <nlohmann/json.hpp>

#include "binary_io.h"
#include "rgbdfuse/error.h"

namespace rgbdfuse {

using nlohmann::json;

std::vector<std::uint32_t> EncodeRuns(std::span<const std::uint8_t> bits) {
  std::vector<std::uint32_t> runs;
  std::uint8_t current = 1;
  std::uint32_t length = 0;
  for (std::uint8_t b : bits) {
    const std::uint8_t v = b ? 1 : 0;
    if (v != current) {
      runs.push_back(length);
      current = v;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

std::vector<std::uint8_t> DecodeRuns(std::span<const std::uint32_t> runs,
                                     std::size_t pixel_count) {
  std::vector<std::uint8_t> bits;
  bits.reserve(pixel_count);
  std::uint8_t value = 1;
  for (std::uint32_t len : runs) {
    if (bits.size() + len > pixel_count) {
      throw Error(ErrorCode::kFormat, "run lengths overflow the bitmap");
    }
    bits.insert(bits.end(), len, value);
    value ^= 1;
  }
  if (bits.size() != pixel_count) {
    throw Error(ErrorCode::kFormat, "run lengths do not cover the bitmap");
  }
  return bits;
}

std::filesystem::path SidecarPath(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p += ".json";
  return p;
}

void WriteMaskLibrary(const MaskLibrary& lib,
                      const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  os.write(kMaskMagic, sizeof(kMaskMagic));
  binio::WriteLe<std::uint32_t>(os, kMaskFormatVersion);
  binio::WriteLe<std::uint32_t>(os, static_cast<std::uint32_t>(lib.side));
  binio::WriteLe<std::uint64_t>(os, lib.masks.size());
  binio::WriteLe<std::uint64_t>(os, lib.seed);
  for (const auto& m : lib.masks) {
    const auto runs = EncodeRuns(m.bits);
    binio::WriteLe<std::uint32_t>(os, static_cast<std::uint32_t>(runs.size()));
    for (auto r : runs) binio::WriteLe<std::uint32_t>(os, r);
  }
  if (!os) throw Error(ErrorCode::kIo, "write failed: " + path.string());

  json log = json::array();
  for (const auto& rec : lib.log) {
    log.push_back({{"group_a", rec.group_a},
                   {"patch_a", rec.patch_a},
                   {"group_b", rec.group_b},
                   {"patch_b", rec.patch_b},
                   {"op", ComposeOpName(rec.op)},
                   {"invert", rec.invert}});
  }
  const json sidecar = {{"format", "RGBDMASK"},
                        {"version", kMaskFormatVersion},
                        {"side", lib.side},
                        {"k", lib.masks.size()},
                        {"seed", lib.seed},
                        {"source", MaskSourceName(lib.source)},
                        {"group_edges", lib.groups.edges},
                        {"composition_log", log}};
  std::ofstream js(SidecarPath(path));
  if (!js) throw Error(ErrorCode::kIo, "cannot open sidecar for " + path.string());
  js << sidecar.dump(1) << '\n';
}

MaskLibrary ReadMaskLibrary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  char magic[sizeof(kMaskMagic)];
  if (!is.read(magic, sizeof(magic)) ||
      !std::equal(magic, magic + sizeof(magic), kMaskMagic)) {
    throw Error(ErrorCode::kFormat, path.string() + " is not a mask library");
  }
  const auto version = binio::ReadLe<std::uint32_t>(is);
  if (version != kMaskFormatVersion) {
    throw Error(ErrorCode::kFormat,
                "unsupported mask library version " + std::to_string(version));
  }
  MaskLibrary lib;
  lib.side = static_cast<int>(binio::ReadLe<std::uint32_t>(is));
  const auto k = binio::ReadLe<std::uint64_t>(is);
  lib.seed = binio::ReadLe<std::uint64_t>(is);
  if (lib.side <= 0) throw Error(ErrorCode::kFormat, "mask side is zero");
  const std::size_t pixels = static_cast<std::size_t>(lib.side) * lib.side;
  lib.masks.reserve(k);
  std::vector<std::uint32_t> runs;
  for (std::uint64_t i = 0; i < k; ++i) {
    const auto count = binio::ReadLe<std::uint32_t>(is);
    if (count == 0 || count > pixels + 1) {
      throw Error(ErrorCode::kFormat, "corrupt run count");
    }
    runs.resize(count);
    for (auto& r : runs) r = binio::ReadLe<std::uint32_t>(is);
    lib.masks.push_back(NoiseMask{lib.side, DecodeRuns(runs, pixels)});
  }

  std::ifstream js(SidecarPath(path));
  if (!js) return lib;
  json sidecar;
  try {
    sidecar = json::parse(js);
    lib.source = sidecar.value("source", "synthetic") == "imported"
                     ? MaskSource::kImported
                     : MaskSource::kSynthetic;
    if (sidecar.contains("group_edges")) {
      lib.groups.edges = sidecar.at("group_edges")
                             .get<std::array<double, kDensityGroupCount + 1>>();
    }
    for (const auto& e : sidecar.value("composition_log", json::array())) {
      CompositionRecord rec;
      rec.group_a = e.at("group_a").get<int>();
      rec.patch_a = e.at("patch_a").get<std::size_t>();
      rec.group_b = e.at("group_b").get<int>();
      rec.patch_b = e.at("patch_b").get<std::size_t>();
      rec.op = e.at("op").get<std::string>() == "add" ? ComposeOp::kAdd
                                                       : ComposeOp::kSubtract;
      rec.invert = e.at("invert").get<bool>();
      lib.log.push_back(rec);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, "bad mask sidecar: " + std::string(e.what()));
  }
  return lib;
}

}  // namespace rgbdfuse
