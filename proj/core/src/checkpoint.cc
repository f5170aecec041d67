#include "rgbdfuse/checkpoint.h"

#include <fstream>
#include <nlohmann/json.hpp>

#include "binary_io.h"
#include "rgbdfuse/error.h"

namespace rgbdfuse {

using nlohmann::json;

namespace {

json StreamJson(const StreamNet& net) {
  json layers = json::array();
  for (const auto& l : net.architecture().layers) layers.push_back(l.ToString());
  return {{"channels", net.architecture().channels},
          {"side", net.architecture().side},
          {"layers", layers},
          {"num_classes", net.num_classes()},
          {"head", net.has_head()}};
}

StreamNet StreamFromJson(const json& j) {
  StreamArchitecture arch;
  arch.channels = j.at("channels").get<int>();
  arch.side = j.at("side").get<int>();
  for (const auto& l : j.at("layers")) {
    arch.layers.push_back(LayerSpec::Parse(l.get<std::string>()));
  }
  StreamNet net(arch, j.at("num_classes").get<int>(), 0);
  if (!j.at("head").get<bool>()) net.DiscardHead();
  return net;
}

void WriteContainer(const json& arch, std::span<const Parameter* const> params,
                    const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::string text = arch.dump();
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  binio::WriteLe<std::uint32_t>(os, kCheckpointVersion);
  binio::WriteLe<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Parameter* p : params) {
    for (double v : p->value.data()) binio::WriteF32(os, static_cast<float>(v));
  }
  if (!os) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

json MetaJson(const CheckpointMeta& meta) {
  json j = json::object();
  for (const auto& [k, v] : meta) j[k] = v;
  return j;
}

}  // namespace

void SaveCheckpoint(const StreamNet& net, const std::filesystem::path& path,
                    const CheckpointMeta& meta) {
  json arch = StreamJson(net);
  arch["type"] = "stream";
  arch["meta"] = MetaJson(meta);
  WriteContainer(arch, net.params(), path);
}

void SaveCheckpoint(const FusionNet& net, const std::filesystem::path& path,
                    const CheckpointMeta& meta) {
  const json arch = {{"type", "fusion"},
                     {"rgb", StreamJson(net.rgb())},
                     {"depth", StreamJson(net.depth())},
                     {"fusion_widths", net.architecture().fusion_widths},
                     {"num_classes", net.architecture().num_classes},
                     {"meta", MetaJson(meta)}};
  WriteContainer(arch, net.params(), path);
}

LoadedCheckpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  if (!is.read(magic, sizeof(magic)) ||
      !std::equal(magic, magic + sizeof(magic), kCheckpointMagic)) {
    throw Error(ErrorCode::kFormat, path.string() + " is not a checkpoint");
  }
  const auto version = binio::ReadLe<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kFormat,
                "unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = binio::ReadLe<std::uint32_t>(is);
  std::string text(len, '\0');
  if (!is.read(text.data(), len)) {
    throw Error(ErrorCode::kFormat, "truncated checkpoint header");
  }

  try {
    const json arch = json::parse(text);
    LoadedCheckpoint out{StreamNet{}, {}};
    const json meta = arch.value("meta", json::object());
    for (const auto& [k, v] : meta.items()) {
      out.meta[k] = v.get<std::string>();
    }
    const std::string type = arch.at("type").get<std::string>();
    if (type == "stream") {
      out.net = StreamFromJson(arch);
    } else if (type == "fusion") {
      FusionArchitecture fa;
      fa.fusion_widths = arch.at("fusion_widths").get<std::vector<int>>();
      fa.num_classes = arch.at("num_classes").get<int>();
      out.net = FusionNet(StreamFromJson(arch.at("rgb")),
                          StreamFromJson(arch.at("depth")), fa, 0);
    } else {
      throw Error(ErrorCode::kFormat, "unknown checkpoint type " + type);
    }
    auto params = std::visit([](auto& net) { return net.params(); }, out.net);
    for (Parameter* p : params) {
      for (double& v : p->value.data()) v = binio::ReadF32(is);
    }
    if (is.peek() != std::ifstream::traits_type::eof()) {
      throw Error(ErrorCode::kFormat, "trailing bytes in checkpoint");
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat,
                "bad checkpoint architecture: " + std::string(e.what()));
  }
}

}  // namespace rgbdfuse
