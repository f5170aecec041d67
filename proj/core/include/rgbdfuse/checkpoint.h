#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>

#include "rgbdfuse/nn.h"

namespace rgbdfuse {

inline constexpr char kCheckpointMagic[8] = {'F', 'U', 'S', 'N',
                                             'E', 'T', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Free-form string metadata stored alongside the architecture (for example
// the preprocessing a checkpoint was trained with).
using CheckpointMeta = std::map<std::string, std::string>;

// Layout: "FUSNETCK" | version u32 | JSON length u32 | architecture JSON |
// every parameter tensor in declaration order as little-endian float32.
void SaveCheckpoint(const StreamNet& net, const std::filesystem::path& path,
                    const CheckpointMeta& meta = {});
void SaveCheckpoint(const FusionNet& net, const std::filesystem::path& path,
                    const CheckpointMeta& meta = {});

struct LoadedCheckpoint {
  std::variant<StreamNet, FusionNet> net;
  CheckpointMeta meta;
};

LoadedCheckpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace rgbdfuse
