#include "rgbdfuse/depth_encoding.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rgbdfuse/error.h"

namespace rgbdfuse {

void CameraIntrinsics::Validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "focal lengths must be positive");
  }
}

CameraIntrinsics CameraIntrinsics::CenteredDefault(int width, int height) {
  CameraIntrinsics k;
  k.cx = (width - 1) / 2.0;
  k.cy = (height - 1) / 2.0;
  return k;
}

DepthEncoding ParseDepthEncoding(std::string_view name) {
  if (name == "jet") return DepthEncoding::kJet;
  if (name == "gray") return DepthEncoding::kGray;
  if (name == "normals") return DepthEncoding::kNormals;
  throw Error(ErrorCode::kConfig,
              "unknown depth encoding '" + std::string(name) + "'");
}

std::string_view DepthEncodingName(DepthEncoding encoding) {
  switch (encoding) {
    case DepthEncoding::kJet: return "jet";
    case DepthEncoding::kGray: return "gray";
    case DepthEncoding::kNormals: return "normals";
  }
  return "?";
}

DepthImage NormalizeDepth(const DepthImage& depth) {
  depth.Validate();
  float lo = std::numeric_limits<float>::max();
  float hi = std::numeric_limits<float>::lowest();
  bool any = false;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (depth.missing[i]) continue;
    any = true;
    lo = std::min(lo, depth.values[i]);
    hi = std::max(hi, depth.values[i]);
  }
  if (!any) {
    throw Error(ErrorCode::kAllMissing, "no valid depth pixel to normalize");
  }
  DepthImage out = depth;
  const double range = static_cast<double>(hi) - lo;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.missing[i]) {
      out.values[i] = 0.0f;
    } else if (range == 0.0) {
      out.values[i] = 0.0f;
    } else {
      out.values[i] = RoundToByte(255.0 * (depth.values[i] - lo) / range);
    }
  }
  return out;
}

std::array<std::uint8_t, 3> JetColor(double level) {
  // Written in terms of the level v = 255 t so integer levels hit integers.
  if (level <= 127.5) {
    return {RoundToByte(255.0 - 2.0 * level), RoundToByte(2.0 * level), 0};
  }
  return {0, RoundToByte(510.0 - 2.0 * level), RoundToByte(2.0 * level - 255.0)};
}

namespace {

template <typename PixelFn>
EncodedImage ColorizeLevels(const DepthImage& normalized, PixelFn fn) {
  normalized.Validate();
  EncodedImage out(normalized.width, normalized.height);
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    if (normalized.values[i] > 255.0f) {
      throw Error(ErrorCode::kValueOutOfRange,
                  "normalized level " + std::to_string(normalized.values[i]) +
                      " exceeds 255");
    }
  }
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    if (normalized.missing[i]) continue;
    const auto rgb = fn(normalized.values[i]);
    out.values[i * 3 + 0] = rgb[0];
    out.values[i * 3 + 1] = rgb[1];
    out.values[i * 3 + 2] = rgb[2];
  }
  return out;
}

}  // namespace

EncodedImage ColorizeJet(const DepthImage& normalized) {
  return ColorizeLevels(normalized, [](float v) { return JetColor(v); });
}

EncodedImage ColorizeGray(const DepthImage& normalized) {
  return ColorizeLevels(normalized, [](float v) {
    const std::uint8_t g = RoundToByte(v);
    return std::array<std::uint8_t, 3>{g, g, g};
  });
}

std::vector<double> EstimateNormals(const DepthImage& depth,
                                    const CameraIntrinsics& k) {
  depth.Validate();
  k.Validate();
  const int w = depth.width;
  const int h = depth.height;
  if (std::all_of(depth.missing.begin(), depth.missing.end(),
                  [](std::uint8_t m) { return m != 0; })) {
    throw Error(ErrorCode::kAllMissing, "no valid depth pixel for normals");
  }

  auto point = [&](int u, int v) {
    const double z = depth.at(u, v);
    return std::array<double, 3>{(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy,
                                 z};
  };
  auto touches_hole = [&](int u, int v) {
    for (int y = std::max(0, v - 1); y <= std::min(h - 1, v + 1); ++y) {
      for (int x = std::max(0, u - 1); x <= std::min(w - 1, u + 1); ++x) {
        if (depth.is_missing(x, y)) return true;
      }
    }
    return false;
  };

  std::vector<double> normals(static_cast<std::size_t>(w) * h * 3, 0.0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (touches_hole(u, v)) continue;
      // Central differences, falling back to one-sided ones at the border.
      const auto pr = point(std::min(u + 1, w - 1), v);
      const auto pl = point(std::max(u - 1, 0), v);
      const auto pd = point(u, std::min(v + 1, h - 1));
      const auto pu = point(u, std::max(v - 1, 0));
      const std::array<double, 3> du{pr[0] - pl[0], pr[1] - pl[1],
                                     pr[2] - pl[2]};
      const std::array<double, 3> dv{pd[0] - pu[0], pd[1] - pu[1],
                                     pd[2] - pu[2]};
      std::array<double, 3> n{du[1] * dv[2] - du[2] * dv[1],
                              du[2] * dv[0] - du[0] * dv[2],
                              du[0] * dv[1] - du[1] * dv[0]};
      const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
      if (!(len > 0.0)) continue;
      const double sign = n[2] > 0.0 ? -1.0 : 1.0;
      double* dst = &normals[(static_cast<std::size_t>(v) * w + u) * 3];
      for (int c = 0; c < 3; ++c) dst[c] = sign * n[c] / len;
    }
  }
  return normals;
}

EncodedImage EncodeNormals(const DepthImage& depth, const CameraIntrinsics& k) {
  const std::vector<double> normals = EstimateNormals(depth, k);
  EncodedImage out(depth.width, depth.height);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double* n = &normals[i * 3];
    if (n[0] == 0.0 && n[1] == 0.0 && n[2] == 0.0) continue;
    for (int c = 0; c < 3; ++c) {
      out.values[i * 3 + c] = RoundToByte((n[c] + 1.0) * 127.5);
    }
  }
  return out;
}

EncodedImage EncodeDepth(const DepthImage& depth, DepthEncoding encoding,
                         const CameraIntrinsics& intrinsics) {
  switch (encoding) {
    case DepthEncoding::kJet: return ColorizeJet(NormalizeDepth(depth));
    case DepthEncoding::kGray: return ColorizeGray(NormalizeDepth(depth));
    case DepthEncoding::kNormals: return EncodeNormals(depth, intrinsics);
  }
  throw Error(ErrorCode::kConfig, "unhandled depth encoding");
}

}  // namespace rgbdfuse
