#include "rgbdfuse/synthetic.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "rgbdfuse/error.h"
#include "rgbdfuse/random.h"

namespace rgbdfuse {

namespace {

constexpr double kPi = 3.14159265358979323846;

double Profile(int id, double u, double v) {
  const double r2 = u * u + v * v;
  const double r = std::sqrt(r2);
  switch (id) {
    case 0: return -std::sqrt(std::max(0.0, 1.0 - r2));       // dome
    case 1: return 0.8 * u;                                     // tilted disc
    case 2: return -(1.0 - r);                                  // cone
    case 3: return 1.0 - r2;                                    // bowl
    case 4: return -std::sqrt(std::max(0.0, 1.0 - u * u));      // cylinder
    case 5: return -(1.0 - std::max(std::abs(u), std::abs(v))); // pyramid
  }
  return 0.0;
}

bool TextureOn(int id, double u, double v, double freq) {
  switch (id) {
    case 0: return std::sin(kPi * freq * v) > 0.0;
    case 1: return std::sin(kPi * freq * u) > 0.0;
    case 2: return std::sin(kPi * freq * u) * std::sin(kPi * freq * v) > 0.0;
    case 3: {
      const double fu = freq * u / 2.0 - std::floor(freq * u / 2.0) - 0.5;
      const double fv = freq * v / 2.0 - std::floor(freq * v / 2.0) - 0.5;
      return fu * fu + fv * fv < 0.09;
    }
    case 4: return std::sin(kPi * freq * (u + v) / std::sqrt(2.0)) > 0.0;
    case 5: return std::sin(kPi * freq * std::sqrt(u * u + v * v)) > 0.0;
  }
  return false;
}

std::array<double, 3> HsvToRgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h, 1.0) * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  std::array<double, 3> rgb{};
  switch (static_cast<int>(hp)) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  const double m = v - c;
  for (double& ch : rgb) ch = (ch + m) * 255.0;
  return rgb;
}

struct InstanceParams {
  int profile;
  int texture;
  double aspect;
  double scale;
  double ellipticity;
  double rotation;
  double base_depth;
  double relief;
  double hue;
  double freq;
};

}  // namespace

InformativenessMode ParseInformativenessMode(std::string_view name) {
  if (name == "rgb" || name == "rgb-only") return InformativenessMode::kRgbOnly;
  if (name == "depth" || name == "depth-only") {
    return InformativenessMode::kDepthOnly;
  }
  if (name == "complementary") return InformativenessMode::kComplementary;
  if (name == "aspect" || name == "aspect-only") {
    return InformativenessMode::kAspectOnly;
  }
  throw Error(ErrorCode::kConfig, "unknown informativeness mode '" +
                                      std::string(name) + "'");
}

std::string_view InformativenessModeName(InformativenessMode mode) {
  switch (mode) {
    case InformativenessMode::kRgbOnly: return "rgb-only";
    case InformativenessMode::kDepthOnly: return "depth-only";
    case InformativenessMode::kComplementary: return "complementary";
    case InformativenessMode::kAspectOnly: return "aspect-only";
  }
  return "?";
}

void SyntheticSceneConfig::Validate() const {
  if (num_classes < 2) throw Error(ErrorCode::kConfig, "need at least 2 classes");
  if (instances_per_class < 2) {
    throw Error(ErrorCode::kConfig, "need at least 2 instances per class");
  }
  if (frames_per_instance < 1) {
    throw Error(ErrorCode::kConfig, "need at least one frame per instance");
  }
  if (side < 8) throw Error(ErrorCode::kConfig, "image side must be >= 8");
  const int limit = mode == InformativenessMode::kComplementary
                        ? 2 * kNumSurfaceProfiles
                        : kNumSurfaceProfiles;
  if (num_classes > limit) {
    throw Error(ErrorCode::kConfig, "at most " + std::to_string(limit) +
                                        " classes in this mode");
  }
  if (mode == InformativenessMode::kComplementary && num_classes % 2 != 0) {
    throw Error(ErrorCode::kConfig,
                "complementary mode needs an even number of classes");
  }
}

ClassCode ClassCodeFor(const SyntheticSceneConfig& cfg, int c) {
  ClassCode code;
  switch (cfg.mode) {
    case InformativenessMode::kRgbOnly: code.texture = c; break;
    case InformativenessMode::kDepthOnly: code.profile = c; break;
    case InformativenessMode::kComplementary:
      code.profile = c / 2;
      code.texture = c % 2;
      break;
    case InformativenessMode::kAspectOnly:
      // Log-spaced from 1:2 (portrait) to 2:1 (landscape).
      code.aspect =
          std::pow(2.0, -1.0 + 2.0 * c / std::max(1, cfg.num_classes - 1));
      break;
  }
  return code;
}

Dataset GenerateSynthetic(const SyntheticSceneConfig& cfg) {
  cfg.Validate();
  Dataset ds;
  for (int c = 0; c < cfg.num_classes; ++c) {
    ds.classes.push_back("class_" + std::to_string(c));
  }
  const bool aspect_mode = cfg.mode == InformativenessMode::kAspectOnly;

  for (int c = 0; c < cfg.num_classes; ++c) {
    const ClassCode code = ClassCodeFor(cfg, c);
    for (int i = 0; i < cfg.instances_per_class; ++i) {
      const int instance_id = c * cfg.instances_per_class + i;
      Rng rng(DeriveSeed(cfg.seed, "instance-" + std::to_string(instance_id)));
      InstanceParams ip;
      ip.profile = code.profile >= 0
                       ? code.profile
                       : static_cast<int>(rng.Index(kNumSurfaceProfiles));
      ip.texture = code.texture >= 0
                       ? code.texture
                       : static_cast<int>(rng.Index(kNumTextures));
      ip.aspect = code.aspect * rng.Uniform(0.95, 1.05);
      ip.scale = aspect_mode ? rng.Uniform(0.75, 0.9) : rng.Uniform(0.55, 0.8);
      ip.ellipticity = aspect_mode ? 1.0 : rng.Uniform(0.9, 1.1);
      ip.rotation = aspect_mode ? 0.0 : rng.Uniform(-0.25, 0.25);
      ip.base_depth = rng.Uniform(800.0, 1200.0);
      ip.relief = rng.Uniform(60.0, 100.0);
      ip.hue = rng.Uniform();
      ip.freq = rng.Uniform(3.0, 4.0);

      for (int f = 0; f < cfg.frames_per_instance; ++f) {
        int w = cfg.side;
        int h = cfg.side;
        if (aspect_mode) {
          if (ip.aspect >= 1.0) {
            h = std::max(4, static_cast<int>(std::lround(cfg.side / ip.aspect)));
          } else {
            w = std::max(4, static_cast<int>(std::lround(cfg.side * ip.aspect)));
          }
        }
        const double cx = (w - 1) / 2.0 + rng.Uniform(-1.5, 1.5);
        const double cy = (h - 1) / 2.0 + rng.Uniform(-1.5, 1.5);
        const double scale = aspect_mode ? ip.scale * rng.Uniform(0.97, 1.03)
                                         : rng.Uniform(0.55, 0.8);
        double rx;
        double ry;
        if (aspect_mode) {
          rx = 0.5 * w * scale;
          ry = 0.5 * h * scale;
        } else {
          rx = 0.5 * cfg.side * scale * ip.ellipticity;
          ry = 0.5 * cfg.side * scale / ip.ellipticity;
        }
        const double angle = ip.rotation + rng.Uniform(-0.1, 0.1);
        const double ca = std::cos(angle);
        const double sa = std::sin(angle);
        const double z0 = ip.base_depth + rng.Uniform(-20.0, 20.0);
        const double bg_depth = z0 + rng.Uniform(250.0, 350.0);
        const double bg_tilt = rng.Uniform(-2.0, 2.0);
        const double bg_gray = rng.Uniform(60.0, 190.0);
        // Colour changes from frame to frame, so only the pattern is stable.
        const double hue = ip.hue + rng.Uniform();
        const auto fg = HsvToRgb(hue, 0.7, 0.9);
        const auto fg2 = HsvToRgb(hue + 0.5, 0.5, 0.35);

        Sample s;
        s.class_id = c;
        s.instance_id = instance_id;
        s.rgb = EncodedImage(w, h);
        std::vector<float> depth(static_cast<std::size_t>(w) * h);
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const double u = (ca * dx + sa * dy) / rx;
            const double v = (-sa * dx + ca * dy) / ry;
            const double r = std::sqrt(u * u + v * v);
            double z;
            std::array<double, 3> rgb;
            if (r <= 1.0) {
              z = z0 + ip.relief * Profile(ip.profile, u, v);
              rgb = TextureOn(ip.texture, u, v, ip.freq) ? fg : fg2;
              for (double& ch : rgb) ch += rng.Uniform(-8.0, 8.0);
            } else {
              z = bg_depth + bg_tilt * y;
              const double g = bg_gray + rng.Uniform(-10.0, 10.0);
              rgb = {g, g, g};
            }
            // Sensor dropout along the silhouette.
            if (r > 0.88 && r < 1.1 && rng.Bernoulli(0.15)) z = 0.0;
            depth[static_cast<std::size_t>(y) * w + x] =
                static_cast<float>(std::max(0.0, std::round(z)));
            for (int ch = 0; ch < 3; ++ch) s.rgb.at(x, y, ch) = RoundToByte(rgb[ch]);
          }
        }
        if (cfg.noisy_depth) {
          const int blobs = 1 + static_cast<int>(rng.Index(4));
          for (int b = 0; b < blobs; ++b) {
            const double bx = rng.Uniform(0, w);
            const double by = rng.Uniform(0, h);
            const double br = rng.Uniform(0.05, 0.15) * cfg.side;
            for (int y = 0; y < h; ++y) {
              for (int x = 0; x < w; ++x) {
                if ((x - bx) * (x - bx) + (y - by) * (y - by) <= br * br) {
                  depth[static_cast<std::size_t>(y) * w + x] = 0.0f;
                }
              }
            }
          }
        }
        s.depth = DepthImage::FromMillimeters(w, h, std::move(depth));
        ds.samples.push_back(std::move(s));
      }
    }
  }
  return ds;
}

}  // namespace rgbdfuse
