#pragma once

#include <array>
#include <string_view>

#include "rgbdfuse/image.h"

namespace rgbdfuse {

struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 0.0;
  double cy = 0.0;

  void Validate() const;

  // Kinect-like focal length with the principal point at the image center.
  static CameraIntrinsics CenteredDefault(int width, int height);
};

enum class DepthEncoding { kJet, kGray, kNormals };

DepthEncoding ParseDepthEncoding(std::string_view name);
std::string_view DepthEncodingName(DepthEncoding encoding);

// Rescales the valid pixels of `depth` to integer levels in [0, 255] using the
// per-image min/max of the valid pixels. Missing pixels stay 0 and stay
// flagged. A constant image maps to all zeros. Throws kAllMissing.
DepthImage NormalizeDepth(const DepthImage& depth);

// Reversed jet colormap: level 0 is red, 127.5 green, 255 blue, with every
// channel piecewise linear between those anchors. Missing pixels are black.
// Throws kValueOutOfRange for levels above 255.
EncodedImage ColorizeJet(const DepthImage& normalized);

// Replicates each level into all three channels; missing pixels are black.
EncodedImage ColorizeGray(const DepthImage& normalized);

// Per-pixel RGB triple of the jet map for a single level in [0, 255].
std::array<std::uint8_t, 3> JetColor(double level);

// Unit surface normals of raw depth (millimeters) from central differences of
// back-projected points, oriented toward the camera (n_z <= 0) and mapped from
// [-1, 1] to [0, 255]. Pixels whose 3x3 neighbourhood touches a missing pixel
// are black. Throws kAllMissing.
EncodedImage EncodeNormals(const DepthImage& depth,
                           const CameraIntrinsics& intrinsics);

// The same normals before the byte mapping; invalid pixels are (0, 0, 0).
// Stored as x,y,z triples row-major.
std::vector<double> EstimateNormals(const DepthImage& depth,
                                    const CameraIntrinsics& intrinsics);

// Normalize + colorize (jet, gray) or estimate normals, depending on encoding.
EncodedImage EncodeDepth(const DepthImage& depth, DepthEncoding encoding,
                         const CameraIntrinsics& intrinsics);

}  // namespace rgbdfuse
