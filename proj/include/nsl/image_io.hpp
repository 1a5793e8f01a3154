#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nsl/linops.hpp"

namespace nsl {

/// Binary P5 PGM, maxval up to 65535 (16-bit samples are big-endian).
/// Pixel values are mapped linearly to [0,1].
Image read_image_pgm(const std::filesystem::path& path);
/// Clamps to [0,1] and quantizes to 0..maxval.
void write_image_pgm(const std::filesystem::path& path, const Image& img,
                     std::uint16_t maxval = 65535);
/// Full-precision sidecar, one row per line.
void write_image_csv(const std::filesystem::path& path, const Image& img);

enum class DataKind { denoise, deconv };

/// y = u + sigma n, or y = k * u + sigma n with periodic convolution.
Image make_synthetic_data(DataKind kind, const Image& truth, double sigma, const Image& kernel,
                          std::uint64_t seed);

/// Piecewise-constant test image on [0,1]: background, a centered disc and a
/// smaller offset disc inside it.
Image phantom(std::size_t n);

/// Pixels with a 4-neighbour of different value (edges) and pixels at
/// Chebyshev distance >= margin from every edge pixel (flat interior).
struct EdgeMasks {
  std::vector<std::size_t> edge;
  std::vector<std::size_t> flat;
};
EdgeMasks edge_masks(const Image& piecewise_constant, std::size_t margin = 3);

}  // namespace nsl
