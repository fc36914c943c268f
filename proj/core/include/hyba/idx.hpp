#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hyba/image.hpp"

namespace hyba {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

/// Big-endian IDX parsers. Throw ParseError on bad magic, truncation or
/// trailing bytes.
IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_idx_images(const IdxImages& images);
std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels);

/// Pixels scaled to [0,1] by 1/255. Counts must agree across files.
std::vector<LabeledExample> load_idx(const std::filesystem::path& images_path,
                                     const std::filesystem::path& labels_path);

}  // namespace hyba
