#include "hyba/idx.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include "hyba/error.hpp"

namespace hyba {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string hex(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xf];
  return s;
}

}  // namespace

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw ParseError("idx images: truncated header");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxImageMagic) throw ParseError("idx images: bad magic " + hex(magic));
  IdxImages out;
  out.count = read_be32(bytes, 4);
  out.rows = read_be32(bytes, 8);
  out.cols = read_be32(bytes, 12);
  if (out.rows == 0 || out.cols == 0) throw ParseError("idx images: zero image dimension");
  const std::size_t payload = bytes.size() - 16;
  const std::size_t per_image = out.rows * out.cols;
  if (out.count > payload / per_image || out.count * per_image != payload) {
    throw ParseError("idx images: header promises " + std::to_string(out.count) + " images of " +
                     std::to_string(per_image) + " bytes but payload has " +
                     std::to_string(payload) + " bytes");
  }
  out.pixels.assign(bytes.begin() + 16, bytes.end());
  return out;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw ParseError("idx labels: truncated header");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxLabelMagic) throw ParseError("idx labels: bad magic " + hex(magic));
  const std::size_t count = read_be32(bytes, 4);
  if (bytes.size() - 8 != count) {
    throw ParseError("idx labels: header promises " + std::to_string(count) +
                     " labels but payload has " + std::to_string(bytes.size() - 8) + " bytes");
  }
  return {bytes.begin() + 8, bytes.end()};
}

std::vector<std::uint8_t> encode_idx_images(const IdxImages& images) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.pixels.size());
  write_be32(out, kIdxImageMagic);
  write_be32(out, static_cast<std::uint32_t>(images.count));
  write_be32(out, static_cast<std::uint32_t>(images.rows));
  write_be32(out, static_cast<std::uint32_t>(images.cols));
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  write_be32(out, kIdxLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

std::vector<LabeledExample> load_idx(const std::filesystem::path& images_path,
                                     const std::filesystem::path& labels_path) {
  const IdxImages images = parse_idx_images(read_file(images_path));
  const std::vector<std::uint8_t> labels = parse_idx_labels(read_file(labels_path));
  if (images.count != labels.size()) {
    throw ParseError("idx: " + std::to_string(images.count) + " images but " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t per_image = images.rows * images.cols;
  std::vector<LabeledExample> out;
  out.reserve(images.count);
  for (std::size_t i = 0; i < images.count; ++i) {
    std::vector<double> px(per_image);
    for (std::size_t j = 0; j < per_image; ++j) px[j] = images.pixels[i * per_image + j] / 255.0;
    out.push_back({Image(std::move(px), Shape{images.rows, images.cols, 1}), labels[i]});
  }
  return out;
}

}  // namespace hyba
