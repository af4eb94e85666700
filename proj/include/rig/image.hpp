#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace rig {

using Rgb8 = std::array<std::uint8_t, 3>;

/// Packed 8-bit RGB, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, Rgb8 fill = {0, 0, 0});

  Rgb8 at(int col, int row) const;
  void set(int col, int row, Rgb8 c);
};

std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(const std::vector<std::uint8_t>& bytes);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

struct PngHeader {
  int width = 0;
  int height = 0;
};
/// Parses only the signature and IHDR chunk. Throws CorruptRecord.
PngHeader read_png_header(const std::vector<std::uint8_t>& bytes);

}  // namespace rig
