#include "resgene/tensorize.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace resgene::tensorize {
namespace {

std::size_t ceil_side(std::size_t d, std::size_t channels) {
  auto s = static_cast<std::size_t>(
      std::sqrt(static_cast<double>(d) / static_cast<double>(channels)));
  while (s > 0 && (s - 1) * (s - 1) * channels >= d) --s;
  while (s * s * channels < d) ++s;
  return s;
}

void check_length(std::span<const std::int8_t> seq, const SnpLayout& layout) {
  if (seq.size() != layout.d) {
    throw LayoutError("sequence length " + std::to_string(seq.size()) +
                      " does not match layout d = " + std::to_string(layout.d));
  }
}

template <typename T>
std::vector<T> fill(std::span<const std::int8_t> seq, const SnpLayout& layout) {
  std::vector<T> out(layout.cells(), static_cast<T>(layout.pad_value));
  std::transform(seq.begin(), seq.end(), out.begin(),
                 [](std::int8_t v) { return static_cast<T>(v); });
  return out;
}

}  // namespace

SnpLayout plan_layout(std::size_t d, LayoutMode mode, std::size_t channels,
                      double pad_value) {
  if (d == 0) throw LayoutError("layout needs at least one SNP");
  if (channels == 0) throw LayoutError("channel count must be positive");
  if (mode == LayoutMode::kImage2d && channels != 1) {
    throw LayoutError("image2d layout has exactly one channel");
  }
  if (channels > d) {
    throw LayoutError("channel count " + std::to_string(channels) +
                      " exceeds SNP count " + std::to_string(d));
  }
  SnpLayout layout;
  layout.d = d;
  layout.mode = mode;
  layout.channels = channels;
  layout.side = ceil_side(d, channels);
  layout.pad_count = layout.cells() - d;
  layout.pad_value = pad_value;
  return layout;
}

// Contiguous row-major segments per channel make both layouts the same flat
// buffer; they differ only in how the consumer interprets the extents.
template <typename T>
std::vector<T> to_image2d(std::span<const std::int8_t> seq,
                          const SnpLayout& layout) {
  if (layout.mode != LayoutMode::kImage2d) {
    throw LayoutError("to_image2d needs an image2d layout");
  }
  check_length(seq, layout);
  return fill<T>(seq, layout);
}

template <typename T>
std::vector<T> to_tensor3d(std::span<const std::int8_t> seq,
                           const SnpLayout& layout) {
  if (layout.mode != LayoutMode::kTensor3d) {
    throw LayoutError("to_tensor3d needs a tensor3d layout");
  }
  check_length(seq, layout);
  return fill<T>(seq, layout);
}

template <typename T>
std::vector<T> tensorize(std::span<const std::int8_t> seq,
                         const SnpLayout& layout) {
  return layout.mode == LayoutMode::kImage2d ? to_image2d<T>(seq, layout)
                                             : to_tensor3d<T>(seq, layout);
}

template <typename T>
std::vector<T> flatten(std::span<const T> grid, const SnpLayout& layout) {
  if (grid.size() != layout.cells()) {
    throw LayoutError("grid has " + std::to_string(grid.size()) +
                      " cells, layout expects " +
                      std::to_string(layout.cells()));
  }
  return std::vector<T>(grid.begin(), grid.begin() + layout.d);
}

CoverageEstimate coverage(std::size_t d, std::size_t kernel,
                          std::size_t channels) {
  if (d == 0 || kernel == 0 || channels == 0) {
    throw LayoutError("coverage needs d, k, C >= 1");
  }
  CoverageEstimate est;
  est.kernel = kernel;
  const double k = static_cast<double>(kernel);
  est.layers_2d = std::sqrt(static_cast<double>(d)) / k;
  est.layers_tensor =
      std::sqrt(static_cast<double>(d) / static_cast<double>(channels)) / k;
  est.ratio = est.layers_2d / est.layers_tensor;
  return est;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw LayoutError("RGTN: truncated header");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_rgtn(std::ostream& out, std::span<const float> values,
                std::size_t channels, std::size_t side) {
  if (values.size() != channels * side * side) {
    throw LayoutError("RGTN: payload size does not match C x S x S");
  }
  out.write("RGTN", 4);
  put_u32(out, static_cast<std::uint32_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(side));
  put_u32(out, static_cast<std::uint32_t>(side));
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

RgtnBlob read_rgtn(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "RGTN") {
    throw LayoutError("RGTN: bad magic");
  }
  RgtnBlob blob;
  blob.channels = get_u32(in);
  blob.side = get_u32(in);
  if (get_u32(in) != blob.side) throw LayoutError("RGTN: non-square payload");
  blob.values.resize(blob.channels * blob.side * blob.side);
  for (float& v : blob.values) v = std::bit_cast<float>(get_u32(in));
  return blob;
}

template std::vector<float> to_image2d(std::span<const std::int8_t>,
                                       const SnpLayout&);
template std::vector<double> to_image2d(std::span<const std::int8_t>,
                                        const SnpLayout&);
template std::vector<float> to_tensor3d(std::span<const std::int8_t>,
                                        const SnpLayout&);
template std::vector<double> to_tensor3d(std::span<const std::int8_t>,
                                         const SnpLayout&);
template std::vector<float> tensorize(std::span<const std::int8_t>,
                                      const SnpLayout&);
template std::vector<double> tensorize(std::span<const std::int8_t>,
                                       const SnpLayout&);
template std::vector<float> flatten(std::span<const float>, const SnpLayout&);
template std::vector<double> flatten(std::span<const double>, const SnpLayout&);

}  // namespace resgene::tensorize
