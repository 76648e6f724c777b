#pragma once

// Reshaping encoded SNP sequences into square images or C-channel tensors,
// plus the receptive-field coverage estimates for both layouts.
//
// Fill order: the sequence is cut into C contiguous segments of S*S SNPs;
// segment c fills channel c row-major. SNPs i and i + S*S therefore share a
// spatial position in adjacent channels, so a single k x k kernel spanning
// all channels sees SNPs that were S*S apart in the sequence. The tail of the
// last segment is padded.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace resgene::tensorize {

class LayoutError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class LayoutMode { kImage2d, kTensor3d };

inline constexpr double kDefaultPadValue = -1.0;

struct SnpLayout {
  std::size_t d = 0;
  LayoutMode mode = LayoutMode::kImage2d;
  std::size_t channels = 1;
  std::size_t side = 0;
  std::size_t pad_count = 0;
  double pad_value = kDefaultPadValue;

  std::size_t cells() const { return side * side * channels; }
  bool operator==(const SnpLayout&) const = default;
};

// Smallest side S with S*S*C >= d. mode == kImage2d requires C == 1.
SnpLayout plan_layout(std::size_t d, LayoutMode mode, std::size_t channels = 1,
                      double pad_value = kDefaultPadValue);

// S x S grid, row-major.
template <typename T = double>
std::vector<T> to_image2d(std::span<const std::int8_t> seq,
                          const SnpLayout& layout);

// C x S x S array, channel-major then row-major.
template <typename T = double>
std::vector<T> to_tensor3d(std::span<const std::int8_t> seq,
                           const SnpLayout& layout);

// Either of the above, chosen by layout.mode.
template <typename T = double>
std::vector<T> tensorize(std::span<const std::int8_t> seq,
                         const SnpLayout& layout);

// Reads the first d cells back in fill order.
template <typename T>
std::vector<T> flatten(std::span<const T> grid, const SnpLayout& layout);

struct CoverageEstimate {
  std::size_t kernel = 0;
  double layers_2d = 0;
  double layers_tensor = 0;
  double ratio = 0;
};

// Layers of k x k convolutions needed to span the whole input: sqrt(d)/k for
// the square image, sqrt(d/C)/k for the tensor.
CoverageEstimate coverage(std::size_t d, std::size_t kernel,
                          std::size_t channels);

// "RGTN" dump: magic, u32 C, S, S (little endian), then C*S*S float32 LE.
void write_rgtn(std::ostream& out, std::span<const float> values,
                std::size_t channels, std::size_t side);

struct RgtnBlob {
  std::size_t channels = 0;
  std::size_t side = 0;
  std::vector<float> values;
};
RgtnBlob read_rgtn(std::istream& in);

}  // namespace resgene::tensorize
