#pragma once

// Spot quantification: rank-test segmentation of a grid cell into spot and
// background pixels, background-corrected two-channel ratios, quality flags
// and array-level calibration.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "espresso/clone_id.hpp"
#include "espresso/design.hpp"

namespace espresso::quant {

struct MannWhitneyResult {
  double u = 0;        // pairs (x, y) with x > y, ties counting one half
  double p_value = 1;  // P(U >= u) under exchangeability; xs greater than ys
  bool exact = false;
};

inline constexpr std::size_t kExactLimit = 12;

// Exact permutation p-value (ties held fixed at their midranks) when
// |xs| + |ys| <= kExactLimit, else the tie-corrected normal approximation with
// continuity correction.
MannWhitneyResult mann_whitney(std::span<const double> xs, std::span<const double> ys);

struct Pixel {
  double ch1 = 0;
  double ch2 = 0;
  bool operator==(const Pixel&) const = default;
};

struct PixelCoord {
  int row = 0;
  int col = 0;

  auto operator<=>(const PixelCoord&) const = default;
};

struct GridCell {
  std::string array_id;
  design::Position position;
  int height = 0;
  int width = 0;
  std::vector<Pixel> pixels;  // row-major, height * width
  std::vector<PixelCoord> mask;  // nominal spot disk

  const Pixel& at(PixelCoord c) const {
    return pixels[static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(c.col)];
  }
};

enum class Channel { Ch1, Ch2, Combined };

Channel parse_channel(std::string_view name);

struct Segmentation {
  std::vector<PixelCoord> spot;
  std::vector<PixelCoord> background;
  bool detected = false;
  double p_value = 1;
};

inline constexpr std::size_t kMinMaskPixels = 4;

// Spot is detected when the mask's intensities are stochastically greater than
// the rest of the cell at level alpha.
Segmentation segment_spot(const GridCell& cell, Channel channel = Channel::Combined,
                          double alpha = 0.01);

enum Flag : std::uint8_t {
  kAbsent = 1u << 0,
  kLowSignal = 1u << 1,
  kSaturated = 1u << 2,
};

std::string format_flags(std::uint8_t flags);
std::uint8_t parse_flags(std::string_view text);

struct SpotMeasurement {
  std::optional<CloneId> clone;
  std::string array_id;
  design::Position position;
  Pixel spot_mean;
  Pixel background_mean;
  std::optional<double> corrected_ratio;
  std::optional<double> calibrated_ratio;
  std::uint8_t flags = 0;

  bool flagged() const { return flags != 0; }
  bool operator==(const SpotMeasurement&) const = default;
};

inline constexpr double kDefaultSaturation = 65535.0;

SpotMeasurement measure_spot(const GridCell& cell, const Segmentation& segmentation,
                             double saturation = kDefaultSaturation);

struct Calibration {
  double factor = 1;
  int iterations = 0;
  std::vector<SpotMeasurement> measurements;
};

inline constexpr int kMaxCalibrationIterations = 50;

// Chooses c so that the median of log(c * corrected_ratio) over unflagged
// spots is zero. Flagged spots keep no calibrated ratio.
Calibration calibrate_array(std::vector<SpotMeasurement> measurements);

// ---- files -----------------------------------------------------------------

struct QuantOptions {
  Channel channel = Channel::Combined;
  double alpha = 0.01;
  double saturation = kDefaultSaturation;
};

// pixels.tsv: array_id quadrant row col px_row px_col ch1 ch2
// mask.tsv:   px_row px_col
std::vector<GridCell> read_grid_cells(std::string_view pixels_tsv, std::string_view mask_tsv);

// Segments, measures and calibrates every cell, array by array. Output is
// ordered by (array_id, position).
std::vector<SpotMeasurement> quantify(std::span<const GridCell> cells, const QuantOptions& options);

// spots.tsv columns, in order:
//   array_id quadrant row col clone_id spot_ch1 spot_ch2 bg_ch1 bg_ch2
//   corrected_ratio calibrated_ratio flags
// Undefined ratios and unknown clones are written as "-"; flags as a
// comma-separated subset of {absent, low-signal, saturated} or "-".
std::string write_spots(std::span<const SpotMeasurement> spots);
std::vector<SpotMeasurement> read_spots(std::string_view tsv);

}  // namespace espresso::quant
