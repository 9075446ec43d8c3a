#include "espresso/quant.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "espresso/error.hpp"
#include "espresso/tsv.hpp"

namespace espresso::quant {
namespace {

double intensity(const Pixel& p, Channel channel) {
  switch (channel) {
    case Channel::Ch1: return p.ch1;
    case Channel::Ch2: return p.ch2;
    case Channel::Combined: break;
  }
  return 0.5 * (p.ch1 + p.ch2);
}

// Sums in sorted order so the mean does not depend on pixel order.
double order_free_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

Pixel mean_of(const GridCell& cell, const std::vector<PixelCoord>& coords) {
  std::vector<double> a;
  std::vector<double> b;
  a.reserve(coords.size());
  b.reserve(coords.size());
  for (auto c : coords) {
    a.push_back(cell.at(c).ch1);
    b.push_back(cell.at(c).ch2);
  }
  return {order_free_mean(std::move(a)), order_free_mean(std::move(b))};
}

}  // namespace

Channel parse_channel(std::string_view name) {
  if (name == "ch1") return Channel::Ch1;
  if (name == "ch2") return Channel::Ch2;
  if (name == "combined") return Channel::Combined;
  throw ArgumentError("unknown channel '" + std::string(name) + "' (ch1, ch2, combined)");
}

Segmentation segment_spot(const GridCell& cell, Channel channel, double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw ArgumentError("alpha must lie in (0, 1)");
  if (cell.mask.size() < kMinMaskPixels) {
    throw ArgumentError("spot mask has " + std::to_string(cell.mask.size()) +
                        " pixels; at least " + std::to_string(kMinMaskPixels) + " are needed");
  }
  if (cell.height <= 0 || cell.width <= 0 ||
      cell.pixels.size() != static_cast<std::size_t>(cell.height) * static_cast<std::size_t>(cell.width)) {
    throw ArgumentError("grid cell pixel matrix does not match its dimensions");
  }
  std::set<PixelCoord> in_mask;
  for (auto c : cell.mask) {
    if (c.row < 0 || c.col < 0 || c.row >= cell.height || c.col >= cell.width) {
      throw ArgumentError("spot mask extends outside the grid cell");
    }
    in_mask.insert(c);
  }
  if (in_mask.size() != cell.mask.size()) throw ArgumentError("spot mask lists a pixel twice");

  Segmentation seg;
  seg.spot.assign(in_mask.begin(), in_mask.end());
  for (int r = 0; r < cell.height; ++r) {
    for (int c = 0; c < cell.width; ++c) {
      if (!in_mask.contains({r, c})) seg.background.push_back({r, c});
    }
  }
  if (seg.background.empty()) throw ArgumentError("spot mask leaves no background pixels");

  std::vector<double> fg;
  std::vector<double> bg;
  for (auto c : seg.spot) fg.push_back(intensity(cell.at(c), channel));
  for (auto c : seg.background) bg.push_back(intensity(cell.at(c), channel));
  seg.p_value = mann_whitney(fg, bg).p_value;
  seg.detected = seg.p_value <= alpha;
  return seg;
}

std::string format_flags(std::uint8_t flags) {
  if (flags == 0) return "-";
  std::string out;
  auto add = [&](const char* name) {
    if (!out.empty()) out += ',';
    out += name;
  };
  if (flags & kAbsent) add("absent");
  if (flags & kLowSignal) add("low-signal");
  if (flags & kSaturated) add("saturated");
  return out;
}

std::uint8_t parse_flags(std::string_view text) {
  if (text == "-") return 0;
  std::uint8_t flags = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    auto name = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (name == "absent") {
      flags |= kAbsent;
    } else if (name == "low-signal") {
      flags |= kLowSignal;
    } else if (name == "saturated") {
      flags |= kSaturated;
    } else {
      throw ArgumentError("unknown flag '" + std::string(name) + "'");
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return flags;
}

SpotMeasurement measure_spot(const GridCell& cell, const Segmentation& segmentation, double saturation) {
  SpotMeasurement m;
  m.array_id = cell.array_id;
  m.position = cell.position;
  m.spot_mean = mean_of(cell, segmentation.spot);
  m.background_mean = mean_of(cell, segmentation.background);

  if (!segmentation.detected) m.flags |= kAbsent;
  for (auto c : segmentation.spot) {
    const auto& p = cell.at(c);
    if (p.ch1 >= saturation || p.ch2 >= saturation) {
      m.flags |= kSaturated;
      break;
    }
  }
  const double num = m.spot_mean.ch1 - m.background_mean.ch1;
  const double den = m.spot_mean.ch2 - m.background_mean.ch2;
  if (num <= 0 || den <= 0) {
    m.flags |= kLowSignal;
  } else if (!(m.flags & kAbsent)) {
    m.corrected_ratio = num / den;
  }
  return m;
}

namespace {

// Median of log(factor * r) for sorted ratios.
double median_log(const std::vector<double>& sorted, double factor) {
  const auto n = sorted.size();
  if (n % 2 == 1) return std::log(factor * sorted[n / 2]);
  return 0.5 * (std::log(factor * sorted[n / 2 - 1]) + std::log(factor * sorted[n / 2]));
}

}  // namespace

Calibration calibrate_array(std::vector<SpotMeasurement> measurements) {
  std::vector<double> ratios;
  for (const auto& m : measurements) {
    if (!m.flagged() && m.corrected_ratio) ratios.push_back(*m.corrected_ratio);
  }
  if (ratios.empty()) throw CalibrationError("no unflagged spots to calibrate against");
  std::sort(ratios.begin(), ratios.end());

  // Median centering: the median ratio (geometric mean of the two middle
  // ratios for an even count) maps to 1. Refinement passes only absorb
  // rounding in the log domain.
  const auto n = ratios.size();
  const double center = n % 2 == 1 ? ratios[n / 2] : std::sqrt(ratios[n / 2 - 1] * ratios[n / 2]);
  Calibration cal;
  cal.factor = 1.0 / center;
  cal.iterations = 1;
  for (double med = median_log(ratios, cal.factor);
       std::abs(med) > 1e-12 && cal.iterations < kMaxCalibrationIterations;
       med = median_log(ratios, cal.factor)) {
    cal.factor *= std::exp(-med);
    ++cal.iterations;
  }

  for (auto& m : measurements) {
    m.calibrated_ratio.reset();
    if (!m.flagged() && m.corrected_ratio) m.calibrated_ratio = cal.factor * *m.corrected_ratio;
  }
  cal.measurements = std::move(measurements);
  return cal;
}

// ---- files -----------------------------------------------------------------

std::vector<GridCell> read_grid_cells(std::string_view pixels_tsv, std::string_view mask_tsv) {
  auto mask_table = parse_tsv(mask_tsv, {"px_row", "px_col"});
  std::vector<PixelCoord> mask;
  {
    const auto cr = mask_table.column("px_row");
    const auto cc = mask_table.column("px_col");
    for (std::size_t r = 0; r < mask_table.rows.size(); ++r) {
      mask.push_back({static_cast<int>(parse_int(mask_table.rows[r][cr], r + 2)),
                      static_cast<int>(parse_int(mask_table.rows[r][cc], r + 2))});
    }
  }

  auto table = parse_tsv(pixels_tsv, {"array_id", "quadrant", "row", "col", "px_row", "px_col", "ch1", "ch2"});
  const auto c_array = table.column("array_id");
  const auto c_q = table.column("quadrant");
  const auto c_r = table.column("row");
  const auto c_c = table.column("col");
  const auto c_pr = table.column("px_row");
  const auto c_pc = table.column("px_col");
  const auto c_1 = table.column("ch1");
  const auto c_2 = table.column("ch2");

  struct Raw {
    std::map<PixelCoord, Pixel> pixels;
  };
  std::map<std::pair<std::string, design::Position>, Raw> cells;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = r + 2;
    design::Position pos{static_cast<int>(parse_int(row[c_q], line)),
                         static_cast<int>(parse_int(row[c_r], line)),
                         static_cast<int>(parse_int(row[c_c], line))};
    PixelCoord pc{static_cast<int>(parse_int(row[c_pr], line)),
                  static_cast<int>(parse_int(row[c_pc], line))};
    if (pc.row < 0 || pc.col < 0) throw ParseError(line, "negative pixel coordinate");
    Pixel px{parse_double(row[c_1], line), parse_double(row[c_2], line)};
    if (px.ch1 < 0 || px.ch2 < 0) throw ParseError(line, "negative intensity");
    if (!cells[{row[c_array], pos}].pixels.emplace(pc, px).second) {
      throw ParseError(line, "pixel listed twice");
    }
  }

  std::vector<GridCell> out;
  out.reserve(cells.size());
  for (auto& [key, raw] : cells) {
    GridCell cell;
    cell.array_id = key.first;
    cell.position = key.second;
    for (auto& [pc, px] : raw.pixels) {
      cell.height = std::max(cell.height, pc.row + 1);
      cell.width = std::max(cell.width, pc.col + 1);
    }
    if (raw.pixels.size() != static_cast<std::size_t>(cell.height) * static_cast<std::size_t>(cell.width)) {
      throw ParseError(1, "grid cell " + cell.array_id + " is missing pixels");
    }
    cell.pixels.reserve(raw.pixels.size());
    for (auto& [pc, px] : raw.pixels) cell.pixels.push_back(px);  // map order is row-major
    cell.mask = mask;
    out.push_back(std::move(cell));
  }
  return out;
}

std::vector<SpotMeasurement> quantify(std::span<const GridCell> cells, const QuantOptions& options) {
  std::map<std::string, std::vector<const GridCell*>> by_array;
  for (const auto& c : cells) by_array[c.array_id].push_back(&c);

  std::vector<SpotMeasurement> out;
  for (auto& [array_id, group] : by_array) {
    std::sort(group.begin(), group.end(),
              [](const GridCell* a, const GridCell* b) { return a->position < b->position; });
    std::vector<SpotMeasurement> measured;
    measured.reserve(group.size());
    for (const auto* cell : group) {
      auto seg = segment_spot(*cell, options.channel, options.alpha);
      measured.push_back(measure_spot(*cell, seg, options.saturation));
    }
    try {
      auto cal = calibrate_array(std::move(measured));
      for (auto& m : cal.measurements) out.push_back(std::move(m));
    } catch (const CalibrationError& e) {
      throw CalibrationError("array " + array_id + ": " + e.what());
    }
  }
  return out;
}

std::string write_spots(std::span<const SpotMeasurement> spots) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("-"); };
  std::string out = join_tsv_row({"array_id", "quadrant", "row", "col", "clone_id", "spot_ch1",
                                  "spot_ch2", "bg_ch1", "bg_ch2", "corrected_ratio",
                                  "calibrated_ratio", "flags"});
  for (const auto& s : spots) {
    out += join_tsv_row({s.array_id, std::to_string(s.position.quadrant), std::to_string(s.position.row),
                         std::to_string(s.position.col), s.clone ? s.clone->value : "-",
                         format_double(s.spot_mean.ch1), format_double(s.spot_mean.ch2),
                         format_double(s.background_mean.ch1), format_double(s.background_mean.ch2),
                         opt(s.corrected_ratio), opt(s.calibrated_ratio), format_flags(s.flags)});
  }
  return out;
}

std::vector<SpotMeasurement> read_spots(std::string_view tsv) {
  auto table = parse_tsv(tsv, {"array_id", "quadrant", "row", "col", "clone_id", "spot_ch1", "spot_ch2",
                               "bg_ch1", "bg_ch2", "corrected_ratio", "calibrated_ratio", "flags"});
  std::vector<std::size_t> c;
  for (auto name : {"array_id", "quadrant", "row", "col", "clone_id", "spot_ch1", "spot_ch2", "bg_ch1",
                    "bg_ch2", "corrected_ratio", "calibrated_ratio", "flags"}) {
    c.push_back(table.column(name));
  }
  std::vector<SpotMeasurement> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = r + 2;
    auto opt = [&](const std::string& s) -> std::optional<double> {
      if (s == "-") return std::nullopt;
      return parse_double(s, line);
    };
    SpotMeasurement s;
    s.array_id = row[c[0]];
    s.position = {static_cast<int>(parse_int(row[c[1]], line)), static_cast<int>(parse_int(row[c[2]], line)),
                  static_cast<int>(parse_int(row[c[3]], line))};
    if (row[c[4]] != "-") s.clone = CloneId(row[c[4]]);
    s.spot_mean = {parse_double(row[c[5]], line), parse_double(row[c[6]], line)};
    s.background_mean = {parse_double(row[c[7]], line), parse_double(row[c[8]], line)};
    s.corrected_ratio = opt(row[c[9]]);
    s.calibrated_ratio = opt(row[c[10]]);
    try {
      s.flags = parse_flags(row[c[11]]);
    } catch (const ArgumentError& e) {
      throw ParseError(line, e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace espresso::quant
