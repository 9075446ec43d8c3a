#include "espresso/design.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "espresso/error.hpp"
#include "espresso/tsv.hpp"

namespace espresso::design {

PrintingConfiguration configuration_from_name(std::string_view name) {
  static const std::regex pattern(R"(^([A-Za-z_]*)([0-9]+)x([0-9]+)x([0-9]+)$)");
  std::cmatch m;
  if (!std::regex_match(name.begin(), name.end(), m, pattern)) {
    throw ConfigError("unrecognized printing configuration '" + std::string(name) +
                      "' (expected e.g. Stanford4x16x24)");
  }
  PrintingConfiguration c{std::string(name), std::stoi(m[2]), std::stoi(m[3]), std::stoi(m[4])};
  if (c.quadrants <= 0 || c.rows <= 0 || c.cols <= 0) {
    throw ConfigError("printing configuration '" + c.name + "' has a zero dimension");
  }
  return c;
}

Position spot_position(const PrintingConfiguration& config, std::size_t index) {
  const auto per_quadrant = static_cast<std::size_t>(config.rows) * config.cols;
  const auto within = index % per_quadrant;
  return {static_cast<int>(index / per_quadrant), static_cast<int>(within / config.cols),
          static_cast<int>(within % config.cols)};
}

std::size_t spot_index(const PrintingConfiguration& config, const Position& pos) {
  return (static_cast<std::size_t>(pos.quadrant) * config.rows + pos.row) * config.cols + pos.col;
}

const ArrayMap* LayoutDesign::array_map(char type) const {
  for (const auto& m : array_maps) {
    if (m.type == type) return &m;
  }
  return nullptr;
}

std::optional<CloneId> LayoutDesign::clone_at(char type, const Position& pos) const {
  const auto* map = array_map(type);
  if (!map || pos.quadrant < 0 || pos.row < 0 || pos.col < 0 || pos.quadrant >= config.quadrants ||
      pos.row >= config.rows || pos.col >= config.cols) {
    return std::nullopt;
  }
  auto idx = spot_index(config, pos);
  if (idx >= map->spots.size()) return std::nullopt;
  return map->spots[idx];
}

__extension__ using u128 = unsigned __int128;

std::uint64_t LayoutRng::below(std::uint64_t bound) {
  // Lemire, "Fast Random Integer Generation in an Interval" (2019).
  std::uint64_t x = engine_();
  auto m = static_cast<u128>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = engine_();
      m = static_cast<u128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

namespace {

ArrayMap build_array_map(char type, const std::vector<std::vector<CloneId>>& plate_sets,
                         std::size_t first, int replicates) {
  ArrayMap map{type, {}};
  for (int r = 0; r < replicates; ++r) {
    const auto& set = plate_sets[first + static_cast<std::size_t>(r)];
    map.spots.insert(map.spots.end(), set.begin(), set.end());
  }
  return map;
}

}  // namespace

LayoutDesign generate_layout(std::span<const CloneId> clones, const PrintingConfiguration& config,
                             int replicates, int array_types, std::uint64_t seed) {
  if (replicates <= 0) throw ConfigError("replicates must be positive");
  if (array_types <= 0 || array_types > 26) throw ConfigError("array types must be in 1..26");
  if (clones.empty()) throw ConfigError("clone list is empty");
  const auto needed = static_cast<std::size_t>(replicates) * clones.size();
  if (needed != config.spots()) {
    throw ConfigError(std::to_string(replicates) + " replicates x " +
                      std::to_string(clones.size()) + " clones = " + std::to_string(needed) +
                      " spots, but configuration " + config.name + " holds " +
                      std::to_string(config.spots()) + " spots");
  }
  if (std::set<CloneId>(clones.begin(), clones.end()).size() != clones.size()) {
    throw ConfigError("clone list contains duplicate ids");
  }

  LayoutDesign layout;
  layout.clones.assign(clones.begin(), clones.end());
  layout.config = config;
  layout.replicates = replicates;
  layout.seed = seed;

  LayoutRng rng(seed);
  for (int t = 0; t < array_types; ++t) {
    const char type = static_cast<char>('A' + t);
    const auto first = static_cast<std::size_t>(t) * replicates;
    // Redraw a type whose arrangement duplicates an earlier type's; only
    // impossible to avoid with a single clone.
    for (int attempt = 0;; ++attempt) {
      layout.plate_sets.resize(first);
      for (int r = 0; r < replicates; ++r) {
        auto set = layout.clones;
        rng.shuffle(set);
        layout.plate_sets.push_back(std::move(set));
      }
      auto map = build_array_map(type, layout.plate_sets, first, replicates);
      bool duplicate = clones.size() > 1 &&
                       std::any_of(layout.array_maps.begin(), layout.array_maps.end(),
                                   [&](const ArrayMap& m) { return m.spots == map.spots; });
      if (!duplicate) {
        layout.array_maps.push_back(std::move(map));
        break;
      }
      if (attempt == 1000) throw ConfigError("cannot draw distinct arrangements for array types");
    }
  }
  return layout;
}

VerificationReport verify_layout(const LayoutDesign& layout) {
  VerificationReport report;
  const auto& cfg = layout.config;
  const std::set<CloneId> known(layout.clones.begin(), layout.clones.end());

  for (const auto& map : layout.array_maps) {
    ArrayTypeReport tr;
    tr.type = map.type;
    tr.total_spots = map.spots.size();
    tr.quadrant_occupancy.assign(static_cast<std::size_t>(std::max(cfg.quadrants, 0)), 0);
    std::vector<std::set<CloneId>> distinct(tr.quadrant_occupancy.size());
    for (const auto& id : layout.clones) tr.replicate_counts[id] = 0;

    const std::string prefix = std::string("array type ") + map.type + ": ";
    if (map.spots.size() != cfg.spots()) {
      report.violations.push_back(prefix + std::to_string(map.spots.size()) + " spots, expected " +
                                  std::to_string(cfg.spots()));
    }
    for (std::size_t i = 0; i < map.spots.size(); ++i) {
      const auto& id = map.spots[i];
      if (!known.contains(id)) {
        report.violations.push_back(prefix + "unknown clone " + id.value + " at spot " +
                                    std::to_string(i));
        continue;
      }
      ++tr.replicate_counts[id];
      if (i < cfg.spots()) {
        auto q = static_cast<std::size_t>(spot_position(cfg, i).quadrant);
        ++tr.quadrant_occupancy[q];
        distinct[q].insert(id);
      }
    }
    for (const auto& [id, count] : tr.replicate_counts) {
      if (count != layout.replicates) {
        report.violations.push_back(prefix + "clone " + id.value + " appears " +
                                    std::to_string(count) + " times, expected " +
                                    std::to_string(layout.replicates));
      }
    }
    for (const auto& d : distinct) tr.quadrant_distinct_clones.push_back(d.size());
    report.array_types.push_back(std::move(tr));
  }

  if (layout.clones.size() > 1) {
    for (std::size_t i = 0; i < layout.array_maps.size(); ++i) {
      for (std::size_t j = i + 1; j < layout.array_maps.size(); ++j) {
        if (layout.array_maps[i].spots == layout.array_maps[j].spots) {
          report.violations.push_back(std::string("array types ") + layout.array_maps[i].type +
                                      " and " + layout.array_maps[j].type +
                                      " share one arrangement");
        }
      }
    }
  }

  auto sorted = layout.clones;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t s = 0; s < layout.plate_sets.size(); ++s) {
    auto set = layout.plate_sets[s];
    std::sort(set.begin(), set.end());
    if (set != sorted) {
      report.violations.push_back("plate set " + std::to_string(s + 1) +
                                  " is not a permutation of the clone list");
    }
  }
  return report;
}

namespace {

std::string well_label(std::size_t index) {
  const auto in_plate = index % kWellsPerPlate;
  std::string label(1, static_cast<char>('A' + in_plate / 12));
  auto col = in_plate % 12 + 1;
  if (col < 10) label += '0';
  label += std::to_string(col);
  return label;
}

std::size_t parse_well(std::string_view label, std::size_t line) {
  if (label.size() != 3 || label[0] < 'A' || label[0] > 'H') {
    throw ParseError(line, "bad well label '" + std::string(label) + "'");
  }
  auto col = parse_int(label.substr(1), line);
  if (col < 1 || col > 12) throw ParseError(line, "bad well column in '" + std::string(label) + "'");
  return static_cast<std::size_t>(label[0] - 'A') * 12 + static_cast<std::size_t>(col - 1);
}

}  // namespace

std::string export_plate_maps(const LayoutDesign& layout) {
  std::string out = join_tsv_row({"plate_set", "plate", "well", "clone_id"});
  for (std::size_t s = 0; s < layout.plate_sets.size(); ++s) {
    const auto& set = layout.plate_sets[s];
    for (std::size_t i = 0; i < set.size(); ++i) {
      out += join_tsv_row({std::to_string(s + 1), std::to_string(i / kWellsPerPlate + 1),
                           well_label(i), set[i].value});
    }
  }
  return out;
}

std::vector<std::vector<CloneId>> import_plate_maps(std::string_view tsv) {
  auto table = parse_tsv(tsv, {"plate_set", "plate", "well", "clone_id"});
  const auto c_set = table.column("plate_set");
  const auto c_plate = table.column("plate");
  const auto c_well = table.column("well");
  const auto c_clone = table.column("clone_id");
  std::map<std::size_t, std::map<std::size_t, CloneId>> sets;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = r + 2;
    auto set = parse_int(row[c_set], line);
    auto plate = parse_int(row[c_plate], line);
    if (set < 1 || plate < 1) throw ParseError(line, "plate numbers are 1-based");
    auto index = static_cast<std::size_t>(plate - 1) * kWellsPerPlate + parse_well(row[c_well], line);
    if (!sets[static_cast<std::size_t>(set)].emplace(index, CloneId(row[c_clone])).second) {
      throw ParseError(line, "well listed twice");
    }
  }
  std::vector<std::vector<CloneId>> out;
  std::size_t expect_set = 1;
  for (auto& [set, wells] : sets) {
    if (set != expect_set++) throw ParseError(1, "plate sets are not numbered consecutively");
    std::vector<CloneId> ids;
    std::size_t expect_well = 0;
    for (auto& [index, id] : wells) {
      if (index != expect_well++) throw ParseError(1, "plate set " + std::to_string(set) + " has a gap");
      ids.push_back(std::move(id));
    }
    out.push_back(std::move(ids));
  }
  return out;
}

std::string export_array_maps(const LayoutDesign& layout) {
  std::string out = join_tsv_row({"type", "quadrant", "row", "col", "clone_id"});
  for (const auto& map : layout.array_maps) {
    for (std::size_t i = 0; i < map.spots.size(); ++i) {
      auto p = spot_position(layout.config, i);
      out += join_tsv_row({std::string(1, map.type), std::to_string(p.quadrant),
                           std::to_string(p.row), std::to_string(p.col), map.spots[i].value});
    }
  }
  return out;
}

LayoutDesign import_array_maps(std::string_view tsv) {
  auto table = parse_tsv(tsv, {"type", "quadrant", "row", "col", "clone_id"});
  const auto c_type = table.column("type");
  const auto c_q = table.column("quadrant");
  const auto c_r = table.column("row");
  const auto c_c = table.column("col");
  const auto c_clone = table.column("clone_id");

  std::map<char, std::map<Position, CloneId>> by_type;
  Position extent{0, 0, 0};
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = r + 2;
    if (row[c_type].size() != 1 || row[c_type][0] < 'A' || row[c_type][0] > 'Z') {
      throw ParseError(line, "array type must be a single letter A-Z");
    }
    Position p{static_cast<int>(parse_int(row[c_q], line)), static_cast<int>(parse_int(row[c_r], line)),
               static_cast<int>(parse_int(row[c_c], line))};
    if (p.quadrant < 0 || p.row < 0 || p.col < 0) throw ParseError(line, "negative coordinate");
    extent = {std::max(extent.quadrant, p.quadrant + 1), std::max(extent.row, p.row + 1),
              std::max(extent.col, p.col + 1)};
    if (!by_type[row[c_type][0]].emplace(p, CloneId(row[c_clone])).second) {
      throw ParseError(line, "position listed twice");
    }
  }

  LayoutDesign layout;
  layout.config = {"imported", extent.quadrant, extent.row, extent.col};
  std::set<CloneId> clones;
  for (auto& [type, cells] : by_type) {
    if (cells.size() != layout.config.spots()) {
      throw ParseError(1, std::string("array type ") + type + " does not cover the full grid");
    }
    ArrayMap map{type, {}};
    for (auto& [pos, id] : cells) {
      clones.insert(id);
      map.spots.push_back(std::move(id));
    }
    layout.array_maps.push_back(std::move(map));
  }
  layout.clones.assign(clones.begin(), clones.end());
  if (!layout.array_maps.empty() && !layout.clones.empty()) {
    const auto& first = layout.array_maps.front().spots;
    layout.replicates = static_cast<int>(std::count(first.begin(), first.end(), layout.clones.front()));
  }
  return layout;
}

std::vector<CloneId> read_clone_list(std::string_view text) {
  std::vector<CloneId> out;
  std::istringstream in{std::string(text)};
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    auto e = line.find_last_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    auto id = line.substr(b, e - b + 1);
    if (first && id == "clone_id") {
      first = false;
      continue;
    }
    first = false;
    out.emplace_back(std::move(id));
  }
  return out;
}

}  // namespace espresso::design
