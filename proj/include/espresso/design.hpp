#pragma once

// Replicated, randomized array layouts.
//
// The clone list (the contents of the source plates) is re-pipetted into
// `replicates * array_types` printing-plate sets. Each set is an independent
// uniform permutation of the clones. Array type t is printed from plate sets
// [t*replicates, (t+1)*replicates), so every array type carries each clone
// exactly `replicates` times.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "espresso/clone_id.hpp"

namespace espresso::design {

inline constexpr std::size_t kWellsPerPlate = 96;

struct PrintingConfiguration {
  std::string name;
  int quadrants = 0;
  int rows = 0;
  int cols = 0;

  std::size_t spots() const {
    return static_cast<std::size_t>(quadrants) * static_cast<std::size_t>(rows) *
           static_cast<std::size_t>(cols);
  }

  bool operator==(const PrintingConfiguration&) const = default;
};

// Parses names such as "Stanford4x16x24" into {name, 4, 16, 24}.
PrintingConfiguration configuration_from_name(std::string_view name);

struct Position {
  int quadrant = 0;
  int row = 0;
  int col = 0;

  auto operator<=>(const Position&) const = default;
};

// Where the i-th spot of an array's concatenated plate sets lands. Plate sets
// fill quadrants in order, row-major within each quadrant.
Position spot_position(const PrintingConfiguration& config, std::size_t index);
std::size_t spot_index(const PrintingConfiguration& config, const Position& pos);

// Array types are named 'A', 'B', ...
struct ArrayMap {
  char type = 'A';
  std::vector<CloneId> spots;  // indexed by spot_index

  bool operator==(const ArrayMap&) const = default;
};

struct LayoutDesign {
  std::vector<CloneId> clones;
  PrintingConfiguration config;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<CloneId>> plate_sets;
  std::vector<ArrayMap> array_maps;

  const ArrayMap* array_map(char type) const;
  std::optional<CloneId> clone_at(char type, const Position& pos) const;

  bool operator==(const LayoutDesign&) const = default;
};

// Deterministic stream used for every layout draw. Its identity (engine,
// bounded-integer method, shuffle) is part of the output contract: changing
// any of them changes layouts for existing seeds, so bump kLayoutRngName.
inline constexpr std::string_view kLayoutRngName = "mt19937_64/lemire-bounded/fisher-yates/v1";

class LayoutRng {
 public:
  explicit LayoutRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

LayoutDesign generate_layout(std::span<const CloneId> clones, const PrintingConfiguration& config,
                             int replicates, int array_types, std::uint64_t seed);

struct ArrayTypeReport {
  char type = 'A';
  std::size_t total_spots = 0;
  std::map<CloneId, int> replicate_counts;
  std::vector<std::size_t> quadrant_occupancy;        // filled spots per quadrant
  std::vector<std::size_t> quadrant_distinct_clones;  // distinct clones per quadrant
};

struct VerificationReport {
  std::vector<ArrayTypeReport> array_types;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

VerificationReport verify_layout(const LayoutDesign& layout);

// layout.tsv: plate_set, plate, well, clone_id (plate sets and plates 1-based,
// wells A01..H12).
std::string export_plate_maps(const LayoutDesign& layout);
std::vector<std::vector<CloneId>> import_plate_maps(std::string_view tsv);

// arraymap.tsv: type, quadrant, row, col, clone_id (coordinates 0-based).
std::string export_array_maps(const LayoutDesign& layout);
// Rebuilds array maps; the geometry is recovered from the largest coordinates.
LayoutDesign import_array_maps(std::string_view tsv);

std::vector<CloneId> read_clone_list(std::string_view text);

}  // namespace espresso::design
