#include "espresso/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "espresso/error.hpp"
#include "espresso/tsv.hpp"

namespace espresso::synth {

using callsig::Call;
using callsig::ExpressionCall;

namespace {

CloneId id(int n) { return CloneId(std::to_string(n)); }

bool in(int v, int lo, int hi) { return v >= lo && v <= hi; }

}  // namespace

ReconstructedDataset genotype_d() {
  ReconstructedDataset d;
  d.comparisons = {"CvsM", "CvsS", "MvsS"};
  for (int i = 1; i <= 384; ++i) d.clones.push_back(id(i));

  // Clone id blocks, 1-based.
  auto cvsm_up = [](int c) { return in(c, 1, 5) || in(c, 7, 27) || in(c, 40, 52) || in(c, 67, 99); };
  auto cvsm = [&](int c) {
    if (cvsm_up(c)) return Call::Up;
    if (in(c, 100, 142)) return Call::Down;
    return Call::Unchanged;
  };
  auto cvss = [&](int c) {
    if (in(c, 97, 99)) return Call::Up;  // the 3 of 72 that stay up under severe stress
    if (cvsm_up(c)) return c % 2 == 0 ? Call::Down : Call::Unchanged;
    if (in(c, 56, 64)) return Call::Down;
    return Call::Unchanged;
  };
  auto mvss = [](int c) { return in(c, 18, 39) ? Call::Down : Call::Unchanged; };

  for (const auto& cmp : d.comparisons) {
    for (int c = 1; c <= 384; ++c) {
      ExpressionCall call;
      call.clone = id(c);
      call.comparison = cmp;
      call.call = cmp == "CvsM" ? cvsm(c) : cmp == "CvsS" ? cvss(c) : mvss(c);
      d.calls.push_back(std::move(call));
    }
  }

  auto tag = [&](int lo, int hi, const std::string& category) {
    for (int c = lo; c <= hi; ++c) d.categories.push_back({id(c), category});
  };
  tag(1, 6, "heat");
  tag(7, 39, "membranetransportprotein");
  tag(40, 55, "cellwallrelated");
  tag(56, 66, "ligninbiosynthesis");
  tag(143, 148, "RPPP");
  tag(149, 154, "thiolutilizingenzymes");
  tag(155, 160, "droughtstressresponsive");

  d.hierarchy = {
      {"heat", "environment"},
      {"environment", "protectiveprocesses"},
      {"thiolutilizingenzymes", "protectiveprocesses"},
      {"droughtstressresponsive", "protectiveprocesses"},
      {"RPPP", "Carbon Metabolism"},
      {"Carbon Metabolism", "developmentandmetabolism"},
      {"membranetransportprotein", "transport"},
  };
  return d;
}

namespace {

double uniform(design::LayoutRng& rng, double lo, double hi) {
  constexpr std::uint64_t kBits = std::uint64_t{1} << 53;
  return lo + (hi - lo) * static_cast<double>(rng.below(kBits)) / static_cast<double>(kBits);
}

struct SyntheticArray {
  std::string id;
  char type;
  callsig::DyeOrientation orientation;
  std::string slide;
};

}  // namespace

PixelExperiment synthesize_pixels(const design::LayoutDesign& layout, const std::vector<ExpressionCall>& targets,
                                  std::uint64_t seed) {
  constexpr int kCell = 5;
  constexpr int kPositivesWhenCalled = 13;
  if (layout.array_maps.size() < 2) throw ConfigError("synthetic experiments need array types A and B");

  design::LayoutRng rng(seed ^ 0x5eed5eed5eed5eedULL);

  std::vector<std::string> comparisons;
  std::map<std::string, std::map<CloneId, Call>> wanted;
  for (const auto& t : targets) {
    if (!wanted.contains(t.comparison)) comparisons.push_back(t.comparison);
    wanted[t.comparison][t.clone] = t.call;
  }

  PixelExperiment out;
  out.mask_tsv = join_tsv_row({"px_row", "px_col"});
  for (int r = 1; r <= 3; ++r) {
    for (int c = 1; c <= 3; ++c) out.mask_tsv += join_tsv_row({std::to_string(r), std::to_string(c)});
  }
  out.pixels_tsv = join_tsv_row({"array_id", "quadrant", "row", "col", "px_row", "px_col", "ch1", "ch2"});

  // Spot indices of every clone, per array type, in position order.
  std::map<char, std::map<CloneId, std::vector<std::size_t>>> spots_of;
  for (const auto& m : layout.array_maps) {
    for (std::size_t i = 0; i < m.spots.size(); ++i) spots_of[m.type][m.spots[i]].push_back(i);
  }
  const auto reps = static_cast<std::size_t>(layout.replicates);

  for (const auto& cmp : comparisons) {
    const std::vector<SyntheticArray> arrays = {
        {cmp + "-S1a", 'A', callsig::DyeOrientation::Forward, cmp + "-S1"},
        {cmp + "-S1b", 'A', callsig::DyeOrientation::Swapped, cmp + "-S1"},
        {cmp + "-S2a", 'B', callsig::DyeOrientation::Forward, cmp + "-S2"},
        {cmp + "-S2b", 'B', callsig::DyeOrientation::Swapped, cmp + "-S2"},
    };
    out.pairing_expd += "COMPARISON " + cmp + "\n";
    for (const auto& a : arrays) {
      out.pairing_expd += "ARRAY " + a.id + " " + a.type + " " +
                          (a.orientation == callsig::DyeOrientation::Forward ? "forward" : "swapped") + " " +
                          a.slide + "\n";
    }

    // Assembled (orientation-corrected) signs: signs[clone][array * reps + k].
    const std::size_t total = arrays.size() * reps;
    std::map<CloneId, std::vector<int>> signs;
    std::map<CloneId, int> positives;
    for (const auto& clone : layout.clones) {
      auto it = wanted[cmp].find(clone);
      Call call = it == wanted[cmp].end() ? Call::Unchanged : it->second;
      int k = static_cast<int>(total) / 2;
      if (call == Call::Up) k = kPositivesWhenCalled;
      if (call == Call::Down) k = static_cast<int>(total) - kPositivesWhenCalled;
      std::vector<int> s(total, -1);
      std::fill(s.begin(), s.begin() + k, 1);
      rng.shuffle(s);
      signs[clone] = std::move(s);
      positives[clone] = k;
    }

    // Balance raw signs per array by flipping single replicates of unchanged
    // clones, keeping those clones within total/2 +- 2 positives.
    std::vector<CloneId> flexible;
    for (const auto& clone : layout.clones) {
      auto it = wanted[cmp].find(clone);
      if (it == wanted[cmp].end() || it->second == Call::Unchanged) flexible.push_back(clone);
    }
    for (std::size_t a = 0; a < arrays.size(); ++a) {
      const int orient = arrays[a].orientation == callsig::DyeOrientation::Forward ? 1 : -1;
      long imbalance = 0;
      for (const auto& clone : layout.clones) {
        for (std::size_t k = 0; k < reps; ++k) imbalance += orient * signs[clone][a * reps + k];
      }
      rng.shuffle(flexible);
      for (std::size_t f = 0; f < flexible.size() && imbalance != 0; ++f) {
        const int raw_majority = imbalance > 0 ? 1 : -1;
        const int assembled = raw_majority * orient;
        auto& s = signs[flexible[f]];
        const int next_pos = positives[flexible[f]] - assembled;
        if (std::abs(next_pos - static_cast<int>(total) / 2) > 2) continue;
        for (std::size_t k = 0; k < reps; ++k) {
          if (s[a * reps + k] == assembled) {
            s[a * reps + k] = -assembled;
            positives[flexible[f]] = next_pos;
            imbalance -= 2 * raw_majority;
            break;
          }
        }
      }
      if (imbalance != 0) throw ConfigError("cannot balance synthetic array " + arrays[a].id);
    }

    for (std::size_t a = 0; a < arrays.size(); ++a) {
      const auto& arr = arrays[a];
      const int orient = arr.orientation == callsig::DyeOrientation::Forward ? 1 : -1;
      std::vector<double> raw_log(layout.config.spots(), 0.0);
      for (const auto& [clone, idx] : spots_of.at(arr.type)) {
        for (std::size_t k = 0; k < idx.size(); ++k) {
          raw_log[idx[k]] = orient * signs[clone][a * reps + k] * uniform(rng, 0.4, 1.2);
        }
      }
      for (std::size_t i = 0; i < raw_log.size(); ++i) {
        const auto pos = design::spot_position(layout.config, i);
        const double bg1 = uniform(rng, 120, 180);
        const double bg2 = uniform(rng, 120, 180);
        const double s2 = uniform(rng, 800, 2000);
        const double s1 = s2 * std::exp(raw_log[i]);
        const std::string prefix = arr.id + "\t" + std::to_string(pos.quadrant) + "\t" + std::to_string(pos.row) +
                                   "\t" + std::to_string(pos.col) + "\t";
        for (int pr = 0; pr < kCell; ++pr) {
          for (int pc = 0; pc < kCell; ++pc) {
            const bool spot = pr >= 1 && pr <= 3 && pc >= 1 && pc <= 3;
            double c1 = bg1 + uniform(rng, -5, 5);
            double c2 = bg2 + uniform(rng, -5, 5);
            if (spot) {
              c1 += s1 * (1 + uniform(rng, -0.02, 0.02));
              c2 += s2 * (1 + uniform(rng, -0.02, 0.02));
            }
            out.pixels_tsv += prefix + std::to_string(pr) + "\t" + std::to_string(pc) + "\t" +
                              std::to_string(std::lround(c1)) + "\t" + std::to_string(std::lround(c2)) + "\n";
          }
        }
      }
    }
  }
  return out;
}

void write_demo_experiment(const std::filesystem::path& dir, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  auto data = genotype_d();
  auto layout = design::generate_layout(data.clones, kDemoConfig, 4, 2, seed);
  auto pixels = synthesize_pixels(layout, data.calls, seed);

  std::string clones = "clone_id\n";
  for (const auto& c : data.clones) clones += c.value + "\n";
  write_file_atomic(dir / "clones.txt", clones);
  write_file_atomic(dir / "pixels.tsv", pixels.pixels_tsv);
  write_file_atomic(dir / "mask.tsv", pixels.mask_tsv);
  write_file_atomic(dir / "pairing.expd", pixels.pairing_expd);
  write_file_atomic(dir / "categories.tsv", rulemine::write_categories(data.categories));
  write_file_atomic(dir / "hierarchy.tsv", rulemine::write_hierarchy(data.hierarchy));

  std::string run =
      "EXPERIMENT PINE_DROUGHT_DEMO May-August,2000 \"384 clones\"\n"
      "DYE CY3 \"Genisphere Kit\"\n"
      "DYE CY5 \"Genisphere Kit\"\n"
      "STAGES design quant classify mine\n"
      "SEED " + std::to_string(seed) + "\n"
      "PRINTING_CONFIGURATION Stanford4x16x24 4 16 24 QUADRANTS\n"
      "REPLICATES 4\n"
      "ARRAY_TYPES 2\n"
      "INPUT clones clones.txt\n"
      "INPUT pixels pixels.tsv\n"
      "INPUT mask mask.tsv\n"
      "INPUT pairing pairing.expd\n"
      "INPUT categories categories.tsv\n"
      "INPUT hierarchy hierarchy.tsv\n"
      "OUTPUT_DIR out\n"
      "PARAM spot_alpha 0.01\n"
      "PARAM alpha 0.05\n"
      "PARAM min_support 5\n"
      "PARAM min_confidence 0.6\n";
  write_file_atomic(dir / "run.expd", run);
}

}  // namespace espresso::synth
