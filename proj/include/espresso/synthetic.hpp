#pragma once

// Reconstructed experiment fixtures.
//
// The original per-clone calls are not available, so these build a 384-clone
// "Genotype D" dataset that reproduces the reference aggregate counts:
//   72 clones up in CvsM, 69 of them not up in CvsS       (69/72)
//   33 membrane transport clones: 21 up in CvsM           (21/33 = 7/11)
//                                 22 down in MvsS         (22/33 = 8/12)
//   6 heat clones, 5 up in CvsM                           (5/6)
//   16 cell-wall clones, 13 up in CvsM                    (13/16)
//   11 lignin biosynthesis clones, 9 down in CvsS         (9/11)
// and a pixel-level experiment whose quantified, calibrated and classified
// spots give back exactly those calls.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "espresso/callsig.hpp"
#include "espresso/design.hpp"
#include "espresso/rulemine.hpp"

namespace espresso::synth {

struct ReconstructedDataset {
  std::vector<CloneId> clones;
  std::vector<std::string> comparisons;
  std::vector<callsig::ExpressionCall> calls;  // comparison-major, clone-id order
  std::vector<rulemine::CategoryFact> categories;
  std::vector<rulemine::Containment> hierarchy;
};

ReconstructedDataset genotype_d();

struct PixelExperiment {
  std::string pixels_tsv;
  std::string mask_tsv;
  std::string pairing_expd;
};

// Per comparison, two slides (one per array type) with two reciprocally
// labeled arrays each. Each clone gets 13 of 16 replicate signs in its
// called direction (8/8 give or take two when unchanged), and every array
// carries as many positive as negative raw log ratios so median calibration
// cannot flip a sign.
PixelExperiment synthesize_pixels(const design::LayoutDesign& layout,
                                  const std::vector<callsig::ExpressionCall>& targets,
                                  std::uint64_t seed);

inline const design::PrintingConfiguration kDemoConfig{"Stanford4x16x24", 4, 16, 24};

// Writes clones.txt, pixels.tsv, mask.tsv, pairing.expd, categories.tsv,
// hierarchy.tsv and run.expd into `dir`.
void write_demo_experiment(const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace espresso::synth
