// espresso: command-line front end for the experiment pipeline.
//
//   espresso desc parse FILE
//   espresso desc query FILE... --select "TISSUE 0 == D4I"
//   espresso desc diff A B
//   espresso design --clones F --config NAME --seed N [--out DIR]
//   espresso quant --pixels F --mask M [--alpha 0.01] [--out spots.tsv]
//   espresso classify --spots F --layout L --pairing P [--alpha 0.05] [--out calls.tsv]
//   espresso mine (--facts F | --calls C [--categories K]) [--hierarchy H] [--min-conf 0.6] [--min-sup 5]
//   espresso run RUNFILE [--seed N] [--alpha A] [--min-conf C] [--min-sup S] [--out DIR]
//   espresso report --calls F [--rules R] [--categories K] [--hierarchy H]
//   espresso diff A B          (description files or run directories)
//
// Exit status: 0 success, 1 failure inside a stage, 2 missing or unusable input.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "espresso/callsig.hpp"
#include "espresso/descriptor.hpp"
#include "espresso/design.hpp"
#include "espresso/pipeline.hpp"
#include "espresso/quant.hpp"
#include "espresso/report.hpp"
#include "espresso/rulemine.hpp"
#include "espresso/tsv.hpp"

namespace fs = std::filesystem;
using namespace espresso;

namespace {

std::string read_input(const std::string& path) {
  if (!fs::is_regular_file(path)) throw pipeline::MissingInput("missing input " + path);
  return read_file(path);
}

void emit(const std::string& out_path, const std::string& contents) {
  if (out_path.empty() || out_path == "-") {
    std::cout << contents;
  } else {
    write_file_atomic(out_path, contents);
  }
}

descriptor::ExperimentDescription load_description(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) p /= pipeline::kManifestName;
  return descriptor::parse_description(read_input(p.string()));
}

int diff_paths(const std::string& a, const std::string& b) {
  auto diff = descriptor::diff_descriptions(load_description(a), load_description(b));
  std::cout << descriptor::render_diff(diff);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microarray experiment pipeline: descriptions, layouts, quantification, calls and rules"};
  app.require_subcommand(1);

  // desc
  auto* desc = app.add_subcommand("desc", "Parse, query and diff experiment descriptions");
  desc->require_subcommand(1);
  std::string desc_file;
  auto* desc_parse = desc->add_subcommand("parse", "Print the canonical form of a description");
  desc_parse->add_option("file", desc_file, "Description file")->required();
  std::vector<std::string> query_files;
  std::string selector;
  auto* desc_query = desc->add_subcommand("query", "Print records matching a selector");
  desc_query->add_option("files", query_files, "Description files")->required();
  desc_query->add_option("--select", selector, "KEYWORD [INDEX OP LITERAL]...")->required();
  std::string diff_a, diff_b;
  auto* desc_diff = desc->add_subcommand("diff", "Differences between two descriptions");
  desc_diff->add_option("a", diff_a)->required();
  desc_diff->add_option("b", diff_b)->required();

  // design
  auto* design_cmd = app.add_subcommand("design", "Generate a randomized replicated layout");
  std::string clones_file, config_name = "Stanford4x16x24", design_out = ".";
  std::uint64_t design_seed = 0;
  int replicates = 4, array_types = 2;
  design_cmd->add_option("--clones", clones_file, "One clone id per line")->required();
  design_cmd->add_option("--config", config_name, "Printing configuration, e.g. Stanford4x16x24");
  design_cmd->add_option("--seed", design_seed, "Layout seed")->required();
  design_cmd->add_option("--replicates", replicates, "Replicates per clone per array type");
  design_cmd->add_option("--array-types", array_types, "Number of array types");
  design_cmd->add_option("--out", design_out, "Directory for layout.tsv and arraymap.tsv");

  // quant
  auto* quant_cmd = app.add_subcommand("quant", "Segment, measure and calibrate spots");
  std::string pixels_file, mask_file, spots_out, channel = "combined";
  double spot_alpha = 0.01;
  quant_cmd->add_option("--pixels", pixels_file)->required();
  quant_cmd->add_option("--mask", mask_file)->required();
  quant_cmd->add_option("--alpha", spot_alpha, "Segmentation level");
  quant_cmd->add_option("--channel", channel, "ch1, ch2 or combined");
  quant_cmd->add_option("--out", spots_out, "Output spots.tsv (default stdout)");

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "Call clones up, down or unchanged");
  std::string spots_file, layout_file, pairing_file, calls_out;
  double alpha = callsig::kDefaultAlpha;
  classify_cmd->add_option("--spots", spots_file)->required();
  classify_cmd->add_option("--layout", layout_file, "arraymap.tsv")->required();
  classify_cmd->add_option("--pairing", pairing_file)->required();
  classify_cmd->add_option("--alpha", alpha);
  classify_cmd->add_option("--out", calls_out, "Output calls.tsv (default stdout)");

  // mine
  auto* mine_cmd = app.add_subcommand("mine", "Induce rules from expression and category facts");
  std::string facts_file, mine_calls, categories_file, hierarchy_file, rules_out;
  std::string min_conf = "0.6";
  std::size_t min_sup = rulemine::kDefaultMinSupport;
  int max_body = 1;
  mine_cmd->add_option("--facts", facts_file, "facts.tsv");
  mine_cmd->add_option("--calls", mine_calls, "calls.tsv (instead of --facts)");
  mine_cmd->add_option("--categories", categories_file, "categories.tsv (with --calls)");
  mine_cmd->add_option("--hierarchy", hierarchy_file, "hierarchy.tsv");
  mine_cmd->add_option("--min-conf", min_conf, "Minimum confidence, e.g. 0.6 or 3/5");
  mine_cmd->add_option("--min-sup", min_sup, "Minimum body support");
  mine_cmd->add_option("--max-body", max_body, "Maximum body length");
  mine_cmd->add_option("--out", rules_out, "Output rules file (default stdout)");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run pipeline stages from a run file");
  std::string run_file, run_out;
  std::optional<std::uint64_t> run_seed;
  std::optional<double> run_alpha;
  std::optional<std::string> run_min_conf;
  std::optional<std::size_t> run_min_sup;
  run_cmd->add_option("runfile", run_file)->required();
  run_cmd->add_option("--seed", run_seed);
  run_cmd->add_option("--alpha", run_alpha);
  run_cmd->add_option("--min-conf", run_min_conf);
  run_cmd->add_option("--min-sup", run_min_sup);
  run_cmd->add_option("--out", run_out, "Output directory");

  // report
  auto* report_cmd = app.add_subcommand("report", "Summarize calls and rules");
  std::string report_calls, report_rules, report_categories, report_hierarchy;
  report_cmd->add_option("--calls", report_calls)->required();
  report_cmd->add_option("--rules", report_rules);
  report_cmd->add_option("--categories", report_categories);
  report_cmd->add_option("--hierarchy", report_hierarchy);

  // diff
  auto* diff_cmd = app.add_subcommand("diff", "What differs between two runs or descriptions");
  std::string top_a, top_b;
  diff_cmd->add_option("a", top_a, "Description file or run directory")->required();
  diff_cmd->add_option("b", top_b, "Description file or run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (desc->parsed()) {
      if (desc_parse->parsed()) {
        std::cout << descriptor::serialize_description(descriptor::parse_description(read_input(desc_file)));
      } else if (desc_query->parsed()) {
        std::vector<descriptor::ExperimentDescription> descs;
        for (const auto& f : query_files) descs.push_back(descriptor::parse_description(read_input(f)));
        for (const auto& r : descriptor::query_records(descs, descriptor::parse_selector(selector))) {
          std::cout << descriptor::serialize_record(r) << "\n";
        }
      } else {
        return diff_paths(diff_a, diff_b);
      }
      return 0;
    }
    if (design_cmd->parsed()) {
      auto clones = design::read_clone_list(read_input(clones_file));
      auto layout = design::generate_layout(clones, design::configuration_from_name(config_name), replicates,
                                            array_types, design_seed);
      auto report = design::verify_layout(layout);
      for (const auto& v : report.violations) std::cerr << "violation: " << v << "\n";
      if (!report.ok()) return 1;
      fs::create_directories(design_out);
      write_file_atomic(fs::path(design_out) / "layout.tsv", design::export_plate_maps(layout));
      write_file_atomic(fs::path(design_out) / "arraymap.tsv", design::export_array_maps(layout));
      return 0;
    }
    if (quant_cmd->parsed()) {
      auto cells = quant::read_grid_cells(read_input(pixels_file), read_input(mask_file));
      quant::QuantOptions opt;
      opt.alpha = spot_alpha;
      opt.channel = quant::parse_channel(channel);
      emit(spots_out, quant::write_spots(quant::quantify(cells, opt)));
      return 0;
    }
    if (classify_cmd->parsed()) {
      auto spots = quant::read_spots(read_input(spots_file));
      auto layout = design::import_array_maps(read_input(layout_file));
      auto pairing = callsig::parse_pairing(descriptor::parse_description(read_input(pairing_file)));
      std::vector<callsig::ExpressionCall> calls;
      for (const auto& p : pairing) {
        auto c = callsig::classify_all(callsig::assemble_replicates(spots, layout, p), alpha);
        calls.insert(calls.end(), c.begin(), c.end());
      }
      emit(calls_out, callsig::write_calls(calls));
      return 0;
    }
    if (mine_cmd->parsed()) {
      std::vector<rulemine::Containment> hierarchy;
      if (!hierarchy_file.empty()) hierarchy = rulemine::read_hierarchy(read_input(hierarchy_file));
      rulemine::FactBase fb;
      if (!facts_file.empty()) {
        auto tables = rulemine::read_facts(read_input(facts_file));
        fb = rulemine::FactBase(tables.levels, tables.categories, hierarchy);
      } else if (!mine_calls.empty()) {
        std::vector<rulemine::CategoryFact> categories;
        if (!categories_file.empty()) categories = rulemine::read_categories(read_input(categories_file));
        fb = rulemine::build_factbase(callsig::read_calls(read_input(mine_calls)), categories, hierarchy);
      } else {
        std::cerr << "mine: pass --facts or --calls\n";
        return 2;
      }
      auto rules = rulemine::mine_rules(fb, min_sup, rulemine::parse_confidence(min_conf),
                                        rulemine::Language::from(fb, max_body));
      emit(rules_out, rulemine::write_rules(rules));
      return 0;
    }
    if (run_cmd->parsed()) {
      auto run = pipeline::load_run(run_file);
      if (run_seed) run.seed = *run_seed;
      if (run_alpha) run.params["alpha"] = format_double(*run_alpha);
      if (run_min_conf) run.params["min_confidence"] = *run_min_conf;
      if (run_min_sup) run.params["min_support"] = std::to_string(*run_min_sup);
      if (!run_out.empty()) run.output_dir = run_out;
      auto outcome = pipeline::run_pipeline(run);
      if (outcome.exit_code != 0) {
        std::cerr << "error: " << outcome.message << "\n";
      } else {
        for (const auto& p : outcome.written) std::cerr << "wrote " << p.string() << "\n";
      }
      return outcome.exit_code;
    }
    if (report_cmd->parsed()) {
      auto calls = callsig::read_calls(read_input(report_calls));
      std::vector<rulemine::MinedRule> rules;
      std::vector<rulemine::CategoryFact> categories;
      std::vector<rulemine::Containment> hierarchy;
      if (!report_rules.empty()) rules = rulemine::read_rules(read_input(report_rules));
      if (!report_categories.empty()) categories = rulemine::read_categories(read_input(report_categories));
      if (!report_hierarchy.empty()) hierarchy = rulemine::read_hierarchy(read_input(report_hierarchy));
      std::cout << report::render_report(calls, rules, categories, hierarchy);
      return 0;
    }
    if (diff_cmd->parsed()) return diff_paths(top_a, top_b);
  } catch (const pipeline::MissingInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const AssemblyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
