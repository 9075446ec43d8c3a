#include "espresso/pipeline.hpp"

#include <algorithm>
#include <set>

#include "espresso/callsig.hpp"
#include "espresso/digest.hpp"
#include "espresso/quant.hpp"
#include "espresso/report.hpp"
#include "espresso/rulemine.hpp"
#include "espresso/tsv.hpp"

namespace espresso::pipeline {

namespace fs = std::filesystem;
using descriptor::Record;
using descriptor::Value;

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Design: return "design";
    case Stage::Quant: return "quant";
    case Stage::Classify: return "classify";
    case Stage::Mine: break;
  }
  return "mine";
}

Stage parse_stage(std::string_view name) {
  for (auto s : {Stage::Design, Stage::Quant, Stage::Classify, Stage::Mine}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown stage '" + std::string(name) + "'");
}

fs::path PipelineRun::input_path(const std::string& name) const {
  auto it = inputs.find(name);
  if (it == inputs.end()) throw MissingInput("no input named '" + name + "' in the run file");
  return base_dir / it->second;
}

namespace {

const std::map<std::string, std::string> kDefaultParams = {
    {"spot_alpha", "0.01"}, {"channel", "combined"},     {"saturation", "65535"},   {"alpha", "0.05"},
    {"min_support", "5"},   {"min_confidence", "0.6"}, {"max_body_length", "1"},
};

// Output file names inside the run directory.
constexpr const char* kLayout = "layout.tsv";
constexpr const char* kArrayMap = "arraymap.tsv";
constexpr const char* kSpots = "spots.tsv";
constexpr const char* kCalls = "calls.tsv";
constexpr const char* kFacts = "facts.tsv";
constexpr const char* kRules = "rules.txt";
constexpr const char* kReport = "report.txt";

int int_field(const Record& r, std::size_t i) {
  if (i >= r.fields.size() || r.fields[i].kind() != Value::Kind::Integer) {
    throw ConfigError(r.keyword + ": field " + std::to_string(i) + " must be an integer");
  }
  return std::stoi(r.fields[i].text());
}

double param_double(const PipelineRun& run, const std::string& key) {
  return parse_double(run.params.at(key), 0);
}

long param_int(const PipelineRun& run, const std::string& key) {
  return static_cast<long>(parse_int(run.params.at(key), 0));
}

Value token_value(const std::string& text) {
  try {
    return Value::from_token(text);
  } catch (const ArgumentError&) {
    return Value::string(text);
  }
}

// What each stage consumes: external inputs by logical name, and files that an
// earlier stage writes into the run directory.
struct StageInputs {
  std::vector<std::string> external;
  std::vector<std::string> optional_external;
  std::vector<std::pair<std::string, Stage>> internal;
};

StageInputs inputs_of(Stage s) {
  switch (s) {
    case Stage::Design: return {{"clones"}, {}, {}};
    case Stage::Quant: return {{"pixels", "mask"}, {}, {}};
    case Stage::Classify: return {{"pairing"}, {}, {{kSpots, Stage::Quant}, {kArrayMap, Stage::Design}}};
    case Stage::Mine: return {{}, {"categories", "hierarchy"}, {{kCalls, Stage::Classify}}};
  }
  return {};
}

class Runner {
 public:
  explicit Runner(const PipelineRun& run) : run_(run) {}

  void check_inputs() const {
    for (auto stage : run_.stages) {
      auto in = inputs_of(stage);
      for (const auto& name : in.external) {
        auto path = run_.input_path(name);
        if (!fs::is_regular_file(path)) {
          throw MissingInput(std::string(to_string(stage)) + ": missing input " + path.string());
        }
      }
      for (const auto& name : in.optional_external) {
        if (!run_.inputs.contains(name)) continue;
        auto path = run_.input_path(name);
        if (!fs::is_regular_file(path)) {
          throw MissingInput(std::string(to_string(stage)) + ": missing input " + path.string());
        }
      }
      for (const auto& [file, producer] : in.internal) {
        bool produced = std::find(run_.stages.begin(), run_.stages.end(), producer) != run_.stages.end();
        auto path = run_.output_dir / file;
        if (!produced && !fs::is_regular_file(path)) {
          throw MissingInput(std::string(to_string(stage)) + ": missing input " + path.string());
        }
      }
    }
  }

  void run(Stage stage) {
    switch (stage) {
      case Stage::Design: design_stage(); break;
      case Stage::Quant: quant_stage(); break;
      case Stage::Classify: classify_stage(); break;
      case Stage::Mine: mine_stage(); break;
    }
  }

  std::string read_input(const std::string& name) {
    auto text = read_file(run_.input_path(name));
    input_digests_[name] = sha256_hex(text);
    return text;
  }

  std::string read_output(const char* file) { return read_file(run_.output_dir / file); }

  void write_output(const std::string& key, const char* file, const std::string& contents) {
    auto path = run_.output_dir / file;
    write_file_atomic(path, contents);
    output_digests_[key] = {file, sha256_hex(contents)};
    written_.push_back(path);
  }

  descriptor::ExperimentDescription manifest() const {
    descriptor::ExperimentDescription m;
    auto add = [&](std::string keyword, std::vector<Value> fields) {
      m.records.push_back({std::move(keyword), std::move(fields)});
    };
    add("EXPERIMENT", {Value::string(run_.experiment.empty() ? "unnamed" : run_.experiment)});
    add("MANIFEST_VERSION", {Value::integer(1)});
    std::vector<Value> stages;
    for (auto s : run_.stages) stages.push_back(Value::string(std::string(to_string(s))));
    add("STAGES", std::move(stages));
    add("SEED", {token_value(std::to_string(run_.seed))});
    add("RNG", {Value::string(std::string(design::kLayoutRngName))});
    if (run_.config) {
      add("PRINTING_CONFIGURATION",
          {Value::string(run_.config->name), Value::integer(run_.config->quadrants),
           Value::integer(run_.config->rows), Value::integer(run_.config->cols), Value::string("QUADRANTS")});
    }
    add("REPLICATES", {Value::integer(run_.replicates)});
    add("ARRAY_TYPES", {Value::integer(run_.array_types)});
    for (const auto& [k, v] : run_.params) add("PARAM", {Value::string(k), token_value(v)});
    for (const auto& [name, path] : run_.inputs) {
      auto it = input_digests_.find(name);
      std::vector<Value> f{Value::string(name), Value::string(path)};
      if (it != input_digests_.end()) f.push_back(Value::string(it->second));
      add("INPUT", std::move(f));
    }
    for (const auto& [key, fd] : output_digests_) {
      add("OUTPUT", {Value::string(key), Value::string(fd.first), Value::string(fd.second)});
    }
    return m;
  }

  const std::vector<fs::path>& written() const { return written_; }

 private:
  void design_stage() {
    if (!run_.config) throw ConfigError("design needs a PRINTING_CONFIGURATION record");
    auto clones = design::read_clone_list(read_input("clones"));
    auto layout = design::generate_layout(clones, *run_.config, run_.replicates, run_.array_types, run_.seed);
    auto report = design::verify_layout(layout);
    if (!report.ok()) throw Error("generated layout failed verification: " + report.violations.front());
    write_output("layout", kLayout, design::export_plate_maps(layout));
    write_output("arraymap", kArrayMap, design::export_array_maps(layout));
  }

  void quant_stage() {
    auto cells = quant::read_grid_cells(read_input("pixels"), read_input("mask"));
    quant::QuantOptions opt;
    opt.alpha = param_double(run_, "spot_alpha");
    opt.channel = quant::parse_channel(run_.params.at("channel"));
    opt.saturation = param_double(run_, "saturation");
    write_output("spots", kSpots, quant::write_spots(quant::quantify(cells, opt)));
  }

  void classify_stage() {
    auto spots = quant::read_spots(read_output(kSpots));
    auto layout = design::import_array_maps(read_output(kArrayMap));
    auto pairing = callsig::parse_pairing(descriptor::parse_description(read_input("pairing")));
    const double alpha = param_double(run_, "alpha");
    std::vector<callsig::ExpressionCall> calls;
    for (const auto& p : pairing) {
      auto ds = callsig::assemble_replicates(spots, layout, p);
      auto c = callsig::classify_all(ds, alpha);
      calls.insert(calls.end(), c.begin(), c.end());
    }
    write_output("calls", kCalls, callsig::write_calls(calls));
  }

  void mine_stage() {
    auto calls = callsig::read_calls(read_output(kCalls));
    std::vector<rulemine::CategoryFact> categories;
    std::vector<rulemine::Containment> hierarchy;
    if (run_.inputs.contains("categories")) categories = rulemine::read_categories(read_input("categories"));
    if (run_.inputs.contains("hierarchy")) hierarchy = rulemine::read_hierarchy(read_input("hierarchy"));
    auto fb = rulemine::build_factbase(calls, categories, hierarchy);
    const auto min_support = param_int(run_, "min_support");
    if (min_support < 1) throw ConfigError("min_support must be at least 1");
    auto language = rulemine::Language::from(fb, static_cast<int>(param_int(run_, "max_body_length")));
    auto rules = rulemine::mine_rules(fb, static_cast<std::size_t>(min_support),
                                      rulemine::parse_confidence(run_.params.at("min_confidence")), language);
    write_output("facts", kFacts, rulemine::write_facts(fb));
    write_output("rules", kRules, rulemine::write_rules(rules));
    write_output("report", kReport, report::render_report(calls, rules, categories, hierarchy));
  }

  const PipelineRun& run_;
  std::map<std::string, std::string> input_digests_;
  std::map<std::string, std::pair<std::string, std::string>> output_digests_;
  std::vector<fs::path> written_;
};

}  // namespace

PipelineRun parse_run(const descriptor::ExperimentDescription& desc, const fs::path& base_dir) {
  PipelineRun run;
  run.base_dir = base_dir;
  run.experiment = desc.name();
  run.params = kDefaultParams;
  run.output_dir = base_dir / "out";
  std::set<Stage> stages;
  for (const auto& r : desc.records) {
    if (r.keyword == "STAGES") {
      for (const auto& f : r.fields) stages.insert(parse_stage(f.text()));
    } else if (r.keyword == "SEED") {
      if (r.fields.size() != 1 || r.fields[0].kind() != Value::Kind::Integer) {
        throw ConfigError("SEED takes one non-negative integer");
      }
      run.seed = std::stoull(r.fields[0].text());
    } else if (r.keyword == "PRINTING_CONFIGURATION") {
      if (r.fields.size() < 4) throw ConfigError("PRINTING_CONFIGURATION needs name quadrants rows cols");
      run.config = design::PrintingConfiguration{r.fields[0].text(), int_field(r, 1), int_field(r, 2), int_field(r, 3)};
    } else if (r.keyword == "REPLICATES") {
      run.replicates = int_field(r, 0);
    } else if (r.keyword == "ARRAY_TYPES") {
      run.array_types = int_field(r, 0);
    } else if (r.keyword == "INPUT") {
      if (r.fields.size() != 2) throw ConfigError("INPUT takes a name and a path");
      run.inputs[r.fields[0].text()] = r.fields[1].text();
    } else if (r.keyword == "OUTPUT_DIR") {
      if (r.fields.size() != 1) throw ConfigError("OUTPUT_DIR takes one path");
      run.output_dir = base_dir / r.fields[0].text();
    } else if (r.keyword == "PARAM") {
      if (r.fields.size() != 2) throw ConfigError("PARAM takes a key and a value");
      const auto& key = r.fields[0].text();
      if (!kDefaultParams.contains(key)) throw ConfigError("unknown parameter '" + key + "'");
      run.params[key] = r.fields[1].text();
    }
    // Other records (DYE, TISSUE, ...) describe the experiment and are carried along.
  }
  run.stages.assign(stages.begin(), stages.end());
  return run;
}

PipelineRun load_run(const fs::path& run_file) {
  if (!fs::is_regular_file(run_file)) throw MissingInput("run file " + run_file.string() + " does not exist");
  return parse_run(descriptor::parse_description(read_file(run_file)), run_file.parent_path());
}

RunOutcome run_pipeline(const PipelineRun& run) {
  RunOutcome outcome;
  Runner runner(run);
  try {
    runner.check_inputs();
  } catch (const MissingInput& e) {
    outcome.exit_code = 2;
    outcome.message = e.what();
    return outcome;
  }
  fs::create_directories(run.output_dir);

  for (auto stage : run.stages) {
    const std::string name(to_string(stage));
    try {
      runner.run(stage);
    } catch (const MissingInput& e) {
      outcome.exit_code = 2;
      outcome.message = e.what();
    } catch (const AssemblyError& e) {
      outcome.exit_code = 2;
      outcome.message = name + ": " + e.what();
    } catch (const std::exception& e) {
      outcome.exit_code = 1;
      outcome.message = name + ": " + e.what();
    }
    if (outcome.exit_code != 0) {
      outcome.written = runner.written();
      return outcome;
    }
  }

  auto manifest_path = run.output_dir / kManifestName;
  write_file_atomic(manifest_path, descriptor::serialize_description(runner.manifest()));
  outcome.written = runner.written();
  outcome.written.push_back(manifest_path);
  outcome.message = "ok";
  return outcome;
}

}  // namespace espresso::pipeline
