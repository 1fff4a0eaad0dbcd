#include "sqa/cli.hpp"

#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sqa/embedding_io.hpp"
#include "sqa/errors.hpp"
#include "sqa/evaluation.hpp"
#include "sqa/experiments.hpp"
#include "sqa/pooling_regressor.hpp"
#include "sqa/synthcorpus.hpp"
#include "text_util.hpp"

namespace sqa::cli {

namespace {

using Json = nlohmann::ordered_json;

struct RunConfig {
  std::string manifest;
  std::string test_manifest;
  std::string valid_manifest;
  std::string model;
  std::string model_intelligibility;
  std::string model_severity;
  std::string out;
  std::string task = "intelligibility";
  std::uint64_t seed = 0;

  // TrainConfig, one flag per field.
  std::size_t epochs = 20;
  std::size_t batch_size = 1;
  double learning_rate = 7e-6;
  std::string optimizer = "adam";
  std::string model_selection = "best_valid";
  bool clamp_predictions = false;
  std::size_t hidden = 1024;
  std::string activation = "leaky_relu";

  std::size_t k = 10;
  std::size_t jobs = 1;

  std::string layout = "train";
  std::size_t n = 105;
  std::size_t dim = 64;
  double min_duration = 20.0;
  double max_duration = 40.0;
  double frame_rate = kDefaultFrameRateHz;
  double label_noise = 0.3;
  double noise_scale = 0.5;
  double content_scale = 0.5;
  double score_low = 0.0;
  double score_high = 10.0;
  std::string label_scale = "none";
  std::string corpus_tag = "SYNTH";

  double duration = 2.0;
  std::string durations = "1,2,5,10,20";
  bool all_speakers = false;

  double source_min = 0.0;
  double source_max = 3.0;
  bool inverted = false;
};

std::string key_of(std::string flag) {
  for (char& c : flag) {
    if (c == '-') c = '_';
  }
  return flag;
}

std::string flag_of(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

/// Registers options against RunConfig and remembers how to echo each one
/// into config.json.
class Registry {
 public:
  template <typename T>
  CLI::Option* option(CLI::App* sub, const std::string& name, T& target, const std::string& help) {
    auto* opt = sub->add_option("--" + name, target, help)->capture_default_str();
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    echo_[sub].push_back({key_of(name), [&target] { return Json(target); }});
    return opt;
  }

  CLI::Option* flag(CLI::App* sub, const std::string& name, bool& target, const std::string& help) {
    auto* opt = sub->add_flag("--" + name, target, help);
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    echo_[sub].push_back({key_of(name), [&target] { return Json(target); }});
    return opt;
  }

  Json resolved(CLI::App* sub) const {
    Json j;
    j["subcommand"] = sub->get_name();
    for (const auto& [key, value] : echo_.at(sub)) j[key] = value();
    return j;
  }

 private:
  struct Echo {
    std::string key;
    std::function<Json()> value;
  };
  std::map<CLI::App*, std::vector<Echo>> echo_;
};

const std::vector<std::string> kSubcommands = {"validate",  "synth", "train",       "evaluate",   "kfold",
                                               "segments",  "sweep", "crossdomain", "consistency"};

std::string json_scalar_token(const Json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_unsigned()) return std::to_string(value.get<std::uint64_t>());
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  if (value.is_number_float()) return detail::format_double(value.get<double>());
  throw CLI::ValidationError("config", "unsupported value type: " + value.dump());
}

// Replaces `--config file.json` by the file's key/value pairs placed right
// after the subcommand, so that explicit flags (parsed later) win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a path");
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!config_path) return args;

  Json config;
  try {
    config = Json::parse(detail::read_text_file(*config_path));
  } catch (const std::exception& e) {
    throw CLI::ValidationError("--config", std::string("cannot read config: ") + e.what());
  }
  if (!config.is_object()) throw CLI::ValidationError("--config", "config must be a JSON object");

  std::size_t sub_pos = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), args[i]) != kSubcommands.end()) {
      sub_pos = i;
      break;
    }
  }
  if (sub_pos == args.size()) {
    if (!config.contains("subcommand")) throw CLI::CallForHelp();
    args.insert(args.begin(), config["subcommand"].get<std::string>());
    sub_pos = 0;
  }

  std::vector<std::string> tokens;
  for (const auto& [key, value] : config.items()) {
    if (key == "subcommand") continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag_of(key));
      continue;
    }
    tokens.push_back(flag_of(key));
    tokens.push_back(json_scalar_token(value));
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos + 1), tokens.begin(), tokens.end());
  return args;
}

TrainConfig train_config(const RunConfig& rc) {
  TrainConfig cfg;
  cfg.epochs = rc.epochs;
  cfg.batch_size = rc.batch_size;
  cfg.learning_rate = rc.learning_rate;
  cfg.seed = rc.seed;
  cfg.optimizer = parse_optimizer(rc.optimizer);
  cfg.model_selection = parse_model_selection(rc.model_selection);
  cfg.clamp_predictions = rc.clamp_predictions;
  cfg.hidden = rc.hidden;
  cfg.activation = parse_activation(rc.activation);
  return cfg;
}

std::vector<double> parse_durations(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto value = detail::parse_double(item);
    if (!value || !(*value > 0.0)) throw CLI::ValidationError("--durations", "bad duration '" + item + "'");
    out.push_back(*value);
  }
  if (out.empty()) throw CLI::ValidationError("--durations", "no durations given");
  return out;
}

std::string file_token(std::string text) {
  for (char& c : text) {
    if (c == '/' || c == '\\' || c == ' ' || c == ':') c = '_';
  }
  return text;
}

// Segment file stem per record: speaker id, or speaker-utterance when the
// speaker has several utterances.
std::vector<std::string> segment_stems(const CorpusManifest& manifest) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : manifest.records) ++counts[r.speaker_id];
  std::vector<std::string> stems;
  for (const auto& r : manifest.records) {
    stems.push_back(file_token(counts[r.speaker_id] > 1 ? r.speaker_id + "-" + r.utterance_id : r.speaker_id));
  }
  return stems;
}

std::filesystem::path out_dir(const RunConfig& rc) { return std::filesystem::path(rc.out); }

void write_json(const std::filesystem::path& path, const Json& j) { detail::write_text_file(path, j.dump(2) + "\n"); }

int cmd_validate(const RunConfig& rc) {
  const auto manifest = load_manifest(rc.manifest);
  const auto report = validate_corpus(manifest);
  Json checks = Json::array();
  for (const auto& c : report.checks) {
    if (!c.ok) std::cout << "FAIL " << c.utterance_id << ": " << c.reason << "\n";
    checks.push_back({{"utterance_id", c.utterance_id}, {"ok", c.ok}, {"reason", c.reason}});
  }
  std::cout << report.checks.size() << " records, " << report.failures() << " failures";
  if (report.dim) std::cout << ", D=" << *report.dim;
  std::cout << "\n";
  if (!rc.out.empty()) {
    Json j;
    j["records"] = report.checks.size();
    j["failures"] = report.failures();
    j["dim"] = report.dim ? Json(*report.dim) : Json(nullptr);
    j["checks"] = std::move(checks);
    write_json(out_dir(rc) / "validation.json", j);
  }
  return report.all_ok() ? kExitOk : kExitData;
}

int cmd_synth(const RunConfig& rc) {
  SynthConfig cfg;
  cfg.n_speakers = rc.n;
  cfg.dim = rc.dim;
  cfg.min_duration_s = rc.min_duration;
  cfg.max_duration_s = rc.max_duration;
  cfg.frame_rate = static_cast<float>(rc.frame_rate);
  cfg.seed = rc.seed;
  cfg.label_noise_std = rc.label_noise;
  cfg.noise_scale = rc.noise_scale;
  cfg.content_scale = rc.content_scale;
  cfg.scores = {rc.score_low, rc.score_high};
  cfg.corpus_tag = rc.corpus_tag;
  if (rc.label_scale == "ahn") cfg.label_scale = ScaleMap{0.0, 3.0, true};
  const auto corpus = gen_corpus(cfg, parse_layout(rc.layout), out_dir(rc));
  std::cout << "wrote " << corpus.manifest.records.size() << " records to "
            << (out_dir(rc) / "manifest.csv").string() << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& rc) {
  const Task task = parse_task(rc.task);
  const auto train_corpus = load_pooled(load_manifest(rc.manifest), task);
  std::vector<PooledUtterance> valid_corpus;
  if (!rc.valid_manifest.empty()) {
    valid_corpus = load_pooled(load_manifest(rc.valid_manifest), task);
    check_disjoint_speakers(train_corpus, valid_corpus);
  }
  const auto cfg = train_config(rc);
  const auto train_set = to_samples(train_corpus);
  const auto valid_set = to_samples(valid_corpus);
  const auto result = train(train_set, valid_set, cfg);

  save_head(result.head, out_dir(rc) / "model.bin");
  write_loss_curve(result.curve, out_dir(rc) / "loss_curve.csv");
  Json j;
  j["selected_epoch"] = result.selected_epoch;
  j["train_mse"] = mean_squared_error(result.head, train_set);
  if (!valid_set.empty()) j["valid_mse"] = mean_squared_error(result.head, valid_set);
  write_json(out_dir(rc) / "train_summary.json", j);
  std::cout << "trained on " << train_set.size() << " utterances, selected epoch " << result.selected_epoch << "\n";
  return kExitOk;
}

int cmd_evaluate(const RunConfig& rc) {
  const auto head = load_head(rc.model);
  const auto corpus = load_pooled(load_manifest(rc.manifest), parse_task(rc.task));
  const auto pairs = predict_pairs(head, corpus, rc.clamp_predictions);
  const auto report = evaluate(pairs);
  emit_report(report, pairs, out_dir(rc));
  std::cout << "n=" << report.n << " mse=" << detail::format_fixed(report.mse, 4)
            << " rho=" << detail::format_fixed(report.spearman_rho, 4) << " p=" << report.p_value << "\n";
  return kExitOk;
}

int cmd_kfold(const RunConfig& rc) {
  const Task task = parse_task(rc.task);
  const auto train_corpus = load_pooled(load_manifest(rc.manifest), task);
  const auto test_corpus = load_pooled(load_manifest(rc.test_manifest), task);
  const auto result = run_kfold(train_corpus, test_corpus, train_config(rc), {rc.k, rc.jobs});
  write_kfold_outputs(result, out_dir(rc));
  for (const auto& fold : result.folds) {
    std::cout << "fold " << fold.split.fold_index << ": test mse=" << detail::format_fixed(fold.test_report.mse, 4)
              << " rho=" << detail::format_fixed(fold.test_report.spearman_rho, 4) << "\n";
  }
  std::cout << task_name(task) << " MSE " << result.aggregate.render() << "\n";
  return kExitOk;
}

int cmd_segments(const RunConfig& rc) {
  const auto head = load_head(rc.model);
  const auto manifest = load_manifest(rc.manifest);
  const auto stems = segment_stems(manifest);
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto matrix = read_embedding(manifest.resolve(manifest.records[i]));
    const auto scores = segment_predictions(head, matrix, rc.duration, rc.clamp_predictions);
    write_segment_scores(scores,
                         out_dir(rc) / ("segments_" + stems[i] + "_" + format_duration(rc.duration) + ".csv"));
  }
  std::cout << "wrote segment scores for " << manifest.records.size() << " utterances\n";
  return kExitOk;
}

int cmd_sweep(const RunConfig& rc) {
  const Task task = parse_task(rc.task);
  const auto head = load_head(rc.model);
  const auto manifest = load_manifest(rc.manifest);
  const auto durations = parse_durations(rc.durations);
  const auto stems = segment_stems(manifest);

  std::vector<std::size_t> chosen;
  std::vector<std::string> groups;
  if (rc.all_speakers) {
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
      const auto target = task_score(manifest.records[i], task);
      if (!target) throw DataError("utterance " + manifest.records[i].utterance_id + " has no score");
      chosen.push_back(i);
      groups.emplace_back(nearest_group(*target, task));
    }
  } else {
    chosen = select_representatives(manifest.records, task);
    for (const auto& anchor : kRepresentativeAnchors) groups.emplace_back(anchor.group);
  }

  std::vector<SweepInput> inputs;
  std::vector<std::string> input_stems;
  for (std::size_t c = 0; c < chosen.size(); ++c) {
    const auto& record = manifest.records[chosen[c]];
    inputs.push_back({record.speaker_id, groups[c], read_embedding(manifest.resolve(record)), *task_score(record, task)});
    input_stems.push_back(stems[chosen[c]]);
  }
  const auto reports = duration_sweep(head, inputs, durations);
  write_duration_sweep(reports, out_dir(rc) / "duration_sweep.csv");
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const auto& stem = input_stems[r / durations.size()];
    write_segment_scores(reports[r].segment_scores,
                         out_dir(rc) / ("segments_" + stem + "_" + format_duration(reports[r].duration_s) + ".csv"));
  }
  std::cout << "swept " << inputs.size() << " speakers over " << durations.size() << " durations\n";
  return kExitOk;
}

int cmd_crossdomain(const RunConfig& rc) {
  const auto head = load_head(rc.model);
  const auto corpus = load_pooled(load_manifest(rc.manifest), parse_task(rc.task));
  const ScaleMap map{rc.source_min, rc.source_max, rc.inverted};
  const auto result = cross_domain_eval(head, corpus, map, rc.clamp_predictions);
  emit_report(result.report, result.pairs, out_dir(rc));
  std::cout << "n=" << result.report.n << " mse=" << detail::format_fixed(result.report.mse, 4) << "\n";
  return kExitOk;
}

int cmd_consistency(const RunConfig& rc) {
  if (rc.model_intelligibility.empty() && rc.model_severity.empty()) {
    throw CLI::RequiredError("--model-intelligibility or --model-severity");
  }
  const auto corpus = load_pooled(load_manifest(rc.manifest), std::nullopt);
  Json j;
  for (const auto& [task, path] : {std::pair{Task::kIntelligibility, rc.model_intelligibility},
                                   std::pair{Task::kSeverity, rc.model_severity}}) {
    if (path.empty()) continue;
    const auto result = content_consistency(load_head(path), corpus);
    j[std::string(task_name(task))] = {{"n", result.speakers.size()},
                                       {"content_a", result.content_a},
                                       {"content_b", result.content_b},
                                       {"spearman_rho", result.correlation.rho},
                                       {"p_value", result.correlation.p_value},
                                       {"p_exact", result.correlation.exact},
                                       {"speakers", result.speakers},
                                       {"predictions_a", result.predictions_a},
                                       {"predictions_b", result.predictions_b}};
    std::cout << task_name(task) << ": rho=" << detail::format_fixed(result.correlation.rho, 4)
              << " p=" << result.correlation.p_value << "\n";
  }
  write_json(out_dir(rc) / "content_consistency.json", j);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& raw_args) {
  RunConfig rc;
  Registry reg;
  CLI::App app{"Whole-utterance speech quality regression toolkit", "sqa"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  const std::vector<std::string> tasks = {"intelligibility", "severity"};
  auto add_out = [&](CLI::App* sub, bool required) {
    auto* opt = reg.option(sub, "out", rc.out, "Output directory");
    if (required) opt->required();
  };
  auto add_task = [&](CLI::App* sub) {
    reg.option(sub, "task", rc.task, "intelligibility | severity")->check(CLI::IsMember(tasks));
  };
  auto add_train_flags = [&](CLI::App* sub) {
    reg.option(sub, "epochs", rc.epochs, "Training epochs");
    reg.option(sub, "batch-size", rc.batch_size, "Samples per optimizer step")->check(CLI::PositiveNumber);
    reg.option(sub, "learning-rate", rc.learning_rate, "Optimizer learning rate")->check(CLI::PositiveNumber);
    reg.option(sub, "seed", rc.seed, "Seed for every random stream of the run");
    reg.option(sub, "optimizer", rc.optimizer, "adam | sgd")->check(CLI::IsMember({"adam", "sgd"}));
    reg.option(sub, "model-selection", rc.model_selection, "best_valid | last_epoch")
        ->check(CLI::IsMember({"best_valid", "last_epoch"}));
    reg.flag(sub, "clamp-predictions", rc.clamp_predictions, "Clip predictions to [0,10]");
    reg.option(sub, "hidden", rc.hidden, "Hidden layer width")->check(CLI::PositiveNumber);
    reg.option(sub, "activation", rc.activation, "leaky_relu | linear")
        ->check(CLI::IsMember({"leaky_relu", "linear"}));
  };

  auto* validate = app.add_subcommand("validate", "Check a manifest and its embedding files");
  reg.option(validate, "manifest", rc.manifest, "Manifest CSV")->required();
  add_out(validate, false);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic embedding corpus");
  reg.option(synth, "layout", rc.layout, "train | test | paired")->check(CLI::IsMember({"train", "test", "paired"}));
  reg.option(synth, "n", rc.n, "Number of speakers")->check(CLI::PositiveNumber);
  reg.option(synth, "dim", rc.dim, "Embedding dimension")->check(CLI::PositiveNumber);
  reg.option(synth, "seed", rc.seed, "Generator seed");
  reg.option(synth, "min-duration", rc.min_duration, "Shortest utterance (s)")->check(CLI::PositiveNumber);
  reg.option(synth, "max-duration", rc.max_duration, "Longest utterance (s)")->check(CLI::PositiveNumber);
  reg.option(synth, "frame-rate", rc.frame_rate, "Frames per second")->check(CLI::PositiveNumber);
  reg.option(synth, "label-noise", rc.label_noise, "Std of label noise")->check(CLI::NonNegativeNumber);
  reg.option(synth, "noise-scale", rc.noise_scale, "Std of per-frame noise")->check(CLI::NonNegativeNumber);
  reg.option(synth, "content-scale", rc.content_scale, "Std of the per-block content offset")
      ->check(CLI::NonNegativeNumber);
  reg.option(synth, "score-low", rc.score_low, "Lowest true score")->check(CLI::Range(0.0, 10.0));
  reg.option(synth, "score-high", rc.score_high, "Highest true score")->check(CLI::Range(0.0, 10.0));
  reg.option(synth, "label-scale", rc.label_scale, "none | ahn (inverted 0-3 labels)")
      ->check(CLI::IsMember({"none", "ahn"}));
  reg.option(synth, "corpus-tag", rc.corpus_tag, "corpus_tag column value");
  add_out(synth, true);

  auto* train_cmd = app.add_subcommand("train", "Train one regression head");
  reg.option(train_cmd, "manifest", rc.manifest, "Training manifest")->required();
  reg.option(train_cmd, "valid-manifest", rc.valid_manifest, "Validation manifest (optional)");
  add_task(train_cmd);
  add_train_flags(train_cmd);
  add_out(train_cmd, true);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a corpus with a trained head");
  reg.option(evaluate_cmd, "model", rc.model, "Model file")->required();
  reg.option(evaluate_cmd, "manifest", rc.manifest, "Manifest CSV")->required();
  add_task(evaluate_cmd);
  reg.flag(evaluate_cmd, "clamp-predictions", rc.clamp_predictions, "Clip predictions to [0,10]");
  add_out(evaluate_cmd, true);

  auto* kfold = app.add_subcommand("kfold", "Speaker-level k-fold training against a fixed test corpus");
  reg.option(kfold, "manifest", rc.manifest, "Training corpus manifest")->required();
  reg.option(kfold, "test-manifest", rc.test_manifest, "Fixed test corpus manifest")->required();
  add_task(kfold);
  reg.option(kfold, "k", rc.k, "Number of folds")->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  reg.option(kfold, "jobs", rc.jobs, "Folds trained in parallel")->check(CLI::PositiveNumber);
  add_train_flags(kfold);
  add_out(kfold, true);

  auto* segments = app.add_subcommand("segments", "Score fixed-duration segments of each utterance");
  reg.option(segments, "model", rc.model, "Model file")->required();
  reg.option(segments, "manifest", rc.manifest, "Manifest CSV")->required();
  reg.option(segments, "duration", rc.duration, "Segment duration (s)")->check(CLI::PositiveNumber);
  reg.flag(segments, "clamp-predictions", rc.clamp_predictions, "Clip predictions to [0,10]");
  add_out(segments, true);

  auto* sweep = app.add_subcommand("sweep", "Segment-duration sweep with absolute errors");
  reg.option(sweep, "model", rc.model, "Model file")->required();
  reg.option(sweep, "manifest", rc.manifest, "Manifest CSV")->required();
  add_task(sweep);
  reg.option(sweep, "durations", rc.durations, "Comma-separated durations (s)");
  reg.flag(sweep, "all-speakers", rc.all_speakers, "Sweep every record instead of severe/mild/control picks");
  add_out(sweep, true);

  auto* crossdomain = app.add_subcommand("crossdomain", "Evaluate on a corpus rated on another scale");
  reg.option(crossdomain, "model", rc.model, "Model file")->required();
  reg.option(crossdomain, "manifest", rc.manifest, "Manifest CSV (scores on the source scale)")->required();
  add_task(crossdomain);
  reg.option(crossdomain, "source-min", rc.source_min, "Lowest value of the source scale");
  reg.option(crossdomain, "source-max", rc.source_max, "Highest value of the source scale");
  reg.flag(crossdomain, "inverted", rc.inverted, "Source scale runs from healthy (min) to severe (max)");
  reg.flag(crossdomain, "clamp-predictions", rc.clamp_predictions, "Clip predictions to [0,10]");
  add_out(crossdomain, true);

  auto* consistency = app.add_subcommand("consistency", "Prediction agreement across two reading texts");
  reg.option(consistency, "model-intelligibility", rc.model_intelligibility, "Intelligibility model file");
  reg.option(consistency, "model-severity", rc.model_severity, "Severity model file");
  reg.option(consistency, "manifest", rc.manifest, "Paired manifest CSV")->required();
  add_out(consistency, true);

  try {
    const auto args = expand_config(raw_args);
    std::vector<const char*> argv = {"sqa"};
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    if (!rc.out.empty()) write_json(out_dir(rc) / "config.json", reg.resolved(chosen));
    const std::string name = chosen->get_name();
    if (name == "validate") return cmd_validate(rc);
    if (name == "synth") return cmd_synth(rc);
    if (name == "train") return cmd_train(rc);
    if (name == "evaluate") return cmd_evaluate(rc);
    if (name == "kfold") return cmd_kfold(rc);
    if (name == "segments") return cmd_segments(rc);
    if (name == "sweep") return cmd_sweep(rc);
    if (name == "crossdomain") return cmd_crossdomain(rc);
    if (name == "consistency") return cmd_consistency(rc);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace sqa::cli
