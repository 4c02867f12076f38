#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "constest/analysis.hpp"
#include "constest/contrastive.hpp"
#include "constest/error.hpp"
#include "constest/external_scorer.hpp"
#include "constest/io.hpp"
#include "constest/ngram_model.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace constest;
using constest::cli::RunRecord;

namespace {

int dispatch(std::vector<std::string> args);

std::ofstream open_output(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

void warn(const std::string& message) {
  std::cerr << ordered_json{{"warning", {{"message", message}}}}.dump() << '\n';
}

// "default", an inventory JSON file, or a comma-separated list of ids drawn
// from the base inventory.
TestSet resolve_tests(const std::string& spec, const std::string& inventory_path) {
  TestSet base = inventory_path.empty() ? default_inventory() : load_inventory(inventory_path);
  if (spec.empty() || spec == "default") return base;
  if (fs::is_regular_file(spec)) return load_inventory(spec);
  std::vector<std::string> ids;
  std::stringstream ss(spec);
  for (std::string id; std::getline(ss, id, ',');) {
    if (!id.empty()) ids.push_back(id);
  }
  return base.subset(ids);
}

struct ScorerFlags {
  std::string model_path;
  std::string external;
  double handshake_timeout = 60;
  double batch_timeout = 300;
  bool markup = false;
  bool no_markup = false;

  void add_to(CLI::App* cmd) {
    auto* m = cmd->add_option("--model", model_path, "built-in model file");
    auto* e = cmd->add_option("--external", external, "external scorer command line");
    m->excludes(e);
    cmd->add_option("--handshake-timeout", handshake_timeout, "seconds")->capture_default_str();
    cmd->add_option("--batch-timeout", batch_timeout, "seconds")->capture_default_str();
    auto* on = cmd->add_flag("--markup", markup, "wrap the substituted span in markers");
    auto* off = cmd->add_flag("--no-markup", no_markup, "score plain substitutions");
    on->excludes(off);
  }
};

// Owns whichever scorer the flags select.
struct ScorerHandle {
  std::optional<NGramModel> model;
  std::optional<ExternalScorer> external;
  bool use_markup = false;

  Scorer& get() {
    if (model) return *model;
    return *external;
  }
  void close() {
    if (external && external->connected()) external->shutdown();
  }
};

ScorerHandle open_scorer(const ScorerFlags& f, RunRecord& run) {
  ScorerHandle h;
  if (!f.model_path.empty()) {
    h.model = load_model(f.model_path);
    run.inputs.push_back(f.model_path);
    h.use_markup = h.model->use_markup();
    if ((f.markup && !h.use_markup) || (f.no_markup && h.use_markup)) {
      throw ConfigError(std::string("scheme mismatch: model was trained ") +
                        (h.use_markup ? "with" : "without") + " span markers");
    }
  } else if (!f.external.empty()) {
    ExternalScorerOptions opts;
    opts.handshake_timeout = std::chrono::milliseconds(static_cast<long>(f.handshake_timeout * 1000));
    opts.batch_timeout = std::chrono::milliseconds(static_cast<long>(f.batch_timeout * 1000));
    h.external = ExternalScorer::connect_shell(f.external, opts);
    h.use_markup = f.markup;
  } else {
    throw ConfigError("one of --model or --external is required");
  }
  return h;
}

void print_trace(const TrainResult& result) {
  std::cout << "epoch  train_loss  dev_metric\n";
  for (const auto& r : result.trace) {
    std::cout << std::setw(5) << r.epoch << "  " << std::fixed << std::setprecision(6)
              << std::setw(10) << r.train_loss << "  " << std::setw(10) << r.dev_metric
              << (r.epoch == result.best_epoch ? "  *" : "") << '\n';
  }
  std::cout.unsetf(std::ios::floatfield);
}

// ---- commands -------------------------------------------------------------

struct MakePairs {
  std::string treebank, out;
  std::uint64_t seed = 0;
  std::size_t min_tokens = 3;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("make-pairs", "sample one (constituent, distractor) pair per tree");
    c->add_option("--treebank", treebank, "bracketed file or directory")->required();
    c->add_option("--out", out, "EvalPair JSONL")->required();
    c->add_option("--seed", seed)->capture_default_str();
    c->add_option("--min-tokens", min_tokens)->capture_default_str();
  }
  void run(RunRecord& rec) const {
    const auto trees = load_treebank(treebank);
    const auto pairs = build_eval_set(trees, seed, min_tokens);
    auto os = open_output(out);
    write_pairs_jsonl(os, pairs);
    os.close();
    rec.seed = seed;
    rec.inputs = {treebank};
    rec.outputs = {out};
    rec.extra = {{"trees", trees.size()}, {"pairs", pairs.size()}};
    std::cout << pairs.size() << " pairs from " << trees.size() << " trees\n";
  }
};

struct ExtractText {
  std::string treebank, out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("extract-text", "write treebank sentences one per line");
    c->add_option("--treebank", treebank)->required();
    c->add_option("--out", out)->required();
  }
  void run(RunRecord& rec) const {
    const auto trees = load_treebank(treebank);
    auto os = open_output(out);
    for (const auto& t : trees) os << join(t.sentence.tokens) << '\n';
    os.close();
    rec.inputs = {treebank};
    rec.outputs = {out};
    rec.extra = {{"sentences", trees.size()}};
    std::cout << trees.size() << " sentences\n";
  }
};

struct BuildData {
  std::string corpus, scheme, tests = "default", inventory, out, occurrence = "first";
  std::uint64_t seed = 0;
  std::size_t span_min = 2, span_max = 4, max_positives = 0;
  bool no_case_fold = false;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("build-data", "build a contrastive or labeled dataset");
    c->add_option("--corpus", corpus, "one sentence per line, or a labeled TSV")->required();
    c->add_option("--scheme", scheme, "focused | nonfocused | labeled")->required();
    c->add_option("--tests", tests, "default, inventory file, or id list")->capture_default_str();
    c->add_option("--inventory", inventory, "inventory JSON used as the id base");
    c->add_option("--seed", seed)->capture_default_str();
    c->add_option("--out", out)->required();
    c->add_option("--span-min", span_min)->capture_default_str();
    c->add_option("--span-max", span_max)->capture_default_str();
    c->add_option("--max-positives", max_positives, "0 keeps every sentence")->capture_default_str();
    c->add_option("--occurrence", occurrence, "first | random")->capture_default_str();
    c->add_flag("--no-case-fold", no_case_fold, "match the sentence-initial token exactly");
  }
  void run(RunRecord& rec) const {
    const Scheme s = parse_scheme(scheme);
    Dataset ds;
    if (s == Scheme::labeled) {
      ds = load_labeled_tsv(corpus);
    } else {
      const auto sentences = load_corpus(corpus);
      const auto set = resolve_tests(tests, inventory);
      BuildOptions opts;
      opts.span_len_min = span_min;
      opts.span_len_max = span_max;
      if (max_positives > 0) opts.max_positives = max_positives;
      if (occurrence == "random") {
        opts.occurrence = OccurrenceChoice::random;
      } else if (occurrence != "first") {
        throw ConfigError("unknown occurrence choice '" + occurrence + "'");
      }
      opts.match.fold_initial_case = !no_case_fold;
      opts.corpus_name = corpus;
      ds = s == Scheme::focused ? build_focused(sentences, set, seed, opts)
                                : build_nonfocused(sentences, set, seed, opts);
      if (ds.instances.empty()) warn("no pro-form occurrences in " + corpus + "; dataset is empty");
    }
    auto os = open_output(out);
    write_dataset_jsonl(os, ds);
    os.close();
    rec.seed = seed;
    rec.inputs = {corpus};
    if (!inventory.empty()) rec.inputs.push_back(inventory);
    rec.outputs = {out};
    rec.extra = {{"instances", ds.instances.size()},
                 {"positives", ds.count_label(1)},
                 {"negatives", ds.count_label(0)}};
    std::cout << ds.instances.size() << " instances (" << ds.count_label(1) << " positive, "
              << ds.count_label(0) << " negative)\n";
  }
};

struct Train {
  std::string data, dev_pairs, dev_data, out, scorer = "builtin", tests = "default", inventory;
  std::string dev_metric = "pair_accuracy", dev_strategy = "maximum";
  int epochs = 10;
  std::uint64_t seed = 0;
  double lr = 0.1, l2 = 1e-6;
  int hash_bits = 20, ngram_min = 1, ngram_max = 3;
  bool markup = false, no_markup = false;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("train", "train the built-in n-gram scorer");
    c->add_option("--data", data, "Dataset JSONL")->required();
    c->add_option("--dev-pairs", dev_pairs, "EvalPair JSONL for epoch selection");
    c->add_option("--dev-data", dev_data, "Dataset JSONL for classification_accuracy");
    c->add_option("--dev-metric", dev_metric, "pair_accuracy | classification_accuracy")
        ->capture_default_str();
    c->add_option("--dev-strategy", dev_strategy)->capture_default_str();
    c->add_option("--tests", tests)->capture_default_str();
    c->add_option("--inventory", inventory);
    c->add_option("--epochs", epochs)->capture_default_str();
    c->add_option("--seed", seed)->capture_default_str();
    c->add_option("--out", out, "model file")->required();
    c->add_option("--scorer", scorer)->capture_default_str();
    c->add_option("--lr", lr)->capture_default_str();
    c->add_option("--l2", l2)->capture_default_str();
    c->add_option("--hash-bits", hash_bits)->capture_default_str();
    c->add_option("--ngram-min", ngram_min)->capture_default_str();
    c->add_option("--ngram-max", ngram_max)->capture_default_str();
    auto* on = c->add_flag("--markup", markup, "require marker-aware (focused) data");
    auto* off = c->add_flag("--no-markup", no_markup, "require marker-free data");
    on->excludes(off);
  }
  void run(RunRecord& rec) const {
    if (scorer != "builtin") {
      throw ConfigError("--scorer " + scorer + ": only the builtin scorer trains here");
    }
    if (hash_bits < 10 || hash_bits > 30) throw ConfigError("--hash-bits must be in [10, 30]");
    const Dataset train_set = load_dataset(data);
    const bool focused = train_set.scheme == Scheme::focused;
    if ((no_markup && focused) || (markup && !focused)) {
      throw ConfigError("scheme mismatch: " + to_string(train_set.scheme) + " data evaluated " +
                        (markup ? "with" : "without") + " markers");
    }
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.learning_rate = lr;
    cfg.seed = seed;
    cfg.hash_dim = 1u << hash_bits;
    cfg.l2 = l2;
    cfg.dev_metric = parse_dev_metric(dev_metric);
    cfg.ngram_min = ngram_min;
    cfg.ngram_max = ngram_max;

    rec.seed = seed;
    rec.inputs = {data};
    DevEvaluator dev;
    if (cfg.dev_metric == DevMetric::pair_accuracy) {
      if (!dev_pairs.empty()) {
        dev = pair_accuracy_evaluator(load_pairs(dev_pairs), resolve_tests(tests, inventory),
                                      parse_strategy(dev_strategy));
        rec.inputs.push_back(dev_pairs);
      } else {
        warn("no --dev-pairs; keeping the last epoch");
      }
    } else {
      if (dev_data.empty()) throw ConfigError("classification_accuracy needs --dev-data");
      Dataset held_out = load_dataset(dev_data);
      if (held_out.scheme != train_set.scheme) {
        throw ConfigError("scheme mismatch: dev data is " + to_string(held_out.scheme) +
                          ", training data is " + to_string(train_set.scheme));
      }
      dev = classification_accuracy_evaluator(std::move(held_out));
      rec.inputs.push_back(dev_data);
    }

    const auto result = train(train_set, dev, cfg);
    save_model(result.model, out);
    rec.outputs = {out};
    ordered_json trace = ordered_json::array();
    for (const auto& r : result.trace) {
      trace.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"dev_metric", r.dev_metric}});
    }
    rec.extra = {{"best_epoch", result.best_epoch},
                 {"dev_metric", dev ? to_string(cfg.dev_metric) : "epoch"},
                 {"trace", trace}};
    print_trace(result);
  }
};

struct Evaluate {
  ScorerFlags scorer;
  std::string pairs, strategy = "maximum", tests = "default", inventory, out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("evaluate", "pair accuracy of a scorer");
    scorer.add_to(c);
    c->add_option("--pairs", pairs)->required();
    c->add_option("--strategy", strategy, "maximum | average | voting")->capture_default_str();
    c->add_option("--tests", tests)->capture_default_str();
    c->add_option("--inventory", inventory);
    c->add_option("--out", out, "EvalReport JSON");
  }
  void run(RunRecord& rec) {
    const auto set = resolve_tests(tests, inventory);
    const auto strat = parse_strategy(strategy);
    const auto eval_pairs = load_pairs(pairs);
    rec.inputs = {pairs};
    if (!inventory.empty()) rec.inputs.push_back(inventory);
    auto handle = open_scorer(scorer, rec);
    ScoreCache cache;
    const auto report = evaluate_pairs(handle.get(), eval_pairs, set, strat, handle.use_markup, &cache);
    handle.close();
    if (!out.empty()) {
      auto os = open_output(out);
      os << report_to_json(report).dump(2) << '\n';
      rec.outputs = {out};
    }
    rec.extra = {{"accuracy", report.accuracy}, {"n", report.n}};
    std::cout << report_summary(report);
  }
};

struct SelectProforms {
  ScorerFlags scorer;
  std::string dev_pairs, tests = "default", inventory, out;
  std::size_t max_k = 18;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("select-proforms", "greedy forward selection of pro-forms");
    scorer.add_to(c);
    c->add_option("--dev-pairs", dev_pairs)->required();
    c->add_option("--max-k", max_k)->capture_default_str();
    c->add_option("--tests", tests, "candidate pool")->capture_default_str();
    c->add_option("--inventory", inventory);
    c->add_option("--out", out, "selection trace JSON");
  }
  void run(RunRecord& rec) {
    const auto candidates = resolve_tests(tests, inventory);
    const auto pairs = load_pairs(dev_pairs);
    rec.inputs = {dev_pairs};
    if (!inventory.empty()) rec.inputs.push_back(inventory);
    auto handle = open_scorer(scorer, rec);
    const auto result =
        greedy_select(handle.get(), pairs, candidates, std::min(max_k, candidates.size()), handle.use_markup);
    handle.close();
    if (!out.empty()) {
      auto os = open_output(out);
      os << greedy_to_json(result).dump(2) << '\n';
      rec.outputs = {out};
    }
    rec.extra = greedy_to_json(result);
    std::cout << "step  test          accuracy\n";
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
      std::cout << std::setw(4) << i + 1 << "  " << std::left << std::setw(12)
                << result.trace[i].test_id << std::right << "  " << std::fixed
                << std::setprecision(4) << result.trace[i].accuracy << '\n';
    }
    std::cout.unsetf(std::ios::floatfield);
  }
};

struct Replay {
  std::string manifest, entry, out_dir;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("replay", "re-run the commands recorded in a manifest");
    c->add_option("manifest", manifest, "manifest.json")->required();
    c->add_option("--entry", entry, "only the run that produced this output file");
    c->add_option("--out-dir", out_dir, "write outputs here instead of their recorded paths");
  }
  int run() const {
    const auto entries = cli::read_manifest(manifest);
    const std::string target = out_dir.empty() ? "" : fs::absolute(out_dir).string();
    std::set<std::string> done;
    bool any = false;
    for (const auto& [name, rec] : entries) {
      if (!entry.empty() && name != entry) continue;
      any = true;
      // One run may own several entries.
      const std::string key = ordered_json(rec.argv).dump();
      if (!done.insert(key).second) continue;
      std::vector<std::string> args = rec.argv;
      if (!target.empty()) {
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
          if (args[i] == "--out") args[i + 1] = (fs::path(target) / fs::path(args[i + 1]).filename()).string();
        }
      }
      const fs::path saved = fs::current_path();
      if (!rec.cwd.empty()) fs::current_path(rec.cwd);
      const int rc = dispatch(args);
      fs::current_path(saved);
      if (rc != 0) return rc;
    }
    if (!any) throw DataError(manifest + ": no entry named '" + entry + "'");
    return 0;
  }
};

ordered_json collect_flags(const CLI::App* cmd) {
  ordered_json flags = ordered_json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
    std::string name = opt->get_name(false, true);
    if (name.empty()) name = opt->get_name();
    while (!name.empty() && name.front() == '-') name.erase(0, 1);
    if (opt->get_expected_min() == 0) {
      flags[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      flags[name] = opt->as<std::string>();
    } else if (!opt->get_default_str().empty()) {
      flags[name] = opt->get_default_str();
    }
  }
  return flags;
}

void print_error(const char* type, const std::string& message) {
  std::cerr << ordered_json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
}

int dispatch(std::vector<std::string> args) {
  CLI::App app{"Constituency tests by pro-form substitution"};
  app.set_version_flag("--version", CONSTEST_VERSION);
  app.require_subcommand(1);

  MakePairs make_pairs;
  ExtractText extract_text;
  BuildData build_data;
  Train train_cmd;
  Evaluate evaluate;
  SelectProforms select;
  Replay replay;
  make_pairs.add(app);
  extract_text.add(app);
  build_data.add(app);
  train_cmd.add(app);
  evaluate.add(app);
  select.add(app);
  replay.add(app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage_error", e.what());
    return 2;
  }

  const CLI::App* cmd = app.get_subcommands().front();
  if (cmd->get_name() == "replay") return replay.run();

  RunRecord rec;
  rec.command = cmd->get_name();
  rec.argv = args;
  rec.flags = collect_flags(cmd);
  rec.cwd = fs::current_path().string();
  rec.tool_version = CONSTEST_VERSION;
  rec.started_at = cli::utc_now();

  if (rec.command == "make-pairs") make_pairs.run(rec);
  else if (rec.command == "extract-text") extract_text.run(rec);
  else if (rec.command == "build-data") build_data.run(rec);
  else if (rec.command == "train") train_cmd.run(rec);
  else if (rec.command == "evaluate") evaluate.run(rec);
  else if (rec.command == "select-proforms") select.run(rec);

  rec.finished_at = cli::utc_now();
  if (!rec.outputs.empty()) cli::record_run(rec);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
  } catch (const ContractViolation& e) {
    print_error("contract_violation", e.what());
  } catch (const std::exception& e) {
    print_error("internal_error", e.what());
  }
  return 1;
}
