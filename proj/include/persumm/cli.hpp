#pragma once

// `persumm` command-line entry point. Every subcommand accepts --config
// <file.json>, a flat object whose keys are the long flag names with '-'
// replaced by '_'. Flags given on the command line win over the file, and the
// effective values are echoed under "config" in each JSON report.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "persumm/augment.hpp"
#include "persumm/corpus.hpp"
#include "persumm/errors.hpp"
#include "persumm/log.hpp"
#include "persumm/random.hpp"
#include "persumm/rewards.hpp"
#include "persumm/rltrain.hpp"
#include "persumm/scoring.hpp"
#include "persumm/textproc.hpp"

namespace persumm::cli {

using ojson = nlohmann::ordered_json;

struct RunConfig {
  // filter
  std::string policy = "manual";
  std::string forum;
  // augment / reward-eval / rl-demo
  double cutoff = augment::kDefaultCutoff;
  double threshold = augment::kDefaultThreshold;
  std::string scores;
  std::string embeddings;
  std::string premises = "all";
  // rl-demo
  std::string gammas = "0.9,0.1";
  std::uint64_t seed = 0;
  int steps = 200;
  double lr = 0.5;
  std::size_t batch = 0;  // 0 = every instance in each step
  // fixture-gen
  std::string texts;
  std::string pairs;
  std::string relevance;
  std::string endpoint;
  // paths
  std::string in;
  std::string out;
  std::string report;
  std::string summaries;
  std::string inputs;
  std::string silver;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Binding {
  std::string key;
  CLI::Option* option = nullptr;
  std::function<void(const nlohmann::json&)> set;
  std::function<ojson()> get;
};

struct Subcommand {
  CLI::App* app = nullptr;
  std::vector<Binding> bindings;
  std::string config_path;

  template <class T>
  CLI::Option* bind(const std::string& key, T& var, const std::string& help) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    auto* opt = app->add_option("--" + flag, var, help);
    bindings.push_back({key, opt, [&var](const nlohmann::json& j) { var = j.get<T>(); },
                        [&var] { return ojson(var); }});
    return opt;
  }

  // Fills options not given on the command line from the config file.
  void apply_config() {
    if (config_path.empty()) return;
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot read config '" + config_path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("config '" + config_path + "': " + e.what());
    }
    if (!j.is_object()) throw SchemaError("config '" + config_path + "' must be a flat object");
    for (const auto& [key, value] : j.items()) {
      auto it = std::find_if(bindings.begin(), bindings.end(), [&](const Binding& b) { return b.key == key; });
      if (it == bindings.end()) {
        log_line("config", "ignoring key '" + key + "' not used by this subcommand");
        continue;
      }
      if (it->option->count() == 0) {
        try {
          it->set(value);
        } catch (const nlohmann::json::exception&) {
          throw SchemaError("config key '" + key + "' has the wrong type");
        }
      }
    }
  }

  ojson effective() const {
    ojson j;
    j["command"] = app->get_name();
    for (const auto& b : bindings) j[b.key] = b.get();
    return j;
  }
};

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

inline void write_json(const ojson& j, const std::string& path, std::ostream& fallback) {
  if (path.empty()) {
    fallback << j.dump(2) << '\n';
    return;
  }
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::vector<nlohmann::json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline std::vector<scoring::TextPair> read_tab_pairs(const std::string& path) {
  std::vector<scoring::TextPair> pairs;
  for (const auto& line : read_lines(path)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw SchemaError(path + ": expected 'first<TAB>second', got '" + line + "'");
    pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return pairs;
}

// A text field that may be a string (segmented here) or a list of sentences.
inline std::vector<std::string> sentences_of(const nlohmann::json& v) {
  if (v.is_string()) return textproc::segment(v.get<std::string>());
  return v.get<std::vector<std::string>>();
}

inline std::string joined(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  std::string s;
  for (const auto& part : v) {
    if (!s.empty()) s += ' ';
    s += part.get<std::string>();
  }
  return s;
}

inline rltrain::MixWeights parse_gammas(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw UsageError("--gammas expects 'rl,ml', got '" + text + "'");
  rltrain::MixWeights w;
  try {
    w.gamma_rl = std::stod(text.substr(0, comma));
    w.gamma_ml = std::stod(text.substr(comma + 1));
  } catch (const std::exception&) {
    throw UsageError("--gammas expects two numbers, got '" + text + "'");
  }
  try {
    w.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(std::string("--gammas: ") + e.what());
  }
  return w;
}

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

// Outputs may not alias each other or any input.
inline void check_distinct_paths(const RunConfig& c) {
  const std::vector<std::string> outputs{c.out, c.report};
  const std::vector<std::string> inputs{c.in, c.pairs, c.summaries, c.inputs, c.silver, c.texts, c.relevance};
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].empty()) continue;
    for (std::size_t k = i + 1; k < outputs.size(); ++k) {
      if (outputs[i] == outputs[k]) throw UsageError("output paths must differ: " + outputs[i]);
    }
    for (const auto& p : inputs) {
      if (outputs[i] == p) throw UsageError("output path would overwrite an input: " + p);
    }
  }
}

// One backend per distinct spec, shared between roles.
class BackendCache {
 public:
  scoring::ScoreBackend& get(const std::string& spec, const char* flag) {
    require(spec, flag);
    auto it = backends_.find(spec);
    if (it == backends_.end()) it = backends_.emplace(spec, scoring::make_backend(spec)).first;
    return *it->second;
  }

 private:
  std::map<std::string, std::unique_ptr<scoring::ScoreBackend>> backends_;
};

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_filter(const RunConfig& c, const ojson& config) {
  require(c.in, "--in");
  require(c.out, "--out");
  require(c.report, "--report");
  corpus::FilterPolicy policy;
  if (c.policy == "manual") {
    policy = corpus::manual_policy();
  } else if (c.policy == "augment") {
    policy = corpus::augment_policy();
  } else {
    throw UsageError("--policy must be 'manual' or 'augment'");
  }
  policy.validate();

  const auto ingested = corpus::ingest_file(c.in, c.forum);
  std::map<corpus::Rejection, std::size_t> histogram;
  for (auto r : {corpus::Rejection::kTooFewAnswers, corpus::Rejection::kLongestAnswer,
                 corpus::Rejection::kTotalLength, corpus::Rejection::kAverageLength}) {
    histogram[r] = 0;
  }
  auto out = open_out(c.out);
  std::size_t accepted = 0;
  for (const auto& raw : ingested.threads) {
    const auto thread = policy.require_nonneg_score ? corpus::drop_negative_answers(raw) : raw;
    const auto verdict = corpus::passes_filter(thread, policy);
    if (verdict.accepted) {
      ++accepted;
      out << corpus::to_json(thread).dump() << '\n';
    } else {
      ++histogram[verdict.reason];
    }
  }
  ojson report;
  report["config"] = config;
  report["threads"] = ingested.threads.size();
  report["skipped_malformed"] = ingested.skipped;
  report["accepted"] = accepted;
  ojson reasons = ojson::object();
  for (const auto& [r, n] : histogram) reasons[std::string(corpus::to_string(r))] = n;
  report["rejections"] = reasons;
  write_json(report, c.report, std::cout);
  log_line("filter", std::to_string(accepted) + " of " + std::to_string(ingested.threads.size()) +
                         " threads accepted (" + std::to_string(ingested.skipped) + " malformed records skipped)");
  return 0;
}

inline int cmd_stats(const RunConfig& c, const ojson& config, std::ostream& stdout_) {
  require(c.pairs, "--pairs");
  std::vector<textproc::SummaryPair> pairs;
  for (const auto& row : read_jsonl(c.pairs)) {
    if (!row.contains("input") || !row.contains("summary")) {
      throw SchemaError("stats pairs need 'input' and 'summary'");
    }
    pairs.push_back({joined(row["input"]), joined(row["summary"])});
  }
  const auto s = textproc::dataset_stats(pairs);
  ojson report;
  report["config"] = config;
  report["pairs"] = s.pairs;
  report["mean_input_tokens"] = s.mean_input_tokens;
  report["mean_summary_tokens"] = s.mean_summary_tokens;
  report["compression"] = s.compression;
  ojson novel, counted;
  for (std::size_t n = 1; n <= 3; ++n) {
    novel[std::to_string(n)] = s.novel_ngram[n - 1];
    counted[std::to_string(n)] = s.novel_counted[n - 1];
  }
  report["novel_ngram_pct"] = novel;
  report["novel_ngram_pairs"] = counted;
  write_json(report, c.out, stdout_);
  return 0;
}

inline int cmd_augment(const RunConfig& c, const ojson& config) {
  require(c.in, "--in");
  require(c.out, "--out");
  BackendCache backends;
  auto& scorer = backends.get(c.scores, "--scores");
  auto& embedder = backends.get(c.embeddings, "--embeddings");
  const auto ingested = corpus::ingest_file(c.in);
  const auto result = augment::run_pipeline(ingested.threads, scorer, embedder, {c.cutoff, c.threshold, c.jobs});

  auto out = open_out(c.out);
  std::size_t bullets = 0;
  for (const auto& ex : result.examples) {
    out << augment::to_json(ex).dump() << '\n';
    bullets += ex.bullets.size();
  }
  if (!c.report.empty()) {
    ojson report;
    report["config"] = config;
    report["threads"] = result.threads;
    report["examples"] = result.examples.size();
    report["without_example"] = result.without_example;
    report["failed"] = result.failed;
    report["bullets"] = bullets;
    write_json(report, c.report, std::cout);
  }
  log_line("augment", std::to_string(result.examples.size()) + " silver examples from " +
                          std::to_string(result.threads) + " threads (" + std::to_string(result.failed) +
                          " failed)");
  return 0;
}

inline int cmd_reward_eval(const RunConfig& c, const ojson& config, std::ostream& stdout_) {
  require(c.summaries, "--summaries");
  require(c.inputs, "--inputs");
  if (c.premises != "all" && c.premises != "relevant") throw UsageError("--premises must be 'all' or 'relevant'");
  BackendCache backends;
  auto& entail = backends.get(c.scores, "--scores");
  auto& embedder = backends.get(c.embeddings, "--embeddings");

  struct InputRecord {
    std::string question;
    std::vector<std::string> sentences;
  };
  std::map<std::string, InputRecord> inputs;
  for (const auto& row : read_jsonl(c.inputs)) {
    if (!row.contains("thread_id") || !row.contains("input")) throw SchemaError("inputs need 'thread_id' and 'input'");
    inputs[corpus::detail::id_string(row["thread_id"])] = {row.value("question", ""), sentences_of(row["input"])};
  }

  std::vector<std::string> ids;
  std::vector<rewards::SummaryInput> batch;
  for (const auto& row : read_jsonl(c.summaries)) {
    if (!row.contains("thread_id") || !row.contains("summary")) {
      throw SchemaError("summaries need 'thread_id' and 'summary'");
    }
    const auto id = corpus::detail::id_string(row["thread_id"]);
    auto it = inputs.find(id);
    if (it == inputs.end()) throw Error("no input record for thread " + id);
    auto premises = it->second.sentences;
    if (c.premises == "relevant") {
      if (it->second.question.empty()) throw Error("relevant-only premises need a question for thread " + id);
      const auto probs = entail.relevance(it->second.question, premises);
      std::vector<std::string> kept;
      for (std::size_t i = 0; i < premises.size(); ++i) {
        if (probs[i] >= c.threshold) kept.push_back(premises[i]);
      }
      premises = std::move(kept);
    }
    ids.push_back(id);
    batch.push_back({sentences_of(row["summary"]), std::move(premises)});
  }
  if (batch.empty()) throw EmptyCorpusError("no summaries to evaluate");
  const auto bundles = rewards::evaluate_batch(batch, entail, embedder);

  ojson report;
  report["config"] = config;
  ojson examples = ojson::array();
  double nli = 0.0, raw = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    ojson e;
    e["thread_id"] = ids[i];
    const auto scores = rewards::to_json(bundles[i]);
    for (const auto& [k, v] : scores.items()) e[k] = v;
    examples.push_back(e);
    nli += bundles[i].nli;
    raw += bundles[i].semantic_area_raw;
    norm += bundles[i].semantic_area;
  }
  const double n = static_cast<double>(bundles.size());
  report["examples"] = examples;
  report["means"] = {{"nli", nli / n}, {"semantic_area_raw", raw / n}, {"semantic_area", norm / n}};
  write_json(report, c.out, stdout_);
  return 0;
}

inline int cmd_rl_demo(const RunConfig& c, const ojson& config, std::ostream& stdout_) {
  require(c.silver, "--silver");
  if (c.steps < 0) throw UsageError("--steps must be >= 0");
  const auto weights = parse_gammas(c.gammas);
  BackendCache backends;
  auto& entail = backends.get(c.scores, "--scores");
  auto& embedder = backends.get(c.embeddings, "--embeddings");

  std::vector<rltrain::ToyInstance> instances;
  for (const auto& row : read_jsonl(c.silver)) {
    const auto ex = augment::silver_from_json(row);
    std::vector<std::string> input;
    for (const auto& s : ex.input_sentences) input.push_back(s.text);
    instances.push_back(rltrain::make_instance(ex.thread_id, std::move(input), ex.bullets, embedder));
  }
  if (instances.empty()) throw EmptyCorpusError("no silver examples in " + c.silver);
  const std::size_t dim = instances.front().features.dim();

  rltrain::ToyPolicy policy = rltrain::ToyPolicy::zeros(dim);
  rltrain::ScoredRewardModel model(entail);
  rewards::RewardSchedule schedule;
  Rng rng(derive_seed(c.seed, "rl-demo/rollouts"));
  // Batches larger than the corpus revisit instances, each with its own sample.
  const std::size_t batch_size = c.batch == 0 ? instances.size() : c.batch;

  std::vector<rltrain::StepDiagnostics> curve;
  for (int step = 0; step < c.steps; ++step) {
    std::vector<rltrain::ToyInstance> batch;
    for (std::size_t k = 0; k < batch_size; ++k) {
      batch.push_back(instances[(static_cast<std::size_t>(step) * batch_size + k) % instances.size()]);
    }
    curve.push_back(rltrain::train_step(policy, batch, schedule, weights, c.lr, model, rng));
  }

  // Gradient check at the final weights on a fresh frozen sample.
  Rng check_rng(derive_seed(c.seed, "rl-demo/grad-check"));
  rewards::RewardSchedule probe = schedule;
  const auto frozen = rltrain::collect_traces(policy, instances, rewards::next_reward(probe), model, check_rng);
  const double err_mixed = rltrain::grad_check(policy, frozen, weights);
  const double err_nll = rltrain::grad_check(policy, frozen, {0.0, 1.0});

  ojson report;
  report["config"] = config;
  ojson rows = ojson::array();
  for (const auto& d : curve) {
    ojson r;
    r["step"] = d.step;
    r["reward"] = d.reward;
    r["mean_sampled_reward"] = d.mean_sampled_reward;
    r["mean_sampled_raw"] = d.mean_sampled_raw;
    r["mean_greedy_reward"] = d.mean_greedy_reward;
    r["l_rl"] = d.l_rl;
    r["l_ml"] = d.l_ml;
    r["mixed"] = d.mixed;
    r["grad_norm"] = d.grad_norm;
    rows.push_back(r);
  }
  report["curve"] = rows;
  const auto windows = rltrain::windowed_reward(curve);
  report["windows"] = {{"size", windows.size}, {"first", windows.first}, {"last", windows.last},
                       {"improved", windows.last > windows.first}};
  report["grad_check"] = {{"mixed", err_mixed}, {"nll_only", err_nll}};
  report["schedule"] = rewards::to_json(schedule);
  report["final_weights"] = policy.weights;
  write_json(report, c.out, stdout_);
  return 0;
}

inline int cmd_fixture_gen(const RunConfig& c) {
  require(c.endpoint, "--endpoint");
  require(c.out, "--out");
  scoring::HttpBackend backend(c.endpoint);
  backend.check_available();
  const auto texts = c.texts.empty() ? std::vector<std::string>{} : read_lines(c.texts);
  const auto pairs = c.pairs.empty() ? std::vector<scoring::TextPair>{} : read_tab_pairs(c.pairs);
  const auto relevance = c.relevance.empty() ? std::vector<scoring::TextPair>{} : read_tab_pairs(c.relevance);
  if (texts.empty() && pairs.empty() && relevance.empty()) {
    throw UsageError("fixture-gen needs --texts, --pairs or --relevance");
  }
  const auto fixture = scoring::generate_fixture(backend, texts, pairs, relevance);
  scoring::save_fixture(fixture, c.out);
  log_line("fixture-gen", std::to_string(fixture.embeddings.size()) + " embeddings, " +
                              std::to_string(fixture.entailments.size()) + " entailments, " +
                              std::to_string(fixture.relevance.size()) + " relevance scores");
  return 0;
}

}  // namespace detail

inline int run(const std::vector<std::string>& argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig c;
  CLI::App app{"Multi-perspective answer summarization toolkit", "persumm"};
  app.require_subcommand(1);
  std::map<std::string, detail::Subcommand> subs;

  auto add = [&](const std::string& name, const std::string& help) -> detail::Subcommand& {
    auto& s = subs[name];
    s.app = app.add_subcommand(name, help);
    s.app->add_option("--config", s.config_path, "flat JSON file with default flag values");
    return s;
  };
  auto add_jobs = [&](detail::Subcommand& s) { s.bind("jobs", c.jobs, "worker threads"); };

  {
    auto& s = add("filter", "apply the thread filtering heuristics");
    s.bind("policy", c.policy, "manual | augment");
    s.bind("in", c.in, "JSONL threads or Posts.xml");
    s.bind("out", c.out, "accepted threads (JSONL)");
    s.bind("report", c.report, "rejection histogram (JSON)");
    s.bind("forum", c.forum, "forum name recorded for Posts.xml input");
    add_jobs(s);
  }
  {
    auto& s = add("augment", "build silver examples from filtered threads");
    s.bind("in", c.in, "filtered threads (JSONL)");
    s.bind("scores", c.scores, "relevance backend: fixture path or service URL");
    s.bind("embeddings", c.embeddings, "embedding backend: fixture path or service URL");
    s.bind("cutoff", c.cutoff, "maximum average-linkage cosine distance for a merge");
    s.bind("threshold", c.threshold, "minimum relevance probability");
    s.bind("out", c.out, "silver examples (JSONL)");
    s.bind("report", c.report, "run summary (JSON)");
    add_jobs(s);
  }
  {
    auto& s = add("stats", "dataset statistics over (input, summary) pairs");
    s.bind("pairs", c.pairs, "JSONL with 'input' and 'summary'");
    s.bind("out", c.out, "report path (default: stdout)");
    add_jobs(s);
  }
  {
    auto& s = add("reward-eval", "entailment and semantic-area rewards for summaries");
    s.bind("summaries", c.summaries, "JSONL with 'thread_id' and 'summary'");
    s.bind("inputs", c.inputs, "JSONL with 'thread_id' and 'input' (silver format)");
    s.bind("scores", c.scores, "entailment backend: fixture path or service URL");
    s.bind("embeddings", c.embeddings, "embedding backend: fixture path or service URL");
    s.bind("premises", c.premises, "all | relevant");
    s.bind("threshold", c.threshold, "relevance threshold for --premises relevant");
    s.bind("out", c.out, "report path (default: stdout)");
    add_jobs(s);
  }
  {
    auto& s = add("rl-demo", "self-critical training of the toy extractive policy");
    s.bind("silver", c.silver, "silver examples (JSONL)");
    s.bind("scores", c.scores, "entailment backend: fixture path or service URL");
    s.bind("embeddings", c.embeddings, "embedding backend: fixture path or service URL");
    s.bind("steps", c.steps, "training steps (one minibatch each)");
    s.bind("seed", c.seed, "random seed");
    s.bind("gammas", c.gammas, "gamma_rl,gamma_ml");
    s.bind("lr", c.lr, "learning rate");
    s.bind("batch", c.batch, "instances per minibatch (0 = all)");
    s.bind("out", c.out, "report path (default: stdout)");
    add_jobs(s);
  }
  {
    auto& s = add("fixture-gen", "record scoring-service outputs into a fixture file");
    s.bind("texts", c.texts, "texts to embed, one per line");
    s.bind("pairs", c.pairs, "premise<TAB>claim lines to entail");
    s.bind("relevance", c.relevance, "question<TAB>sentence lines to score");
    s.bind("endpoint", c.endpoint, "scoring service base URL");
    s.bind("out", c.out, "fixture path");
  }

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "persumm: " << e.what() << "\n" << "Run 'persumm --help' for usage.\n";
    return 2;
  }

  try {
    auto it = std::find_if(subs.begin(), subs.end(), [](const auto& kv) { return kv.second.app->parsed(); });
    if (it == subs.end()) throw UsageError("a subcommand is required");
    auto& sub = it->second;
    sub.apply_config();
    const ojson config = sub.effective();
    detail::check_distinct_paths(c);
    if (c.jobs == 0) throw UsageError("--jobs must be >= 1");

    const auto& name = it->first;
    if (name == "filter") return detail::cmd_filter(c, config);
    if (name == "augment") return detail::cmd_augment(c, config);
    if (name == "stats") return detail::cmd_stats(c, config, out);
    if (name == "reward-eval") return detail::cmd_reward_eval(c, config, out);
    if (name == "rl-demo") return detail::cmd_rl_demo(c, config, out);
    if (name == "fixture-gen") return detail::cmd_fixture_gen(c);
    throw UsageError("unknown subcommand " + name);
  } catch (const UsageError& e) {
    err << "persumm: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "persumm: " << e.what() << "\n";
    return 1;
  }
}

inline int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace persumm::cli
