// Copyright 2026 The knnasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "knnasr/adaptation.hpp"
#include "knnasr/binary_io.hpp"
#include "knnasr/datastore.hpp"
#include "knnasr/decode.hpp"
#include "knnasr/error.hpp"
#include "knnasr/eval.hpp"
#include "knnasr/hash.hpp"
#include "knnasr/manifest.hpp"
#include "knnasr/pipeline.hpp"
#include "knnasr/random.hpp"
#include "knnasr/sweep.hpp"
#include "knnasr/toy_model.hpp"

namespace fs = std::filesystem;
using namespace knnasr;

namespace {

constexpr const char* kOutputDirEnv = "KNNASR_OUTPUT_DIR";

fs::path resolve_output(const fs::path& p) {
  if (p.is_absolute()) return p;
  const char* dir = std::getenv(kOutputDirEnv);
  if (dir == nullptr || *dir == '\0') return p;
  return fs::path(dir) / p;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
  return fs::path(prefix.string() + suffix);
}

/// Records what went into and came out of one invocation.
class Provenance {
 public:
  explicit Provenance(std::string command) : command_(std::move(command)) {}

  void input(const fs::path& p) { inputs_.push_back(p); }
  void output(const fs::path& p) { outputs_.push_back(p); }

  void write(const fs::path& where, const std::string& config, std::uint64_t seed) const {
    nlohmann::ordered_json j;
    j["command"] = command_;
    j["seed"] = seed;
    j["config"] = config;
    const auto files = [](const std::vector<fs::path>& paths) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& p : paths) arr.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
      return arr;
    };
    j["inputs"] = files(inputs_);
    j["outputs"] = files(outputs_);
    ensure_parent(where);
    write_text_atomic(where, j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
};

IndexKind parse_index_kind(const std::string& s) {
  if (s == "flat") return IndexKind::flat;
  if (s == "ivf") return IndexKind::ivf;
  throw Error(Errc::invalid_argument, "unknown index kind '" + s + "' (expected flat or ivf)");
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::string words(const Vocabulary& vocab, std::span<const TokenId> tokens) {
  std::vector<std::string> w;
  for (auto t : tokens) w.push_back(vocab.word(t));
  return join(w, " ");
}

// Options shared by everything that decodes.
struct DecodeFlags {
  std::size_t k = 4;
  double temperature = 100.0;
  double lambda = 0.4;
  std::size_t nprobe = 8;
  std::size_t prompt_words = 2;
  std::size_t slack = 4;

  void add(CLI::App* cmd, bool with_lambda = true) {
    cmd->add_option("--k", k, "Neighbors retrieved per step")->capture_default_str();
    cmd->add_option("--temp", temperature, "Retrieval softmax temperature")->capture_default_str();
    if (with_lambda) cmd->add_option("--lambda", lambda, "Interpolation weight of p_knn")->capture_default_str();
    cmd->add_option("--nprobe", nprobe, "IVF lists scanned per query")->capture_default_str();
    cmd->add_option("--prompt-words", prompt_words, "Reference words given to the decoder")->capture_default_str();
    cmd->add_option("--slack", slack, "Extra tokens allowed past the reference length")->capture_default_str();
  }
  KnnConfig knn() const {
    KnnConfig c{k, temperature, lambda, nprobe};
    c.validate();
    return c;
  }
  PromptPolicy prompt() const { return {prompt_words, slack}; }
};

struct Common {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  void add(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Seed for every random choice in this run")->capture_default_str();
    cmd->add_option("--workers", workers, "Parallel workers (output does not depend on it)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }
};

// --- toy --------------------------------------------------------------------

struct ToyArgs {
  Common common;
  std::string out_dir = "toy";
  std::size_t vocab_size = 30;
  std::size_t speakers = 10;
  std::size_t shifted = 1;
  double idiolect = 0.05;
  double shift_fraction = 0.6;
  double follow_prob = 0.98;
  std::size_t train_tokens = 10000;
  std::size_t dev_per_speaker = 10;
  std::size_t test_per_speaker = 10;
  double corruption = 0.3;
};

int run_toy(const ToyArgs& a, const std::string& config) {
  SyntheticCorpusOptions opts;
  opts.grammar.vocab_size = a.vocab_size;
  opts.grammar.follow_prob = a.follow_prob;
  opts.speakers = a.speakers;
  opts.shifted_speakers = a.shifted;
  opts.idiolect_fraction = a.idiolect;
  opts.shift_fraction = a.shift_fraction;
  opts.train_tokens = a.train_tokens;
  opts.dev_per_speaker = a.dev_per_speaker;
  opts.test_per_speaker = a.test_per_speaker;
  opts.seed = derive_seed(a.common.seed, 1);
  const auto corpus = generate_synthetic_corpus(opts);

  ToyModelOptions mopts;
  mopts.corruption = {a.corruption, derive_seed(a.common.seed, 3)};
  mopts.seed = derive_seed(a.common.seed, 2);
  const auto model = ToyModel::build(corpus.vocab, corpus.base_text, mopts);
  const auto dump = dump_hidden_states(model, as_references(corpus.train));

  const fs::path dir = resolve_output(a.out_dir);
  fs::create_directories(dir);
  Provenance prov("toy");
  const auto put = [&](const char* name, auto&& writer) {
    const auto p = dir / name;
    writer(p);
    prov.output(p);
  };
  put("vocab.txt", [&](const fs::path& p) { write_text_atomic(p, corpus.vocab.to_text()); });
  put("model.toy", [&](const fs::path& p) { write_file_atomic(p, model.serialize()); });
  put("train.hsd", [&](const fs::path& p) { write_dump(p, dump); });
  put("train.jsonl", [&](const fs::path& p) { write_text_atomic(p, manifest_jsonl(as_records(corpus, corpus.train))); });
  put("dev.jsonl", [&](const fs::path& p) { write_text_atomic(p, manifest_jsonl(as_records(corpus, corpus.dev))); });
  put("test.jsonl", [&](const fs::path& p) { write_text_atomic(p, manifest_jsonl(as_records(corpus, corpus.test))); });
  prov.write(dir / "provenance.json", config, a.common.seed);

  std::printf("toy corpus in %s: %zu train / %zu dev / %zu test utterances, %zu dump rows\n", dir.string().c_str(),
              corpus.train.size(), corpus.dev.size(), corpus.test.size(), dump.total_tokens());
  return 0;
}

// --- build-datastore --------------------------------------------------------

struct BuildArgs {
  Common common;
  std::vector<std::string> dumps;
  std::string out;
  std::string index = "flat";
  std::size_t nlist = 16;
  std::string provenance = "unspecified";
};

int run_build(const BuildArgs& a, const std::string& config) {
  std::vector<HiddenStateDump> dumps;
  Provenance prov("build-datastore");
  for (const auto& d : a.dumps) {
    try {
      dumps.push_back(read_dump(d));
    } catch (const Error& e) {
      throw Error(e.code(), "dump " + d + ": " + e.what());
    }
    prov.input(d);
  }
  IndexSpec spec{parse_index_kind(a.index), a.nlist, a.common.seed};
  const auto store = Datastore::build(dumps, spec, a.provenance);
  const auto out = resolve_output(a.out);
  ensure_parent(out);
  store.write(out);
  prov.output(out);
  prov.write(with_suffix(out, ".provenance.json"), config, a.common.seed);
  std::printf("store entries: %zu (dim %zu, vocab %zu, index %s)\n", store.size(), store.dim(),
              store.vocab_size(), index_kind_name(store.index().kind()));
  return 0;
}

// --- decode -----------------------------------------------------------------

struct DecodeArgs {
  Common common;
  DecodeFlags flags;
  std::string model;
  std::string store;
  std::string manifest;
  std::string out = "hypotheses.jsonl";
  std::string trace;
};

int run_decode(const DecodeArgs& a, const std::string& config) {
  Provenance prov("decode");
  const auto model = ToyModel::read(a.model);
  prov.input(a.model);
  std::optional<Datastore> store;
  if (!a.store.empty()) {
    store.emplace(Datastore::read(a.store));
    prov.input(a.store);
  }
  const auto records = read_manifest(a.manifest);
  prov.input(a.manifest);

  const auto t = transcribe(model, model.vocabulary(), store ? &*store : nullptr, a.flags.knn(), records,
                            a.flags.prompt(), a.common.workers);
  const auto out = resolve_output(a.out);
  ensure_parent(out);
  write_text_atomic(out, manifest_jsonl(t.records));
  prov.output(out);
  std::size_t steps = 0;
  if (!a.trace.empty()) {
    std::string lines;
    for (std::size_t i = 0; i < t.records.size(); ++i) {
      lines += trace_lines(t.records[i].utterance_id, t.prompts[i], t.results[i]);
      steps += t.results[i].steps.size();
    }
    const auto trace = resolve_output(a.trace);
    ensure_parent(trace);
    write_text_atomic(trace, lines);
    prov.output(trace);
  }
  prov.write(with_suffix(out, ".provenance.json"), config, a.common.seed);
  std::printf("decoded %zu utterances%s\n", t.records.size(),
              a.trace.empty() ? "" : (", " + std::to_string(steps) + " trace lines").c_str());
  return 0;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string manifest;
  std::vector<std::string> groups;
  std::string normalization = "lower-strip-v1";
  std::string out_prefix = "eval";
};

int run_eval(const EvalArgs& a, const std::string& config) {
  Provenance prov("eval");
  std::vector<Category> categories;
  for (const auto& g : a.groups) {
    for (const auto& name : split_commas(g)) {
      const auto c = parse_category(name);
      if (!c) throw Error(Errc::invalid_argument, "unknown group category '" + name + "'");
      categories.push_back(*c);
    }
  }
  const auto policy = NormalizationPolicy::by_id(a.normalization);
  const auto records = read_manifest(a.manifest);
  prov.input(a.manifest);
  const auto report = evaluate(records, categories, policy);

  const auto prefix = resolve_output(a.out_prefix);
  ensure_parent(prefix);
  const auto json_path = with_suffix(prefix, ".json");
  const auto text_path = with_suffix(prefix, ".txt");
  write_text_atomic(json_path, report_json(report));
  write_text_atomic(text_path, report_text(report));
  prov.output(json_path);
  prov.output(text_path);
  prov.write(with_suffix(prefix, ".provenance.json"), config, a.common.seed);
  std::fputs(report_text(report).c_str(), stdout);
  return 0;
}

// --- sweep ------------------------------------------------------------------

struct SweepArgs {
  Common common;
  DecodeFlags flags;
  std::string model;
  std::string store;
  std::string dev;
  std::vector<double> lambdas{0.3, 0.4, 0.5, 0.6};
  std::vector<double> temps{1.0, 10.0, 100.0};
  std::vector<std::size_t> ks{4, 8, 16};
  bool lambda_only = false;
  std::string normalization = "lower-strip-v1";
  std::string out_prefix = "sweep";
};

int run_sweep_cmd(const SweepArgs& a, const std::string& config) {
  Provenance prov("sweep");
  const auto model = ToyModel::read(a.model);
  prov.input(a.model);
  const auto store = Datastore::read(a.store);
  prov.input(a.store);
  const auto dev = read_manifest(a.dev);
  prov.input(a.dev);
  const auto policy = NormalizationPolicy::by_id(a.normalization);

  const ConfigEvaluator evaluator = [&](const KnnConfig& c) {
    return decode_and_score(model, model.vocabulary(), &store, c, dev, policy, a.flags.prompt(), 1);
  };
  SweepResult result;
  if (a.lambda_only) {
    result = lambda_only_sweep(a.flags.k, a.flags.temperature, a.lambdas, a.common.seed, evaluator,
                               a.common.workers);
  } else {
    SweepSpec spec;
    spec.lambdas = a.lambdas;
    spec.temperatures = a.temps;
    spec.ks = a.ks;
    spec.nprobe = a.flags.nprobe;
    spec.seed = a.common.seed;
    spec.workers = a.common.workers;
    result = run_sweep(spec, evaluator);
  }

  const auto prefix = resolve_output(a.out_prefix);
  ensure_parent(prefix);
  const auto csv = with_suffix(prefix, ".csv");
  const auto json = with_suffix(prefix, ".json");
  const auto timing = with_suffix(prefix, ".timing.csv");
  write_text_atomic(csv, sweep_csv(result));
  write_text_atomic(json, sweep_summary_json(result, index_kind_name(store.index().kind())));
  write_text_atomic(timing, sweep_timing_csv(result));
  prov.output(csv);
  prov.output(json);
  prov.output(timing);
  prov.write(with_suffix(prefix, ".provenance.json"), config, a.common.seed);

  std::printf("%zu rows", result.rows.size());
  if (result.winner) {
    const auto& w = result.rows[*result.winner];
    std::printf(", winner k=%zu T=%g lambda=%g dev_wer=%.6f (%zu tied)", w.config.k, w.config.temperature,
                w.config.lambda, w.dev_wer(), result.ties.size());
  } else {
    std::printf(", every row failed");
  }
  std::printf("\n");
  return 0;
}

// --- speaker-adapt ----------------------------------------------------------

struct AdaptArgs {
  Common common;
  DecodeFlags flags;
  std::string model;
  std::string store;
  std::string dev;
  std::string test;
  std::string speakers;
  std::size_t num_speakers = 0;
  std::vector<double> lambdas{0.3, 0.4, 0.5, 0.6};
  std::string sub_index = "flat";
  std::size_t nlist = 16;
  std::string normalization = "lower-strip-v1";
  std::string out_prefix = "adapt";
};

int run_adapt(const AdaptArgs& a, const std::string& config) {
  Provenance prov("speaker-adapt");
  const auto model = ToyModel::read(a.model);
  prov.input(a.model);
  const auto store = Datastore::read(a.store);
  prov.input(a.store);
  const auto dev = read_manifest(a.dev);
  prov.input(a.dev);
  const auto test = read_manifest(a.test);
  prov.input(a.test);

  std::vector<std::string> speakers;
  if (!a.speakers.empty()) {
    speakers = split_commas(a.speakers);
  } else {
    std::set<std::string> in_test;
    for (const auto& r : test) in_test.insert(r.speaker_id);
    const std::vector<std::string> candidates(in_test.begin(), in_test.end());
    speakers = choose_speakers(candidates, a.num_speakers, derive_seed(a.common.seed, 7));
  }

  AdaptationOptions opts;
  opts.knn = a.flags.knn();
  opts.lambda_grid = a.lambdas;
  opts.seed = a.common.seed;
  opts.workers = a.common.workers;
  opts.prompt = a.flags.prompt();
  opts.normalization = NormalizationPolicy::by_id(a.normalization);
  opts.sub_index = IndexSpec{parse_index_kind(a.sub_index), a.nlist, a.common.seed};
  const auto report = speaker_adaptation_run(model, model.vocabulary(), store, speakers, dev, test, opts);

  const auto prefix = resolve_output(a.out_prefix);
  ensure_parent(prefix);
  const auto json = with_suffix(prefix, ".json");
  const auto text = with_suffix(prefix, ".txt");
  write_text_atomic(json, adaptation_json(report, opts));
  write_text_atomic(text, adaptation_text(report));
  prov.output(json);
  prov.output(text);
  prov.write(with_suffix(prefix, ".provenance.json"), config, a.common.seed);
  std::fputs(adaptation_text(report).c_str(), stdout);
  return 0;
}

// --- inspect ----------------------------------------------------------------

struct InspectArgs {
  Common common;
  std::string trace;
  std::string store;
  std::string model;
  std::string vocab;
  std::string utterance;
  std::size_t step = 0;
  std::size_t window = 4;
  std::string out;
};

std::string render_neighbor(const Vocabulary& vocab, const NeighborContext& ctx) {
  std::string s = words(vocab, ctx.left);
  if (ctx.position > ctx.left.size()) s = s.empty() ? "..." : "... " + s;
  if (!s.empty()) s += " ";
  s += "(" + vocab.word(ctx.token) + ")";
  if (!ctx.right.empty()) s += " " + words(vocab, ctx.right);
  if (ctx.token != kEndOfSequence && (ctx.right.empty() || ctx.right.back() != kEndOfSequence)) s += " ...";
  return s;
}

int run_inspect(const InspectArgs& a) {
  if (a.model.empty() == a.vocab.empty()) {
    throw Error(Errc::invalid_argument, "inspect needs exactly one of --model or --vocab");
  }
  const Vocabulary vocab = a.model.empty() ? Vocabulary::read(a.vocab) : ToyModel::read(a.model).vocabulary();
  const auto store = Datastore::read(a.store);

  const auto bytes = read_file(a.trace);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<nlohmann::json> steps;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::invalid_value, a.trace + ":" + std::to_string(n) + ": " + e.what());
    }
    if (j.value("utterance_id", "") == a.utterance) steps.push_back(std::move(j));
  }
  if (steps.empty()) throw Error(Errc::not_found, "utterance '" + a.utterance + "' not in trace " + a.trace);
  if (a.step >= steps.size()) {
    throw Error(Errc::out_of_range, "step " + std::to_string(a.step) + " but utterance has " +
                                        std::to_string(steps.size()) + " steps");
  }

  try {
    std::vector<TokenId> sentence = steps.front().at("prompt").get<std::vector<TokenId>>();
    std::size_t current = 0;
    for (std::size_t i = 0; i <= a.step; ++i) {
      if (steps[i].at("step").get<std::size_t>() != i) throw Error(Errc::invalid_value, "trace steps out of order");
      current = sentence.size();
      sentence.push_back(steps[i].at("token").get<TokenId>());
    }
    const auto& st = steps[a.step];
    std::string out = "utterance " + a.utterance + " step " + std::to_string(a.step) + "\n";
    std::string hyp;
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      const auto& w = vocab.word(sentence[i]);
      hyp += (i ? " " : "") + (i == current ? "[" + w + "]" : w);
    }
    out += hyp + "\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "model top1 %s %.4f", vocab.word(st.at("model_top1").at("token")).c_str(),
                  st.at("model_top1").at("prob").get<double>());
    out += buf;
    if (!st.at("knn_top1").is_null()) {
      std::snprintf(buf, sizeof buf, ", knn top1 %s %.4f", vocab.word(st.at("knn_top1").at("token")).c_str(),
                    st.at("knn_top1").at("prob").get<double>());
      out += buf;
    }
    out += "\n";
    std::size_t rank = 1;
    for (const auto& n : st.at("neighbors")) {
      const auto ctx = neighbor_context(store, n.at("id").get<std::uint64_t>(), a.window);
      std::snprintf(buf, sizeof buf, "%2zu  %10.6f  %-20s  ", rank++, n.at("distance").get<double>(),
                    ctx.utterance_id.c_str());
      out += buf + render_neighbor(vocab, ctx) + "\n";
    }
    if (a.out.empty()) {
      std::fputs(out.c_str(), stdout);
    } else {
      const auto p = resolve_output(a.out);
      ensure_parent(p);
      write_text_atomic(p, out);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_value, a.trace + ": malformed step record: " + e.what());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented decoding and WER evaluation toolkit", "knnasr"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file; command-line flags take precedence");

  ToyArgs toy;
  auto* toy_cmd = app.add_subcommand("toy", "Generate a synthetic corpus, toy model and training dump");
  toy.common.add(toy_cmd);
  toy_cmd->add_option("--out-dir", toy.out_dir, "Output directory")->capture_default_str();
  toy_cmd->add_option("--vocab-size", toy.vocab_size, "Words plus end-of-sequence")->capture_default_str();
  toy_cmd->add_option("--speakers", toy.speakers)->capture_default_str();
  toy_cmd->add_option("--shifted-speakers", toy.shifted, "Speakers with a strongly shifted grammar")
      ->capture_default_str();
  toy_cmd->add_option("--idiolect", toy.idiolect, "Per-speaker share of overridden contexts")->capture_default_str();
  toy_cmd->add_option("--shift-fraction", toy.shift_fraction)->capture_default_str();
  toy_cmd->add_option("--follow-prob", toy.follow_prob)->capture_default_str();
  toy_cmd->add_option("--train-tokens", toy.train_tokens)->capture_default_str();
  toy_cmd->add_option("--dev-per-speaker", toy.dev_per_speaker)->capture_default_str();
  toy_cmd->add_option("--test-per-speaker", toy.test_per_speaker)->capture_default_str();
  toy_cmd->add_option("--corruption", toy.corruption, "Share of each model row moved to a wrong token")
      ->capture_default_str();

  BuildArgs build;
  auto* build_cmd = app.add_subcommand("build-datastore", "Build a datastore from hidden-state dumps");
  build.common.add(build_cmd);
  build_cmd->add_option("dumps", build.dumps, "Dump files")->required();
  build_cmd->add_option("--out", build.out, "Store file")->required();
  build_cmd->add_option("--index", build.index, "flat or ivf")->capture_default_str();
  build_cmd->add_option("--nlist", build.nlist, "IVF list count")->capture_default_str();
  build_cmd->add_option("--provenance", build.provenance, "Extraction point recorded in the store header")
      ->capture_default_str();

  DecodeArgs dec;
  auto* dec_cmd = app.add_subcommand("decode", "Greedy decoding of a manifest, optionally with retrieval");
  dec.common.add(dec_cmd);
  dec.flags.add(dec_cmd);
  dec_cmd->add_option("--model", dec.model, "Toy model file")->required();
  dec_cmd->add_option("--store", dec.store, "Datastore; omit for vanilla decoding");
  dec_cmd->add_option("--manifest", dec.manifest, "Input manifest (.jsonl or .tsv)")->required();
  dec_cmd->add_option("--out", dec.out, "Hypotheses manifest")->capture_default_str();
  dec_cmd->add_option("--trace", dec.trace, "Per-step trace (JSONL)");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score a manifest with hypotheses");
  ev.common.add(eval_cmd);
  eval_cmd->add_option("--manifest", ev.manifest)->required();
  eval_cmd->add_option("--groups", ev.groups, "gender, accent, age_group (comma-separated)");
  eval_cmd->add_option("--normalization", ev.normalization)->capture_default_str();
  eval_cmd->add_option("--out-prefix", ev.out_prefix, "Writes <prefix>.json and <prefix>.txt")
      ->capture_default_str();

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid search of k, T and lambda on dev");
  sw.common.add(sweep_cmd);
  sw.flags.add(sweep_cmd, false);
  sweep_cmd->add_option("--model", sw.model)->required();
  sweep_cmd->add_option("--store", sw.store)->required();
  sweep_cmd->add_option("--dev", sw.dev, "Dev manifest")->required();
  sweep_cmd->add_option("--lambdas", sw.lambdas)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--temps", sw.temps)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--ks", sw.ks)->delimiter(',')->capture_default_str();
  sweep_cmd->add_flag("--lambda-only", sw.lambda_only, "Sweep lambda at fixed --k and --temp");
  sweep_cmd->add_option("--normalization", sw.normalization)->capture_default_str();
  sweep_cmd->add_option("--out-prefix", sw.out_prefix, "Writes <prefix>.csv, .json and .timing.csv")
      ->capture_default_str();

  AdaptArgs ad;
  auto* adapt_cmd = app.add_subcommand("speaker-adapt", "Vanilla, random, personal and general stores per speaker");
  ad.common.add(adapt_cmd);
  ad.flags.add(adapt_cmd);
  adapt_cmd->add_option("--model", ad.model)->required();
  adapt_cmd->add_option("--store", ad.store, "Full datastore")->required();
  adapt_cmd->add_option("--dev", ad.dev)->required();
  adapt_cmd->add_option("--test", ad.test)->required();
  auto* spk_opt = adapt_cmd->add_option("--speakers", ad.speakers, "Comma-separated speaker ids");
  adapt_cmd->add_option("--num-speakers", ad.num_speakers, "Seeded subset of test speakers (0 = all)")
      ->capture_default_str()
      ->excludes(spk_opt);
  adapt_cmd->add_option("--lambdas", ad.lambdas, "Per-speaker lambda grid")->delimiter(',')->capture_default_str();
  adapt_cmd->add_option("--sub-index", ad.sub_index, "Index over personal/random stores")->capture_default_str();
  adapt_cmd->add_option("--nlist", ad.nlist)->capture_default_str();
  adapt_cmd->add_option("--normalization", ad.normalization)->capture_default_str();
  adapt_cmd->add_option("--out-prefix", ad.out_prefix)->capture_default_str();

  InspectArgs insp;
  auto* insp_cmd = app.add_subcommand("inspect", "Show one decode step's neighbors in their contexts");
  insp.common.add(insp_cmd);
  insp_cmd->add_option("--trace", insp.trace)->required();
  insp_cmd->add_option("--store", insp.store)->required();
  insp_cmd->add_option("--model", insp.model, "Source of the vocabulary");
  insp_cmd->add_option("--vocab", insp.vocab, "Vocabulary file, one word per line");
  insp_cmd->add_option("--utterance", insp.utterance)->required();
  insp_cmd->add_option("--step", insp.step)->capture_default_str();
  insp_cmd->add_option("--window", insp.window, "Context tokens on each side")->capture_default_str();
  insp_cmd->add_option("--out", insp.out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    auto* cmd = app.get_subcommands().front();
    const std::string config = cmd->config_to_str(true, false);
    std::cerr << "[" << cmd->get_name() << "]\n" << config;
    if (cmd == toy_cmd) return run_toy(toy, config);
    if (cmd == build_cmd) return run_build(build, config);
    if (cmd == dec_cmd) return run_decode(dec, config);
    if (cmd == eval_cmd) return run_eval(ev, config);
    if (cmd == sweep_cmd) return run_sweep_cmd(sw, config);
    if (cmd == adapt_cmd) return run_adapt(ad, config);
    if (cmd == insp_cmd) return run_inspect(insp);
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::internal ? 3 : 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
