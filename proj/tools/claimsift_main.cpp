// claimsift command line: prepare -> train -> evaluate -> predict / report.
//
// Exit codes: 0 success, 2 usage or input error, 3 artifact integrity error.

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "claimsift/corpus.hpp"
#include "claimsift/io.hpp"
#include "claimsift/metrics.hpp"
#include "claimsift/models.hpp"
#include "claimsift/preprocess.hpp"
#include "claimsift/svg.hpp"
#include "claimsift/tokenizer.hpp"
#include "claimsift/training.hpp"
#include "claimsift/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace claimsift;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIntegrity = 3;

std::string default_out_dir() {
  const char* env = std::getenv("CLAIMSIFT_OUT_DIR");
  return env && *env ? env : ".";
}

void write_manifest(const fs::path& path, const std::string& command, json config,
                    json inputs, uint64_t seed, json extra = json::object()) {
  json manifest = {
      {"command", command},
      {"config", std::move(config)},
      {"inputs", std::move(inputs)},
      {"seed", seed},
      {"tool_version", kVersion},
      {"created", timestamp_utc()},
      {"environment",
       {{"compiler", __VERSION__},
        {"pointer_bits", static_cast<int>(sizeof(void*) * 8)}}},
  };
  manifest.update(extra);
  write_text_file(path.string(), manifest.dump(2) + "\n");
}

CorpusFormat parse_format(const std::string& format, const std::string& path) {
  if (format == "jsonl") return CorpusFormat::Jsonl;
  if (format == "csv") return CorpusFormat::Csv;
  return corpus_format_from_path(path);
}

// ---------------------------------------------------------------------------

int cmd_prepare(const std::string& corpus_path, const std::string& format_flag,
                const std::string& out_dir, double ratio, uint64_t seed) {
  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  LabeledCorpus raw = load_corpus(corpus_path, parse_format(format_flag, corpus_path));
  DropReport drops;
  LabeledCorpus normalized = normalize_corpus(raw, &drops);
  save_corpus_jsonl(normalized, (out / "normalized.jsonl").string());
  json drop_json = {{"input_documents", drops.input_documents},
                    {"kept", drops.kept},
                    {"dropped", drops.dropped},
                    {"dropped_ids", drops.dropped_ids}};
  write_text_file((out / "drop_report.json").string(), drop_json.dump(2) + "\n");

  SplitPair split = stratified_split(normalized, ratio, seed);

  // Vocabulary is fitted on the training partition only.
  std::vector<NormalizedText> train_texts;
  train_texts.reserve(split.train.documents.size());
  for (const auto& doc : split.train.documents) train_texts.push_back(NormalizedText{doc.text});
  Vocabulary vocab = fit_vocabulary(train_texts);
  vocab.save_json((out / "vocab.json").string());

  EncodedCorpus train = encode_corpus(vocab, split.train);
  EncodedCorpus val = encode_corpus(vocab, split.validation);
  write_id_matrix((out / "train_x.bin").string(), train.sequences);
  write_labels((out / "train_y.bin").string(), train.labels);
  write_id_matrix((out / "val_x.bin").string(), val.sequences);
  write_labels((out / "val_y.bin").string(), val.labels);

  json split_json = json::object();
  split_json["ratio"] = ratio;
  split_json["seed"] = seed;
  json train_ids = json::array(), val_ids = json::array();
  for (const auto& doc : split.train.documents) train_ids.push_back(doc.id);
  for (const auto& doc : split.validation.documents) val_ids.push_back(doc.id);
  split_json["train_ids"] = std::move(train_ids);
  split_json["validation_ids"] = std::move(val_ids);
  write_text_file((out / "split.json").string(), split_json.dump(2) + "\n");

  write_manifest(out / "prepare.manifest.json", "prepare",
                 {{"ratio", ratio}, {"format", format_flag}},
                 {{"corpus", corpus_path}, {"corpus_digest", file_digest(corpus_path)}}, seed);

  std::printf("prepared %lld documents (%lld dropped) -> train %d / validation %d, vocab %zu words\n",
              drops.input_documents, drops.dropped, train.sequences.rows, val.sequences.rows,
              vocab.word_count());
  return 0;
}

TrainData load_train_data(const fs::path& data_dir) {
  TrainData data;
  data.train_x = read_id_matrix((data_dir / "train_x.bin").string());
  data.train_y = read_labels((data_dir / "train_y.bin").string());
  data.val_x = read_id_matrix((data_dir / "val_x.bin").string());
  data.val_y = read_labels((data_dir / "val_y.bin").string());
  return data;
}

int cmd_train(const std::string& arch_flag, const std::string& data_dir,
              const std::string& out_dir, uint64_t seed, std::optional<double> lr,
              std::optional<int> batch, std::optional<int> epochs, std::optional<int> patience) {
  const ArchKind kind = arch_from_name(arch_flag);
  TrainConfig config = default_train_config(kind, seed);
  if (lr) config.learning_rate = *lr;
  if (batch) config.batch_size = *batch;
  if (epochs) config.max_epochs = *epochs;
  if (patience) config.patience = *patience;

  const fs::path data(data_dir);
  TrainData train_data = load_train_data(data);
  Vocabulary vocab = Vocabulary::load_json((data / "vocab.json").string());

  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  Model model = Model::build(kind, seed, vocab.fingerprint());
  std::printf("training %s (%lld parameters) on %d documents\n", arch_name(kind),
              model.parameter_count(), train_data.train_x.rows);
  TrainingHistory history = train(model, train_data, config);

  for (const auto& r : history.records) {
    std::printf("epoch %2d  train loss %.4f acc %.4f | val loss %.4f acc %.4f | %.1fs\n",
                r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy,
                r.wall_seconds);
  }
  if (history.stopped_early) {
    std::printf("early stop after epoch %zu; best epoch %d\n", history.records.size(),
                history.best_epoch);
  }
  std::printf("optimizer steps: %lld\n", history.optimizer_steps);

  const fs::path ckpt = out / "model.ckpt";
  save_checkpoint(model, ckpt.string());
  if (!history.records.empty()) {
    emit_curves(history, (out / "history.csv").string(), (out / "curves.svg").string());
  }
  write_manifest(out / "train.manifest.json", "train",
                 {{"arch", arch_name(kind)},
                  {"learning_rate", config.learning_rate},
                  {"batch_size", config.batch_size},
                  {"max_epochs", config.max_epochs},
                  {"patience", config.patience}},
                 {{"data_dir", data_dir},
                  {"train_x_digest", file_digest((data / "train_x.bin").string())},
                  {"vocab_digest", file_digest((data / "vocab.json").string())}},
                 seed,
                 {{"optimizer_steps", history.optimizer_steps},
                  {"best_epoch", history.best_epoch},
                  {"stopped_early", history.stopped_early},
                  {"best_val_accuracy", history.best_val_accuracy()}});
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data_dir,
                 const std::string& split, const std::string& out_dir) {
  const fs::path data(data_dir);
  Vocabulary vocab = Vocabulary::load_json((data / "vocab.json").string());
  Model model = load_checkpoint(checkpoint, &vocab);

  const std::string prefix = split == "train" ? "train" : "val";
  IdMatrix x = read_id_matrix((data / (prefix + "_x.bin")).string());
  std::vector<int32_t> y = read_labels((data / (prefix + "_y.bin")).string());

  std::vector<int32_t> preds = predict_classes(model, x);
  MetricsReport report = classification_report(y, preds);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  write_text_file((out / "report.json").string(), report_to_json(report));
  write_text_file((out / "confusion.csv").string(), matrix_to_csv(report.matrix));
  write_text_file((out / "confusion.svg").string(),
                  render_confusion_svg(report.matrix, arch_name(model.kind())));
  write_manifest(out / "evaluate.manifest.json", "evaluate",
                 {{"split", prefix}, {"arch", arch_name(model.kind())}},
                 {{"checkpoint", checkpoint}, {"checkpoint_digest", file_digest(checkpoint)},
                  {"data_dir", data_dir}},
                 0);

  std::printf("%s on %s split: accuracy %.4f, macro P/R/F1 %.2f/%.2f/%.2f (%d documents)\n",
              arch_name(model.kind()), prefix.c_str(), report.accuracy, report.macro_precision,
              report.macro_recall, report.macro_f1, x.rows);
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& vocab_path,
                const std::string& input_path, bool force_jsonl) {
  Vocabulary vocab = Vocabulary::load_json(vocab_path);
  Model model = load_checkpoint(checkpoint, &vocab);

  std::ifstream file;
  std::istream* in = &std::cin;
  if (!input_path.empty() && input_path != "-") {
    file.open(input_path, std::ios::binary);
    if (!file) throw DataError("cannot open input \"" + input_path + "\"");
    in = &file;
  }

  const bool table = !force_jsonl && isatty(fileno(stdout));
  if (table) {
    std::printf("%-12s %-10s %-10s %-10s  %s\n", "label", "factual", "misleading", "persuasive",
                "text");
  }
  std::string line;
  long long index = 0;
  while (std::getline(*in, line)) {
    if (line.empty()) continue;
    json out_row;
    out_row["id"] = "line-" + std::to_string(index++);
    out_row["text"] = line;
    NormalizedText normalized = normalize(line);
    if (normalized.empty()) {
      out_row["status"] = "empty-after-normalization";
      if (table) {
        std::printf("%-12s %-10s %-10s %-10s  %s\n", "(empty)", "-", "-", "-", line.c_str());
      } else {
        std::cout << out_row.dump() << "\n";
      }
      continue;
    }
    TokenSequence seq = text_to_sequence(vocab, normalized);
    IdMatrix batch(1, kSequenceLength);
    std::copy(seq.ids.begin(), seq.ids.end(), batch.row(0));
    NoGradGuard no_grad;
    Tensor probs = model.forward(batch, /*training=*/false);
    const auto& p = probs.values();
    int arg = 0;
    for (int c = 1; c < kNumClasses; ++c) {
      if (p[c] > p[arg]) arg = c;
    }
    out_row["label"] = label_name(label_from_code(arg));
    out_row["probabilities"] = {p[0], p[1], p[2]};
    if (table) {
      std::printf("%-12s %-10.4f %-10.4f %-10.4f  %s\n", label_name(label_from_code(arg)), p[0],
                  p[1], p[2], line.c_str());
    } else {
      std::cout << out_row.dump() << "\n";
    }
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  std::vector<std::pair<std::string, MetricsReport>> reports;
  for (const auto& dir : run_dirs) {
    const fs::path report_path = fs::path(dir) / "report.json";
    if (!fs::exists(report_path)) {
      throw DataError("no report.json in \"" + dir + "\" (run evaluate first)");
    }
    std::string name = fs::path(dir).filename().string();
    if (name.empty()) name = dir;
    // Prefer the architecture name recorded by evaluate.
    const fs::path manifest_path = fs::path(dir) / "evaluate.manifest.json";
    if (fs::exists(manifest_path)) {
      json manifest = json::parse(read_text_file(manifest_path.string()));
      name = manifest.value("config", json::object()).value("arch", name);
    }
    reports.emplace_back(name, report_from_json(read_text_file(report_path.string())));
  }

  std::ostringstream md;
  md << "| Model | Accuracy | Precision | Recall | F1-Score |\n";
  md << "|---|---|---|---|---|\n";
  std::vector<std::pair<std::string, double>> bars;
  for (const auto& [name, report] : reports) {
    md << report_to_markdown_row(name, report) << "\n";
    bars.emplace_back(name, report.accuracy);
  }

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  write_text_file((out / "comparison.md").string(), md.str());
  write_text_file((out / "accuracy_chart.svg").string(), render_accuracy_bars_svg(bars));
  json inputs = json::array();
  for (const auto& dir : run_dirs) inputs.push_back(dir);
  write_manifest(out / "report.manifest.json", "report", json::object(),
                 {{"run_dirs", std::move(inputs)}}, 0);

  std::cout << md.str();
  return 0;
}

int cmd_model_inspect(const std::string& checkpoint_path, const std::string& arch_flag) {
  Model model = checkpoint_path.empty() ? Model::build(arch_from_name(arch_flag), 0, 0)
                                        : load_checkpoint(checkpoint_path);
  std::printf("%-28s %-16s %12s\n", "parameter", "shape", "count");
  for (const auto& p : model.parameters()) {
    std::printf("%-28s %-16s %12lld\n", p.name.c_str(), shape_str(p.tensor.shape()).c_str(),
                p.tensor.size());
  }
  const long long total = model.parameter_count();
  const long long closed = closed_form_param_count(model.kind());
  const long long reference = reference_param_count(model.kind());
  std::printf("total trainable parameters: %lld\n", total);
  std::printf("closed-form count:          %lld\n", closed);
  std::printf("reference count:            %lld (delta %+lld)\n", reference, reference - total);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"claimsift: classify business communication as factual, persuasive, or misleading"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "normalize, split, and encode a labeled corpus");
  std::string corpus_path, format_flag = "auto", out_dir = default_out_dir();
  double ratio = 0.8;
  uint64_t seed = 42;
  prepare->add_option("--input,-i", corpus_path, "corpus file (jsonl or csv)")->required();
  prepare->add_option("--format", format_flag, "jsonl|csv (default: by extension)");
  prepare->add_option("--out,-o", out_dir, "output directory");
  prepare->add_option("--ratio", ratio, "train fraction (default 0.8)");
  prepare->add_option("--seed", seed, "split seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "train one architecture on prepared data");
  std::string arch_flag, data_dir, train_out = default_out_dir();
  uint64_t train_seed = 42;
  std::optional<double> lr;
  std::optional<int> batch, epochs, patience;
  train_cmd->add_option("--arch,-a", arch_flag,
                        "simple-lstm|advanced-lstm|custom-attention|transformer|cnn")
      ->required();
  train_cmd->add_option("--data,-d", data_dir, "prepared data directory")->required();
  train_cmd->add_option("--out,-o", train_out, "output directory");
  train_cmd->add_option("--seed", train_seed, "training seed");
  train_cmd->add_option("--lr", lr, "learning rate override");
  train_cmd->add_option("--batch", batch, "batch size override (default 32)");
  train_cmd->add_option("--epochs", epochs, "max epochs override (default 10)");
  train_cmd->add_option("--patience", patience, "early-stopping patience (default 3)");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a prepared split");
  std::string ckpt_path, eval_data, eval_split = "val", eval_out = default_out_dir();
  eval_cmd->add_option("--checkpoint,-c", ckpt_path, "checkpoint manifest path")->required();
  eval_cmd->add_option("--data,-d", eval_data, "prepared data directory")->required();
  eval_cmd->add_option("--split", eval_split, "val|train (default val)");
  eval_cmd->add_option("--out,-o", eval_out, "output directory");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "classify ad-hoc texts (file or stdin)");
  std::string pred_ckpt, pred_vocab, pred_input;
  bool pred_jsonl = false;
  predict_cmd->add_option("--checkpoint,-c", pred_ckpt, "checkpoint manifest path")->required();
  predict_cmd->add_option("--vocab", pred_vocab, "vocabulary JSON from prepare")->required();
  predict_cmd->add_option("--input,-i", pred_input, "text file, one document per line (- = stdin)");
  predict_cmd->add_flag("--jsonl", pred_jsonl, "force JSONL output even on a terminal");

  // report
  auto* report_cmd = app.add_subcommand("report", "cross-model comparison table and chart");
  std::vector<std::string> run_dirs;
  std::string report_out = default_out_dir();
  report_cmd->add_option("dirs", run_dirs, "evaluated run directories")->required();
  report_cmd->add_option("--out,-o", report_out, "output directory");

  // model inspect
  auto* model_cmd = app.add_subcommand("model", "model utilities");
  auto* inspect_cmd = model_cmd->add_subcommand("inspect", "print the parameter table");
  std::string inspect_ckpt, inspect_arch;
  inspect_cmd->add_option("--checkpoint,-c", inspect_ckpt, "checkpoint manifest path");
  inspect_cmd->add_option("--arch,-a", inspect_arch, "architecture name (fresh build)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (prepare->parsed()) {
      return cmd_prepare(corpus_path, format_flag, out_dir, ratio, seed);
    }
    if (train_cmd->parsed()) {
      return cmd_train(arch_flag, data_dir, train_out, train_seed, lr, batch, epochs, patience);
    }
    if (eval_cmd->parsed()) {
      if (eval_split != "val" && eval_split != "train") {
        throw DataError("--split must be val or train");
      }
      return cmd_evaluate(ckpt_path, eval_data, eval_split, eval_out);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(pred_ckpt, pred_vocab, pred_input, pred_jsonl);
    }
    if (report_cmd->parsed()) {
      return cmd_report(run_dirs, report_out);
    }
    if (model_cmd->parsed() && inspect_cmd->parsed()) {
      if (inspect_ckpt.empty() == inspect_arch.empty()) {
        throw DataError("model inspect: give exactly one of --checkpoint or --arch");
      }
      return cmd_model_inspect(inspect_ckpt, inspect_arch);
    }
  } catch (const IntegrityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIntegrity;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return 0;
}
