#include "claimsift/models.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "claimsift/init.hpp"
#include "claimsift/layers.hpp"
#include "claimsift/ops.hpp"

namespace claimsift {

using nlohmann::json;

namespace {

// Fixed layer dimensions of the five stacks.
constexpr int kSimpleEmbed = 64, kSimpleUnits = 64, kSimpleDense = 64;
constexpr int kAdvEmbed = 128, kAdvUnits1 = 64, kAdvUnits2 = 32, kAdvDense = 64;
constexpr int kAttnEmbed = 256, kAttnUnits1 = 128, kAttnUnits2 = 64;
constexpr int kAttnDense1 = 128, kAttnDense2 = 64;
constexpr double kAttnDropout = 0.3;
constexpr int kTransEmbed = 256, kTransHeads = 4, kTransFfn = 512;
constexpr int kTransDense1 = 128, kTransDense2 = 64;
constexpr double kTransDropout = 0.3;
constexpr int kCnnEmbed = 128;
constexpr int kCnnFilters[3] = {128, 64, 32};
constexpr int kCnnKernel[3] = {3, 5, 7};
constexpr int kCnnDense1 = 128, kCnnDense2 = 64;
constexpr double kCnnDropout = 0.4;

long long dense_count(int in, int out) { return static_cast<long long>(in) * out + out; }
long long bilstm_count(int in, int units) {
  return 2LL * 4 * (static_cast<long long>(units) * (in + units) + units);
}

}  // namespace

const char* arch_name(ArchKind kind) {
  switch (kind) {
    case ArchKind::SimpleLstm:
      return "simple-lstm";
    case ArchKind::AdvancedLstm:
      return "advanced-lstm";
    case ArchKind::CustomAttention:
      return "custom-attention";
    case ArchKind::Transformer:
      return "transformer";
    case ArchKind::Cnn:
      return "cnn";
  }
  return "?";
}

ArchKind arch_from_name(const std::string& name) {
  for (ArchKind kind : all_arch_kinds()) {
    if (name == arch_name(kind)) return kind;
  }
  std::string known;
  for (ArchKind kind : all_arch_kinds()) {
    if (!known.empty()) known += ", ";
    known += arch_name(kind);
  }
  throw DataError("unknown architecture \"" + name + "\" (expected one of: " + known + ")");
}

std::vector<ArchKind> all_arch_kinds() {
  return {ArchKind::SimpleLstm, ArchKind::AdvancedLstm, ArchKind::CustomAttention,
          ArchKind::Transformer, ArchKind::Cnn};
}

long long closed_form_param_count(ArchKind kind) {
  const long long v = kVocabularyCap;
  switch (kind) {
    case ArchKind::SimpleLstm:
      return v * kSimpleEmbed + bilstm_count(kSimpleEmbed, kSimpleUnits) +
             dense_count(2 * kSimpleUnits, kSimpleDense) + dense_count(kSimpleDense, kNumClasses);
    case ArchKind::AdvancedLstm:
      return v * kAdvEmbed + bilstm_count(kAdvEmbed, kAdvUnits1) +
             bilstm_count(2 * kAdvUnits1, kAdvUnits2) +
             dense_count(2 * kAdvUnits2, kAdvDense) + dense_count(kAdvDense, kNumClasses);
    case ArchKind::CustomAttention:
      return v * kAttnEmbed + bilstm_count(kAttnEmbed, kAttnUnits1) +
             bilstm_count(2 * kAttnUnits1, kAttnUnits2) + (2 * kAttnUnits2 + 1) +
             dense_count(2 * kAttnUnits2, kAttnDense1) + dense_count(kAttnDense1, kAttnDense2) +
             dense_count(kAttnDense2, kNumClasses);
    case ArchKind::Transformer:
      return v * kTransEmbed + static_cast<long long>(kSequenceLength) * kTransEmbed +
             4 * dense_count(kTransEmbed, kTransEmbed) + 2 * (2LL * kTransEmbed) +
             dense_count(kTransEmbed, kTransFfn) + dense_count(kTransFfn, kTransEmbed) +
             dense_count(kTransEmbed, kTransDense1) + dense_count(kTransDense1, kTransDense2) +
             dense_count(kTransDense2, kNumClasses);
    case ArchKind::Cnn:
      return v * kCnnEmbed +
             (static_cast<long long>(kCnnKernel[0]) * kCnnEmbed * kCnnFilters[0] +
              kCnnFilters[0]) +
             (static_cast<long long>(kCnnKernel[1]) * kCnnFilters[0] * kCnnFilters[1] +
              kCnnFilters[1]) +
             (static_cast<long long>(kCnnKernel[2]) * kCnnFilters[1] * kCnnFilters[2] +
              kCnnFilters[2]) +
             dense_count(kCnnFilters[2], kCnnDense1) + dense_count(kCnnDense1, kCnnDense2) +
             dense_count(kCnnDense2, kNumClasses);
  }
  return 0;
}

long long reference_param_count(ArchKind kind) {
  switch (kind) {
    case ArchKind::SimpleLstm:
      return 714499;
    case ArchKind::AdvancedLstm:
      return 1424387;
    case ArchKind::CustomAttention:
      return 3143783;
    case ArchKind::Transformer:
      return 3917187;
    case ArchKind::Cnn:
      return 1397347;
  }
  return 0;
}

Tensor& Model::add_param(const std::string& name, Shape shape) {
  if (index_.count(name)) throw Error("duplicate parameter name " + name);
  Parameter p;
  p.name = name;
  p.tensor = Tensor::zeros(std::move(shape));
  p.tensor.set_requires_grad(true);
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return params_.back().tensor;
}

Tensor& Model::param(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter " + name);
  return params_[it->second].tensor;
}

const Tensor& Model::param(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter " + name);
  return params_[it->second].tensor;
}

long long Model::parameter_count() const {
  long long total = 0;
  for (const auto& p : params_) {
    if (p.trainable) total += p.tensor.size();
  }
  return total;
}

Model Model::build(ArchKind kind, uint64_t seed, uint64_t vocab_fingerprint) {
  Model m;
  m.spec_.kind = kind;
  m.vocab_fingerprint_ = vocab_fingerprint;
  const int v = kVocabularyCap;

  auto add_bilstm = [&m](const std::string& prefix, int in, int units) {
    for (const char* dir : {".fwd", ".bwd"}) {
      m.add_param(prefix + dir + ".kernel", {in, 4 * units});
      m.add_param(prefix + dir + ".recurrent", {units, 4 * units});
      m.add_param(prefix + dir + ".bias", {4 * units});
    }
  };
  auto add_dense = [&m](const std::string& prefix, int in, int out) {
    m.add_param(prefix + ".kernel", {in, out});
    m.add_param(prefix + ".bias", {out});
  };

  switch (kind) {
    case ArchKind::SimpleLstm:
      m.add_param("embedding.table", {v, kSimpleEmbed});
      add_bilstm("bilstm", kSimpleEmbed, kSimpleUnits);
      add_dense("dense1", 2 * kSimpleUnits, kSimpleDense);
      add_dense("output", kSimpleDense, kNumClasses);
      break;
    case ArchKind::AdvancedLstm:
      m.add_param("embedding.table", {v, kAdvEmbed});
      add_bilstm("bilstm1", kAdvEmbed, kAdvUnits1);
      add_bilstm("bilstm2", 2 * kAdvUnits1, kAdvUnits2);
      add_dense("dense1", 2 * kAdvUnits2, kAdvDense);
      add_dense("output", kAdvDense, kNumClasses);
      break;
    case ArchKind::CustomAttention:
      m.add_param("embedding.table", {v, kAttnEmbed});
      add_bilstm("bilstm1", kAttnEmbed, kAttnUnits1);
      add_bilstm("bilstm2", 2 * kAttnUnits1, kAttnUnits2);
      m.add_param("attention.score_kernel", {2 * kAttnUnits2, 1});
      m.add_param("attention.score_bias", {1});
      add_dense("dense1", 2 * kAttnUnits2, kAttnDense1);
      add_dense("dense2", kAttnDense1, kAttnDense2);
      add_dense("output", kAttnDense2, kNumClasses);
      break;
    case ArchKind::Transformer:
      m.add_param("embedding.table", {v, kTransEmbed});
      m.add_param("position.table", {kSequenceLength, kTransEmbed});
      add_dense("block.attn.query", kTransEmbed, kTransEmbed);
      add_dense("block.attn.key", kTransEmbed, kTransEmbed);
      add_dense("block.attn.value", kTransEmbed, kTransEmbed);
      add_dense("block.attn.out", kTransEmbed, kTransEmbed);
      m.add_param("block.norm1.gain", {kTransEmbed});
      m.add_param("block.norm1.bias", {kTransEmbed});
      add_dense("block.ffn.dense1", kTransEmbed, kTransFfn);
      add_dense("block.ffn.dense2", kTransFfn, kTransEmbed);
      m.add_param("block.norm2.gain", {kTransEmbed});
      m.add_param("block.norm2.bias", {kTransEmbed});
      add_dense("dense1", kTransEmbed, kTransDense1);
      add_dense("dense2", kTransDense1, kTransDense2);
      add_dense("output", kTransDense2, kNumClasses);
      break;
    case ArchKind::Cnn:
      m.add_param("embedding.table", {v, kCnnEmbed});
      m.add_param("conv1.kernel", {kCnnKernel[0], kCnnEmbed, kCnnFilters[0]});
      m.add_param("conv1.bias", {kCnnFilters[0]});
      m.add_param("conv2.kernel", {kCnnKernel[1], kCnnFilters[0], kCnnFilters[1]});
      m.add_param("conv2.bias", {kCnnFilters[1]});
      m.add_param("conv3.kernel", {kCnnKernel[2], kCnnFilters[1], kCnnFilters[2]});
      m.add_param("conv3.bias", {kCnnFilters[2]});
      add_dense("dense1", kCnnFilters[2], kCnnDense1);
      add_dense("dense2", kCnnDense1, kCnnDense2);
      add_dense("output", kCnnDense2, kNumClasses);
      break;
  }

  // Kernels Glorot-uniform, biases zero, LSTM forget-gate bias 1; a single
  // seeded stream in registration order keeps builds reproducible.
  Rng rng(derive_seed(seed, 0x6d6f64656cULL));
  for (auto& p : m.params_) {
    if (p.name.ends_with(".gain")) {
      std::fill(p.tensor.values().begin(), p.tensor.values().end(), 1.0f);
    } else if (p.name.ends_with(".bias")) {
      if (p.name.find("lstm") != std::string::npos) {
        lstm_bias_init(p.tensor, p.tensor.dim(0) / 4);
      } else {
        std::fill(p.tensor.values().begin(), p.tensor.values().end(), 0.0f);
      }
    } else {
      glorot_uniform(p.tensor, rng);
    }
  }
  return m;
}

namespace {

template <typename GetParam>
LstmWeights<float> lstm_weights(const GetParam& param, const std::string& prefix) {
  return LstmWeights<float>{param(prefix + ".kernel"), param(prefix + ".recurrent"),
                            param(prefix + ".bias")};
}

}  // namespace

Tensor Model::forward(const IdMatrix& batch, bool training, Rng* rng) const {
  if (batch.cols != spec_.sequence_length) {
    throw Error("forward: expected sequences of length " +
                std::to_string(spec_.sequence_length) + ", got " + std::to_string(batch.cols));
  }
  if (batch.rows == 0) return Tensor::zeros({0, kNumClasses});
  Rng fallback(0);
  if (training && rng == nullptr) rng = &fallback;

  auto embedded = embedding_lookup(param("embedding.table"), batch);
  switch (spec_.kind) {
    case ArchKind::SimpleLstm:
      return forward_simple_lstm(embedded, training, rng);
    case ArchKind::AdvancedLstm:
      return forward_advanced_lstm(embedded, training, rng);
    case ArchKind::CustomAttention:
      return forward_custom_attention(embedded, training, rng);
    case ArchKind::Transformer:
      return forward_transformer(embedded, training, rng);
    case ArchKind::Cnn:
      return forward_cnn(embedded, training, rng);
  }
  throw Error("forward: unreachable");
}

Tensor Model::forward_simple_lstm(const Tensor& embedded, bool, Rng*) const {
  auto p = [this](const std::string& n) { return param(n); };
  auto h = bidirectional_lstm(embedded, lstm_weights(p, "bilstm.fwd"),
                              lstm_weights(p, "bilstm.bwd"), /*return_sequences=*/false);
  auto d1 = relu(linear(h, param("dense1.kernel"), param("dense1.bias")));
  return softmax(linear(d1, param("output.kernel"), param("output.bias")));
}

Tensor Model::forward_advanced_lstm(const Tensor& embedded, bool, Rng*) const {
  auto p = [this](const std::string& n) { return param(n); };
  auto h1 = bidirectional_lstm(embedded, lstm_weights(p, "bilstm1.fwd"),
                               lstm_weights(p, "bilstm1.bwd"), /*return_sequences=*/true);
  auto h2 = bidirectional_lstm(h1, lstm_weights(p, "bilstm2.fwd"),
                               lstm_weights(p, "bilstm2.bwd"), /*return_sequences=*/false);
  auto d1 = relu(linear(h2, param("dense1.kernel"), param("dense1.bias")));
  return softmax(linear(d1, param("output.kernel"), param("output.bias")));
}

Tensor Model::forward_custom_attention(const Tensor& embedded, bool training, Rng* rng) const {
  auto p = [this](const std::string& n) { return param(n); };
  auto h1 = bidirectional_lstm(embedded, lstm_weights(p, "bilstm1.fwd"),
                               lstm_weights(p, "bilstm1.bwd"), /*return_sequences=*/true);
  auto h2 = bidirectional_lstm(h1, lstm_weights(p, "bilstm2.fwd"),
                               lstm_weights(p, "bilstm2.bwd"), /*return_sequences=*/true);
  auto dropped = training ? dropout(h2, kAttnDropout, true, *rng) : h2;
  auto pooled =
      attention_pool(dropped, param("attention.score_kernel"), param("attention.score_bias"));
  auto d1 = relu(linear(pooled, param("dense1.kernel"), param("dense1.bias")));
  auto d2 = relu(linear(d1, param("dense2.kernel"), param("dense2.bias")));
  return softmax(linear(d2, param("output.kernel"), param("output.bias")));
}

Tensor Model::forward_transformer(const Tensor& embedded, bool training, Rng* rng) const {
  auto x = add_position(embedded, param("position.table"));
  MhaWeights<float> mha{
      param("block.attn.query.kernel"), param("block.attn.query.bias"),
      param("block.attn.key.kernel"),   param("block.attn.key.bias"),
      param("block.attn.value.kernel"), param("block.attn.value.bias"),
      param("block.attn.out.kernel"),   param("block.attn.out.bias"),
  };
  // Post-norm encoder block: sublayer, add, normalize.
  auto attn = multi_head_self_attention(x, mha, kTransHeads);
  auto h = layer_norm(add(x, attn), param("block.norm1.gain"), param("block.norm1.bias"));
  auto ffn = linear(relu(linear(h, param("block.ffn.dense1.kernel"), param("block.ffn.dense1.bias"))),
                    param("block.ffn.dense2.kernel"), param("block.ffn.dense2.bias"));
  auto block = layer_norm(add(h, ffn), param("block.norm2.gain"), param("block.norm2.bias"));
  auto pooled = global_avg_pool(block);
  auto d1 = relu(linear(pooled, param("dense1.kernel"), param("dense1.bias")));
  auto dropped = training ? dropout(d1, kTransDropout, true, *rng) : d1;
  auto d2 = relu(linear(dropped, param("dense2.kernel"), param("dense2.bias")));
  return softmax(linear(d2, param("output.kernel"), param("output.bias")));
}

Tensor Model::forward_cnn(const Tensor& embedded, bool training, Rng* rng) const {
  auto c1 = relu(conv1d(embedded, param("conv1.kernel"), param("conv1.bias")));
  auto p1 = maxpool1d(c1, 2);
  auto c2 = relu(conv1d(p1, param("conv2.kernel"), param("conv2.bias")));
  auto p2 = maxpool1d(c2, 2);
  auto c3 = relu(conv1d(p2, param("conv3.kernel"), param("conv3.bias")));
  auto pooled = global_max_pool(c3);
  auto d1 = relu(linear(pooled, param("dense1.kernel"), param("dense1.bias")));
  auto d2 = relu(linear(d1, param("dense2.kernel"), param("dense2.bias")));
  auto dropped = training ? dropout(d2, kCnnDropout, true, *rng) : d2;
  return softmax(linear(dropped, param("output.kernel"), param("output.bias")));
}

void Model::zero_grads() {
  for (auto& p : params_) p.tensor.zero_grad();
}

std::vector<std::vector<float>> Model::snapshot_values() const {
  std::vector<std::vector<float>> snap;
  snap.reserve(params_.size());
  for (const auto& p : params_) snap.push_back(p.tensor.values());
  return snap;
}

void Model::restore_values(const std::vector<std::vector<float>>& snapshot) {
  if (snapshot.size() != params_.size()) throw Error("restore: snapshot size mismatch");
  for (size_t i = 0; i < params_.size(); ++i) params_[i].tensor.values() = snapshot[i];
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

namespace {

std::string fingerprint_hex(uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

uint64_t fingerprint_from_hex(const std::string& hex) {
  return std::strtoull(hex.c_str(), nullptr, 16);
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  const std::string blob_path = path + ".bin";
  json params = json::array();
  long long offset = 0;
  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw Error("cannot write \"" + blob_path + "\"");
  for (const auto& p : model.parameters()) {
    params.push_back({{"name", p.name},
                      {"shape", p.tensor.shape()},
                      {"offset", offset},
                      {"count", p.tensor.size()}});
    blob.write(reinterpret_cast<const char*>(p.tensor.values().data()),
               static_cast<std::streamsize>(p.tensor.values().size() * sizeof(float)));
    offset += p.tensor.size();
  }
  if (!blob) throw Error("write failed for \"" + blob_path + "\"");
  blob.close();

  json manifest = {
      {"format", "claimsift-checkpoint"},
      {"version", 1},
      {"arch", arch_name(model.kind())},
      {"vocab_fingerprint", fingerprint_hex(model.vocab_fingerprint())},
      {"total_parameters", model.parameter_count()},
      {"blob", blob_path.substr(blob_path.find_last_of('/') + 1)},
      {"parameters", std::move(params)},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write \"" + path + "\"");
  out << manifest.dump(2) << "\n";
  if (!out) throw Error("write failed for \"" + path + "\"");
}

Model load_checkpoint(const std::string& path, const Vocabulary* expected_vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint \"" + path + "\"");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw IntegrityError(path + ": malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "claimsift-checkpoint") {
    throw IntegrityError(path + ": not a claimsift checkpoint");
  }
  const ArchKind kind = arch_from_name(manifest.at("arch").get<std::string>());
  const uint64_t fp = fingerprint_from_hex(manifest.at("vocab_fingerprint").get<std::string>());
  if (expected_vocab && expected_vocab->fingerprint() != fp) {
    throw IntegrityError(path + ": vocabulary fingerprint mismatch (checkpoint " +
                         manifest.at("vocab_fingerprint").get<std::string>() + ", vocabulary " +
                         fingerprint_hex(expected_vocab->fingerprint()) + ")");
  }

  Model model = Model::build(kind, /*seed=*/0, fp);
  const std::string dir =
      path.find_last_of('/') == std::string::npos ? "" : path.substr(0, path.find_last_of('/') + 1);
  const std::string blob_path = dir + manifest.at("blob").get<std::string>();
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw IntegrityError("cannot open checkpoint blob \"" + blob_path + "\"");

  const auto& manifest_params = manifest.at("parameters");
  if (manifest_params.size() != model.parameters().size()) {
    throw IntegrityError(path + ": manifest lists " + std::to_string(manifest_params.size()) +
                         " parameters, architecture has " +
                         std::to_string(model.parameters().size()));
  }
  for (size_t i = 0; i < manifest_params.size(); ++i) {
    const auto& entry = manifest_params[i];
    auto& p = model.parameters()[i];
    const std::string name = entry.at("name").get<std::string>();
    if (name != p.name) {
      throw IntegrityError(path + ": parameter " + std::to_string(i) + " is \"" + name +
                           "\", expected \"" + p.name + "\"");
    }
    const auto shape = entry.at("shape").get<Shape>();
    if (shape != p.tensor.shape()) {
      throw IntegrityError(path + ": parameter " + name + " has shape " + shape_str(shape) +
                           ", expected " + shape_str(p.tensor.shape()));
    }
    blob.seekg(entry.at("offset").get<long long>() * static_cast<long long>(sizeof(float)));
    blob.read(reinterpret_cast<char*>(p.tensor.values().data()),
              static_cast<std::streamsize>(p.tensor.values().size() * sizeof(float)));
    if (blob.gcount() != static_cast<std::streamsize>(p.tensor.values().size() * sizeof(float))) {
      throw IntegrityError(blob_path + ": truncated while reading parameter " + name);
    }
  }
  return model;
}

}  // namespace claimsift
