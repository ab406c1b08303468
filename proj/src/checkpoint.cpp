#include "dirt/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dirt/classical.hpp"
#include "dirt/errors.hpp"
#include "dirt/training.hpp"

namespace dirt {

namespace fs = std::filesystem;

const std::string* Checkpoint::find_meta(std::string_view key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return &v;
  return nullptr;
}

std::string Checkpoint::meta_or(std::string_view key, std::string fallback) const {
  const std::string* v = find_meta(key);
  return v ? *v : std::move(fallback);
}

void Checkpoint::set_meta(std::string key, std::string value) {
  for (auto& [k, v] : meta)
    if (k == key) {
      v = std::move(value);
      return;
    }
  meta.emplace_back(std::move(key), std::move(value));
}

std::string format_exact(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

double parse_exact(std::string_view text) {
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size())
    throw DataError("not a number: '" + std::string(text) + "'");
  return value;
}

namespace {

constexpr const char* kMagic = "DIRT-CHECKPOINT";

bool has_space(std::string_view s) {
  return s.empty() || std::any_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

std::size_t parse_count(std::string_view text, const std::string& what) {
  std::size_t v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size())
    throw DataError("checkpoint: bad " + what + " '" + std::string(text) + "'");
  return v;
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw DataError("checkpoint: bad boolean '" + v + "'");
}

}  // namespace

void put_dirt_config(Checkpoint& c, const DirtConfig& config) {
  c.set_meta("dirt.hidden", std::to_string(config.hidden));
  c.set_meta("dirt.seq_len", std::to_string(config.seq_len));
  c.set_meta("dirt.dnn_width", std::to_string(config.dnn_width));
  c.set_meta("dirt.activation", config.activation == Activation::Tanh ? "tanh" : "identity");
  c.set_meta("dirt.literal_discrimination", config.literal_discrimination ? "1" : "0");
  c.set_meta("dirt.train_embeddings", config.train_embeddings ? "1" : "0");
  c.set_meta("dirt.monotone_proficiency", config.monotone_proficiency ? "1" : "0");
  c.set_meta("dirt.alpha_init_scale", format_exact(config.alpha_init_scale));
  c.set_meta("dirt.seed", std::to_string(config.seed));
}

DirtConfig get_dirt_config(const Checkpoint& c) {
  DirtConfig config;
  auto count = [&](const char* key, std::size_t fallback) {
    const std::string* v = c.find_meta(key);
    return v ? parse_count(*v, key) : fallback;
  };
  config.hidden = count("dirt.hidden", config.hidden);
  config.seq_len = count("dirt.seq_len", config.seq_len);
  config.dnn_width = count("dirt.dnn_width", config.dnn_width);
  config.seed = count("dirt.seed", config.seed);
  const std::string activation = c.meta_or("dirt.activation", "tanh");
  if (activation != "tanh" && activation != "identity") throw DataError("checkpoint: bad activation '" + activation + "'");
  config.activation = activation == "tanh" ? Activation::Tanh : Activation::Identity;
  config.literal_discrimination = parse_bool(c.meta_or("dirt.literal_discrimination", "0"));
  config.train_embeddings = parse_bool(c.meta_or("dirt.train_embeddings", "0"));
  config.monotone_proficiency = parse_bool(c.meta_or("dirt.monotone_proficiency", "0"));
  config.alpha_init_scale = parse_exact(c.meta_or("dirt.alpha_init_scale", format_exact(config.alpha_init_scale)));
  return config;
}

Checkpoint make_checkpoint(const Model& model, const Corpus& corpus) {
  Checkpoint c;
  c.kind = model.kind();
  c.d0 = corpus.embeddings().dim();
  c.concepts = corpus.concept_count();
  if (const auto* dirt = dynamic_cast<const DirtModel*>(&model)) {
    c.d1 = dirt->concept_dim();
    c.seq_len = dirt->config().seq_len;
    c.hidden = model.kind() == ModelKind::Dirt ? dirt->config().hidden : 0;
    put_dirt_config(c, dirt->config());
  }
  c.students = corpus.students();
  for (const auto& q : corpus.questions()) c.questions.push_back(q.id);
  for (const auto& p : model.parameters()) c.tensors.emplace_back(p.name, p.value);
  return c;
}

void save_checkpoint(const Checkpoint& c, const fs::path& path) {
  for (const auto& [k, v] : c.meta)
    if (has_space(k) || has_space(v)) throw std::invalid_argument("checkpoint meta '" + k + "' must be non-empty without whitespace");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << kMagic << '\n' << "format-version " << c.format_version << '\n' << "model-kind " << to_string(c.kind) << '\n';
  out << "dims d0=" << c.d0 << " d1=" << c.d1 << " N=" << c.seq_len << " hidden=" << c.hidden << " P=" << c.concepts
      << '\n';
  for (const auto& [k, v] : c.meta) out << "meta " << k << ' ' << v << '\n';
  out << "students " << c.students.size() << '\n';
  for (const auto& s : c.students) out << s << '\n';
  out << "questions " << c.questions.size() << '\n';
  for (const auto& q : c.questions) out << q << '\n';
  for (const auto& [name, t] : c.tensors) {
    out << "tensor " << name << ' ' << t.rank();
    for (std::size_t e : t.shape()) out << ' ' << e;
    out << '\n';
  }
  out << "end-header\n";
  std::vector<char> bytes;
  for (const auto& [name, t] : c.tensors) {
    bytes.resize(t.size() * 8);
    std::size_t k = 0;
    for (double v : t.data()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) bytes[k++] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw DataError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::string where = path.string() + ": ";
  std::string line;
  auto next = [&]() -> std::string& {
    if (!std::getline(in, line)) throw DataError(where + "truncated header");
    return line;
  };
  if (next() != kMagic) throw DataError(where + "not a checkpoint file");

  Checkpoint c;
  {
    std::istringstream ss(next());
    std::string key;
    ss >> key >> c.format_version;
    if (key != "format-version" || !ss) throw DataError(where + "missing format-version");
    if (c.format_version != kCheckpointVersion)
      throw DataError(where + "format version " + std::to_string(c.format_version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  {
    std::istringstream ss(next());
    std::string key, kind;
    ss >> key >> kind;
    if (key != "model-kind") throw DataError(where + "missing model-kind");
    try {
      c.kind = parse_model_kind(kind);
    } catch (const std::invalid_argument& e) {
      throw DataError(where + e.what());
    }
  }
  {
    std::istringstream ss(next());
    std::string key, item;
    ss >> key;
    if (key != "dims") throw DataError(where + "missing dims");
    while (ss >> item) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw DataError(where + "bad dims entry '" + item + "'");
      const std::string name = item.substr(0, eq);
      const std::size_t v = parse_count(std::string_view(item).substr(eq + 1), "dimension");
      if (name == "d0") c.d0 = v;
      else if (name == "d1") c.d1 = v;
      else if (name == "N") c.seq_len = v;
      else if (name == "hidden") c.hidden = v;
      else if (name == "P") c.concepts = v;
      else throw DataError(where + "unknown dimension '" + name + "'");
    }
  }
  std::vector<std::pair<std::string, Shape>> layout;
  for (;;) {
    std::istringstream ss(next());
    std::string key;
    ss >> key;
    if (key == "end-header") break;
    if (key == "meta") {
      std::string k, v;
      ss >> k >> v;
      if (k.empty() || v.empty()) throw DataError(where + "bad meta line");
      c.meta.emplace_back(k, v);
    } else if (key == "students" || key == "questions") {
      std::string count;
      ss >> count;
      const std::size_t n = parse_count(count, key + " count");
      auto& ids = key == "students" ? c.students : c.questions;
      for (std::size_t i = 0; i < n; ++i) ids.push_back(next());
    } else if (key == "tensor") {
      std::string name, rank_text;
      ss >> name >> rank_text;
      const std::size_t rank = parse_count(rank_text, "tensor rank");
      Shape shape(rank);
      for (auto& e : shape) {
        std::string t;
        ss >> t;
        e = parse_count(t, "tensor extent");
      }
      if (name.empty() || rank == 0) throw DataError(where + "bad tensor line");
      layout.emplace_back(name, shape);
    } else {
      throw DataError(where + "unexpected header line '" + line + "'");
    }
  }
  std::vector<char> bytes;
  for (auto& [name, shape] : layout) {
    Tensor t(shape);
    bytes.resize(t.size() * 8);
    if (!in.read(bytes.data(), static_cast<std::streamsize>(bytes.size())))
      throw DataError(where + "truncated data for tensor '" + name + "'");
    std::size_t k = 0;
    for (double& v : t.data()) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[k++])) << (8 * b);
      v = std::bit_cast<double>(bits);
    }
    c.tensors.emplace_back(name, std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError(where + "trailing bytes after tensor data");
  return c;
}

std::unique_ptr<Model> restore_model(const Checkpoint& c, const Corpus& corpus) {
  if (c.students != corpus.students()) throw DataError("checkpoint students do not match the corpus");
  if (c.questions.size() != corpus.question_count()) throw DataError("checkpoint questions do not match the corpus");
  for (std::size_t i = 0; i < c.questions.size(); ++i)
    if (c.questions[i] != corpus.questions()[i].id) throw DataError("checkpoint questions do not match the corpus");
  if (c.concepts != corpus.concept_count()) throw DataError("checkpoint concept count does not match the corpus");

  ExperimentConfig config;
  if (is_deep(c.kind)) config.dirt = get_dirt_config(c);
  auto model = make_model(c.kind, corpus, config);
  auto& params = model->parameters();
  if (params.size() != c.tensors.size())
    throw DataError("checkpoint holds " + std::to_string(c.tensors.size()) + " tensors, model expects " +
                    std::to_string(params.size()));
  for (const auto& [name, t] : c.tensors) {
    Parameter* p = params.find(name);
    if (!p) throw DataError("checkpoint tensor '" + name + "' is not part of a " + std::string(to_string(c.kind)) + " model");
    if (p->value.shape() != t.shape())
      throw DataError("checkpoint tensor '" + name + "' has shape " + t.shape_string() + ", model expects " +
                      p->value.shape_string());
    p->value = t;
  }
  return model;
}

}  // namespace dirt
