// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "shufflegate/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace shufflegate {

namespace {

constexpr char kMagic[8] = {'S', 'G', 'C', 'K', 'P', 'T', '\0', '\1'};
constexpr std::uint32_t kVersion = 1;

template <typename V>
void put(std::ostream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get(std::istream& in, const std::string& path) {
  V v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(V)))
    throw ParseError(path + ": truncated checkpoint");
  return v;
}

template <typename V>
Record numeric(RecordType type, std::vector<std::uint64_t> shape,
               std::span<const V> values) {
  Record r;
  r.type = type;
  r.shape = std::move(shape);
  r.bytes.resize(values.size() * sizeof(V));
  if (!values.empty()) std::memcpy(r.bytes.data(), values.data(), r.bytes.size());
  return r;
}

Record text(const std::string& s) {
  Record r;
  r.type = RecordType::Text;
  r.shape = {s.size()};
  r.bytes.assign(s.begin(), s.end());
  return r;
}

Record tensor_record(const Tensor<float>& t) {
  std::vector<std::uint64_t> shape(t.shape().begin(), t.shape().end());
  return numeric<float>(RecordType::F32, shape, t.data());
}

const Record& need(const RecordMap& m, const std::string& name,
                   const std::string& path) {
  auto it = m.find(name);
  if (it == m.end()) throw ParseError(path + ": missing record '" + name + "'");
  return it->second;
}

template <typename V>
std::vector<V> values_of(const Record& r, RecordType type, const std::string& name) {
  if (r.type != type || r.bytes.size() % sizeof(V) != 0)
    throw ParseError("checkpoint record '" + name + "' has the wrong type");
  std::vector<V> out(r.bytes.size() / sizeof(V));
  if (!out.empty()) std::memcpy(out.data(), r.bytes.data(), r.bytes.size());
  return out;
}

void fill(Tensor<float>& t, const Record& r, const std::string& name) {
  auto v = values_of<float>(r, RecordType::F32, name);
  if (v.size() != t.size() ||
      !std::equal(r.shape.begin(), r.shape.end(), t.shape().begin(), t.shape().end()))
    throw ParseError("checkpoint record '" + name + "' has the wrong shape");
  std::copy(v.begin(), v.end(), t.data().begin());
}

Tensor<float> load_tensor(const RecordMap& m, const std::string& name,
                          const std::string& path) {
  const auto& r = need(m, name, path);
  auto v = values_of<float>(r, RecordType::F32, name);
  Shape shape(r.shape.begin(), r.shape.end());
  if (shape_size(shape) != v.size())
    throw ParseError(path + ": record '" + name + "' size does not match shape");
  return Tensor<float>::from(std::move(shape), std::move(v), true);
}

std::string text_of(const Record& r, const std::string& name) {
  if (r.type != RecordType::Text)
    throw ParseError("checkpoint record '" + name + "' is not text");
  return std::string(r.bytes.begin(), r.bytes.end());
}

}  // namespace

void write_records(const std::string& path, const RecordMap& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, records.size());
  for (const auto& [name, r] : records) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(r.type));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.shape.size()));
    for (auto d : r.shape) put<std::uint64_t>(out, d);
    put<std::uint64_t>(out, r.bytes.size());
    out.write(reinterpret_cast<const char*>(r.bytes.data()),
              static_cast<std::streamsize>(r.bytes.size()));
  }
  if (!out) throw IoError("failed writing " + path);
}

RecordMap read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError(path + ": not a checkpoint file");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion)
    throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));
  const auto count = get<std::uint64_t>(in, path);
  RecordMap out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(in, path);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw ParseError(path + ": truncated checkpoint");
    Record r;
    const auto type = get<std::uint8_t>(in, path);
    if (type > static_cast<std::uint8_t>(RecordType::Text))
      throw ParseError(path + ": record '" + name + "' has unknown type");
    r.type = static_cast<RecordType>(type);
    const auto rank = get<std::uint32_t>(in, path);
    for (std::uint32_t d = 0; d < rank; ++d) r.shape.push_back(get<std::uint64_t>(in, path));
    const auto n = get<std::uint64_t>(in, path);
    r.bytes.resize(n);
    if (n && !in.read(reinterpret_cast<char*>(r.bytes.data()), static_cast<std::streamsize>(n)))
      throw ParseError(path + ": truncated checkpoint");
    out.emplace(std::move(name), std::move(r));
  }
  return out;
}

void save_checkpoint(const std::string& path, const Trainer<float>& trainer) {
  const auto& schema = trainer.schema();
  const auto& params = trainer.params();
  nlohmann::json meta;
  meta["schema_fingerprint"] = schema.fingerprint_hex();
  for (const auto& f : schema.fields)
    meta["fields"].push_back({{"name", f.name}, {"vocab", f.vocab},
                              {"dim", f.dim}, {"column", f.column}});
  meta["layers"] = params.weights.size();
  meta["masked"] = !params.entry_masks.empty();
  meta["steps"] = trainer.steps();
  const auto& a = trainer.adam().config();
  meta["adam"] = {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
  if (const auto& g = trainer.gates()) {
    const auto& c = g->config();
    meta["gates"] = {{"granularity", to_string(c.granularity)}, {"chunk", c.chunk},
                     {"tau", c.tau}, {"alpha", c.alpha},
                     {"warmup_steps", c.warmup_steps}, {"init_gate", c.init_gate},
                     {"tensors", g->phi().size()}};
  }

  RecordMap m;
  m["meta"] = text(meta.dump());
  for (std::size_t i = 0; i < params.embeddings.size(); ++i)
    m["embedding/" + std::to_string(i)] = tensor_record(params.embeddings[i]);
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    m["weight/" + std::to_string(i)] = tensor_record(params.weights[i]);
    m["bias/" + std::to_string(i)] = tensor_record(params.biases[i]);
  }
  for (std::size_t i = 0; i < params.entry_masks.size(); ++i)
    m["mask/" + std::to_string(i)] = numeric<std::uint8_t>(
        RecordType::U8, {params.entry_masks[i].size()}, params.entry_masks[i]);
  if (const auto& g = trainer.gates())
    for (std::size_t i = 0; i < g->phi().size(); ++i)
      m["phi/" + std::to_string(i)] = tensor_record(g->phi()[i]);
  const auto& slots = trainer.adam().slots();
  std::vector<std::uint64_t> t;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    m["adam/m/" + std::to_string(i)] =
        numeric<float>(RecordType::F32, {slots[i].m.size()}, slots[i].m);
    m["adam/v/" + std::to_string(i)] =
        numeric<float>(RecordType::F32, {slots[i].v.size()}, slots[i].v);
    t.push_back(slots[i].t);
  }
  m["adam/t"] = numeric<std::uint64_t>(RecordType::U64, {t.size()}, t);
  std::ostringstream rng;
  rng << trainer.shuffle_rng();
  m["rng/shuffle"] = text(rng.str());
  write_records(path, m);
}

Trainer<float> load_checkpoint(const std::string& path) {
  const auto m = read_records(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(text_of(need(m, "meta", path), "meta"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": bad checkpoint metadata: " + e.what());
  }
  try {
    FieldSchema schema;
    for (const auto& f : meta.at("fields"))
      schema.fields.push_back({f.at("name").get<std::string>(), f.at("vocab").get<std::size_t>(),
                               f.at("dim").get<std::size_t>(), f.at("column").get<std::size_t>()});
    if (schema.fingerprint_hex() != meta.at("schema_fingerprint").get<std::string>())
      throw ParseError(path + ": schema fingerprint does not match stored fields");

    BackboneParams<float> params;
    for (std::size_t i = 0; i < schema.size(); ++i)
      params.embeddings.push_back(load_tensor(m, "embedding/" + std::to_string(i), path));
    const auto layers = meta.at("layers").get<std::size_t>();
    for (std::size_t i = 0; i < layers; ++i) {
      params.weights.push_back(load_tensor(m, "weight/" + std::to_string(i), path));
      params.biases.push_back(load_tensor(m, "bias/" + std::to_string(i), path));
    }
    if (meta.at("masked").get<bool>())
      for (std::size_t i = 0; i < schema.size(); ++i) {
        const auto name = "mask/" + std::to_string(i);
        params.entry_masks.push_back(values_of<std::uint8_t>(need(m, name, path), RecordType::U8, name));
      }

    std::optional<GateSet<float>> gates;
    if (meta.contains("gates")) {
      const auto& g = meta["gates"];
      GateConfig c;
      c.granularity = parse_granularity(g.at("granularity").get<std::string>());
      c.chunk = g.at("chunk");
      c.tau = g.at("tau");
      c.alpha = g.at("alpha");
      c.warmup_steps = g.at("warmup_steps");
      c.init_gate = g.at("init_gate");
      auto gs = GateSet<float>::create(schema, c);
      if (gs.phi().size() != g.at("tensors").get<std::size_t>())
        throw ParseError(path + ": gate tensor count mismatch");
      for (std::size_t i = 0; i < gs.phi().size(); ++i) {
        const auto name = "phi/" + std::to_string(i);
        fill(gs.phi()[i], need(m, name, path), name);
      }
      gates = std::move(gs);
    }

    AdamConfig a;
    a.lr = meta.at("adam").at("lr");
    a.beta1 = meta.at("adam").at("beta1");
    a.beta2 = meta.at("adam").at("beta2");
    a.eps = meta.at("adam").at("eps");
    Trainer<float> tr(schema, std::move(params), std::move(gates), a, 0);
    tr.set_steps(meta.at("steps").get<std::uint64_t>());
    auto& slots = tr.adam().slots();
    const auto t = values_of<std::uint64_t>(need(m, "adam/t", path), RecordType::U64, "adam/t");
    if (t.size() != slots.size()) throw ParseError(path + ": optimizer slot count mismatch");
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto mn = "adam/m/" + std::to_string(i), vn = "adam/v/" + std::to_string(i);
      slots[i].m = values_of<float>(need(m, mn, path), RecordType::F32, mn);
      slots[i].v = values_of<float>(need(m, vn, path), RecordType::F32, vn);
      if (slots[i].m.size() != slots[i].param.size() || slots[i].v.size() != slots[i].param.size())
        throw ParseError(path + ": optimizer moment size mismatch in slot " + std::to_string(i));
      slots[i].t = t[i];
    }
    std::istringstream rng(text_of(need(m, "rng/shuffle", path), "rng/shuffle"));
    rng >> tr.shuffle_rng();
    if (!rng) throw ParseError(path + ": bad PRNG state");
    return tr;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": bad checkpoint metadata: " + e.what());
  }
}

std::string checkpoint_fingerprint(const std::string& path) {
  const auto m = read_records(path);
  try {
    return nlohmann::json::parse(text_of(need(m, "meta", path), "meta"))
        .at("schema_fingerprint")
        .get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": bad checkpoint metadata: " + e.what());
  }
}

}  // namespace shufflegate
