// Copyright 2026 The ShuffleGate Authors
// SPDX-License-Identifier: Apache-2.0

#include "shufflegate/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "shufflegate/error.hpp"
#include "shufflegate/random.hpp"

namespace shufflegate {

std::string to_string(RoleKind r) {
  switch (r) {
    case RoleKind::Informative:
      return "informative";
    case RoleKind::Redundant:
      return "redundant";
    case RoleKind::Noise:
      return "noise";
    case RoleKind::Spurious:
      return "spurious";
  }
  return "?";
}

RoleKind parse_role(const std::string& s) {
  if (s == "informative") return RoleKind::Informative;
  if (s == "redundant") return RoleKind::Redundant;
  if (s == "noise") return RoleKind::Noise;
  if (s == "spurious") return RoleKind::Spurious;
  throw ParseError("unknown field role '" + s + "'");
}

const std::vector<std::uint32_t>& Dataset::split(SplitName s) const {
  switch (s) {
    case SplitName::Train:
      return splits.train;
    case SplitName::Val:
      return splits.val;
    case SplitName::Test:
      return splits.test;
  }
  return splits.train;
}

void Dataset::validate() const {
  if (x.cols != schema.size())
    throw ConfigError("dataset columns do not match its schema");
  if (y.size() != x.rows) throw ConfigError("label count differs from rows");
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c)
      if (x(r, c) >= schema.fields[c].vocab)
        throw ConfigError("id out of vocabulary in column " +
                          schema.fields[c].name);
  for (auto v : y)
    if (v > 1) throw ConfigError("labels must be binary");
  const std::size_t covered =
      splits.train.size() + splits.val.size() + splits.test.size();
  if (covered != 0) {
    if (covered != x.rows) throw ConfigError("splits do not cover every row");
    std::vector<std::uint8_t> seen(x.rows, 0);
    for (const auto* s : {&splits.train, &splits.val, &splits.test})
      for (auto i : *s) {
        if (i >= x.rows || seen[i]) throw ConfigError("splits overlap");
        seen[i] = 1;
      }
  }
}

namespace {

double sigmoid(double v) {
  return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_informative == 0)
    throw ConfigError("synthetic spec needs at least one informative field");
  if (spec.vocab < 2) throw ConfigError("synthetic vocab must be >= 2");
  if (spec.n_samples == 0) throw ConfigError("synthetic spec needs samples");
  if (spec.effect_scale < 0) throw ConfigError("effect_scale must be >= 0");
  if (spec.emb_dim == 0) throw ConfigError("embedding dim must be positive");

  Rng rng = make_rng(spec.seed, stream::kSynthetic);
  const std::size_t nf = spec.n_informative + spec.n_redundant + spec.n_noise;
  const std::size_t n = spec.n_samples, v = spec.vocab;

  Dataset ds;
  ds.x = IndexMatrix(n, nf);
  ds.y.assign(n, 0);
  for (std::size_t f = 0; f < nf; ++f)
    ds.schema.fields.push_back({"f" + std::to_string(f), v, spec.emb_dim, f});

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> effects(spec.n_informative,
                                           std::vector<double>(v));
  for (auto& e : effects)
    for (auto& x : e) x = spec.effect_scale * normal(rng);

  std::vector<std::vector<std::uint32_t>> bijection(spec.n_redundant);
  for (auto& b : bijection) {
    b.resize(v);
    std::iota(b.begin(), b.end(), 0u);
    std::shuffle(b.begin(), b.end(), rng);
  }

  std::uniform_int_distribution<std::uint32_t> cat(0, static_cast<std::uint32_t>(v - 1));
  std::vector<double> score(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t f = 0; f < spec.n_informative; ++f) {
      const auto c = cat(rng);
      ds.x(r, f) = c;
      score[r] += effects[f][c];
    }
    for (std::size_t j = 0; j < spec.n_redundant; ++j)
      ds.x(r, spec.n_informative + j) =
          bijection[j][ds.x(r, j % spec.n_informative)];
    for (std::size_t j = 0; j < spec.n_noise; ++j)
      ds.x(r, spec.n_informative + spec.n_redundant + j) = cat(rng);
  }

  // Bisect the intercept on the expected positive rate.
  auto rate = [&](double b) {
    double s = 0.0;
    for (double x : score) s += sigmoid(x + b);
    return s / static_cast<double>(n);
  };
  double lo = -50.0, hi = 50.0;
  for (int it = 0; it < 100 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) < 0.5 ? lo : hi) = mid;
  }
  const double bias = 0.5 * (lo + hi);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < n; ++r)
    ds.y[r] = unit(rng) < sigmoid(score[r] + bias) ? 1 : 0;

  for (std::size_t f = 0; f < spec.n_informative; ++f)
    ds.roles.push_back({RoleKind::Informative, std::nullopt});
  for (std::size_t j = 0; j < spec.n_redundant; ++j)
    ds.roles.push_back({RoleKind::Redundant, j % spec.n_informative});
  for (std::size_t j = 0; j < spec.n_noise; ++j)
    ds.roles.push_back({RoleKind::Noise, std::nullopt});
  return ds;
}

void inject_spurious_field(Dataset& ds, std::size_t field, double strength,
                           std::uint64_t seed) {
  if (field >= ds.x.cols) throw ContractError("spurious field out of range");
  if (ds.splits.train.empty()) throw ContractError("dataset has no splits");
  if (strength < 0.0 || strength > 1.0)
    throw ContractError("spurious strength must be in [0, 1]");
  const auto vocab = static_cast<std::uint32_t>(ds.schema.fields[field].vocab);
  if (vocab < 2) throw ContractError("spurious field needs vocab >= 2");
  Rng rng = make_rng(seed, stream::kSynthetic + 100);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> any(0, vocab - 1);
  const std::uint32_t half = vocab / 2;
  std::uniform_int_distribution<std::uint32_t> low(0, half - 1);
  std::uniform_int_distribution<std::uint32_t> high(half, vocab - 1);
  for (std::size_t r = 0; r < ds.x.rows; ++r) ds.x(r, field) = any(rng);
  for (auto r : ds.splits.train)
    if (unit(rng) < strength) ds.x(r, field) = ds.y[r] ? low(rng) : high(rng);
  if (ds.roles.size() == ds.x.cols)
    ds.roles[field] = {RoleKind::Spurious, std::nullopt};
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_uint(const std::string& s, std::uint64_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 std::size_t emb_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
  const auto header = split_line(line);
  auto it = std::find(header.begin(), header.end(), label_column);
  if (it == header.end())
    throw ParseError(path + ":1: no label column '" + label_column + "'");
  const auto label_pos = static_cast<std::size_t>(it - header.begin());
  const std::size_t nf = header.size() - 1;
  if (nf == 0) throw ParseError(path + ":1: no feature columns");

  // Read raw cells first: a column is integer-coded only if every cell is.
  std::vector<std::vector<std::string>> cells;
  std::vector<std::uint8_t> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto row = split_line(line);
    if (row.size() != header.size())
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(row.size()));
    const auto& lab = row[label_pos];
    if (lab != "0" && lab != "1")
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": label must be 0 or 1, got '" + lab + "'");
    labels.push_back(lab == "1" ? 1 : 0);
    row.erase(row.begin() + static_cast<std::ptrdiff_t>(label_pos));
    cells.push_back(std::move(row));
  }

  Dataset ds;
  ds.x = IndexMatrix(cells.size(), nf);
  ds.y = std::move(labels);
  std::size_t out_col = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_pos) continue;
    const std::size_t f = out_col++;
    bool numeric = true;
    std::uint64_t v = 0, max_id = 0;
    for (const auto& row : cells) {
      if (!parse_uint(row[f], v) || v > 0xFFFFFFFEull) {
        numeric = false;
        break;
      }
    }
    if (numeric) {
      for (std::size_t r = 0; r < cells.size(); ++r) {
        parse_uint(cells[r][f], v);
        ds.x(r, f) = static_cast<std::uint32_t>(v);
        max_id = std::max(max_id, v);
      }
    } else {
      std::unordered_map<std::string, std::uint32_t> ids;
      for (std::size_t r = 0; r < cells.size(); ++r) {
        auto [pos, added] = ids.try_emplace(
            cells[r][f], static_cast<std::uint32_t>(ids.size()));
        ds.x(r, f) = pos->second;
      }
      max_id = ids.empty() ? 0 : ids.size() - 1;
    }
    ds.schema.fields.push_back(
        {header[c], static_cast<std::size_t>(max_id) + 1, emb_dim, f});
  }
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path,
               const std::string& label_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& f : ds.schema.fields) out << f.name << ',';
  out << label_column << '\n';
  std::string buf;
  for (std::size_t r = 0; r < ds.x.rows; ++r) {
    buf.clear();
    for (std::size_t c = 0; c < ds.x.cols; ++c) {
      buf += std::to_string(ds.x(r, c));
      buf += ',';
    }
    buf += ds.y[r] ? '1' : '0';
    buf += '\n';
    out << buf;
  }
  if (!out) throw IoError("failed writing " + path);
}

void write_roles(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "field,role,source_field\n";
  for (std::size_t f = 0; f < ds.roles.size(); ++f) {
    out << ds.schema.fields[f].name << ',' << to_string(ds.roles[f].kind) << ',';
    if (ds.roles[f].source) out << ds.schema.fields[*ds.roles[f].source].name;
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

std::vector<FieldRole> load_roles(const std::string& path,
                                  const FieldSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < schema.size(); ++i) pos[schema.fields[i].name] = i;
  std::vector<FieldRole> roles(schema.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != 3)
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected field,role,source_field");
    auto f = pos.find(cells[0]);
    if (f == pos.end())
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": unknown field " + cells[0]);
    FieldRole role{parse_role(cells[1]), std::nullopt};
    if (!cells[2].empty()) {
      auto s = pos.find(cells[2]);
      if (s == pos.end())
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": unknown source field " + cells[2]);
      role.source = s->second;
    }
    roles[f->second] = role;
  }
  return roles;
}

void split(Dataset& ds, std::uint64_t seed) {
  const std::size_t n = ds.x.rows;
  if (n < 10) throw ContractError("split needs at least 10 rows");
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng = make_rng(seed, stream::kSplit);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t a = n * 8 / 10, b = n * 9 / 10;
  ds.splits.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(a));
  ds.splits.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(a),
                       idx.begin() + static_cast<std::ptrdiff_t>(b));
  ds.splits.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(b), idx.end());
}

BatchIterator::BatchIterator(const Dataset& ds, SplitName which,
                             std::size_t batch_size, std::uint64_t seed,
                             std::uint64_t epoch)
    : ds_(&ds), order_(ds.split(which)), batch_size_(batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  Rng rng = make_rng(seed ^ (epoch * 0x9E3779B97F4A7C15ull), stream::kBatches);
  std::shuffle(order_.begin(), order_.end(), rng);
}

std::size_t BatchIterator::batches() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

bool BatchIterator::next(Batch& out) {
  if (pos_ >= order_.size()) return false;
  const std::size_t end = std::min(order_.size(), pos_ + batch_size_);
  std::span<const std::uint32_t> rows(order_.data() + pos_, end - pos_);
  out.x = ds_->x.select_rows(rows);
  out.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.y[i] = ds_->y[rows[i]];
  pos_ = end;
  return true;
}

IndexMatrix split_rows(const Dataset& ds, SplitName which) {
  return ds.x.select_rows(ds.split(which));
}

std::vector<std::uint8_t> split_labels(const Dataset& ds, SplitName which) {
  const auto& idx = ds.split(which);
  std::vector<std::uint8_t> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = ds.y[idx[i]];
  return out;
}

}  // namespace shufflegate
