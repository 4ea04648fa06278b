// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/data_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cagat/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cagat {

namespace {

std::string join(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

[[noreturn]] void fail(const std::string& file, long line, const std::string& what) {
  throw DataError(file + ":" + std::to_string(line) + ": " + what);
}

long parse_int_field(const char*& p, const std::string& file, long line) {
  char* end = nullptr;
  const long v = std::strtol(p, &end, 10);
  if (end == p) fail(file, line, "expected an integer");
  p = end;
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::uint64_t h = 14695981039346656037ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof buf)) break;
  }
  return h;
}

BundleManifest read_manifest(const std::string& dir) {
  const std::string path = join(dir, "manifest.json");
  if (!fs::exists(path)) throw DataError("manifest.json not found in " + dir);
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  BundleManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.n = j.at("n").get<int>();
    m.d = j.at("d").get<int>();
    m.c = j.at("c").get<int>();
    m.edges = j.at("edges").get<long>();
    m.feature_encoding = j.at("feature_encoding").get<std::string>();
    if (j.contains("files")) {
      const auto& f = j.at("files");
      m.edges_file = f.value("edges", m.edges_file);
      m.labels_file = f.value("labels", m.labels_file);
      m.features_file = f.value("features", "");
    }
    if (j.contains("checksums"))
      m.checksums = j.at("checksums").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (m.n <= 0 || m.d <= 0 || m.c <= 0 || m.edges < 0)
    throw DataError(path + ": counts must be positive");
  if (m.feature_encoding != "csv" && m.feature_encoding != "binary-f32")
    throw DataError(path + ": feature_encoding must be 'csv' or 'binary-f32'");
  if (m.features_file.empty())
    m.features_file = m.feature_encoding == "csv" ? "features.csv" : "features.f32";
  return m;
}

namespace {

std::vector<std::pair<int, int>> parse_edges(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::pair<int, int>> pairs;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.c_str();
    const long a = parse_int_field(p, path, lineno);
    if (*p != '\t') fail(path, lineno, "expected tab-separated ids");
    ++p;
    const long b = parse_int_field(p, path, lineno);
    while (*p == ' ' || *p == '\r') ++p;
    if (*p != '\0') fail(path, lineno, "trailing characters");
    if (a < 0 || a >= n || b < 0 || b >= n) fail(path, lineno, "node id out of range");
    pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
  }
  return pairs;
}

std::vector<int> parse_labels(const std::string& path, int n, int c) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<int> labels(n, -1);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.c_str();
    const long id = parse_int_field(p, path, lineno);
    if (*p != '\t') fail(path, lineno, "expected tab-separated id and class");
    ++p;
    const long cls = parse_int_field(p, path, lineno);
    while (*p == ' ' || *p == '\r') ++p;
    if (*p != '\0') fail(path, lineno, "trailing characters");
    if (id < 0 || id >= n) fail(path, lineno, "node id out of range");
    if (cls < 0 || cls >= c) fail(path, lineno, "class id out of range");
    if (labels[id] != -1) fail(path, lineno, "duplicate label for node " + std::to_string(id));
    labels[id] = static_cast<int>(cls);
  }
  for (int i = 0; i < n; ++i)
    if (labels[i] == -1) throw DataError(path + ": node " + std::to_string(i) + " has no label");
  std::vector<char> seen(c, 0);
  for (int l : labels) seen[l] = 1;
  for (int k = 0; k < c; ++k)
    if (!seen[k])
      throw DataError(path + ": class " + std::to_string(k) + " has no nodes (manifest says c = " +
                      std::to_string(c) + ")");
  return labels;
}

DenseMatrix parse_features_csv(const std::string& path, int n, int d) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  DenseMatrix x(n, d);
  std::string line;
  long lineno = 0;
  int row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (row >= n) fail(path, lineno, "more feature rows than manifest n");
    const char* p = line.c_str();
    for (int j = 0; j < d; ++j) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) fail(path, lineno, "expected " + std::to_string(d) + " values, bad token");
      x(row, j) = v;
      p = end;
      if (j + 1 < d) {
        if (*p != ',') fail(path, lineno, "expected comma after value " + std::to_string(j + 1));
        ++p;
      }
    }
    while (*p == ' ' || *p == '\r') ++p;
    if (*p != '\0') fail(path, lineno, "trailing characters");
    ++row;
  }
  if (row != n)
    throw DataError(path + ": " + std::to_string(row) + " feature rows, manifest says " +
                    std::to_string(n));
  return x;
}

DenseMatrix parse_features_f32(const std::string& path, int n, int d) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open " + path);
  const auto size = static_cast<std::size_t>(in.tellg());
  const std::size_t want = static_cast<std::size_t>(n) * d * sizeof(float);
  if (size != want)
    throw DataError(path + ": size " + std::to_string(size) + " bytes, expected " +
                    std::to_string(want));
  in.seekg(0);
  std::vector<float> raw(static_cast<std::size_t>(n) * d);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(want));
  if (!in) throw DataError(path + ": short read");
  DenseMatrix x(n, d);
  for (std::size_t i = 0; i < raw.size(); ++i) x.data[i] = static_cast<double>(raw[i]);
  return x;
}

}  // namespace

DatasetBundle load_bundle(const std::string& dir) {
  const BundleManifest m = read_manifest(dir);
  for (const auto& [file, want] : m.checksums) {
    const std::string got = hex64(fnv1a64_file(join(dir, file)));
    if (got != want)
      throw DataError(join(dir, file) + ": checksum mismatch (manifest " + want + ", file " +
                      got + ")");
  }

  DatasetBundle b;
  b.name = m.name;
  b.graph = build_graph(m.n, parse_edges(join(dir, m.edges_file), m.n));
  if (b.graph.num_edges() != m.edges)
    throw DataError(join(dir, m.edges_file) + ": " + std::to_string(b.graph.num_edges()) +
                    " unique undirected edges, manifest says " + std::to_string(m.edges));
  b.labels = parse_labels(join(dir, m.labels_file), m.n, m.c);
  b.num_classes = m.c;
  const std::string fpath = join(dir, m.features_file);
  b.features = m.feature_encoding == "csv" ? parse_features_csv(fpath, m.n, m.d)
                                           : parse_features_f32(fpath, m.n, m.d);
  b.validate();
  return b;
}

void atomic_write_bytes(const std::string& path, const char* data, std::size_t size) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp + " for writing");
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw DataError("short write on " + tmp);
  }
  fs::rename(tmp, path);
}

void atomic_write_text(const std::string& path, const std::string& content) {
  atomic_write_bytes(path, content.data(), content.size());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_bundle(const std::string& dir, const DatasetBundle& bundle,
                  const std::string& feature_encoding, bool with_checksums) {
  bundle.validate();
  if (feature_encoding != "csv" && feature_encoding != "binary-f32")
    throw ConfigError("write_bundle: unknown feature encoding " + feature_encoding);
  fs::create_directories(dir);

  std::ostringstream edges;
  for (auto [i, j] : bundle.graph.edges) edges << i << '\t' << j << '\n';
  atomic_write_text(join(dir, "edges.tsv"), edges.str());

  std::ostringstream labels;
  for (int i = 0; i < bundle.graph.n; ++i) labels << i << '\t' << bundle.labels[i] << '\n';
  atomic_write_text(join(dir, "labels.tsv"), labels.str());

  const std::string features_file =
      feature_encoding == "csv" ? "features.csv" : "features.f32";
  if (feature_encoding == "csv") {
    std::ostringstream feat;
    for (int i = 0; i < bundle.features.rows; ++i) {
      for (int j = 0; j < bundle.features.cols; ++j) {
        if (j) feat << ',';
        feat << format_double(bundle.features(i, j));
      }
      feat << '\n';
    }
    atomic_write_text(join(dir, features_file), feat.str());
  } else {
    std::vector<float> raw(bundle.features.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
      raw[i] = static_cast<float>(bundle.features.data[i]);
    atomic_write_bytes(join(dir, features_file),
                       reinterpret_cast<const char*>(raw.data()), raw.size() * sizeof(float));
  }

  json manifest;
  manifest["name"] = bundle.name;
  manifest["n"] = bundle.graph.n;
  manifest["d"] = bundle.features.cols;
  manifest["c"] = bundle.num_classes;
  manifest["edges"] = bundle.graph.num_edges();
  manifest["feature_encoding"] = feature_encoding;
  manifest["files"] = {{"edges", "edges.tsv"}, {"labels", "labels.tsv"},
                       {"features", features_file}};
  if (with_checksums) {
    json sums;
    for (const std::string& f : {std::string("edges.tsv"), std::string("labels.tsv"),
                                 features_file})
      sums[f] = hex64(fnv1a64_file(join(dir, f)));
    manifest["checksums"] = std::move(sums);
  }
  atomic_write_text(join(dir, "manifest.json"), manifest.dump(2) + "\n");
}

// --- result export ---------------------------------------------------------

namespace {

json run_to_json(const RunResult& r) {
  return json{{"seed", r.seed},
              {"best_epoch", r.best_epoch},
              {"stop_epoch", r.stop_epoch},
              {"best_val_loss", r.best_val_loss},
              {"final_train_loss", r.final_train_loss},
              {"test_accuracy", r.test_accuracy},
              {"wall_seconds", r.wall_seconds},
              {"train_curve", r.train_curve},
              {"val_curve", r.val_curve}};
}

RunResult run_from_json(const json& j) {
  RunResult r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.best_epoch = j.at("best_epoch").get<int>();
  r.stop_epoch = j.at("stop_epoch").get<int>();
  r.best_val_loss = j.at("best_val_loss").get<double>();
  r.final_train_loss = j.at("final_train_loss").get<double>();
  r.test_accuracy = j.at("test_accuracy").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.train_curve = j.at("train_curve").get<std::vector<double>>();
  r.val_curve = j.at("val_curve").get<std::vector<double>>();
  return r;
}

}  // namespace

void write_results_json(const std::string& path, const std::vector<LabeledAggregate>& cells,
                        const std::vector<std::pair<std::string, std::string>>& config_kv) {
  json j;
  json cfg = json::object();
  for (const auto& [k, v] : config_kv) cfg[k] = v;
  j["config"] = std::move(cfg);
  json arr = json::array();
  for (const LabeledAggregate& c : cells) {
    json cell;
    if (c.has_axis) {
      cell["axis"] = c.axis;
      cell["value"] = c.value;
    }
    cell["mean_accuracy"] = c.agg.mean_accuracy;
    cell["std_accuracy"] = c.agg.std_accuracy;
    json runs = json::array();
    for (const RunResult& r : c.agg.runs) runs.push_back(run_to_json(r));
    cell["runs"] = std::move(runs);
    arr.push_back(std::move(cell));
  }
  j["cells"] = std::move(arr);
  atomic_write_text(path, j.dump(2) + "\n");
}

std::vector<LabeledAggregate> load_results_json(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  std::vector<LabeledAggregate> cells;
  try {
    for (const json& cell : j.at("cells")) {
      LabeledAggregate c;
      if (cell.contains("axis")) {
        c.has_axis = true;
        c.axis = cell.at("axis").get<std::string>();
        c.value = cell.at("value").get<double>();
      }
      c.agg.mean_accuracy = cell.at("mean_accuracy").get<double>();
      c.agg.std_accuracy = cell.at("std_accuracy").get<double>();
      for (const json& r : cell.at("runs")) c.agg.runs.push_back(run_from_json(r));
      cells.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return cells;
}

void write_aggregate_csv(const std::string& path, const std::vector<LabeledAggregate>& cells) {
  std::ostringstream out;
  out << "row,axis,value,seed,test_accuracy,best_epoch,stop_epoch,final_train_loss,"
         "wall_seconds,mean_accuracy,std_accuracy\n";
  for (const LabeledAggregate& c : cells) {
    const std::string axis = c.has_axis ? c.axis : "";
    const std::string value = c.has_axis ? format_double(c.value) : "";
    out << "summary," << axis << ',' << value << ",,,,,,," << format_double(c.agg.mean_accuracy)
        << ',' << format_double(c.agg.std_accuracy) << '\n';
    for (const RunResult& r : c.agg.runs) {
      out << "seed," << axis << ',' << value << ',' << r.seed << ','
          << format_double(r.test_accuracy) << ',' << r.best_epoch << ',' << r.stop_epoch << ','
          << format_double(r.final_train_loss) << ',' << format_double(r.wall_seconds) << ",,\n";
    }
  }
  atomic_write_text(path, out.str());
}

void write_curves_csv(const std::string& path, const std::vector<LabeledAggregate>& cells) {
  std::ostringstream out;
  out << "axis,value,seed,epoch,train_loss,val_loss\n";
  for (const LabeledAggregate& c : cells) {
    const std::string axis = c.has_axis ? c.axis : "";
    const std::string value = c.has_axis ? format_double(c.value) : "";
    for (const RunResult& r : c.agg.runs)
      for (std::size_t e = 0; e < r.train_curve.size(); ++e)
        out << axis << ',' << value << ',' << r.seed << ',' << e << ','
            << format_double(r.train_curve[e]) << ',' << format_double(r.val_curve[e]) << '\n';
  }
  atomic_write_text(path, out.str());
}

}  // namespace cagat
