// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cagat/graph.hpp"
#include "cagat/train.hpp"

namespace cagat {

/// Bundle directory layout: manifest.json describing counts and file names,
/// edges.tsv (one undirected pair per line, tab-separated 0-based ids),
/// labels.tsv (node id, class id), features.csv (d comma-separated values per
/// node row) or features.f32 (raw little-endian 32-bit floats, row-major).
struct BundleManifest {
  std::string name;
  int n = 0;
  int d = 0;
  int c = 0;
  long edges = 0;
  std::string feature_encoding;  // "csv" | "binary-f32"
  std::string edges_file = "edges.tsv";
  std::string labels_file = "labels.tsv";
  std::string features_file;                      // defaults from the encoding
  std::map<std::string, std::string> checksums;   // file name -> fnv1a64 hex
};

BundleManifest read_manifest(const std::string& dir);

/// Parses and validates a bundle; every observed count must match the
/// manifest. Errors carry file names and line numbers.
DatasetBundle load_bundle(const std::string& dir);

/// Writes a bundle directory (manifest last, files atomically). binary-f32
/// narrows features to 32-bit; exact for binary bag-of-words values.
void write_bundle(const std::string& dir, const DatasetBundle& bundle,
                  const std::string& feature_encoding = "csv", bool with_checksums = true);

// --- result export ---------------------------------------------------------

/// One aggregate, optionally tagged with a sweep-axis value. A plain train
/// run exports a single untagged cell.
struct LabeledAggregate {
  bool has_axis = false;
  std::string axis;
  double value = 0.0;
  AggregateResult agg;
};

/// Lossless JSON export (doubles round-trip bit-exactly); config_kv is echoed
/// under "config" for provenance.
void write_results_json(const std::string& path, const std::vector<LabeledAggregate>& cells,
                        const std::vector<std::pair<std::string, std::string>>& config_kv);
std::vector<LabeledAggregate> load_results_json(const std::string& path);

/// Columns: row,axis,value,seed,test_accuracy,best_epoch,stop_epoch,
/// final_train_loss,wall_seconds,mean_accuracy,std_accuracy. One summary row
/// per cell followed by its per-seed rows. Header-only when cells is empty.
void write_aggregate_csv(const std::string& path, const std::vector<LabeledAggregate>& cells);

/// Columns: axis,value,seed,epoch,train_loss,val_loss.
void write_curves_csv(const std::string& path, const std::vector<LabeledAggregate>& cells);

// --- low-level helpers -------------------------------------------------------

/// Write-to-temp + rename so failures never leave partial files.
void atomic_write_text(const std::string& path, const std::string& content);
void atomic_write_bytes(const std::string& path, const char* data, std::size_t size);

/// Shortest exact decimal form (17 significant digits).
std::string format_double(double v);

std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace cagat
