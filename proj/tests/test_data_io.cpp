// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "cagat/data_io.hpp"
#include "cagat/errors.hpp"
#include "cagat/synthetic.hpp"
#include "test_support.hpp"

using namespace cagat;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

DatasetBundle tiny_bundle() {
  DatasetBundle b;
  b.name = "tiny";
  b.graph = toy_graph();
  b.num_classes = 3;
  b.labels.resize(b.graph.n);
  b.features = DenseMatrix(b.graph.n, 5);
  Rng rng(15);
  for (int i = 0; i < b.graph.n; ++i) {
    b.labels[i] = i % 3;
    for (int j = 0; j < 5; ++j) b.features(i, j) = rng.uniform() < 0.4 ? 1.0 : 0.0;
  }
  b.validate();
  return b;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / tag) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

void append_line(const fs::path& file, const std::string& line) {
  std::ofstream out(file, std::ios::app);
  out << line << "\n";
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const fs::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << content;
}

LabeledAggregate fake_cell(bool has_axis, double value) {
  LabeledAggregate cell;
  cell.has_axis = has_axis;
  cell.axis = has_axis ? "alpha" : "";
  cell.value = value;
  RunResult r;
  r.seed = 3;
  r.train_curve = {1.0986122886681098, 0.5, 0.25};
  r.val_curve = {1.2, 0.9, 0.95};
  r.best_epoch = 1;
  r.stop_epoch = 2;
  r.best_val_loss = 0.9;
  r.final_train_loss = 0.5;
  r.test_accuracy = 0.8125;
  r.wall_seconds = 0.031;
  RunResult r2 = r;
  r2.seed = 7;
  r2.test_accuracy = 0.75;
  r2.val_curve = {1.1, 0.8, 0.85};
  r2.best_val_loss = 0.8;
  cell.agg = aggregate({r, r2});
  return cell;
}

}  // namespace

TEST_CASE("bundle round-trips through csv and binary-f32 encodings") {
  DatasetBundle b = tiny_bundle();
  for (std::string enc : {std::string("csv"), std::string("binary-f32")}) {
    TempDir dir("cagat_bundle_" + enc);
    write_bundle(dir.str(), b, enc);
    BundleManifest man = read_manifest(dir.str());
    CHECK(man.name == "tiny");
    CHECK(man.n == b.n());
    CHECK(man.d == 5);
    CHECK(man.c == 3);
    CHECK(man.edges == b.graph.num_edges());
    CHECK(man.feature_encoding == enc);
    CHECK(man.checksums.size() == 3);

    DatasetBundle back = load_bundle(dir.str());
    CHECK(back.name == b.name);
    CHECK(back.num_classes == b.num_classes);
    CHECK(back.labels == b.labels);
    CHECK(back.graph.edges == b.graph.edges);
    // binary features here are 0/1, exact in f32 too
    CHECK(max_abs_diff(back.features, b.features) == 0.0);
  }
}

TEST_CASE("bundle loader rejects corruption with located errors") {
  DatasetBundle b = tiny_bundle();
  TempDir dir("cagat_bundle_bad");
  write_bundle(dir.str(), b, "csv");

  SUBCASE("checksum mismatch") {
    append_line(dir.path / "edges.tsv", "0\t5");
    CHECK_THROWS_AS(load_bundle(dir.str()), DataError);
    try {
      load_bundle(dir.str());
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("checksum") != std::string::npos);
    }
  }
  SUBCASE("edge count mismatch against the manifest") {
    // remove checksums so the count check fires instead
    std::string man = slurp(dir.path / "manifest.json");
    auto pos = man.find("\"checksums\"");
    REQUIRE(pos != std::string::npos);
    write_bundle(dir.str(), b, "csv", /*with_checksums=*/false);
    append_line(dir.path / "edges.tsv", "0\t5");
    CHECK_THROWS_AS(load_bundle(dir.str()), DataError);
  }
  SUBCASE("malformed edge line carries the line number") {
    write_bundle(dir.str(), b, "csv", false);
    append_line(dir.path / "edges.tsv", "zero\tfive");
    try {
      load_bundle(dir.str());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      std::string msg = e.what();
      CHECK(msg.find("edges.tsv") != std::string::npos);
      CHECK(msg.find(std::to_string(b.graph.num_edges() + 1)) != std::string::npos);
    }
  }
  SUBCASE("label out of range") {
    write_bundle(dir.str(), b, "csv", false);
    std::string labels = slurp(dir.path / "labels.tsv");
    labels.replace(labels.find("\t"), 2, "\t9");  // first node's class -> 9
    spit(dir.path / "labels.tsv", labels);
    CHECK_THROWS_AS(load_bundle(dir.str()), DataError);
  }
  SUBCASE("feature row with the wrong arity") {
    write_bundle(dir.str(), b, "csv", false);
    std::string feats = slurp(dir.path / "features.csv");
    spit(dir.path / "features.csv", feats.substr(0, feats.find('\n')) + ",1\n" +
                                        feats.substr(feats.find('\n') + 1));
    CHECK_THROWS_AS(load_bundle(dir.str()), DataError);
  }
  SUBCASE("missing directory") {
    CHECK_THROWS_AS(load_bundle((dir.path / "absent").string()), DataError);
  }
}

TEST_CASE("results json round-trips exactly") {
  TempDir dir("cagat_results");
  std::vector<LabeledAggregate> cells = {fake_cell(true, 0.2), fake_cell(true, 0.4)};
  std::vector<std::pair<std::string, std::string>> kv = {{"alpha", "0.2"}, {"mode", "masked"}};
  std::string path = (dir.path / "results.json").string();
  write_results_json(path, cells, kv);
  std::vector<LabeledAggregate> back = load_results_json(path);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].has_axis == cells[i].has_axis);
    CHECK(back[i].axis == cells[i].axis);
    CHECK(back[i].value == cells[i].value);
    CHECK(back[i].agg.mean_accuracy == cells[i].agg.mean_accuracy);
    CHECK(back[i].agg.std_accuracy == cells[i].agg.std_accuracy);
    REQUIRE(back[i].agg.runs.size() == cells[i].agg.runs.size());
    for (std::size_t r = 0; r < back[i].agg.runs.size(); ++r) {
      const RunResult& x = back[i].agg.runs[r];
      const RunResult& y = cells[i].agg.runs[r];
      CHECK(x.seed == y.seed);
      CHECK(x.train_curve == y.train_curve);  // bit-exact doubles
      CHECK(x.val_curve == y.val_curve);
      CHECK(x.best_epoch == y.best_epoch);
      CHECK(x.stop_epoch == y.stop_epoch);
      CHECK(x.best_val_loss == y.best_val_loss);
      CHECK(x.final_train_loss == y.final_train_loss);
      CHECK(x.test_accuracy == y.test_accuracy);
    }
  }
  CHECK_THROWS_AS(load_results_json((dir.path / "absent.json").string()), DataError);
  spit(dir.path / "garbage.json", "{oops");
  CHECK_THROWS_AS(load_results_json((dir.path / "garbage.json").string()), DataError);
}

TEST_CASE("csv exports carry the documented headers and row counts") {
  TempDir dir("cagat_csv");
  std::vector<LabeledAggregate> cells = {fake_cell(false, 0.0)};
  std::string agg_path = (dir.path / "aggregate.csv").string();
  std::string curves_path = (dir.path / "curves.csv").string();
  write_aggregate_csv(agg_path, cells);
  write_curves_csv(curves_path, cells);

  std::string agg = slurp(agg_path);
  CHECK(agg.rfind("row,axis,value,seed,test_accuracy,best_epoch,stop_epoch,", 0) == 0);
  // summary row + 2 seed rows + header
  CHECK(std::count(agg.begin(), agg.end(), '\n') == 4);

  std::string curves = slurp(curves_path);
  CHECK(curves.rfind("axis,value,seed,epoch,train_loss,val_loss", 0) == 0);
  // 2 seeds x 3 epochs + header
  CHECK(std::count(curves.begin(), curves.end(), '\n') == 7);

  write_aggregate_csv(agg_path, {});
  std::string empty_csv = slurp(agg_path);
  CHECK(std::count(empty_csv.begin(), empty_csv.end(), '\n') == 1);
}

TEST_CASE("atomic writes leave no temporaries and format_double round-trips") {
  TempDir dir("cagat_atomic");
  std::string p = (dir.path / "out.txt").string();
  atomic_write_text(p, "hello");
  CHECK(slurp(p) == "hello");
  atomic_write_text(p, "world");  // overwrite via rename
  CHECK(slurp(p) == "world");
  int files = 0;
  for (const auto& entry : fs::directory_iterator(dir.path)) {
    (void)entry;
    ++files;
  }
  CHECK(files == 1);

  for (double v : {0.1, 1.0 / 3.0, 1e-17, -2.5e300, 0.0, 1234.5678901234567}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("synthetic generator matches the requested shape exactly") {
  SyntheticSpec spec = synthetic_preset("citeseer");
  CHECK(spec.n == 2110);
  CHECK(spec.edges == 5778);
  CHECK(spec.d == 3703);
  CHECK(spec.c == 6);
  CHECK_THROWS_AS(synthetic_preset("imdb"), ConfigError);

  SyntheticSpec small;
  small.name = "mini";
  small.n = 120;
  small.d = 60;
  small.c = 4;
  small.edges = 300;
  Rng rng(42);
  DatasetBundle b = make_synthetic(small, rng);
  b.validate();
  CHECK(b.n() == 120);
  CHECK(b.graph.num_edges() == 300);
  CHECK(b.feature_dim() == 60);
  CHECK(b.num_classes == 4);
  // binary bag-of-words features
  for (double v : b.features.data) CHECK((v == 0.0 || v == 1.0));
  // every class is populated
  std::vector<int> counts(4, 0);
  for (int l : b.labels) counts[l]++;
  for (int c : counts) CHECK(c > 0);
  // determinism
  Rng rng2(42);
  DatasetBundle b2 = make_synthetic(small, rng2);
  CHECK(b2.graph.edges == b.graph.edges);
  CHECK(b2.labels == b.labels);
  CHECK(max_abs_diff(b2.features, b.features) == 0.0);

  // homophily is plantable: most edges stay within a class at 0.9
  SyntheticSpec homo = small;
  homo.homophily = 0.9;
  Rng rng3(7);
  DatasetBundle hb = make_synthetic(homo, rng3);
  int intra = 0;
  for (auto [i, j] : hb.graph.edges) intra += hb.labels[i] == hb.labels[j] ? 1 : 0;
  CHECK(intra > 0.75 * hb.graph.num_edges());
}
