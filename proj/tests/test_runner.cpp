#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "angpn/errors.hpp"
#include "angpn/runner.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using angpn::RunConfig;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("angpn_runner_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_dense(const fs::path& p) {
  std::vector<std::vector<double>> rows;
  std::ifstream is(p);
  std::string line;
  while (std::getline(is, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

RunConfig small_blobs(const fs::path& out) {
  RunConfig c;
  c.data = "blobs";
  c.gen_n_per_class = 40;
  c.transform = {true, true};
  c.repeats = 2;
  c.train.max_epochs = 120;
  c.out = out;
  return c;
}

struct Threads {
  explicit Threads(const char* v) { setenv("ANGPN_THREADS", v, 1); }
  ~Threads() { unsetenv("ANGPN_THREADS"); }
};

}  // namespace

TEST_CASE("config json round trip and overrides") {
  RunConfig c;
  c.data = "x.csv";
  c.labels = "y.txt";
  c.variant = angpn::Variant::ngpn;
  c.hyper.alpha = 0.25;
  c.hyper.mode.solver = angpn::GraphSolver::paper_literal;
  c.hyper.grad_mode = angpn::GradMode::frozen_graph;
  c.gamma = "per-row";
  c.hidden = {7, 3};
  c.transform.standardize = true;
  c.train.seed = 99;
  const RunConfig back = angpn::config_from_json(angpn::config_to_json(c));
  CHECK(angpn::config_to_json(back) == angpn::config_to_json(c));
  CHECK(back.hyper == c.hyper);
  CHECK(back.hidden == c.hidden);

  const RunConfig partial = angpn::config_from_json(R"({"beta": 0.7, "gamma": 2.5})", c);
  CHECK(partial.hyper.beta == 0.7);
  CHECK(partial.gamma == "2.5");
  CHECK(partial.hyper.alpha == 0.25);
  CHECK(partial.data == "x.csv");

  CHECK_THROWS_AS(angpn::config_from_json(R"({"alhpa": 0.5})"), angpn::ParameterError);
  CHECK_THROWS_AS(angpn::config_from_json(R"({"alpha": "half"})"), angpn::ParameterError);
  CHECK_THROWS_AS(angpn::config_from_json("[1, 2]"), angpn::ParameterError);
  CHECK_THROWS_AS(angpn::config_from_json("{"), angpn::ParameterError);
  CHECK_THROWS_AS(angpn::config_from_json(R"({"graph_mode": "dense"})"), angpn::ParameterError);
}

TEST_CASE("config validation") {
  RunConfig c;
  CHECK_THROWS_AS(c.validate(), angpn::ParameterError);
  c.data = "blobs";
  CHECK_NOTHROW(c.validate());
  c.hyper.alpha = 0.0;
  CHECK_THROWS_AS(c.validate(), angpn::ParameterError);
  c.hyper.alpha = 0.5;
  c.label_rate = 1.0;
  CHECK_THROWS_AS(c.validate(), angpn::ParameterError);
  c.label_rate = 0.1;
  c.gamma = "-1";
  CHECK_THROWS_AS(c.validate(), angpn::ParameterError);
  c.gamma = "big";
  CHECK_THROWS_AS(c.validate(), angpn::ParameterError);
}

TEST_CASE("gamma resolution") {
  RunConfig c;
  c.data = "blobs";
  c.gen_n_per_class = 10;
  const auto ds = angpn::load_run_dataset(c, 1);
  const auto dist = angpn::pairwise_euclidean(ds.features);
  CHECK(angpn::resolve_hyper(c, dist).gamma == angpn::auto_gamma(dist, 10));
  c.gamma = "per-row";
  CHECK(angpn::resolve_hyper(c, dist).mode.gamma_mode == angpn::GammaMode::per_row_k);
  c.gamma = "0.75";
  const auto h = angpn::resolve_hyper(c, dist);
  CHECK(h.gamma == 0.75);
  CHECK(h.mode.gamma_mode == angpn::GammaMode::global);
}

TEST_CASE("generators behind the data setting") {
  RunConfig c;
  c.data = "blobs";
  c.gen_n_per_class = 5;
  c.gen_noise = 0.0;
  const auto b = angpn::load_run_dataset(c, 3);
  CHECK(b.features(9, 0) == 10.0);
  c.data = "moons";
  CHECK(angpn::load_run_dataset(c, 3).name == "two_moons");
  c.data = "/nonexistent/file.csv";
  CHECK_THROWS_AS(angpn::load_run_dataset(c, 3), angpn::DataError);
}

TEST_CASE("table cell formatting and thread setting") {
  CHECK(angpn::format_cell(0.6553, 0.0125) == "65.53 \xC2\xB1 1.25");
  {
    Threads t("3");
    CHECK(angpn::worker_threads() == 3);
  }
  {
    Threads t("zero");
    CHECK(angpn::worker_threads() >= 1);
  }
}

TEST_CASE("metrics json layout") {
  angpn::RunMetrics m{"blobs", 0.1, 4, angpn::Variant::ngpn, 0.875, 12, 3, 1.0};
  CHECK(angpn::metrics_to_json(m) ==
        "{\n  \"dataset\": \"blobs\",\n  \"label_rate\": 0.1,\n  \"seed\": 4,\n  \"variant\": \"ngpn\",\n"
        "  \"test_accuracy\": 0.875,\n  \"epochs_run\": 12,\n  \"best_epoch\": 3,\n  \"best_val_acc\": 1.0\n}\n");
}

TEST_CASE("train writes per-seed artifacts and a summary; eval reproduces the test accuracy") {
  TempDir dir("train");
  const RunConfig c = small_blobs(dir.path / "run");
  std::ostringstream log;
  REQUIRE(angpn::cmd_train(c, log) == 0);
  for (const char* f : {"config.json", "summary.json", "summary.txt", "seed_0/metrics.json",
                        "seed_0/history.csv", "seed_0/model.ckpt", "seed_1/metrics.json"}) {
    CHECK(fs::exists(c.out / f));
  }
  CHECK(slurp(c.out / "summary.txt").find("blobs angpn label_rate=0.1: ") == 0);
  CHECK(slurp(c.out / "seed_0/history.csv").rfind("epoch,train_loss,val_acc\n", 0) == 0);

  const std::string metrics = slurp(c.out / "seed_1/metrics.json");
  RunConfig e = c;
  e.checkpoint = c.out / "seed_1/model.ckpt";
  e.train.seed = 1;
  e.out = dir.path / "eval";
  REQUIRE(angpn::cmd_eval(e, log) == 0);
  const std::string eval = slurp(e.out / "eval.json");
  const auto field = [](const std::string& text, const std::string& key) {
    const auto at = text.find("\"" + key + "\": ");
    REQUIRE(at != std::string::npos);
    return std::stod(text.substr(at + key.size() + 4));
  };
  CHECK(field(eval, "test_accuracy") == field(metrics, "test_accuracy"));
  const auto z = read_dense(e.out / "probabilities.csv");
  REQUIRE(z.size() == 80);
  CHECK(z[0].size() == 2);
  CHECK(std::abs(z[5][0] + z[5][1] - 1.0) <= 1e-12);
}

TEST_CASE("thread count does not change results") {
  TempDir dir("threads");
  RunConfig c = small_blobs(dir.path);
  c.repeats = 3;
  c.train.max_epochs = 40;
  angpn::Summary one, many;
  one = angpn::run_repeats(c, 1);
  many = angpn::run_repeats(c, 3);
  REQUIRE(one.runs.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(one.runs[r].seed == r);
    CHECK(angpn::metrics_to_json(one.runs[r]) == angpn::metrics_to_json(many.runs[r]));
  }
}

TEST_CASE("angpn and ngpn summaries on the same seeds") {
  TempDir dir("ablation");
  RunConfig c = small_blobs(dir.path);
  c.train.max_epochs = 40;
  const auto a = angpn::run_repeats(c, 1);
  c.variant = angpn::Variant::ngpn;
  const auto b = angpn::run_repeats(c, 1);
  REQUIRE(a.runs.size() == b.runs.size());
  for (std::size_t r = 0; r < a.runs.size(); ++r) {
    CHECK(a.runs[r].seed == b.runs[r].seed);
    CHECK(a.runs[r].variant == angpn::Variant::angpn);
    CHECK(b.runs[r].variant == angpn::Variant::ngpn);
  }
}

TEST_CASE("graph export: exact-simplex rows sum to one") {
  TempDir dir("export_exact");
  RunConfig c = small_blobs(dir.path);
  std::ostringstream log;
  REQUIRE(angpn::cmd_graph_export(c, log) == 0);
  const auto s = read_dense(dir.path / "graph_affinity.csv");
  REQUIRE(s.size() == 80);
  for (const auto& row : s) {
    double sum = 0.0;
    for (double v : row) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
  // Edge list: one "i,j,weight" line per nonzero, no header.
  std::size_t nonzeros = 0;
  for (const auto& row : s) {
    for (double v : row) nonzeros += v != 0.0;
  }
  const auto edges = read_dense(dir.path / "graph_edges.csv");
  CHECK(edges.size() == nonzeros);
  CHECK(edges.front().size() == 3);
  CHECK(s[static_cast<std::size_t>(edges.front()[0])][static_cast<std::size_t>(edges.front()[1])] == edges.front()[2]);
  CHECK(log.str().find("support size histogram") != std::string::npos);
}

TEST_CASE("graph export: zero beta with per-row gamma keeps exactly k neighbors") {
  TempDir dir("export_k");
  RunConfig c = small_blobs(dir.path);
  c.hyper.beta = 0.0;
  c.gamma = "per-row";
  c.hyper.k = 5;
  std::ostringstream log;
  REQUIRE(angpn::cmd_graph_export(c, log) == 0);
  CHECK(slurp(dir.path / "support_histogram.csv") == "support_size,rows\n5,80\n");
}

TEST_CASE("graph export: blob affinity stays within the class") {
  TempDir dir("export_mass");
  RunConfig c = small_blobs(dir.path);
  std::ostringstream log;
  REQUIRE(angpn::cmd_graph_export(c, log) == 0);
  const auto s = read_dense(dir.path / "graph_affinity.csv");
  const auto ds = angpn::load_run_dataset(c, c.train.seed);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double same = 0.0, total = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      total += s[i][j];
      if (ds.labels[j] == ds.labels[i]) same += s[i][j];
    }
    CHECK(same >= 0.9 * total);
  }
}

TEST_CASE("gradcheck: frozen graph at zero beta reports the same numbers as unrolled") {
  RunConfig c;
  c.hyper.beta = 0.0;
  std::ostringstream unrolled, frozen;
  CHECK(angpn::cmd_gradcheck(c, {}, unrolled) == 0);
  c.hyper.grad_mode = angpn::GradMode::frozen_graph;
  CHECK(angpn::cmd_gradcheck(c, {}, frozen) == 0);
  const auto body = [](const std::string& s) { return s.substr(s.find('\n')); };
  CHECK(body(unrolled.str()) == body(frozen.str()));

  angpn::GradcheckOptions bad;
  bad.corrupt = 1e-2;
  std::ostringstream log;
  CHECK(angpn::cmd_gradcheck(RunConfig{}, bad, log) == 1);
}

TEST_CASE("sweep over layers on blobs") {
  TempDir dir("sweep_layers");
  RunConfig c = small_blobs(dir.path);
  c.gen_n_per_class = 80;
  c.repeats = 3;
  std::ostringstream log;
  REQUIRE(angpn::cmd_sweep(c, "layers", {1, 2, 3, 4}, log) == 0);
  std::ifstream csv(dir.path / "sweep_layers.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "value,mean,std");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    const double mean = std::stod(line.substr(line.find(',') + 1));
    CHECK(mean >= 0.9);
  }
  CHECK(rows == 4);
  CHECK(slurp(dir.path / "sweep_layers.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("sweep errors and the label-rate table") {
  TempDir dir("sweep_misc");
  RunConfig c = small_blobs(dir.path);
  std::ostringstream log;
  CHECK_THROWS_AS(angpn::cmd_sweep(c, "alpha", {0.0}, log), angpn::ParameterError);
  CHECK_THROWS_AS(angpn::cmd_sweep(c, "layers", {1.5}, log), angpn::ParameterError);
  CHECK_THROWS_AS(angpn::cmd_sweep(c, "width", {3}, log), angpn::ParameterError);
  CHECK(angpn::guarded([&] { return angpn::cmd_sweep(c, "alpha", {0.0}, log); }, log) == 2);

  c.train.max_epochs = 30;
  REQUIRE(angpn::cmd_sweep(c, "label_rate", {0.1, 0.2, 0.3}, log) == 0);
  const std::string table = slurp(dir.path / "sweep_label_rate_table.txt");
  CHECK(table.rfind("method | 10% | 20% | 30%\nangpn (blobs)", 0) == 0);
}

TEST_CASE("guarded maps errors to exit codes") {
  std::ostringstream err;
  CHECK(angpn::guarded([]() -> int { throw angpn::DataError("cannot open /x"); }, err) == 2);
  CHECK(err.str().find("/x") != std::string::npos);
  CHECK(angpn::guarded([]() -> int { throw angpn::TrainingError(3, "nan"); }, err) == 1);
  CHECK(angpn::guarded([]() -> int { throw angpn::NumericError("singular"); }, err) == 1);
  CHECK(angpn::guarded([] { return 0; }, err) == 0);
}
