#include "angpn/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "angpn/errors.hpp"
#include "angpn/io.hpp"
#include "json.hpp"

namespace angpn {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
}

double parse_gamma_number(const std::string& g) {
  double v = 0.0;
  if (!parse_double(g, v) || !(v > 0.0) || !std::isfinite(v)) {
    throw ParameterError("gamma must be 'auto', 'per-row' or a positive number, got '" + g + "'");
  }
  return v;
}

std::vector<std::size_t> layer_dims(const RunConfig& cfg, std::size_t input_dim, std::size_t classes) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(classes);
  return dims;
}

struct Prepared {
  Dataset ds;
  Matrix x;
  DistanceMatrix dist;
  LabeledSplit split;
  HyperParams hyper;
};

Prepared prepare(const RunConfig& cfg, std::uint64_t seed) {
  Prepared p;
  p.ds = load_run_dataset(cfg, seed);
  p.x = transform_features(p.ds.features, cfg.transform);
  p.dist = pairwise_euclidean(p.x);
  p.split = stratified_split(p.ds, cfg.label_rate, cfg.val_rate, seed);
  p.hyper = resolve_hyper(cfg, p.dist);
  return p;
}

void write_run_artifacts(const fs::path& dir, const RunOutcome& r) {
  write_text(dir / "metrics.json", metrics_to_json(r.metrics));
  std::ostringstream hist;
  write_history_csv(hist, r.fit.history);
  write_text(dir / "history.csv", hist.str());
  save_checkpoint(r.fit.best, dir / "model.ckpt");
}

fs::path seed_dir(const fs::path& out, std::uint64_t seed) {
  return out / ("seed_" + std::to_string(seed));
}

std::string svg_plot(std::string_view axis, const std::vector<double>& xs,
                     const std::vector<double>& mean, const std::vector<double>& sd) {
  const double w = 480, h = 320, left = 60, right = 20, top = 20, bottom = 50;
  double xlo = *std::min_element(xs.begin(), xs.end());
  double xhi = *std::max_element(xs.begin(), xs.end());
  if (xhi == xlo) {
    xlo -= 0.5;
    xhi += 0.5;
  }
  double ylo = 1.0, yhi = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ylo = std::min(ylo, mean[i] - sd[i]);
    yhi = std::max(yhi, mean[i] + sd[i]);
  }
  ylo = std::max(0.0, std::floor(ylo * 10.0) / 10.0);
  yhi = std::min(1.0, std::ceil(yhi * 10.0) / 10.0);
  if (yhi <= ylo) yhi = ylo + 0.1;
  const auto px = [&](double x) { return left + (x - xlo) / (xhi - xlo) * (w - left - right); };
  const auto py = [&](double y) { return h - bottom - (y - ylo) / (yhi - ylo) * (h - top - bottom); };

  std::ostringstream s;
  char buf[160];
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                left, h - bottom, w - right, h - bottom);
  s << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                left, top, left, h - bottom);
  s << buf;
  for (int t = 0; t <= 4; ++t) {
    const double y = ylo + (yhi - ylo) * t / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%.2f</text>\n",
                  left - 6, py(y) + 4, y);
    s << buf;
  }
  std::string points;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(xs[i]), py(mean[i]));
    points += buf;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"steelblue\"/>\n",
                  px(xs[i]), py(mean[i] - sd[i]), px(xs[i]), py(mean[i] + sd[i]));
    s << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\">%s</text>\n",
                  px(xs[i]), h - bottom + 16, format_double(xs[i]).c_str());
    s << buf;
  }
  s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"" << points << "\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">",
                (left + w - right) / 2, h - 10);
  s << buf << axis << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"14\" y=\"%.1f\" font-size=\"12\" transform=\"rotate(-90 14 %.1f)\" "
                "text-anchor=\"middle\">test accuracy</text>\n",
                (top + h - bottom) / 2, (top + h - bottom) / 2);
  s << buf << "</svg>\n";
  return s.str();
}

}  // namespace

void RunConfig::validate() const {
  if (data.empty()) throw ParameterError("no dataset given (--data PATH, or blobs / moons)");
  hyper.validate_strict();
  if (gamma != "auto" && gamma != "per-row") parse_gamma_number(gamma);
  if (!(label_rate > 0.0 && label_rate < 1.0)) {
    throw ParameterError("label rate must lie in (0, 1), got " + format_double(label_rate));
  }
  if (!(val_rate > 0.0 && val_rate < 1.0)) {
    throw ParameterError("validation rate must lie in (0, 1), got " + format_double(val_rate));
  }
  if (repeats < 1) throw ParameterError("repeats must be >= 1");
  for (std::size_t h : hidden) {
    if (h < 1) throw ParameterError("hidden layer widths must be >= 1");
  }
  if (gen_n_per_class < 2) throw ParameterError("generator needs at least 2 points per class");
  if (!(gen_separation > 0.0)) throw ParameterError("blob separation must be > 0");
  train.validate();
}

RunConfig config_from_json(std::string_view text, const RunConfig& base) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParameterError("config must be a JSON object");
  RunConfig c = base;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "data") c.data = v.get<std::string>();
      else if (key == "labels") c.labels = v.get<std::string>();
      else if (key == "gen_n_per_class") c.gen_n_per_class = v.get<std::size_t>();
      else if (key == "gen_noise") c.gen_noise = v.get<double>();
      else if (key == "gen_separation") c.gen_separation = v.get<double>();
      else if (key == "standardize") c.transform.standardize = v.get<bool>();
      else if (key == "constant_feature") c.transform.constant = v.get<bool>();
      else if (key == "variant") c.variant = parse_variant(v.get<std::string>());
      else if (key == "label_rate") c.label_rate = v.get<double>();
      else if (key == "val_rate") c.val_rate = v.get<double>();
      else if (key == "alpha") c.hyper.alpha = v.get<double>();
      else if (key == "beta") c.hyper.beta = v.get<double>();
      else if (key == "gamma") c.gamma = v.is_number() ? format_double(v.get<double>()) : v.get<std::string>();
      else if (key == "k") c.hyper.k = v.get<std::size_t>();
      else if (key == "t_steps") c.hyper.t_steps = v.get<std::size_t>();
      else if (key == "graph_mode") c.hyper.mode.solver = parse_graph_solver(v.get<std::string>());
      else if (key == "grad_mode") c.hyper.grad_mode = parse_grad_mode(v.get<std::string>());
      else if (key == "hidden") c.hidden = v.get<std::vector<std::size_t>>();
      else if (key == "learning_rate") c.train.learning_rate = v.get<double>();
      else if (key == "max_epochs") c.train.max_epochs = v.get<std::size_t>();
      else if (key == "patience") c.train.patience = v.get<std::size_t>();
      else if (key == "seed") c.train.seed = v.get<std::uint64_t>();
      else if (key == "repeats") c.repeats = v.get<std::size_t>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "checkpoint") c.checkpoint = v.get<std::string>();
      else throw ParameterError("unknown config key '" + key + "'");
    }
  } catch (const ojson::exception& e) {
    throw ParameterError(std::string("bad config value: ") + e.what());
  }
  return c;
}

std::string config_to_json(const RunConfig& c) {
  ojson j;
  j["data"] = c.data;
  j["labels"] = c.labels;
  j["gen_n_per_class"] = c.gen_n_per_class;
  j["gen_noise"] = c.gen_noise;
  j["gen_separation"] = c.gen_separation;
  j["standardize"] = c.transform.standardize;
  j["constant_feature"] = c.transform.constant;
  j["variant"] = std::string(to_string(c.variant));
  j["label_rate"] = c.label_rate;
  j["val_rate"] = c.val_rate;
  j["alpha"] = c.hyper.alpha;
  j["beta"] = c.hyper.beta;
  j["gamma"] = c.gamma;
  j["k"] = c.hyper.k;
  j["t_steps"] = c.hyper.t_steps;
  j["graph_mode"] = std::string(to_string(c.hyper.mode.solver));
  j["grad_mode"] = std::string(to_string(c.hyper.grad_mode));
  j["hidden"] = c.hidden;
  j["learning_rate"] = c.train.learning_rate;
  j["max_epochs"] = c.train.max_epochs;
  j["patience"] = c.train.patience;
  j["seed"] = c.train.seed;
  j["repeats"] = c.repeats;
  j["out"] = c.out.string();
  j["checkpoint"] = c.checkpoint.string();
  return j.dump(2) + "\n";
}

Dataset load_run_dataset(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.data == "blobs") {
    const double noise = cfg.gen_noise < 0.0 ? 1.0 : cfg.gen_noise;
    // Separation is measured in units of the noise scale.
    const double gap = cfg.gen_separation * (noise > 0.0 ? noise : 1.0);
    return gen_blobs(cfg.gen_n_per_class, Matrix::from_rows({{0.0, 0.0}, {gap, 0.0}}), noise, seed);
  }
  if (cfg.data == "moons") {
    return gen_two_moons(cfg.gen_n_per_class, cfg.gen_noise < 0.0 ? 0.1 : cfg.gen_noise, seed);
  }
  return load_dataset(cfg.data, cfg.labels);
}

HyperParams resolve_hyper(const RunConfig& cfg, const DistanceMatrix& dist) {
  HyperParams h = cfg.hyper;
  if (cfg.gamma == "auto") {
    h.mode.gamma_mode = GammaMode::global;
    h.gamma = auto_gamma(dist, h.k);
  } else if (cfg.gamma == "per-row") {
    h.mode.gamma_mode = GammaMode::per_row_k;
  } else {
    h.mode.gamma_mode = GammaMode::global;
    h.gamma = parse_gamma_number(cfg.gamma);
  }
  h.validate_strict();
  return h;
}

std::string metrics_to_json(const RunMetrics& m) {
  ojson j;
  j["dataset"] = m.dataset;
  j["label_rate"] = m.label_rate;
  j["seed"] = m.seed;
  j["variant"] = std::string(to_string(m.variant));
  j["test_accuracy"] = m.test_accuracy;
  j["epochs_run"] = m.epochs_run;
  j["best_epoch"] = m.best_epoch;
  j["best_val_acc"] = m.best_val_acc;
  return j.dump(2) + "\n";
}

RunOutcome run_once(const RunConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Prepared p = prepare(cfg, seed);
  const ModelState init =
      init_model(layer_dims(cfg, p.x.cols(), p.ds.class_count), p.hyper, cfg.variant, seed);
  RunOutcome r;
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  r.fit = fit(init, p.dist, p.x, p.split, tc);
  const Matrix z = network_forward(r.fit.best, p.dist, p.x);
  r.metrics.dataset = p.ds.name;
  r.metrics.label_rate = cfg.label_rate;
  r.metrics.seed = seed;
  r.metrics.variant = cfg.variant;
  r.metrics.test_accuracy = accuracy(z, p.split.labels, p.split.test_idx);
  r.metrics.epochs_run = r.fit.epochs_run();
  r.metrics.best_epoch = r.fit.best_epoch;
  r.metrics.best_val_acc = r.fit.best_val_acc;
  r.probabilities = z;
  return r;
}

namespace {

Summary run_repeats_impl(const RunConfig& cfg, std::size_t threads, bool artifacts) {
  cfg.validate();
  const std::size_t n = cfg.repeats;
  std::vector<RunMetrics> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t r = next++; r < n; r = next++) {
      try {
        const std::uint64_t seed = cfg.train.seed + r;
        RunOutcome o = run_once(cfg, seed);
        if (artifacts) write_run_artifacts(seed_dir(cfg.out, seed), o);
        results[r] = std::move(o.metrics);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Summary s;
  s.runs = std::move(results);
  for (const auto& m : s.runs) s.mean += m.test_accuracy;
  s.mean /= static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (const auto& m : s.runs) ss += (m.test_accuracy - s.mean) * (m.test_accuracy - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

std::string summary_to_json(const RunConfig& cfg, const Summary& s) {
  ojson j;
  j["dataset"] = s.runs.front().dataset;
  j["variant"] = std::string(to_string(cfg.variant));
  j["label_rate"] = cfg.label_rate;
  j["repeats"] = s.runs.size();
  j["mean_test_accuracy"] = s.mean;
  j["std_test_accuracy"] = s.std;
  j["cell"] = format_cell(s.mean, s.std);
  ojson runs = ojson::array();
  for (const auto& m : s.runs) runs.push_back(ojson::parse(metrics_to_json(m)));
  j["runs"] = runs;
  return j.dump(2) + "\n";
}

}  // namespace

Summary run_repeats(const RunConfig& cfg, std::size_t threads) {
  return run_repeats_impl(cfg, threads, false);
}

std::string format_cell(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f \xC2\xB1 %.2f", 100.0 * mean, 100.0 * std);
  return buf;
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("ANGPN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  write_text(cfg.out / "config.json", config_to_json(cfg));
  const Summary s = run_repeats_impl(cfg, worker_threads(), true);
  for (const auto& m : s.runs) {
    log << "seed " << m.seed << ": test accuracy " << format_double(m.test_accuracy) << " after "
        << m.epochs_run << " epochs (best epoch " << m.best_epoch << ")\n";
  }
  const std::string line = s.runs.front().dataset + " " + std::string(to_string(cfg.variant)) +
                           " label_rate=" + format_double(cfg.label_rate) + ": " +
                           format_cell(s.mean, s.std) + "\n";
  write_text(cfg.out / "summary.json", summary_to_json(cfg, s));
  write_text(cfg.out / "summary.txt", line);
  log << line;
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.checkpoint.empty()) throw ParameterError("eval needs --checkpoint");
  const ModelState state = load_checkpoint(cfg.checkpoint);
  const std::uint64_t seed = cfg.train.seed;
  const Dataset ds = load_run_dataset(cfg, seed);
  const Matrix x = transform_features(ds.features, cfg.transform);
  if (x.cols() != state.layer_dims.front() || ds.class_count != state.class_count()) {
    throw DataError("checkpoint expects " + std::to_string(state.layer_dims.front()) +
                    " features and " + std::to_string(state.class_count()) + " classes, data has " +
                    std::to_string(x.cols()) + " and " + std::to_string(ds.class_count));
  }
  const LabeledSplit split = stratified_split(ds, cfg.label_rate, cfg.val_rate, seed);
  const Matrix z = network_forward(state, pairwise_euclidean(x), x);
  ojson j;
  j["dataset"] = ds.name;
  j["checkpoint"] = cfg.checkpoint.string();
  j["seed"] = seed;
  j["train_accuracy"] = accuracy(z, split.labels, split.train_idx);
  j["val_accuracy"] = accuracy(z, split.labels, split.val_idx);
  j["test_accuracy"] = accuracy(z, split.labels, split.test_idx);
  write_text(cfg.out / "eval.json", j.dump(2) + "\n");
  std::ostringstream probs;
  write_matrix_csv(probs, z);
  write_text(cfg.out / "probabilities.csv", probs.str());
  log << "test accuracy " << format_double(j["test_accuracy"].get<double>()) << "\n";
  return 0;
}

int cmd_graph_export(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const std::uint64_t seed = cfg.train.seed;
  const Dataset ds = load_run_dataset(cfg, seed);
  const Matrix x = transform_features(ds.features, cfg.transform);
  const DistanceMatrix dist = pairwise_euclidean(x);
  ModelState state;
  if (!cfg.checkpoint.empty()) {
    state = load_checkpoint(cfg.checkpoint);
    if (state.layer_dims.front() != x.cols()) throw DataError("checkpoint does not match the data width");
  } else {
    state = init_model(layer_dims(cfg, x.cols(), ds.class_count), resolve_hyper(cfg, dist),
                       cfg.variant, seed);
  }
  // The first layer propagates the raw features, so its graph does not depend
  // on the weights.
  const Matrix s = layer_propagate(state, dist, x).graph.s;
  const std::size_t n = s.rows();

  std::ostringstream edges;
  write_edge_list(edges, s);
  write_text(cfg.out / "graph_edges.csv", edges.str());
  std::ostringstream dense;
  write_affinity_csv(dense, s);
  write_text(cfg.out / "graph_affinity.csv", dense.str());

  std::map<std::size_t, std::size_t> histogram;
  double min_sum = INFINITY, max_sum = -INFINITY, min_mass = INFINITY, mass_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t support = 0;
    double sum = 0.0, same = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (s(i, j) == 0.0) continue;
      ++support;
      sum += s(i, j);
      if (ds.labels[j] == ds.labels[i]) same += s(i, j);
    }
    ++histogram[support];
    min_sum = std::min(min_sum, sum);
    max_sum = std::max(max_sum, sum);
    const double mass = sum > 0.0 ? same / sum : 0.0;
    min_mass = std::min(min_mass, mass);
    mass_total += mass;
  }
  std::ostringstream hist;
  hist << "support_size,rows\n";
  for (const auto& [size, count] : histogram) hist << size << ',' << count << '\n';
  write_text(cfg.out / "support_histogram.csv", hist.str());

  log << "graph: " << n << " rows, mode " << to_string(state.hyper.mode.solver) << "\n";
  log << "row sums in [" << format_double(min_sum) << ", " << format_double(max_sum) << "]\n";
  log << "same-class affinity mass: min " << format_double(min_mass) << ", mean "
      << format_double(mass_total / static_cast<double>(n)) << "\n";
  log << "support size histogram:\n";
  for (const auto& [size, count] : histogram) log << "  " << size << ": " << count << "\n";
  if (state.hyper.mode.solver == GraphSolver::exact_simplex &&
      (std::abs(min_sum - 1.0) > 1e-9 || std::abs(max_sum - 1.0) > 1e-9)) {
    log << "FAIL: exact-simplex rows must sum to 1\n";
    return 1;
  }
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg, const GradcheckOptions& opts, std::ostream& log) {
  cfg.hyper.validate_strict();
  HyperParams hyper = cfg.hyper;
  oracle::GradcheckSetup setup = opts.setup;
  if (cfg.gamma == "auto") {
    setup.auto_gamma = true;
  } else if (cfg.gamma == "per-row") {
    hyper.mode.gamma_mode = GammaMode::per_row_k;
  } else {
    hyper.gamma = parse_gamma_number(cfg.gamma);
  }
  const auto inst = oracle::make_gradcheck_instance(hyper, cfg.variant, setup);
  std::function<void(std::vector<Matrix>&)> tamper;
  if (opts.corrupt != 0.0) tamper = [&](std::vector<Matrix>& g) { g[0](0, 0) += opts.corrupt; };
  const oracle::GradReport report = oracle::check_model_gradients(inst, opts.step, tamper);

  log << "gradcheck: variant " << to_string(cfg.variant) << ", graph mode "
      << to_string(hyper.mode.solver) << ", grad mode " << to_string(hyper.grad_mode) << ", T "
      << hyper.t_steps << ", n " << setup.n << ", kink margin " << format_double(inst.kink_margin)
      << "\n";
  for (std::size_t k = 0; k < report.params.size(); ++k) {
    const auto& e = report.params[k];
    log << "  W" << k << ": max rel error " << format_double(e.max_rel_error) << " at (" << e.row
        << "," << e.col << ") analytic " << format_double(e.analytic) << " numeric "
        << format_double(e.numeric) << "\n";
  }
  const bool ok = report.passes(opts.tolerance);
  log << (ok ? "PASS" : "FAIL") << ": max relative error " << format_double(report.max_rel_error())
      << " (tolerance " << format_double(opts.tolerance) << ")\n";
  return ok ? 0 : 1;
}

int cmd_sweep(const RunConfig& cfg, std::string_view axis, const std::vector<double>& values,
              std::ostream& log) {
  if (values.empty()) throw ParameterError("sweep needs at least one value");
  const std::string name(axis);
  std::vector<RunConfig> configs;
  for (double v : values) {
    RunConfig c = cfg;
    const auto as_count = [&](double min) {
      if (!(v >= min) || v != std::floor(v)) {
        throw ParameterError(name + " values must be integers >= " + format_double(min));
      }
      return static_cast<std::size_t>(v);
    };
    if (axis == "layers") {
      const std::size_t width = cfg.hidden.empty() ? 50 : cfg.hidden.front();
      c.hidden.assign(as_count(1), width);
    } else if (axis == "alpha") {
      c.hyper.alpha = v;
    } else if (axis == "beta") {
      c.hyper.beta = v;
    } else if (axis == "T") {
      c.hyper.t_steps = as_count(1);
    } else if (axis == "label_rate") {
      c.label_rate = v;
    } else {
      throw ParameterError("unknown sweep axis '" + name + "' (layers, alpha, beta, T, label_rate)");
    }
    c.out = cfg.out / (name + "=" + format_double(v));
    c.validate();
    configs.push_back(std::move(c));
  }
  write_text(cfg.out / "config.json", config_to_json(cfg));

  std::vector<double> means, sds;
  std::ostringstream csv;
  csv << "value,mean,std\n";
  std::string dataset;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const Summary s = run_repeats_impl(configs[i], worker_threads(), true);
    write_text(configs[i].out / "summary.json", summary_to_json(configs[i], s));
    dataset = s.runs.front().dataset;
    means.push_back(s.mean);
    sds.push_back(s.std);
    csv << format_double(values[i]) << ',' << format_double(s.mean) << ',' << format_double(s.std) << '\n';
    log << name << "=" << format_double(values[i]) << ": " << format_cell(s.mean, s.std) << "\n";
  }
  write_text(cfg.out / ("sweep_" + name + ".csv"), csv.str());
  write_text(cfg.out / ("sweep_" + name + ".svg"), svg_plot(name, values, means, sds));
  if (axis == "label_rate") {
    // One row of a results table: methods down, label rates across.
    std::ostringstream table;
    table << "method";
    for (double v : values) table << " | " << format_double(100.0 * v) << "%";
    table << "\n" << to_string(cfg.variant) << " (" << dataset << ")";
    for (std::size_t i = 0; i < values.size(); ++i) table << " | " << format_cell(means[i], sds[i]);
    table << "\n";
    write_text(cfg.out / "sweep_label_rate_table.txt", table.str());
    log << table.str();
  }
  return 0;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const ParameterError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingError& e) {
    err << "training error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace angpn
