// angpn: train, evaluate, export graphs, check gradients and sweep settings.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "angpn/errors.hpp"
#include "angpn/runner.hpp"

namespace {

// Flag values are collected here and applied over the config file, so only
// flags given on the command line override it.
struct Flags {
  std::string config, data, labels, variant, gamma, graph_mode, grad_mode, out, checkpoint;
  double label_rate = 0, alpha = 0, beta = 0, gen_noise = 0, lr = 0;
  std::size_t k = 0, t_steps = 0, repeats = 0, max_epochs = 0, patience = 0, n_per_class = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden;
  bool standardize = false, constant = false;
};

void add_common(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "JSON config file; flags override its values");
  app.add_option("--data", f.data, "features file (CSV or packed), or blobs / moons");
  app.add_option("--labels", f.labels, "label file for CSV features");
  app.add_option("--n-per-class", f.n_per_class, "generator points per class (default 150)");
  app.add_option("--gen-noise", f.gen_noise, "generator noise (default blobs 1, moons 0.1)");
  app.add_flag("--standardize", f.standardize, "z-score every feature column");
  app.add_flag("--constant-feature", f.constant, "append a column of ones");
  app.add_option("--variant", f.variant, "angpn or ngpn (default angpn)");
  app.add_option("--label-rate", f.label_rate, "fraction of each class used for training (default 0.1)");
  app.add_option("--alpha", f.alpha, "neighbor fraction, in (0, 1) (default 0.5)");
  app.add_option("--beta", f.beta, "feature term weight in graph learning (default 0.3)");
  app.add_option("--gamma", f.gamma, "auto, per-row, or a positive number (default auto)");
  app.add_option("--k", f.k, "neighborhood size for gamma and eta (default 10)");
  app.add_option("--t-steps", f.t_steps, "propagation iterations per layer (default 2)");
  app.add_option("--graph-mode", f.graph_mode, "paper-literal or exact-simplex (default exact-simplex)");
  app.add_option("--grad-mode", f.grad_mode, "unrolled or frozen-graph (default unrolled)");
  app.add_option("--hidden", f.hidden, "hidden layer widths (default 50 50)");
  app.add_option("--lr", f.lr, "Adam learning rate (default 0.005)");
  app.add_option("--max-epochs", f.max_epochs, "epoch cap (default 10000)");
  app.add_option("--patience", f.patience, "early-stopping patience (default 100)");
  app.add_option("--seed", f.seed, "first seed (default 0)");
  app.add_option("--repeats", f.repeats, "number of seeds (default 5)");
  app.add_option("--out", f.out, "output directory (default angpn_out)");
  app.add_option("--checkpoint", f.checkpoint, "model checkpoint to evaluate or export");
}

angpn::RunConfig resolve(const CLI::App& app, const Flags& f) {
  angpn::RunConfig c;
  if (app.count("--config")) {
    std::ifstream is(f.config);
    if (!is) throw angpn::DataError("cannot open config " + f.config);
    std::stringstream ss;
    ss << is.rdbuf();
    c = angpn::config_from_json(ss.str(), c);
  }
  const auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--data")) c.data = f.data;
  if (given("--labels")) c.labels = f.labels;
  if (given("--n-per-class")) c.gen_n_per_class = f.n_per_class;
  if (given("--gen-noise")) c.gen_noise = f.gen_noise;
  if (given("--standardize")) c.transform.standardize = true;
  if (given("--constant-feature")) c.transform.constant = true;
  if (given("--variant")) c.variant = angpn::parse_variant(f.variant);
  if (given("--label-rate")) c.label_rate = f.label_rate;
  if (given("--alpha")) c.hyper.alpha = f.alpha;
  if (given("--beta")) c.hyper.beta = f.beta;
  if (given("--gamma")) c.gamma = f.gamma;
  if (given("--k")) c.hyper.k = f.k;
  if (given("--t-steps")) c.hyper.t_steps = f.t_steps;
  if (given("--graph-mode")) c.hyper.mode.solver = angpn::parse_graph_solver(f.graph_mode);
  if (given("--grad-mode")) c.hyper.grad_mode = angpn::parse_grad_mode(f.grad_mode);
  if (given("--hidden")) c.hidden = f.hidden;
  if (given("--lr")) c.train.learning_rate = f.lr;
  if (given("--max-epochs")) c.train.max_epochs = f.max_epochs;
  if (given("--patience")) c.train.patience = f.patience;
  if (given("--seed")) c.train.seed = f.seed;
  if (given("--repeats")) c.repeats = f.repeats;
  if (given("--out")) c.out = f.out;
  if (given("--checkpoint")) c.checkpoint = f.checkpoint;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive neighbor-graph propagation networks for semi-supervised classification.\n"
               "Worker threads for repeats: ANGPN_THREADS (default: all cores)."};
  app.require_subcommand(1);

  Flags train_f, eval_f, export_f, grad_f, sweep_f;
  auto* train = app.add_subcommand("train", "train over several seeds, write metrics and a summary");
  add_common(*train, train_f);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the split of --seed");
  add_common(*eval, eval_f);
  auto* exporter = app.add_subcommand("graph-export", "write the first-layer learned graph");
  add_common(*exporter, export_f);

  auto* grad = app.add_subcommand("gradcheck", "compare tape gradients with finite differences");
  add_common(*grad, grad_f);
  angpn::GradcheckOptions gopts;
  grad->add_option("--n", gopts.setup.n, "points (default 12)");
  grad->add_option("--input-dim", gopts.setup.input_dim, "input features (default 4)");
  grad->add_option("--classes", gopts.setup.classes, "classes (default 2)");
  grad->add_option("--step", gopts.step, "finite-difference step (default 1e-5)");
  grad->add_option("--tolerance", gopts.tolerance, "max relative error (default 1e-4)");
  grad->add_option("--corrupt-gradient", gopts.corrupt, "test hook: add this to one analytic entry")
      ->group("");
  std::vector<std::size_t> grad_hidden{6};
  grad->add_option("--check-hidden", grad_hidden, "hidden widths of the check network (default 6)");

  auto* sweep = app.add_subcommand("sweep", "repeat training over values of one setting");
  add_common(*sweep, sweep_f);
  std::string axis;
  std::vector<double> values;
  sweep->add_option("--axis", axis, "layers, alpha, beta, T or label_rate")->required();
  sweep->add_option("--values", values, "values to try")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  return angpn::guarded(
      [&]() -> int {
        if (train->parsed()) return angpn::cmd_train(resolve(*train, train_f), std::cout);
        if (eval->parsed()) return angpn::cmd_eval(resolve(*eval, eval_f), std::cout);
        if (exporter->parsed()) return angpn::cmd_graph_export(resolve(*exporter, export_f), std::cout);
        if (grad->parsed()) {
          gopts.setup.hidden = grad_hidden;
          return angpn::cmd_gradcheck(resolve(*grad, grad_f), gopts, std::cout);
        }
        return angpn::cmd_sweep(resolve(*sweep, sweep_f), axis, values, std::cout);
      },
      std::cerr);
}
