#include "angpn/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "angpn/errors.hpp"
#include "angpn/rng.hpp"
#include "angpn/tape.hpp"

namespace angpn::oracle {

namespace {

// Indices j != i ordered by (d(i, j), j), by repeated selection of the minimum.
std::vector<std::size_t> neighbor_order(const Matrix& d, std::size_t i) {
  const std::size_t n = d.rows();
  std::vector<char> used(n, 0);
  used[i] = 1;
  std::vector<std::size_t> order;
  for (std::size_t r = 0; r + 1 < n; ++r) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      if (best == n || d(i, j) < d(i, best)) best = j;
    }
    used[best] = 1;
    order.push_back(best);
  }
  return order;
}

Matrix gaussian_elimination(Matrix a, Matrix b) {
  const std::size_t n = a.rows();
  for (std::size_t p = 0; p < n; ++p) {
    if (a(p, p) == 0.0) throw OracleError("gaussian elimination hit a zero pivot");
    for (std::size_t r = p + 1; r < n; ++r) {
      const double factor = a(r, p) / a(p, p);
      for (std::size_t c = p; c < n; ++c) a(r, c) -= factor * a(p, c);
      for (std::size_t c = 0; c < b.cols(); ++c) b(r, c) -= factor * b(p, c);
    }
  }
  Matrix x(n, b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t r = n; r-- > 0;) {
      double acc = b(r, c);
      for (std::size_t q = r + 1; q < n; ++q) acc -= a(r, q) * x(q, c);
      x(r, c) = acc / a(r, r);
    }
  }
  return x;
}

}  // namespace

std::vector<Matrix> fd_gradient(const LossFn& loss, const std::vector<Matrix>& params,
                                double step) {
  if (!(step > 0.0)) throw OracleError("finite-difference step must be > 0");
  std::vector<Matrix> probe = params;
  std::vector<Matrix> grads;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    Matrix g(probe[k].rows(), probe[k].cols());
    for (std::size_t r = 0; r < probe[k].rows(); ++r) {
      for (std::size_t c = 0; c < probe[k].cols(); ++c) {
        const double saved = probe[k](r, c);
        probe[k](r, c) = saved + step;
        const double up = loss(probe);
        probe[k](r, c) = saved - step;
        const double down = loss(probe);
        probe[k](r, c) = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
          throw OracleError("loss is non-finite near parameter " + std::to_string(k));
        }
        g(r, c) = (up - down) / (2.0 * step);
      }
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double GradReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& p : params) worst = std::max(worst, p.max_rel_error);
  return worst;
}

GradReport compare_gradients(const std::vector<Matrix>& analytic,
                             const std::vector<Matrix>& numeric) {
  if (analytic.size() != numeric.size()) throw OracleError("gradient lists differ in length");
  GradReport report;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    if (!analytic[k].same_shape(numeric[k])) throw OracleError("gradient shapes differ");
    GradEntryReport entry;
    entry.analytic = analytic[k](0, 0);
    entry.numeric = numeric[k](0, 0);
    entry.max_rel_error = -1.0;
    for (std::size_t r = 0; r < analytic[k].rows(); ++r) {
      for (std::size_t c = 0; c < analytic[k].cols(); ++c) {
        const double a = analytic[k](r, c);
        const double n = numeric[k](r, c);
        const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
        const double rel = std::abs(a - n) / denom;
        if (rel > entry.max_rel_error) entry = {rel, r, c, a, n};
      }
    }
    report.params.push_back(entry);
  }
  return report;
}

std::vector<double> simplex_qp_oracle(const std::vector<double>& costs, double gamma) {
  const std::size_t m = costs.size();
  if (m < 1 || m > 8) throw OracleError("simplex_qp_oracle handles 1..8 coordinates");
  if (!(gamma > 0.0)) throw OracleError("simplex_qp_oracle needs gamma > 0");
  double scale = 1.0;
  for (double c : costs) scale = std::max(scale, std::abs(c));
  const double tol = 1e-12 * (scale + gamma);

  std::vector<double> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    double csum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (mask & (1u << j)) {
        csum += costs[j];
        ++count;
      }
    }
    // Stationarity on the support: c_j + 2 gamma s_j = lambda, sum s_j = 1.
    const double lambda = (2.0 * gamma + csum) / static_cast<double>(count);
    std::vector<double> s(m, 0.0);
    bool feasible = true;
    for (std::size_t j = 0; j < m && feasible; ++j) {
      if (mask & (1u << j)) {
        s[j] = (lambda - costs[j]) / (2.0 * gamma);
        if (s[j] < -tol) feasible = false;
      } else if (costs[j] < lambda - tol) {
        feasible = false;  // a zero coordinate would rather enter the support
      }
    }
    if (!feasible) continue;
    for (double& v : s) v = std::max(v, 0.0);
    double obj = 0.0;
    for (std::size_t j = 0; j < m; ++j) obj += costs[j] * s[j] + gamma * s[j] * s[j];
    if (obj < best_obj) {
      best_obj = obj;
      best = s;
    }
  }
  if (best.empty()) throw OracleError("no support satisfies the KKT conditions");
  return best;
}

std::vector<double> michelot_projection(const std::vector<double>& v, std::size_t skip) {
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j != skip) active.push_back(j);
  }
  if (active.empty()) throw OracleError("michelot_projection: nothing to project");
  double tau = 0.0;
  while (true) {
    double total = 0.0;
    for (std::size_t j : active) total += v[j];
    tau = (total - 1.0) / static_cast<double>(active.size());
    std::vector<std::size_t> kept;
    for (std::size_t j : active) {
      if (v[j] > tau) kept.push_back(j);
    }
    if (kept.size() == active.size()) break;
    active = std::move(kept);
  }
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t j : active) out[j] = std::max(v[j] - tau, 0.0);
  return out;
}

Matrix dense_fixed_point_oracle(const Matrix& s, const Matrix& h, double alpha) {
  const std::size_t n = s.rows();
  if (s.cols() != n || h.rows() != n) throw OracleError("dense_fixed_point_oracle: shapes");
  Matrix a(n, n);
  Matrix b(n, h.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - alpha * s(i, j);
    for (std::size_t c = 0; c < h.cols(); ++c) b(i, c) = (1.0 - alpha) * h(i, c);
  }
  return gaussian_elimination(std::move(a), std::move(b));
}

Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw OracleError("matmul_oracle: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix distance_oracle(const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const std::size_t lo = std::min(i, j);
      const std::size_t hi = std::max(i, j);
      double acc = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) {
        const double diff = x(lo, c) - x(hi, c);
        acc += diff * diff;
      }
      d(i, j) = std::sqrt(acc);
    }
  }
  return d;
}

Algorithm1Trace algorithm1_oracle(const Matrix& x, const Matrix& h, const HyperParams& p) {
  const std::size_t n = x.rows();
  if (h.rows() != n || n < 2) throw OracleError("algorithm1_oracle: shapes");
  const Matrix d = distance_oracle(x);
  const std::size_t k = p.k;
  const double kk = static_cast<double>(k);

  std::vector<double> gamma(n, p.gamma);
  std::vector<double> shift(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto order = neighbor_order(d, i);
    if (p.mode.gamma_mode == GammaMode::per_row_k) {
      double near = 0.0;
      for (std::size_t r = 0; r < k; ++r) near += d(i, order[r]);
      const double next = d(i, order[k]);
      gamma[i] = std::max((kk * next - near) / 2.0, 1e-12 * (1.0 + next));
    }
    if (p.mode.solver == GraphSolver::paper_literal) {
      double near = 0.0;
      for (std::size_t r = 0; r < k; ++r) near += d(i, order[r]);
      shift[i] = 1.0 / kk + near / (2.0 * kk * gamma[i]);
    }
  }

  Algorithm1Trace trace{h, Matrix(n, n)};
  for (std::size_t t = 0; t < p.t_steps; ++t) {
    // Step 1: affinities from the current representation.
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        double g = 0.0;
        if (p.beta != 0.0) {
          for (std::size_t c = 0; c < h.cols(); ++c) g += trace.f(i, c) * trace.f(j, c);
        }
        v[j] = (p.beta * g - d(i, j)) / (2.0 * gamma[i]);
      }
      std::vector<double> row;
      if (p.mode.solver == GraphSolver::exact_simplex) {
        row = michelot_projection(v, i);
      } else {
        row.assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) row[j] = std::max(v[j] + shift[i], 0.0);
        }
      }
      for (std::size_t j = 0; j < n; ++j) trace.s(i, j) = row[j];
    }
    // Step 2: one power-iteration step from the layer input.
    Matrix next(n, h.cols());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < h.cols(); ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += trace.s(i, j) * h(j, c);
        next(i, c) = acc * p.alpha + h(i, c) * (1.0 - p.alpha);
      }
    }
    trace.f = std::move(next);
  }
  return trace;
}

std::vector<std::size_t> label_propagation_predict(const Matrix& x, const LabeledSplit& split,
                                                   std::size_t k, double alpha) {
  const std::size_t n = x.rows();
  if (k < 1 || k >= n) throw OracleError("label_propagation_predict: k out of range");
  const Matrix d = distance_oracle(x);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto order = neighbor_order(d, i);
    for (std::size_t r = 0; r < k; ++r) a(i, order[r]) = 1.0 / static_cast<double>(k);
  }
  Matrix y(n, split.class_count);
  for (std::size_t i : split.train_idx) y(i, split.labels[i]) = 1.0;
  const Matrix f = dense_fixed_point_oracle(a, y, alpha);
  std::vector<std::size_t> pred(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 1; c < f.cols(); ++c) {
      if (f(i, c) > f(i, pred[i])) pred[i] = c;
    }
  }
  return pred;
}

GradcheckInstance make_gradcheck_instance(const HyperParams& hyper, Variant variant,
                                          const GradcheckSetup& setup) {
  if (setup.n < 2 * setup.classes || setup.classes < 2) throw OracleError("gradcheck: too few points");
  Rng rng = Rng::stream(setup.seed, streams::data);
  std::vector<std::size_t> dims{setup.input_dim};
  dims.insert(dims.end(), setup.hidden.begin(), setup.hidden.end());
  dims.push_back(setup.classes);

  for (std::size_t attempt = 1; attempt <= setup.max_attempts; ++attempt) {
    GradcheckInstance inst;
    inst.attempts = attempt;
    inst.x = Matrix(setup.n, setup.input_dim);
    std::vector<std::size_t> labels(setup.n);
    for (std::size_t i = 0; i < setup.n; ++i) {
      labels[i] = i % setup.classes;
      for (std::size_t c = 0; c < setup.input_dim; ++c) {
        inst.x(i, c) = rng.normal() + (c == labels[i] ? 1.5 : 0.0);
      }
    }
    inst.dist = pairwise_euclidean(inst.x);
    // Half the points train, the rest alternate between validation and test.
    std::vector<std::size_t> train, val, test;
    for (std::size_t i = 0; i < setup.n; ++i) {
      (i < setup.n / 2 ? train : (i % 2 ? val : test)).push_back(i);
    }
    inst.split = make_split(labels, setup.classes, train, val, test);
    HyperParams h = hyper;
    if (setup.auto_gamma) h.gamma = angpn::auto_gamma(inst.dist, h.k);
    inst.state = zero_model(dims, h, variant);
    for (Matrix& w : inst.state.weights) {
      const double b = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (double& v : w.values()) v = rng.uniform(-b, b);
    }
    Tape tape;
    record_forward(tape, inst.state, inst.dist, inst.x, inst.split);
    inst.kink_margin = tape.min_kink_margin();
    if (inst.kink_margin >= setup.min_kink_margin) return inst;
  }
  throw OracleError("gradcheck: no instance cleared the kink margin");
}

GradReport check_model_gradients(const GradcheckInstance& inst, double step,
                                 const std::function<void(std::vector<Matrix>&)>& tamper) {
  std::vector<Matrix> analytic =
      loss_and_gradients(inst.state, inst.dist, inst.x, inst.split).grads;
  if (tamper) tamper(analytic);
  ModelState probe = inst.state;
  const auto numeric = fd_gradient(
      [&](const std::vector<Matrix>& ws) {
        probe.weights = ws;
        return loss_and_gradients(probe, inst.dist, inst.x, inst.split).loss;
      },
      inst.state.weights, step);
  return compare_gradients(analytic, numeric);
}

}  // namespace angpn::oracle
