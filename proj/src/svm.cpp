#include "pqd/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pqd/parallel.hpp"

namespace pqd {

namespace {

void check_hyperparams(const SVMHyperparams& hp) {
  if (!(hp.c > 0.0) || !std::isfinite(hp.c))
    throw std::invalid_argument("svm: c must be positive and finite");
  if (!(hp.gamma > 0.0) || !std::isfinite(hp.gamma))
    throw std::invalid_argument("svm: gamma must be positive and finite");
}

double sqdist4(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  double acc = 0.0;
  for (int d = 0; d < 4; ++d) {
    double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return acc;
}

// One trained pairwise machine with support vectors as training-set indices.
struct TrainedPair {
  int class_a = 0;
  int class_b = 0;
  std::vector<std::uint32_t> sv_global;
  std::vector<double> coef;
  double bias = 0.0;
  bool converged = true;
};

// Trains every one-vs-one machine on a full precomputed kernel matrix.
std::vector<TrainedPair> train_pairs_on_kernel(
    const std::vector<double>& kernel, std::size_t n,
    const std::vector<DisturbanceClass>& labels,
    const std::vector<DisturbanceClass>& classes, double c, int n_threads) {
  std::map<DisturbanceClass, std::vector<std::uint32_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<std::uint32_t>(i));

  std::vector<std::pair<DisturbanceClass, DisturbanceClass>> pairs;
  for (std::size_t a = 0; a < classes.size(); ++a)
    for (std::size_t b = a + 1; b < classes.size(); ++b)
      pairs.emplace_back(classes[a], classes[b]);

  std::vector<TrainedPair> out(pairs.size());
  parallel_for(pairs.size(), n_threads, [&](std::size_t pi) {
    auto [ca, cb] = pairs[pi];
    const auto& ia = by_class.at(ca);
    const auto& ib = by_class.at(cb);
    std::size_t m = ia.size() + ib.size();
    std::vector<std::uint32_t> idx;
    idx.reserve(m);
    idx.insert(idx.end(), ia.begin(), ia.end());
    idx.insert(idx.end(), ib.begin(), ib.end());
    std::vector<int> y(m);
    for (std::size_t i = 0; i < m; ++i) y[i] = i < ia.size() ? 1 : -1;
    std::vector<double> sub(m * m);
    for (std::size_t r = 0; r < m; ++r) {
      const double* row = kernel.data() + static_cast<std::size_t>(idx[r]) * n;
      for (std::size_t cc = 0; cc < m; ++cc) sub[r * m + cc] = row[idx[cc]];
    }
    detail::SmoSolution sol = detail::smo_solve(sub, m, y, c);
    TrainedPair tp;
    tp.class_a = class_id(ca);
    tp.class_b = class_id(cb);
    tp.bias = sol.bias;
    tp.converged = sol.converged;
    for (std::size_t i = 0; i < m; ++i) {
      if (sol.alpha[i] > 0.0) {
        tp.sv_global.push_back(idx[i]);
        tp.coef.push_back(sol.alpha[i] * y[i]);
      }
    }
    out[pi] = std::move(tp);
  });
  return out;
}

// Majority vote with the documented tie-breaks, given all pairwise decisions.
DisturbanceClass resolve_votes(const std::vector<TrainedPair>& pairs,
                               const std::vector<double>& decisions,
                               const std::vector<DisturbanceClass>& classes) {
  std::map<int, int> votes;
  std::map<int, double> score;
  for (DisturbanceClass c : classes) {
    votes[class_id(c)] = 0;
    score[class_id(c)] = 0.0;
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    int winner = decisions[i] > 0.0 ? pairs[i].class_a : pairs[i].class_b;
    votes[winner] += 1;
    score[pairs[i].class_a] += std::abs(decisions[i]);
    score[pairs[i].class_b] += std::abs(decisions[i]);
  }
  int best_votes = -1;
  for (auto& [cid, v] : votes) best_votes = std::max(best_votes, v);
  int chosen = -1;
  double chosen_score = -1.0;
  for (auto& [cid, v] : votes) {
    if (v != best_votes) continue;
    if (score[cid] > chosen_score) {
      chosen = cid;
      chosen_score = score[cid];
    }
  }
  return class_from_id(chosen);
}

std::vector<DisturbanceClass> distinct_classes(const std::vector<DisturbanceClass>& labels) {
  std::vector<DisturbanceClass> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

}  // namespace

double rbf_kernel(const std::vector<double>& x, const std::vector<double>& y,
                  double gamma) {
  if (x.size() != y.size())
    throw std::invalid_argument("svm: kernel arguments differ in dimension");
  if (!(gamma > 0.0)) throw std::invalid_argument("svm: gamma must be positive");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double diff = x[i] - y[i];
    acc += diff * diff;
  }
  return std::exp(-gamma * acc);
}

namespace detail {

SmoSolution smo_solve(const std::vector<double>& kernel, std::size_t n,
                      const std::vector<int>& y, double c, double tol,
                      long max_iter) {
  if (n == 0 || y.size() != n || kernel.size() != n * n)
    throw std::invalid_argument("svm: malformed smo problem");
  if (!(c > 0.0)) throw std::invalid_argument("svm: c must be positive");

  SmoSolution sol;
  sol.alpha.assign(n, 0.0);
  // Gradient of the minimization form: grad_i = sum_j Q_ij alpha_j - 1.
  std::vector<double> grad(n, -1.0);
  auto in_up = [&](std::size_t i) {
    return (y[i] > 0 && sol.alpha[i] < c) || (y[i] < 0 && sol.alpha[i] > 0.0);
  };
  auto in_low = [&](std::size_t i) {
    return (y[i] > 0 && sol.alpha[i] > 0.0) || (y[i] < 0 && sol.alpha[i] < c);
  };

  long iter = 0;
  for (; iter < max_iter; ++iter) {
    // Violation scores: -y_i grad_i = y_i - u_i.
    std::size_t best_i = n, best_j = n;
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      double v = -static_cast<double>(y[i]) * grad[i];
      if (in_up(i) && v > m_up) {
        m_up = v;
        best_i = i;
      }
      if (in_low(i) && v < m_low) {
        m_low = v;
        best_j = i;
      }
    }
    if (best_i == n || best_j == n || m_up - m_low <= tol) {
      sol.converged = true;
      break;
    }

    std::size_t i = best_i, j = best_j;
    double quad = kernel[i * n + i] + kernel[j * n + j] - 2.0 * kernel[i * n + j];
    if (quad <= 0.0) quad = 1e-12;
    double delta = (m_up - m_low) / quad;
    // Feasible step sizes before alpha_i or alpha_j hits its box bound.
    double hi_i = y[i] > 0 ? c - sol.alpha[i] : sol.alpha[i];
    double hi_j = y[j] > 0 ? sol.alpha[j] : c - sol.alpha[j];
    int bound = 0;
    if (hi_i < delta) {
      delta = hi_i;
      bound = 1;
    }
    if (hi_j < delta) {
      delta = hi_j;
      bound = 2;
    }
    sol.alpha[i] += static_cast<double>(y[i]) * delta;
    sol.alpha[j] -= static_cast<double>(y[j]) * delta;
    // Snap the clamped variable exactly onto its bound to avoid drift.
    if (bound == 1) sol.alpha[i] = y[i] > 0 ? c : 0.0;
    if (bound == 2) sol.alpha[j] = y[j] > 0 ? 0.0 : c;
    const double* row_i = kernel.data() + i * n;
    const double* row_j = kernel.data() + j * n;
    for (std::size_t k = 0; k < n; ++k)
      grad[k] += static_cast<double>(y[k]) * delta * (row_i[k] - row_j[k]);
    sol.converged = false;
  }
  sol.iterations = iter;
  if (iter == max_iter) sol.converged = false;

  // Bias from free support vectors; midpoint of the violation band otherwise.
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.alpha[i] > 0.0 && sol.alpha[i] < c) {
      free_sum += -static_cast<double>(y[i]) * grad[i];
      ++free_count;
    }
  }
  if (free_count > 0) {
    sol.bias = free_sum / static_cast<double>(free_count);
  } else {
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      double v = -static_cast<double>(y[i]) * grad[i];
      if (in_up(i)) m_up = std::max(m_up, v);
      if (in_low(i)) m_low = std::min(m_low, v);
    }
    if (std::isfinite(m_up) && std::isfinite(m_low))
      sol.bias = 0.5 * (m_up + m_low);
    else
      sol.bias = 0.0;
  }

  double alpha_sum = 0.0, alpha_grad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    alpha_sum += sol.alpha[i];
    alpha_grad += sol.alpha[i] * grad[i];
  }
  sol.objective = 0.5 * (alpha_sum - alpha_grad);
  return sol;
}

}  // namespace detail

BinarySVM train_binary(const std::vector<std::vector<double>>& points,
                       const std::vector<int>& labels, SVMHyperparams hp,
                       std::uint64_t /*seed*/) {
  check_hyperparams(hp);
  std::size_t n = points.size();
  if (n == 0 || labels.size() != n)
    throw std::invalid_argument("svm: empty or mismatched training data");
  bool has_pos = false, has_neg = false;
  for (int l : labels) {
    if (l == 1) has_pos = true;
    else if (l == -1) has_neg = true;
    else throw std::invalid_argument("svm: labels must be +1 or -1");
  }
  if (!has_pos || !has_neg)
    throw std::invalid_argument("svm: both classes must be present");

  std::vector<double> kernel(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double k = rbf_kernel(points[i], points[j], hp.gamma);
      kernel[i * n + j] = k;
      kernel[j * n + i] = k;
    }
  detail::SmoSolution sol = detail::smo_solve(kernel, n, labels, hp.c);

  BinarySVM m;
  m.hp = hp;
  m.bias = sol.bias;
  m.converged = sol.converged;
  m.iterations = sol.iterations;
  m.dual_objective = sol.objective;
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.alpha[i] > 0.0) {
      m.support_vectors.push_back(points[i]);
      m.dual_coefs.push_back(sol.alpha[i] * labels[i]);
    }
  }
  return m;
}

double decision_function(const BinarySVM& m, const std::vector<double>& x) {
  double acc = m.bias;
  for (std::size_t i = 0; i < m.support_vectors.size(); ++i)
    acc += m.dual_coefs[i] * rbf_kernel(m.support_vectors[i], x, m.hp.gamma);
  return acc;
}

SVMModel train_multiclass(const std::vector<FeatureVector>& data, SVMHyperparams hp,
                          std::uint64_t /*seed*/, int n_threads) {
  check_hyperparams(hp);
  if (data.size() < 2) throw std::invalid_argument("svm: need at least two points");
  std::size_t n = data.size();
  std::vector<std::array<double, 4>> pts(n);
  std::vector<DisturbanceClass> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i] = data[i].point();
    labels[i] = data[i].label;
  }
  std::vector<DisturbanceClass> classes = distinct_classes(labels);
  if (classes.size() < 2)
    throw std::invalid_argument("svm: multiclass training needs >= 2 classes");

  std::vector<double> kernel(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    kernel[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double k = std::exp(-hp.gamma * sqdist4(pts[i], pts[j]));
      kernel[i * n + j] = k;
      kernel[j * n + i] = k;
    }
  }
  std::vector<TrainedPair> pairs =
      train_pairs_on_kernel(kernel, n, labels, classes, hp.c, n_threads);

  SVMModel model;
  model.hp = hp;
  model.classes = classes;
  std::vector<std::uint32_t> pool_idx;
  for (const TrainedPair& tp : pairs)
    pool_idx.insert(pool_idx.end(), tp.sv_global.begin(), tp.sv_global.end());
  std::sort(pool_idx.begin(), pool_idx.end());
  pool_idx.erase(std::unique(pool_idx.begin(), pool_idx.end()), pool_idx.end());
  std::vector<std::uint32_t> remap(n, 0);
  for (std::size_t i = 0; i < pool_idx.size(); ++i) remap[pool_idx[i]] = static_cast<std::uint32_t>(i);
  model.sv_pool.reserve(pool_idx.size());
  for (std::uint32_t g : pool_idx) model.sv_pool.push_back(pts[g]);
  model.machines.reserve(pairs.size());
  for (const TrainedPair& tp : pairs) {
    PairMachine pm;
    pm.class_a = tp.class_a;
    pm.class_b = tp.class_b;
    pm.bias = tp.bias;
    pm.converged = tp.converged;
    pm.coef = tp.coef;
    pm.sv.reserve(tp.sv_global.size());
    for (std::uint32_t g : tp.sv_global) pm.sv.push_back(remap[g]);
    model.machines.push_back(std::move(pm));
    model.all_converged = model.all_converged && tp.converged;
  }
  return model;
}

DisturbanceClass predict(const SVMModel& model, const FeatureVector& fv) {
  if (model.machines.empty()) throw std::invalid_argument("svm: untrained model");
  std::array<double, 4> x = fv.point();
  std::vector<double> kx(model.sv_pool.size());
  for (std::size_t i = 0; i < model.sv_pool.size(); ++i)
    kx[i] = std::exp(-model.hp.gamma * sqdist4(model.sv_pool[i], x));
  std::vector<TrainedPair> pairs(model.machines.size());
  std::vector<double> decisions(model.machines.size());
  for (std::size_t i = 0; i < model.machines.size(); ++i) {
    const PairMachine& pm = model.machines[i];
    double acc = pm.bias;
    for (std::size_t s = 0; s < pm.sv.size(); ++s) acc += pm.coef[s] * kx[pm.sv[s]];
    decisions[i] = acc;
    pairs[i].class_a = pm.class_a;
    pairs[i].class_b = pm.class_b;
  }
  return resolve_votes(pairs, decisions, model.classes);
}

long ConfusionMatrix::total() const {
  long t = 0;
  for (const auto& row : counts)
    for (long v : row) t += v;
  return t;
}

long ConfusionMatrix::correct() const {
  long t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

double ConfusionMatrix::accuracy() const {
  long t = total();
  if (t == 0) return 0.0;
  return static_cast<double>(correct()) / static_cast<double>(t);
}

double ConfusionMatrix::precision(std::size_t class_index) const {
  long col = 0;
  for (const auto& row : counts) col += row[class_index];
  if (col == 0) return 0.0;
  return static_cast<double>(counts[class_index][class_index]) / static_cast<double>(col);
}

double ConfusionMatrix::recall(std::size_t class_index) const {
  long row = 0;
  for (long v : counts[class_index]) row += v;
  if (row == 0) return 0.0;
  return static_cast<double>(counts[class_index][class_index]) / static_cast<double>(row);
}

std::string ConfusionMatrix::to_text() const {
  std::ostringstream os;
  os << "true\\pred";
  for (DisturbanceClass c : classes) os << '\t' << 'C' << class_id(c);
  os << '\n';
  for (std::size_t i = 0; i < counts.size(); ++i) {
    os << 'C' << class_id(classes[i]);
    for (long v : counts[i]) os << '\t' << v;
    os << '\n';
  }
  os << "accuracy = " << correct() << '/' << total();
  char pct[32];
  std::snprintf(pct, sizeof(pct), " = %.4f%%", 100.0 * accuracy());
  os << pct << '\n';
  return os.str();
}

ConfusionMatrix evaluate(const SVMModel& model, const std::vector<FeatureVector>& test,
                         int n_threads) {
  ConfusionMatrix cm;
  cm.classes = model.classes;
  cm.counts.assign(cm.classes.size(), std::vector<long>(cm.classes.size(), 0));
  std::map<int, std::size_t> index_of;
  for (std::size_t i = 0; i < cm.classes.size(); ++i)
    index_of[class_id(cm.classes[i])] = i;

  std::vector<DisturbanceClass> preds(test.size());
  parallel_for(test.size(), n_threads,
               [&](std::size_t i) { preds[i] = predict(model, test[i]); });
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto it_t = index_of.find(class_id(test[i].label));
    auto it_p = index_of.find(class_id(preds[i]));
    if (it_t == index_of.end() || it_p == index_of.end())
      throw std::invalid_argument("svm: test label outside the model's classes");
    cm.counts[it_t->second][it_p->second] += 1;
  }
  return cm;
}

PairwiseGeometry build_geometry(const std::vector<FeatureVector>& train,
                                const std::vector<FeatureVector>& val) {
  if (train.empty() || val.empty())
    throw std::invalid_argument("svm: geometry needs non-empty train and val sets");
  PairwiseGeometry g;
  g.n_train = train.size();
  g.n_val = val.size();
  g.train_pts.resize(g.n_train);
  g.train_labels.resize(g.n_train);
  for (std::size_t i = 0; i < g.n_train; ++i) {
    g.train_pts[i] = train[i].point();
    g.train_labels[i] = train[i].label;
  }
  g.val_pts.resize(g.n_val);
  g.val_labels.resize(g.n_val);
  for (std::size_t i = 0; i < g.n_val; ++i) {
    g.val_pts[i] = val[i].point();
    g.val_labels[i] = val[i].label;
  }
  g.d2_train.resize(g.n_train * g.n_train);
  for (std::size_t i = 0; i < g.n_train; ++i) {
    g.d2_train[i * g.n_train + i] = 0.0;
    for (std::size_t j = i + 1; j < g.n_train; ++j) {
      double d = sqdist4(g.train_pts[i], g.train_pts[j]);
      g.d2_train[i * g.n_train + j] = d;
      g.d2_train[j * g.n_train + i] = d;
    }
  }
  g.d2_val.resize(g.n_val * g.n_train);
  for (std::size_t i = 0; i < g.n_val; ++i)
    for (std::size_t j = 0; j < g.n_train; ++j)
      g.d2_val[i * g.n_train + j] = sqdist4(g.train_pts[j], g.val_pts[i]);
  return g;
}

double holdout_accuracy(const PairwiseGeometry& geom, const SVMHyperparams& hp,
                        int n_threads) {
  check_hyperparams(hp);
  std::size_t n = geom.n_train;
  std::vector<DisturbanceClass> classes = distinct_classes(geom.train_labels);
  if (classes.size() < 2)
    throw std::invalid_argument("svm: holdout needs >= 2 training classes");

  std::vector<double> kernel(n * n);
  for (std::size_t i = 0; i < kernel.size(); ++i)
    kernel[i] = std::exp(-hp.gamma * geom.d2_train[i]);
  std::vector<TrainedPair> pairs =
      train_pairs_on_kernel(kernel, n, geom.train_labels, classes, hp.c, n_threads);

  std::vector<double> kval(geom.d2_val.size());
  for (std::size_t i = 0; i < kval.size(); ++i)
    kval[i] = std::exp(-hp.gamma * geom.d2_val[i]);

  std::size_t correct = 0;
  std::vector<double> decisions(pairs.size());
  for (std::size_t v = 0; v < geom.n_val; ++v) {
    const double* krow = kval.data() + v * n;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const TrainedPair& tp = pairs[p];
      double acc = tp.bias;
      for (std::size_t s = 0; s < tp.sv_global.size(); ++s)
        acc += tp.coef[s] * krow[tp.sv_global[s]];
      decisions[p] = acc;
    }
    if (resolve_votes(pairs, decisions, classes) == geom.val_labels[v]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(geom.n_val);
}

std::string model_to_json(const SVMModel& model) {
  nlohmann::json j;
  j["hyperparams"] = {{"c", model.hp.c}, {"gamma", model.hp.gamma}};
  if (model.normalizer) {
    j["normalizer"] = {{"means", model.normalizer->means},
                       {"stds", model.normalizer->stds}};
  } else {
    j["normalizer"] = nullptr;
  }
  std::vector<int> ids;
  for (DisturbanceClass c : model.classes) ids.push_back(class_id(c));
  j["classes"] = ids;
  j["all_converged"] = model.all_converged;
  if (model.pipeline) {
    const PipelineMeta& pm = *model.pipeline;
    j["pipeline"] = {{"sample_rate_hz", pm.grid.sample_rate_hz},
                     {"n_samples", pm.grid.n_samples},
                     {"fundamental_hz", pm.grid.fundamental_hz},
                     {"amplitude_pu", pm.grid.amplitude_pu},
                     {"window", {{"a", pm.window.a}, {"b", pm.window.b}, {"c", pm.window.c}}},
                     {"freq_mode", freq_mode_name(pm.freq_mode)},
                     {"contour_mode", contour_mode_name(pm.contour_mode)}};
  } else {
    j["pipeline"] = nullptr;
  }
  nlohmann::json machines = nlohmann::json::array();
  for (const PairMachine& pm : model.machines) {
    nlohmann::json m;
    m["class_pair"] = {pm.class_a, pm.class_b};
    nlohmann::json svs = nlohmann::json::array();
    for (std::uint32_t idx : pm.sv) svs.push_back(model.sv_pool[idx]);
    m["support_vectors"] = svs;
    m["dual_coefs"] = pm.coef;
    m["bias"] = pm.bias;
    m["converged"] = pm.converged;
    machines.push_back(std::move(m));
  }
  j["machines"] = std::move(machines);
  return j.dump(2);
}

SVMModel model_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SVMModel model;
  model.hp.c = j.at("hyperparams").at("c").get<double>();
  model.hp.gamma = j.at("hyperparams").at("gamma").get<double>();
  check_hyperparams(model.hp);
  if (j.contains("normalizer") && !j.at("normalizer").is_null()) {
    NormalizationStats st;
    auto means = j.at("normalizer").at("means").get<std::vector<double>>();
    auto stds = j.at("normalizer").at("stds").get<std::vector<double>>();
    if (means.size() != 4 || stds.size() != 4)
      throw std::runtime_error("svm: normalizer must carry 4 means and 4 stds");
    std::copy(means.begin(), means.end(), st.means.begin());
    std::copy(stds.begin(), stds.end(), st.stds.begin());
    model.normalizer = st;
  }
  for (int id : j.at("classes").get<std::vector<int>>())
    model.classes.push_back(class_from_id(id));
  model.all_converged = j.value("all_converged", true);
  if (j.contains("pipeline") && !j.at("pipeline").is_null()) {
    const auto& p = j.at("pipeline");
    PipelineMeta pm;
    pm.grid.sample_rate_hz = p.at("sample_rate_hz").get<double>();
    pm.grid.n_samples = p.at("n_samples").get<std::size_t>();
    pm.grid.fundamental_hz = p.at("fundamental_hz").get<double>();
    pm.grid.amplitude_pu = p.at("amplitude_pu").get<double>();
    pm.window.a = p.at("window").at("a").get<double>();
    pm.window.b = p.at("window").at("b").get<double>();
    pm.window.c = p.at("window").at("c").get<double>();
    pm.freq_mode = freq_mode_from_name(p.at("freq_mode").get<std::string>());
    pm.contour_mode = contour_mode_from_name(p.at("contour_mode").get<std::string>());
    model.pipeline = pm;
  }

  std::map<std::array<double, 4>, std::uint32_t> pool_index;
  for (const auto& m : j.at("machines")) {
    PairMachine pm;
    auto pair = m.at("class_pair").get<std::vector<int>>();
    if (pair.size() != 2) throw std::runtime_error("svm: malformed class pair");
    pm.class_a = pair[0];
    pm.class_b = pair[1];
    pm.bias = m.at("bias").get<double>();
    pm.converged = m.value("converged", true);
    pm.coef = m.at("dual_coefs").get<std::vector<double>>();
    auto svs = m.at("support_vectors").get<std::vector<std::array<double, 4>>>();
    if (svs.size() != pm.coef.size())
      throw std::runtime_error("svm: support vector and coefficient counts differ");
    for (const auto& sv : svs) {
      auto [it, inserted] =
          pool_index.try_emplace(sv, static_cast<std::uint32_t>(model.sv_pool.size()));
      if (inserted) model.sv_pool.push_back(sv);
      pm.sv.push_back(it->second);
    }
    model.machines.push_back(std::move(pm));
  }
  return model;
}

void write_model_json(const std::string& path, const SVMModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("svm: cannot write " + path);
  out << model_to_json(model) << '\n';
}

SVMModel read_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("svm: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return model_from_json(text);
}

}  // namespace pqd
