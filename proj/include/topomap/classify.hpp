#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "topomap/common.hpp"
#include "topomap/features.hpp"
#include "topomap/rng.hpp"

namespace topomap {

/// Depth-1 learner: predicts class 2 when polarity*(x[feature] - threshold) > 0.
struct Stump {
  std::size_t feature_index = 0;
  double threshold = 0.0;
  int polarity = 1;

  // +1 for class 2, -1 for class 1
  int vote(const double* x) const {
    return (static_cast<double>(polarity) * (x[feature_index] - threshold) > 0.0) ? 1 : -1;
  }
};

struct BoostedModel {
  std::vector<Stump> learners;
  std::vector<double> alphas;
  std::size_t n_rounds = 0;  // requested rounds; learners may stop early
  std::vector<FamilySpan> feature_layout;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Metrics {
  // confusion[t][p]: truth class (1+t), predicted class (1+p)
  std::size_t confusion[2][2] = {{0, 0}, {0, 0}};
  ClassScores class1;
  ClassScores class2;
  double f1_minority = 0.0;
};

namespace detail {

// y in {-1,+1}; +1 == class 2
inline int to_sign(int label) { return label == 2 ? 1 : -1; }

struct StumpFit {
  Stump stump;
  double error = 0.0;
  bool found = false;
};

// Exhaustive weighted-error minimization over midpoints of sorted unique
// values, both polarities. Ties: lowest feature, lowest threshold, then
// polarity +1.
inline StumpFit fit_stump(const LabeledDataset& data, const std::vector<std::size_t>& sample,
                          const std::vector<double>& weights) {
  StumpFit best;
  const std::size_t m = sample.size();
  double w_total = 0.0, w_pos = 0.0;  // over the sample
  for (std::size_t i : sample) {
    w_total += weights[i];
    if (data.y[i] == 2) w_pos += weights[i];
  }

  std::vector<std::size_t> order(m);
  std::vector<double> vals(m);
  for (std::size_t f = 0; f < data.n_features; ++f) {
    for (std::size_t k = 0; k < m; ++k) vals[k] = data.at(sample[k], f);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });

    // err_pos(theta) for polarity +1: class-2 weight at x <= theta plus
    // class-1 weight at x > theta. Sweep the sorted values, evaluating at
    // midpoints between distinct neighbors.
    double below_pos = 0.0, below_total = 0.0;
    for (std::size_t k = 0; k + 1 < m; ++k) {
      std::size_t i = sample[order[k]];
      below_total += weights[i];
      if (data.y[i] == 2) below_pos += weights[i];
      double v0 = vals[order[k]], v1 = vals[order[k + 1]];
      if (!(v1 > v0)) continue;
      double theta = 0.5 * (v0 + v1);
      double err_pos = below_pos + ((w_total - below_total) - (w_pos - below_pos));
      double err_neg = w_total - err_pos;
      if (!best.found || err_pos < best.error ||
          (err_pos == best.error && (f < best.stump.feature_index ||
                                     (f == best.stump.feature_index && theta < best.stump.threshold)))) {
        best = {{f, theta, 1}, err_pos, true};
      }
      if (err_neg < best.error) {
        best = {{f, theta, -1}, err_neg, true};
      }
    }
  }
  return best;
}

// Draws `count` distinct indices from pool, probability proportional to weight.
inline std::vector<std::size_t> weighted_draw(const std::vector<std::size_t>& pool,
                                              const std::vector<double>& weights, std::size_t count, Rng& rng) {
  std::vector<std::size_t> remaining = pool;
  std::vector<double> w(remaining.size());
  double total = 0.0;
  for (std::size_t k = 0; k < remaining.size(); ++k) {
    w[k] = weights[remaining[k]];
    total += w[k];
  }
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t draw = 0; draw < count; ++draw) {
    std::size_t pick = remaining.size() - 1;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t k = 0; k < remaining.size(); ++k) {
        acc += w[k];
        if (r < acc) { pick = k; break; }
      }
    } else {
      pick = rng.below(remaining.size());
    }
    out.push_back(remaining[pick]);
    total -= w[pick];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    w.erase(w.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

}  // namespace detail

/// AdaBoost over decision stumps; when `undersample` is set, each round
/// trains its stump on the minority class plus a weight-proportional draw of
/// equally many majority samples (the full weighted dataset still scores the
/// round). Deterministic given the seed.
inline BoostedModel train_boosted(const LabeledDataset& data, std::size_t n_rounds, std::uint64_t seed,
                                  bool undersample) {
  const std::size_t n = data.n_rows();
  if (n == 0) fail(errc::empty_dataset, "cannot train on an empty dataset");
  if (n_rounds == 0) fail(errc::bad_config, "n_rounds must be at least 1");

  std::vector<std::size_t> class1_idx, class2_idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (data.y[i] == 2) class2_idx.push_back(i);
    else class1_idx.push_back(i);
  }
  if (class1_idx.empty() || class2_idx.empty())
    fail(errc::single_class_dataset, "training data must contain both classes");

  const bool class2_is_minority = class2_idx.size() <= class1_idx.size();
  const std::vector<std::size_t>& minority = class2_is_minority ? class2_idx : class1_idx;
  const std::vector<std::size_t>& majority = class2_is_minority ? class1_idx : class2_idx;

  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  Rng rng(seed);

  BoostedModel model;
  model.n_rounds = n_rounds;
  model.feature_layout = data.layout;
  if (model.feature_layout.empty()) model.feature_layout.push_back({"f", 0, data.n_features});

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});

  for (std::size_t round = 0; round < n_rounds; ++round) {
    detail::StumpFit fit;
    double eps = 1.0;
    bool usable = false;
    const int max_attempts = undersample ? 11 : 1;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
      std::vector<std::size_t> sample;
      if (undersample && majority.size() > minority.size()) {
        sample = minority;
        std::vector<std::size_t> drawn = detail::weighted_draw(majority, weights, minority.size(), rng);
        sample.insert(sample.end(), drawn.begin(), drawn.end());
      } else {
        sample = all;
      }
      fit = detail::fit_stump(data, sample, weights);
      if (!fit.found) continue;  // sample had no distinct values anywhere

      eps = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (fit.stump.vote(data.row(i)) != detail::to_sign(data.y[i])) eps += weights[i];
      if (eps < 0.5) { usable = true; break; }
    }
    if (!usable) {
      if (model.learners.empty())
        fail(errc::no_useful_split, "no stump beats 0.5 weighted error on round 1");
      break;  // boosting has converged as far as stumps can take it
    }

    if (eps <= 0.0) eps = 1e-10;
    double alpha = 0.5 * std::log((1.0 - eps) / eps);
    model.learners.push_back(fit.stump);
    model.alphas.push_back(alpha);

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      bool wrong = fit.stump.vote(data.row(i)) != detail::to_sign(data.y[i]);
      weights[i] *= std::exp(wrong ? alpha : -alpha);
      sum += weights[i];
    }
    for (double& w : weights) w /= sum;
  }
  return model;
}

inline BoostedModel train_rusboost(const LabeledDataset& data, std::size_t n_rounds, std::uint64_t seed) {
  return train_boosted(data, n_rounds, seed, true);
}

struct Prediction {
  int label = 1;
  double score = 0.0;
};

inline Prediction predict(const BoostedModel& model, const double* x, std::size_t len) {
  std::size_t width = 0;
  for (const FamilySpan& s : model.feature_layout) width += s.length;
  if (width != len) fail(errc::dimension_mismatch, "feature row length " + std::to_string(len) +
                                                       " does not match model width " + std::to_string(width));
  double score = 0.0;
  for (std::size_t t = 0; t < model.learners.size(); ++t)
    score += model.alphas[t] * static_cast<double>(model.learners[t].vote(x));
  return {score > 0.0 ? 2 : 1, score};
}

inline Prediction predict(const BoostedModel& model, const std::vector<double>& x) {
  return predict(model, x.data(), x.size());
}

inline Metrics metrics_from_confusion(const std::size_t confusion[2][2]) {
  Metrics m;
  for (int t = 0; t < 2; ++t)
    for (int q = 0; q < 2; ++q) m.confusion[t][q] = confusion[t][q];

  auto scores = [&](int cls) {
    std::size_t t = static_cast<std::size_t>(cls - 1);
    double tp = static_cast<double>(m.confusion[t][t]);
    double fp = static_cast<double>(m.confusion[1 - t][t]);
    double fn = static_cast<double>(m.confusion[t][1 - t]);
    ClassScores s;
    s.precision = (tp + fp > 0.0) ? tp / (tp + fp) : 0.0;
    s.recall = (tp + fn > 0.0) ? tp / (tp + fn) : 0.0;
    s.f1 = (s.precision + s.recall > 0.0) ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
  };
  m.class1 = scores(1);
  m.class2 = scores(2);

  std::size_t n1 = m.confusion[0][0] + m.confusion[0][1];
  std::size_t n2 = m.confusion[1][0] + m.confusion[1][1];
  m.f1_minority = (n2 <= n1) ? m.class2.f1 : m.class1.f1;
  return m;
}

inline Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& truth) {
  if (predictions.size() != truth.size())
    fail(errc::length_mismatch, "predictions and truth differ in length");
  if (truth.empty()) fail(errc::length_mismatch, "need at least one sample");

  std::size_t confusion[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if ((truth[i] != 1 && truth[i] != 2) || (predictions[i] != 1 && predictions[i] != 2))
      fail(errc::bad_config, "labels must be 1 or 2");
    confusion[truth[i] - 1][predictions[i] - 1] += 1;
  }
  return metrics_from_confusion(confusion);
}

/// Sums fold confusions and rescores — the pooled view of a cross-validation.
inline Metrics pooled_metrics(const std::vector<Metrics>& folds) {
  if (folds.empty()) fail(errc::empty_dataset, "no fold metrics to pool");
  std::size_t confusion[2][2] = {{0, 0}, {0, 0}};
  for (const Metrics& m : folds)
    for (int t = 0; t < 2; ++t)
      for (int q = 0; q < 2; ++q) confusion[t][q] += m.confusion[t][q];
  return metrics_from_confusion(confusion);
}

/// Stratified k-fold: per-class shuffle, round-robin fold assignment, one
/// model per fold trained on the remaining k-1 folds.
inline std::vector<Metrics> cross_validate(const LabeledDataset& data, std::size_t k, std::size_t n_rounds,
                                           std::uint64_t seed) {
  if (k < 2) fail(errc::bad_config, "cross-validation needs k >= 2");
  std::vector<std::size_t> class1_idx, class2_idx;
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    if (data.y[i] == 2) class2_idx.push_back(i);
    else class1_idx.push_back(i);
  }
  if (class1_idx.size() < k || class2_idx.size() < k)
    fail(errc::too_few_samples, "each class needs at least k samples for k folds");

  Rng rng(seed);
  rng.shuffle(class1_idx);
  rng.shuffle(class2_idx);

  std::vector<std::size_t> fold_of(data.n_rows(), 0);
  for (std::size_t p = 0; p < class1_idx.size(); ++p) fold_of[class1_idx[p]] = p % k;
  for (std::size_t p = 0; p < class2_idx.size(); ++p) fold_of[class2_idx[p]] = p % k;

  std::vector<Metrics> out;
  out.reserve(k);
  for (std::size_t fold = 0; fold < k; ++fold) {
    LabeledDataset train;
    train.n_features = data.n_features;
    train.layout = data.layout;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
      if (fold_of[i] == fold) {
        test_idx.push_back(i);
      } else {
        const double* r = data.row(i);
        train.x.insert(train.x.end(), r, r + data.n_features);
        train.y.push_back(data.y[i]);
      }
    }
    BoostedModel model = train_rusboost(train, n_rounds, subseed(seed, 1000 + fold));
    std::vector<int> pred, truth;
    pred.reserve(test_idx.size());
    for (std::size_t i : test_idx) {
      pred.push_back(predict(model, data.row(i), data.n_features).label);
      truth.push_back(data.y[i]);
    }
    out.push_back(compute_metrics(pred, truth));
  }
  return out;
}

// --- significance tests ------------------------------------------------------

/// Two-sided sign-flip randomization test on paired differences;
/// p = (1 + #{|stat_perm| >= |stat_obs|}) / (n_perm + 1).
inline double fisher_randomization_test(const std::vector<double>& a, const std::vector<double>& b,
                                        std::size_t n_perm, std::uint64_t seed) {
  if (a.size() != b.size()) fail(errc::length_mismatch, "paired score lists differ in length");
  if (a.size() < 2) fail(errc::invalid_size, "need at least 2 pairs");
  if (n_perm < 1000) fail(errc::invalid_size, "need at least 1000 permutations");

  const std::size_t n = a.size();
  std::vector<double> d(n);
  double obs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    obs += d[i];
  }
  obs /= static_cast<double>(n);

  Rng rng(seed);
  std::size_t hits = 0;
  for (std::size_t p = 0; p < n_perm; ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += rng.bernoulli(0.5) ? d[i] : -d[i];
    if (std::abs(s / static_cast<double>(n)) >= std::abs(obs)) ++hits;
  }
  return static_cast<double>(1 + hits) / static_cast<double>(n_perm + 1);
}

namespace detail {

// Continued fraction for the regularized incomplete beta (Lentz's method).
inline double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, dd = 1.0 - qab * x / qap;
  if (std::abs(dd) < tiny) dd = tiny;
  dd = 1.0 / dd;
  double h = dd;
  for (int m = 1; m <= 300; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    dd = 1.0 + aa * dd;
    if (std::abs(dd) < tiny) dd = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    dd = 1.0 / dd;
    h *= dd * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    dd = 1.0 + aa * dd;
    if (std::abs(dd) < tiny) dd = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    dd = 1.0 / dd;
    double del = dd * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-12) return h;
  }
  fail(errc::numerical_failure, "incomplete beta continued fraction did not converge");
}

inline double betainc(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

/// Two-sided p-value of the paired Student t statistic,
/// p = I_{df/(df+t^2)}(df/2, 1/2) with df = n-1.
inline double paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(errc::length_mismatch, "paired score lists differ in length");
  const std::size_t n = a.size();
  if (n < 2) fail(errc::invalid_size, "need at least 2 pairs");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  if (ss <= 0.0) fail(errc::zero_variance, "paired differences are all identical");
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  double df = static_cast<double>(n - 1);
  return detail::betainc(df / 2.0, 0.5, df / (df + t * t));
}

// --- JSON interchange --------------------------------------------------------

inline nlohmann::json layout_to_json(const std::vector<FamilySpan>& layout) {
  nlohmann::json arr = nlohmann::json::array();
  for (const FamilySpan& s : layout)
    arr.push_back({{"name", s.name}, {"offset", s.offset}, {"length", s.length}});
  return arr;
}

inline std::vector<FamilySpan> layout_from_json(const nlohmann::json& arr) {
  std::vector<FamilySpan> layout;
  for (const auto& e : arr)
    layout.push_back({e.at("name").get<std::string>(), e.at("offset").get<std::size_t>(),
                      e.at("length").get<std::size_t>()});
  return layout;
}

inline nlohmann::json model_to_json(const BoostedModel& model) {
  nlohmann::json stumps = nlohmann::json::array();
  for (std::size_t t = 0; t < model.learners.size(); ++t) {
    stumps.push_back({{"feature", model.learners[t].feature_index},
                      {"threshold", model.learners[t].threshold},
                      {"polarity", model.learners[t].polarity},
                      {"alpha", model.alphas[t]}});
  }
  return {{"rounds", model.n_rounds}, {"stumps", stumps}, {"layout", layout_to_json(model.feature_layout)}};
}

inline BoostedModel model_from_json(const nlohmann::json& j) {
  BoostedModel model;
  model.n_rounds = j.at("rounds").get<std::size_t>();
  for (const auto& s : j.at("stumps")) {
    model.learners.push_back({s.at("feature").get<std::size_t>(), s.at("threshold").get<double>(),
                              s.at("polarity").get<int>()});
    model.alphas.push_back(s.at("alpha").get<double>());
  }
  model.feature_layout = layout_from_json(j.at("layout"));
  return model;
}

inline void write_model(const std::string& path, const BoostedModel& model) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  out << model_to_json(model).dump(2) << "\n";
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

inline BoostedModel read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse_error, "'" + path + "': " + e.what());
  }
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"confusion",
           {{"t1p1", m.confusion[0][0]}, {"t1p2", m.confusion[0][1]}, {"t2p1", m.confusion[1][0]}, {"t2p2", m.confusion[1][1]}}},
          {"class1", {{"precision", m.class1.precision}, {"recall", m.class1.recall}, {"f1", m.class1.f1}}},
          {"class2", {{"precision", m.class2.precision}, {"recall", m.class2.recall}, {"f1", m.class2.f1}}},
          {"f1_minority", m.f1_minority}};
}

}  // namespace topomap
