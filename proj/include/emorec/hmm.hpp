// emorec/hmm.hpp

// Copyright 2026  The emorec Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

/*  Continuous-density HMM with diagonal-covariance GMM emissions.

    All probabilities are carried as logs and combined with log-sum-exp, so
    likelihoods of long utterances (thousands of 39-d frames) stay finite.
    Training is Baum-Welch over a set of sequences, with statistics
    accumulated in a fixed order so results are reproducible.  */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "emorec/error.hpp"
#include "emorec/features.hpp"
#include "emorec/matrix.hpp"
#include "emorec/random.hpp"

namespace emorec {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum(exp(v))); -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> v) {
  double hi = kNegInf;
  for (double x : v) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// ---------------------------------------------------------------------------
// Emission densities

struct Gmm {
  std::vector<double> weights;  // M
  Matrix means;                 // M x D
  Matrix variances;             // M x D

  std::size_t num_mixtures() const noexcept { return weights.size(); }
  std::size_t dim() const noexcept { return means.cols(); }

  friend bool operator==(const Gmm&, const Gmm&) = default;
};

/// log(w_m) + log N(x; mu_m, diag(var_m)) for every mixture m.
inline void gmm_component_log_densities(const Gmm& g, std::span<const double> x,
                                        std::span<double> out) {
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  const std::size_t dim = g.dim();
  for (std::size_t m = 0; m < g.num_mixtures(); ++m) {
    if (g.weights[m] <= 0.0) {
      out[m] = kNegInf;
      continue;
    }
    double acc = 0.0;
    const auto mu = g.means.row(m);
    const auto var = g.variances.row(m);
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = x[d] - mu[d];
      acc += kLog2Pi + std::log(var[d]) + diff * diff / var[d];
    }
    out[m] = std::log(g.weights[m]) - 0.5 * acc;
  }
}

inline double gmm_log_density(const Gmm& g, std::span<const double> x) {
  if (x.size() != g.dim())
    fail(ErrorCode::DimensionMismatch, "observation has dimension " + std::to_string(x.size()) +
                                           ", model expects " + std::to_string(g.dim()));
  std::vector<double> comp(g.num_mixtures());
  gmm_component_log_densities(g, x, comp);
  return log_sum_exp(comp);
}

// ---------------------------------------------------------------------------
// Model

enum class Topology { Ergodic, LeftToRight };

inline std::string to_string(Topology t) {
  return t == Topology::Ergodic ? "ergodic" : "left_to_right";
}

inline Topology parse_topology(const std::string& s) {
  if (s == "ergodic") return Topology::Ergodic;
  if (s == "left_to_right") return Topology::LeftToRight;
  fail(ErrorCode::InvalidConfig, "unknown topology '" + s + "'");
}

struct HmmModel {
  std::vector<double> initial;  // pi, N
  Matrix transitions;           // A, N x N, rows sum to 1
  std::vector<Gmm> emissions;   // one per state
  std::size_t feature_dim = 0;
  Topology topology = Topology::LeftToRight;

  std::size_t num_states() const noexcept { return initial.size(); }
  std::size_t num_mixtures() const { return emissions.empty() ? 0 : emissions.front().num_mixtures(); }

  friend bool operator==(const HmmModel&, const HmmModel&) = default;
};

/// Checks the stochastic and topology constraints; throws IntegrityError.
inline void validate_model(const HmmModel& model, double tol = 1e-9) {
  const std::size_t n = model.num_states();
  const auto bad = [](const std::string& why) { fail(ErrorCode::IntegrityError, why); };
  if (n == 0) bad("model has no states");
  if (model.transitions.rows() != n || model.transitions.cols() != n) bad("transition matrix shape");
  if (model.emissions.size() != n) bad("emission count differs from state count");
  double pi_sum = 0.0;
  for (double p : model.initial) {
    if (!(p >= 0.0)) bad("negative initial probability");
    pi_sum += p;
  }
  if (std::abs(pi_sum - 1.0) > tol) bad("initial distribution does not sum to 1");
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = model.transitions(i, j);
      if (!(a >= 0.0)) bad("negative transition probability");
      if (model.topology == Topology::LeftToRight && a != 0.0 && (j < i || j > i + 1))
        bad("left_to_right model has a transition outside self/successor");
      s += a;
    }
    if (std::abs(s - 1.0) > tol) bad("transition row " + std::to_string(i) + " does not sum to 1");
  }
  if (model.topology == Topology::LeftToRight)
    for (std::size_t i = 1; i < n; ++i)
      if (model.initial[i] != 0.0) bad("left_to_right model must start in state 0");
  for (const Gmm& g : model.emissions) {
    if (g.num_mixtures() == 0) bad("state with no mixtures");
    if (g.dim() != model.feature_dim || g.variances.cols() != model.feature_dim ||
        g.means.rows() != g.num_mixtures() || g.variances.rows() != g.num_mixtures())
      bad("emission shape does not match feature_dim");
    double w = 0.0;
    for (double x : g.weights) {
      if (!(x >= 0.0)) bad("negative mixture weight");
      w += x;
    }
    if (std::abs(w - 1.0) > tol) bad("mixture weights do not sum to 1");
    for (double v : g.variances.data())
      if (!(v > 0.0) || !std::isfinite(v)) bad("non-positive variance");
    for (double v : g.means.data())
      if (!std::isfinite(v)) bad("non-finite mean");
  }
}

namespace detail {

inline void check_observations(const HmmModel& model, const Matrix& obs) {
  if (obs.rows() == 0) fail(ErrorCode::EmptyObservation, "observation sequence is empty");
  if (obs.cols() != model.feature_dim)
    fail(ErrorCode::DimensionMismatch, "observations have dimension " + std::to_string(obs.cols()) +
                                           ", model expects " + std::to_string(model.feature_dim));
}

inline Matrix log_transitions(const HmmModel& model) {
  const std::size_t n = model.num_states();
  Matrix la(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) la(i, j) = safe_log(model.transitions(i, j));
  return la;
}

}  // namespace detail

/// T x N matrix of log b_j(o_t).
inline Matrix emission_log_likelihoods(const HmmModel& model, const Matrix& obs) {
  detail::check_observations(model, obs);
  const std::size_t n = model.num_states();
  Matrix lb(obs.rows(), n);
  std::vector<double> comp;
  for (std::size_t t = 0; t < obs.rows(); ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      comp.resize(model.emissions[j].num_mixtures());
      gmm_component_log_densities(model.emissions[j], obs.row(t), comp);
      lb(t, j) = log_sum_exp(comp);
    }
  }
  return lb;
}

/// log alpha_t(j) given precomputed log emissions.
inline Matrix forward_log_matrix(const HmmModel& model, const Matrix& log_b) {
  const std::size_t n = model.num_states();
  const std::size_t steps = log_b.rows();
  const Matrix la = detail::log_transitions(model);
  Matrix alpha(steps, n);
  for (std::size_t j = 0; j < n; ++j) alpha(0, j) = safe_log(model.initial[j]) + log_b(0, j);
  std::vector<double> terms(n);
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) terms[i] = alpha(t - 1, i) + la(i, j);
      alpha(t, j) = log_sum_exp(terms) + log_b(t, j);
    }
  }
  return alpha;
}

/// log P(O | model), summed over all state paths.
inline double forward_log(const HmmModel& model, const Matrix& obs) {
  const Matrix alpha = forward_log_matrix(model, emission_log_likelihoods(model, obs));
  return log_sum_exp(alpha.row(alpha.rows() - 1));
}

inline double forward_log(const HmmModel& model, const FeatureMatrix& obs) {
  return forward_log(model, obs.vectors);
}

inline Matrix backward_log_matrix(const HmmModel& model, const Matrix& log_b) {
  const std::size_t n = model.num_states();
  const std::size_t steps = log_b.rows();
  const Matrix la = detail::log_transitions(model);
  Matrix beta(steps, n, 0.0);
  std::vector<double> terms(n);
  for (std::size_t t = steps - 1; t-- > 0;) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) terms[j] = la(i, j) + log_b(t + 1, j) + beta(t + 1, j);
      beta(t, i) = log_sum_exp(terms);
    }
  }
  return beta;
}

/// T x N matrix of log beta_t(i), with beta_T(i) = 0.
inline Matrix backward_log(const HmmModel& model, const Matrix& obs) {
  return backward_log_matrix(model, emission_log_likelihoods(model, obs));
}

struct ViterbiResult {
  std::vector<std::size_t> path;
  double log_prob = kNegInf;
};

/// Most likely state path; equal scores resolve to the lower state index.
inline ViterbiResult viterbi(const HmmModel& model, const Matrix& obs) {
  const Matrix log_b = emission_log_likelihoods(model, obs);
  const Matrix la = detail::log_transitions(model);
  const std::size_t n = model.num_states();
  const std::size_t steps = obs.rows();
  Matrix delta_score(steps, n);
  std::vector<std::size_t> back(steps * n, 0);
  for (std::size_t j = 0; j < n; ++j)
    delta_score(0, j) = safe_log(model.initial[j]) + log_b(0, j);
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double s = delta_score(t - 1, i) + la(i, j);
        if (s > best) {
          best = s;
          arg = i;
        }
      }
      delta_score(t, j) = best + log_b(t, j);
      back[t * n + j] = arg;
    }
  }
  ViterbiResult res;
  res.path.resize(steps);
  std::size_t last = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (delta_score(steps - 1, j) > delta_score(steps - 1, last)) last = j;
  res.log_prob = delta_score(steps - 1, last);
  res.path[steps - 1] = last;
  for (std::size_t t = steps - 1; t > 0; --t) res.path[t - 1] = back[t * n + res.path[t]];
  return res;
}

// ---------------------------------------------------------------------------
// Initialization

/// Absolute lower bound on any variance floor, for dimensions that are
/// constant over the whole training set.
inline constexpr double kMinVariance = 1e-6;

/// ratio * global per-dimension variance of all frames in `data`.
inline std::vector<double> variance_floor(std::span<const Matrix> data, double ratio) {
  if (data.empty()) fail(ErrorCode::NoData, "no training sequences");
  const std::size_t dim = data.front().cols();
  std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
  double count = 0.0;
  for (const Matrix& seq : data) {
    for (std::size_t t = 0; t < seq.rows(); ++t) {
      for (std::size_t d = 0; d < dim; ++d) {
        sum[d] += seq(t, d);
        sq[d] += seq(t, d) * seq(t, d);
      }
    }
    count += static_cast<double>(seq.rows());
  }
  std::vector<double> floor(dim, kMinVariance);
  if (count == 0.0) return floor;
  for (std::size_t d = 0; d < dim; ++d) {
    const double mean = sum[d] / count;
    const double var = std::max(sq[d] / count - mean * mean, 0.0);
    floor[d] = std::max(ratio * var, kMinVariance);
  }
  return floor;
}

namespace detail {

/// Seeded k-means in variance-normalized space; empty clusters keep their
/// previous centroid. Returns the cluster index of every point.
inline std::vector<std::size_t> kmeans(const std::vector<std::span<const double>>& points,
                                       std::size_t k, std::span<const double> scale, Rng& rng,
                                       Matrix& centroids) {
  const std::size_t count = points.size();
  const std::size_t dim = scale.size();
  k = std::min(k, count);
  // Distinct initial centroids by partial Fisher-Yates.
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + rng.index(count - i)]);
  centroids = Matrix(k, dim);
  for (std::size_t c = 0; c < k; ++c)
    std::copy(points[order[c]].begin(), points[order[c]].end(), centroids.row(c).begin());

  std::vector<std::size_t> assign(count, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = iter == 0;
    for (std::size_t p = 0; p < count; ++p) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        double dist = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
          const double diff = points[p][d] - centroids(c, d);
          dist += diff * diff / scale[d];
        }
        if (dist < best) {
          best = dist;
          arg = c;
        }
      }
      if (assign[p] != arg) changed = true;
      assign[p] = arg;
    }
    if (!changed) break;
    Matrix sums(k, dim);
    std::vector<double> counts(k, 0.0);
    for (std::size_t p = 0; p < count; ++p) {
      counts[assign[p]] += 1.0;
      for (std::size_t d = 0; d < dim; ++d) sums(assign[p], d) += points[p][d];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] > 0.0)
        for (std::size_t d = 0; d < dim; ++d) centroids(c, d) = sums(c, d) / counts[c];
  }
  return assign;
}

}  // namespace detail

/// Flat-start model: each sequence is cut into num_states equal contiguous
/// segments, state j's mixture is fit by seeded k-means on the pooled j-th
/// segments, and transitions start uniform over the allowed arcs.
inline HmmModel init_model(std::size_t num_states, std::size_t num_mixtures, Topology topology,
                           std::span<const Matrix> data, std::uint64_t seed,
                           double variance_floor_ratio = 1e-3) {
  if (num_states < 1 || num_mixtures < 1)
    fail(ErrorCode::InvalidConfig, "num_states and num_mixtures must be >= 1");
  if (data.empty()) fail(ErrorCode::NoData, "no training sequences");
  const std::size_t dim = data.front().cols();
  for (const Matrix& seq : data) {
    if (seq.cols() != dim) fail(ErrorCode::DimensionMismatch, "training sequences differ in dimension");
    if (topology == Topology::LeftToRight && seq.rows() < num_states)
      fail(ErrorCode::InsufficientData, "sequence of " + std::to_string(seq.rows()) +
                                            " frames is shorter than " +
                                            std::to_string(num_states) + " states");
  }
  const auto floor = variance_floor(data, variance_floor_ratio);
  std::vector<double> scale(floor.begin(), floor.end());
  for (double& s : scale) s = s / variance_floor_ratio;  // global variance

  HmmModel model;
  model.feature_dim = dim;
  model.topology = topology;
  model.initial.assign(num_states, 0.0);
  model.transitions = Matrix(num_states, num_states);
  if (topology == Topology::LeftToRight) {
    model.initial[0] = 1.0;
    for (std::size_t i = 0; i < num_states; ++i) {
      if (i + 1 < num_states) {
        model.transitions(i, i) = 0.5;
        model.transitions(i, i + 1) = 0.5;
      } else {
        model.transitions(i, i) = 1.0;
      }
    }
  } else {
    const double u = 1.0 / static_cast<double>(num_states);
    std::fill(model.initial.begin(), model.initial.end(), u);
    for (double& a : model.transitions.data()) a = u;
  }

  Rng rng(seed);
  for (std::size_t j = 0; j < num_states; ++j) {
    std::vector<std::span<const double>> points;
    for (const Matrix& seq : data) {
      const std::size_t frames = seq.rows();
      const std::size_t begin = j * frames / num_states;
      const std::size_t end = (j + 1) * frames / num_states;
      for (std::size_t t = begin; t < end; ++t) points.push_back(seq.row(t));
    }
    if (points.empty())
      fail(ErrorCode::InsufficientData, "state " + std::to_string(j) + " receives no frames");

    Matrix centroids;
    const auto assign = detail::kmeans(points, num_mixtures, scale, rng, centroids);

    Gmm g;
    g.weights.assign(num_mixtures, 0.0);
    g.means = Matrix(num_mixtures, dim);
    g.variances = Matrix(num_mixtures, dim);
    // Pooled statistics back up clusters that ended up empty.
    std::vector<double> pooled_mean(dim, 0.0), pooled_var(dim, 0.0);
    for (const auto& p : points)
      for (std::size_t d = 0; d < dim; ++d) pooled_mean[d] += p[d];
    for (double& v : pooled_mean) v /= static_cast<double>(points.size());
    for (const auto& p : points)
      for (std::size_t d = 0; d < dim; ++d) pooled_var[d] += (p[d] - pooled_mean[d]) * (p[d] - pooled_mean[d]);
    for (double& v : pooled_var) v /= static_cast<double>(points.size());

    std::vector<double> counts(num_mixtures, 0.0);
    for (std::size_t p = 0; p < points.size(); ++p) {
      counts[assign[p]] += 1.0;
      for (std::size_t d = 0; d < dim; ++d) g.means(assign[p], d) += points[p][d];
    }
    for (std::size_t m = 0; m < num_mixtures; ++m) {
      if (counts[m] == 0.0) {
        for (std::size_t d = 0; d < dim; ++d) {
          g.means(m, d) = m < centroids.rows() ? centroids(m, d) : pooled_mean[d];
          g.variances(m, d) = std::max(pooled_var[d], floor[d]);
        }
        continue;
      }
      for (std::size_t d = 0; d < dim; ++d) g.means(m, d) /= counts[m];
    }
    for (std::size_t p = 0; p < points.size(); ++p) {
      const std::size_t m = assign[p];
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = points[p][d] - g.means(m, d);
        g.variances(m, d) += diff * diff;
      }
    }
    double total = 0.0;
    for (std::size_t m = 0; m < num_mixtures; ++m) {
      if (counts[m] > 0.0)
        for (std::size_t d = 0; d < dim; ++d)
          g.variances(m, d) = std::max(g.variances(m, d) / counts[m], floor[d]);
      // An empty cluster keeps a small weight so training can revive it.
      g.weights[m] = counts[m] > 0.0 ? counts[m] : 1e-3;
      total += g.weights[m];
    }
    for (double& w : g.weights) w /= total;
    model.emissions.push_back(std::move(g));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Baum-Welch

struct TrainReport {
  std::size_t iterations = 0;                   // re-estimation steps applied
  std::vector<double> log_likelihood_history;   // total log P(O|model) before each step
  bool converged = false;
  std::size_t starved_state_events = 0;         // states left unchanged for lack of data
};

struct TrainOptions {
  std::size_t max_iter = 40;
  double rel_tol = 1e-4;
  double variance_floor_ratio = 1e-3;
  /// Called after every re-estimation step with the step number (1-based).
  std::function<void(std::size_t, const HmmModel&)> on_iteration;
};

struct TrainResult {
  HmmModel model;
  TrainReport report;
};

namespace detail {

inline constexpr double kMinOccupancy = 1e-6;

struct Accumulators {
  std::vector<double> initial;           // N
  Matrix trans;                          // N x N
  std::vector<double> state_occ;         // N
  std::vector<std::vector<double>> occ;  // N x M
  std::vector<Matrix> mean_acc;          // N of M x D
  std::vector<Matrix> sq_acc;            // N of M x D
  double log_likelihood = 0.0;

  Accumulators(std::size_t n, std::size_t m, std::size_t dim)
      : initial(n, 0.0), trans(n, n), state_occ(n, 0.0), occ(n, std::vector<double>(m, 0.0)),
        mean_acc(n, Matrix(m, dim)), sq_acc(n, Matrix(m, dim)) {}
};

inline void accumulate_sequence(const HmmModel& model, const Matrix& obs, Accumulators& acc) {
  const std::size_t n = model.num_states();
  const std::size_t steps = obs.rows();
  const std::size_t dim = model.feature_dim;
  const std::size_t mix = model.num_mixtures();

  std::vector<double> comp(steps * n * mix);
  Matrix log_b(steps, n);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      std::span<double> c(comp.data() + (t * n + j) * mix, mix);
      gmm_component_log_densities(model.emissions[j], obs.row(t), c);
      log_b(t, j) = log_sum_exp(c);
    }
  }
  const Matrix alpha = forward_log_matrix(model, log_b);
  const Matrix beta = backward_log_matrix(model, log_b);
  const double log_p = log_sum_exp(alpha.row(steps - 1));
  acc.log_likelihood += log_p;
  const Matrix la = log_transitions(model);

  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      const double gamma = std::exp(alpha(t, j) + beta(t, j) - log_p);
      if (t == 0) acc.initial[j] += gamma;
      acc.state_occ[j] += gamma;
      if (gamma == 0.0) continue;
      const auto o = obs.row(t);
      for (std::size_t m = 0; m < mix; ++m) {
        const double post = gamma * std::exp(comp[(t * n + j) * mix + m] - log_b(t, j));
        if (post == 0.0) continue;
        acc.occ[j][m] += post;
        auto mean_row = acc.mean_acc[j].row(m);
        auto sq_row = acc.sq_acc[j].row(m);
        for (std::size_t d = 0; d < dim; ++d) {
          mean_row[d] += post * o[d];
          sq_row[d] += post * o[d] * o[d];
        }
      }
    }
    if (t + 1 < steps) {
      for (std::size_t i = 0; i < n; ++i) {
        if (alpha(t, i) == kNegInf) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (la(i, j) == kNegInf) continue;
          acc.trans(i, j) +=
              std::exp(alpha(t, i) + la(i, j) + log_b(t + 1, j) + beta(t + 1, j) - log_p);
        }
      }
    }
  }
}

inline Accumulators expectation(const HmmModel& model, std::span<const Matrix> data) {
  Accumulators acc(model.num_states(), model.num_mixtures(), model.feature_dim);
  for (const Matrix& seq : data) accumulate_sequence(model, seq, acc);
  return acc;
}

inline HmmModel maximization(const HmmModel& model, const Accumulators& acc,
                             std::span<const double> floor, std::size_t& starved) {
  HmmModel next = model;
  const std::size_t n = model.num_states();
  const std::size_t dim = model.feature_dim;

  double pi_total = 0.0;
  for (double v : acc.initial) pi_total += v;
  if (pi_total > 0.0)
    for (std::size_t j = 0; j < n; ++j) next.initial[j] = acc.initial[j] / pi_total;

  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += acc.trans(i, j);
    if (row > 0.0)
      for (std::size_t j = 0; j < n; ++j) next.transitions(i, j) = acc.trans(i, j) / row;
  }

  for (std::size_t j = 0; j < n; ++j) {
    if (acc.state_occ[j] < kMinOccupancy) {
      ++starved;
      continue;
    }
    Gmm& g = next.emissions[j];
    double total = 0.0;
    for (double v : acc.occ[j]) total += v;
    for (std::size_t m = 0; m < g.num_mixtures(); ++m) {
      const double occ = acc.occ[j][m];
      g.weights[m] = occ / total;
      if (occ < kMinOccupancy) continue;  // keep mean and variance
      for (std::size_t d = 0; d < dim; ++d) {
        const double mean = acc.mean_acc[j](m, d) / occ;
        const double var = acc.sq_acc[j](m, d) / occ - mean * mean;
        g.means(m, d) = mean;
        g.variances(m, d) = std::max(var, floor[d]);
      }
    }
  }
  return next;
}

}  // namespace detail

/// Total log-likelihood of a sequence set.
inline double total_log_likelihood(const HmmModel& model, std::span<const Matrix> data) {
  double total = 0.0;
  for (const Matrix& seq : data) total += forward_log(model, seq);
  return total;
}

/// EM re-estimation of pi, A, mixture weights, means and diagonal variances.
/// Stops when the relative improvement of the total log-likelihood drops
/// below rel_tol, or after max_iter steps.
inline TrainResult baum_welch(const HmmModel& initial, std::span<const Matrix> data,
                              const TrainOptions& options = {}) {
  if (data.empty()) fail(ErrorCode::NoData, "no training sequences");
  if (options.max_iter < 1) fail(ErrorCode::InvalidConfig, "max_iter must be >= 1");
  for (const Matrix& seq : data) detail::check_observations(initial, seq);
  const auto floor = variance_floor(data, options.variance_floor_ratio);

  TrainResult result{initial, {}};
  TrainReport& report = result.report;
  for (std::size_t step = 0;; ++step) {
    const detail::Accumulators acc = detail::expectation(result.model, data);
    report.log_likelihood_history.push_back(acc.log_likelihood);
    const auto& hist = report.log_likelihood_history;
    if (hist.size() >= 2) {
      const double prev = hist[hist.size() - 2];
      const double rel = (hist.back() - prev) / std::abs(prev);
      if (rel < options.rel_tol) {
        report.converged = true;
        break;
      }
    }
    if (step == options.max_iter) break;
    result.model = detail::maximization(result.model, acc, floor, report.starved_state_events);
    report.iterations = step + 1;
    if (options.on_iteration) options.on_iteration(report.iterations, result.model);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Text model files

namespace detail {

inline void append_reals(std::string& out, std::span<const double> values) {
  char buf[40];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    if (i) out += ' ';
    out += buf;
  }
  out += '\n';
}

}  // namespace detail

/// "hmm v1 states=N mixtures=M dim=D topology=<tag>", then pi, the N rows of
/// A, and per state a weight line, M mean lines and M variance lines.
inline std::string format_model(const HmmModel& model) {
  std::string out = "hmm v1 states=" + std::to_string(model.num_states()) +
                    " mixtures=" + std::to_string(model.num_mixtures()) +
                    " dim=" + std::to_string(model.feature_dim) +
                    " topology=" + to_string(model.topology) + "\n";
  detail::append_reals(out, model.initial);
  for (std::size_t i = 0; i < model.num_states(); ++i) detail::append_reals(out, model.transitions.row(i));
  for (const Gmm& g : model.emissions) {
    detail::append_reals(out, g.weights);
    for (std::size_t m = 0; m < g.num_mixtures(); ++m) detail::append_reals(out, g.means.row(m));
    for (std::size_t m = 0; m < g.num_mixtures(); ++m) detail::append_reals(out, g.variances.row(m));
  }
  return out;
}

inline HmmModel parse_model(const std::string& text, const std::string& source = "model") {
  std::istringstream in(text);
  const auto bad = [&](const std::string& why) {
    fail(ErrorCode::IntegrityError, source + ": " + why);
  };
  std::string header;
  if (!std::getline(in, header)) bad("empty model file");
  std::size_t n = 0, m = 0, dim = 0;
  char topo[32] = {0};
  if (std::sscanf(header.c_str(), "hmm v1 states=%zu mixtures=%zu dim=%zu topology=%31s", &n, &m,
                  &dim, topo) != 4)
    bad("unrecognized header '" + header + "'");
  if (n == 0 || m == 0 || dim == 0) bad("zero-sized model");

  std::size_t line_no = 1;
  const auto read_line = [&](std::span<double> dst) {
    std::string line;
    ++line_no;
    if (!std::getline(in, line)) bad("truncated at line " + std::to_string(line_no));
    std::istringstream ls(line);
    for (double& v : dst)
      if (!(ls >> v)) bad("line " + std::to_string(line_no) + " has too few values");
    std::string extra;
    if (ls >> extra) bad("line " + std::to_string(line_no) + " has too many values");
  };

  HmmModel model;
  try {
    model.topology = parse_topology(topo);
  } catch (const Error&) {
    bad(std::string("unknown topology '") + topo + "'");
  }
  model.feature_dim = dim;
  model.initial.resize(n);
  read_line(model.initial);
  model.transitions = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) read_line(model.transitions.row(i));
  for (std::size_t j = 0; j < n; ++j) {
    Gmm g;
    g.weights.resize(m);
    g.means = Matrix(m, dim);
    g.variances = Matrix(m, dim);
    read_line(g.weights);
    for (std::size_t k = 0; k < m; ++k) read_line(g.means.row(k));
    for (std::size_t k = 0; k < m; ++k) read_line(g.variances.row(k));
    model.emissions.push_back(std::move(g));
  }
  std::string rest;
  while (std::getline(in, rest))
    if (rest.find_first_not_of(" \t\r") != std::string::npos) bad("trailing data after last state");
  try {
    validate_model(model);
  } catch (const Error& e) {
    bad(e.what());
  }
  return model;
}

}  // namespace emorec
