// Copyright 2026 The Cyres Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cyres/attention.hpp"

#include <algorithm>
#include <cmath>

#include "cyres/error.hpp"

namespace cyres {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string VisualStateSpace::name(Index s) const {
  if (is_aoi(s)) return "aoi" + std::to_string(s + 1);
  if (s == uninformative()) return "ua";
  if (s == distraction()) return "da";
  throw ValidationError("visual state " + std::to_string(s) + " out of range");
}

void validate_generator(const MatrixXd& generator, const std::string& field) {
  if (generator.rows() != generator.cols() || generator.rows() == 0) {
    fail_field(field, "generator must be a non-empty square matrix");
  }
  if (!generator.allFinite()) fail_field(field, "rates must be finite");
  for (Index i = 0; i < generator.rows(); ++i) {
    double scale = 0.0;
    for (Index j = 0; j < generator.cols(); ++j) {
      if (i == j) continue;
      if (generator(i, j) < 0.0) {
        fail_field(field + "[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                   "off-diagonal rate is negative");
      }
      scale += generator(i, j);
    }
    if (std::abs(generator.row(i).sum()) > 1e-9 * std::max(1.0, scale)) {
      fail_field(field + "[" + std::to_string(i) + "]", "row does not sum to zero");
    }
  }
}

Index GazeModel::aid_index(const std::string& aid) const {
  const auto it = std::find(aids.begin(), aids.end(), aid);
  if (it == aids.end()) throw ValidationError("unknown aid \"" + aid + "\"");
  return static_cast<Index>(it - aids.begin());
}

void GazeModel::validate() const {
  if (space.aoi_count < 1) throw ValidationError("I: must be positive");
  if (aids.empty() || aids.size() != generators.size()) {
    throw ValidationError("generators: need one generator per aid and at least one aid");
  }
  const Index n = space.size();
  std::vector<bool> entered(static_cast<std::size_t>(n), false);
  for (std::size_t a = 0; a < aids.size(); ++a) {
    const std::string field = "generators." + aids[a];
    validate_generator(generators[a], field);
    if (generators[a].rows() != n) {
      fail_field(field, "expected " + std::to_string(n) + " visual states");
    }
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (i != j && generators[a](i, j) > 0.0) entered[static_cast<std::size_t>(j)] = true;
      }
    }
  }
  for (Index s = 0; s < n; ++s) {
    if (!entered[static_cast<std::size_t>(s)]) {
      throw ValidationError("generators: state " + space.name(s) + " is never entered");
    }
  }
}

GazeTrace simulate_gaze(const MatrixXd& generator, Index start_state, double duration, Rng& rng,
                        double t_start) {
  validate_generator(generator, "generator");
  if (!(duration > 0.0)) throw ValidationError("duration: must be positive");
  if (start_state < 0 || start_state >= generator.rows()) {
    throw ValidationError("start_state: out of range");
  }
  const double end = t_start + duration;
  GazeTrace trace;
  Index s = start_state;
  double t = t_start;
  VectorXd jump(generator.cols());
  while (true) {
    const double exit_rate = -generator(s, s);
    const double hold = exit_rate > 0.0 ? rng.exponential(exit_rate) : INFINITY;
    if (t + hold >= end) {
      trace.segments.push_back({s, t, end});
      return trace;
    }
    trace.segments.push_back({s, t, t + hold});
    t += hold;
    jump = generator.row(s).transpose();
    jump[s] = 0.0;
    s = rng.categorical(jump);
  }
}

GazeTrace simulate_gaze_stage(const GazeModel& model, Index aid, Index start_state, double duration,
                              Rng& rng, double t_start) {
  if (aid < 0 || aid >= model.num_aids()) throw ValidationError("aid: out of range");
  return simulate_gaze(model.generator(aid), start_state, duration, rng, t_start);
}

void AttentionRewardSpec::validate(const VisualStateSpace& space) const {
  if (transient.size() != space.aoi_count) fail_field("r_tr", "expected one entry per AoI");
  if (concentration.size() != space.aoi_count) fail_field("r_co", "expected one entry per AoI");
  if (!(transient.array() >= 0.0).all() || !transient.allFinite()) {
    fail_field("r_tr", "rewards must be finite and non-negative");
  }
  if (!(concentration.array() >= 0.0).all() || !concentration.allFinite()) {
    fail_field("r_co", "rewards must be finite and non-negative");
  }
  if (!(decay >= 0.0) || !std::isfinite(decay)) fail_field("alpha", "must be finite and non-negative");
}

double AttentionRewardSpec::transient_at(Index s) const {
  return s >= 0 && s < transient.size() ? transient[s] : 0.0;
}

double AttentionRewardSpec::concentration_at(Index s) const {
  return s >= 0 && s < concentration.size() ? concentration[s] : 0.0;
}

double concentration_integral(double rate, double decay, double u1, double u2) {
  if (decay == 0.0) return rate * (u2 - u1);
  return rate * std::exp(-decay * u1) * -std::expm1(-decay * (u2 - u1)) / decay;
}

double cumulative_reward(const GazeTrace& trace, const AttentionRewardSpec& spec, double stage_start,
                         double t, Index s) {
  if (trace.segments.empty() || trace.t_begin() > stage_start + 1e-9 || trace.t_end() < t - 1e-9 ||
      t < stage_start) {
    throw ValidationError("trace does not cover the stage window");
  }
  bool visited = false;
  double g = 0.0;
  for (const GazeSegment& seg : trace.segments) {
    if (seg.state != s) continue;
    const double lo = std::max(seg.t_start, stage_start);
    const double hi = std::min(seg.t_end, t);
    if (hi > lo) {
      visited = true;
      g += concentration_integral(spec.concentration_at(s), spec.decay, lo - stage_start, hi - stage_start);
    } else if (seg.t_start <= t && t < seg.t_end && lo <= t) {
      visited = true;
    }
  }
  return (visited ? spec.transient_at(s) : 0.0) + g;
}

double average_attention(const GazeTrace& trace, const AttentionRewardSpec& spec,
                         const VisualStateSpace& space, double stage_start, double t) {
  double v = 0.0;
  for (Index s = 0; s < space.size(); ++s) v += cumulative_reward(trace, spec, stage_start, t, s);
  return v;
}

Index quantize_index(double v, const VectorXd& bins) {
  if (bins.size() == 0) throw ValidationError("X: must be non-empty");
  const double* begin = bins.data();
  const double* end = begin + bins.size();
  const double* hi = std::lower_bound(begin, end, v);
  if (hi == begin) return 0;
  if (hi == end) return bins.size() - 1;
  const double* lo = hi - 1;
  return (v - *lo <= *hi - v) ? lo - begin : hi - begin;
}

double quantize(double v, const VectorXd& bins) { return bins[quantize_index(v, bins)]; }

Index AttentionConfig::stages() const {
  auto k = static_cast<Index>(std::floor(horizon / period));
  // Round-off in T / T^pl must not lose a whole stage.
  if (static_cast<double>(k + 1) * period <= horizon * (1.0 + 1e-12)) ++k;
  return k;
}

double AttentionConfig::rate_at(std::int64_t visit) const {
  if (const auto* c = std::get_if<ConstantRate>(&rate)) return c->alpha;
  const double k_c = std::get<HarmonicVisitRate>(rate).k_c;
  return k_c / (static_cast<double>(visit) - 1.0 + k_c);
}

void AttentionConfig::validate(const VisualStateSpace& space) const {
  if (!(period > 0.0) || !std::isfinite(period)) fail_field("T_pl", "must be positive");
  if (!(horizon >= period) || !std::isfinite(horizon)) fail_field("T", "must be at least T_pl");
  if (bins.size() == 0) fail_field("X", "must be non-empty");
  for (Index i = 1; i < bins.size(); ++i) {
    if (!(bins[i] > bins[i - 1])) fail_field("X", "must be strictly increasing");
  }
  if (!(discount > 0.0 && discount < 1.0)) fail_field("beta", "must lie in (0, 1)");
  if (const auto* c = std::get_if<ConstantRate>(&rate)) {
    if (!(c->alpha >= 0.0 && c->alpha <= 1.0)) fail_field("gamma_schedule", "must lie in [0, 1]");
  } else if (!(std::get<HarmonicVisitRate>(rate).k_c > 0.0)) {
    fail_field("gamma_schedule.k_c", "must be positive");
  }
  if (!(exploration >= 0.0 && exploration <= 1.0)) fail_field("epsilon", "must lie in [0, 1]");
  if (episodes < 1) fail_field("episodes", "must be at least 1");
  if (start_state >= space.size()) fail_field("start_state", "out of range");
}

AidQTable::AidQTable(VectorXd bins_in, Index num_aids)
    : bins(std::move(bins_in)), values(MatrixXd::Zero(bins.size(), num_aids)) {}

Index AidQTable::row(double v) const {
  for (Index i = 0; i < bins.size(); ++i) {
    if (bins[i] == v) return i;
  }
  throw ValidationError("attention state " + std::to_string(v) + " is not a bin");
}

Index AidQTable::greedy_aid(double v) const {
  Index best = 0;
  values.row(row(v)).maxCoeff(&best);
  return best;
}

void attention_q_update(AidQTable& q, double v, Index aid, double v_next, double rate, double beta) {
  const Index r = q.row(v);
  const double target = v + beta * q.values.row(q.row(v_next)).maxCoeff();
  q.values(r, aid) = (1.0 - rate) * q.values(r, aid) + rate * target;
}

Index select_aid(const AidQTable& q, double v, double epsilon, Rng& rng) {
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    return static_cast<Index>(rng.below(static_cast<std::uint64_t>(q.values.cols())));
  }
  return q.greedy_aid(v);
}

AttentionReport run_attention_experiment(const GazeModel& model, const AttentionRewardSpec& spec,
                                         const AttentionConfig& config, std::uint64_t seed) {
  model.validate();
  spec.validate(model.space);
  config.validate(model.space);
  Rng rng(seed);
  const Index stages = config.stages();
  AttentionReport report{AidQTable(config.bins, model.num_aids()),
                         Eigen::MatrixXi::Zero(config.bins.size(), model.num_aids()),
                         {},
                         {}};
  report.stages.reserve(static_cast<std::size_t>(config.episodes * stages));
  const double initial = quantize(0.0, config.bins);
  for (std::int64_t episode = 0; episode < config.episodes; ++episode) {
    Index gaze = config.gaze_start(model.space);
    double state = initial;
    for (Index k = 1; k <= stages; ++k) {
      const double t0 = static_cast<double>(k - 1) * config.period;
      const Index aid = select_aid(report.q, state, config.exploration, rng);
      const GazeTrace trace = simulate_gaze_stage(model, aid, gaze, config.period, rng, t0);
      const double v = average_attention(trace, spec, model.space, t0, trace.t_end());
      const double next = quantize(v, config.bins);
      const int n = ++report.visits(report.q.row(state), aid);
      attention_q_update(report.q, state, aid, next, config.rate_at(n), config.discount);
      report.stages.push_back({episode, k, aid, state, v, next});
      state = next;
      gaze = trace.final_state();
    }
  }
  for (Index i = 0; i < config.bins.size(); ++i) report.greedy_aid.push_back(report.q.greedy_aid(config.bins[i]));
  return report;
}

StageEstimate estimate_stage_attention(const GazeModel& model, const AttentionRewardSpec& spec,
                                       const AttentionConfig& config, Index aid, std::int64_t rollouts,
                                       std::uint64_t seed) {
  if (rollouts < 2) throw ValidationError("rollouts: need at least 2");
  Rng rng(seed);
  double sum = 0.0, sum_q = 0.0, sq_q = 0.0;
  const Index start = config.gaze_start(model.space);
  for (std::int64_t i = 0; i < rollouts; ++i) {
    const GazeTrace trace = simulate_gaze_stage(model, aid, start, config.period, rng);
    const double v = average_attention(trace, spec, model.space, 0.0, trace.t_end());
    const double x = quantize(v, config.bins);
    sum += v;
    sum_q += x;
    sq_q += x * x;
  }
  const auto n = static_cast<double>(rollouts);
  StageEstimate out;
  out.mean_attention = sum / n;
  out.mean_quantized = sum_q / n;
  out.stderr_quantized = std::sqrt(std::max(0.0, sq_q / n - out.mean_quantized * out.mean_quantized) / (n - 1.0));
  return out;
}

Index oracle_best_aid(const GazeModel& model, const AttentionRewardSpec& spec,
                      const AttentionConfig& config, std::int64_t rollouts, std::uint64_t seed) {
  model.validate();
  Index best = 0;
  StageEstimate best_est;
  for (Index a = 0; a < model.num_aids(); ++a) {
    const StageEstimate e =
        estimate_stage_attention(model, spec, config, a, rollouts, derive_seed(seed, static_cast<std::uint64_t>(a)));
    if (a == 0 || e.mean_quantized > best_est.mean_quantized ||
        (e.mean_quantized == best_est.mean_quantized && e.mean_attention > best_est.mean_attention)) {
      best = a;
      best_est = e;
    }
  }
  return best;
}

AttentionScenario attention_scenario_from_json(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  AttentionScenario out;
  const std::int64_t aois = in.integer("I");
  if (aois < 1) fail_field(in.field("I"), "must be positive");
  out.model.space.aoi_count = aois;
  const Json& gens = in.at("generators");
  if (!gens.is_object() || gens.empty()) fail_field(in.field("generators"), "expected an object aid -> matrix");
  for (auto it = gens.begin(); it != gens.end(); ++it) {
    const std::string f = in.field("generators") + "." + it.key();
    out.model.aids.push_back(it.key());
    MatrixXd g = as_matrix(it.value(), f);
    validate_generator(g, f);
    if (g.rows() != aois + 2) fail_field(f, "expected I + 2 = " + std::to_string(aois + 2) + " rows");
    out.model.generators.push_back(std::move(g));
  }
  out.rewards.transient = as_vector(in.at("r_tr"), in.field("r_tr"));
  out.rewards.concentration = as_vector(in.at("r_co"), in.field("r_co"));
  out.rewards.decay = in.number("alpha");
  AttentionConfig& c = out.config;
  c.horizon = in.number("T");
  c.period = in.number("T_pl");
  if (const Json* x = in.find("X")) c.bins = as_vector(*x, in.field("X"));
  c.discount = in.number_or("beta", c.discount);
  if (const Json* g = in.find("gamma_schedule")) {
    const std::string f = in.field("gamma_schedule");
    if (g->is_number()) {
      c.rate = ConstantRate{as_number(*g, f)};
    } else {
      ObjectReader gr(*g, f);
      c.rate = HarmonicVisitRate{gr.number("k_c")};
      gr.finish();
    }
  }
  c.exploration = in.number_or("epsilon", c.exploration);
  c.episodes = in.integer_or("episodes", c.episodes);
  c.start_state = in.integer_or("start_state", c.start_state);
  in.finish();
  try {
    out.model.validate();
    out.rewards.validate(out.model.space);
    out.config.validate(out.model.space);
  } catch (const ValidationError& e) {
    throw ValidationError(path + "." + e.what());
  }
  return out;
}

Json to_json(const AttentionScenario& s) {
  Json out;
  out["I"] = s.model.space.aoi_count;
  Json gens = Json::object();
  for (std::size_t a = 0; a < s.model.aids.size(); ++a) gens[s.model.aids[a]] = matrix_json(s.model.generators[a]);
  out["generators"] = std::move(gens);
  out["r_tr"] = vector_json(s.rewards.transient);
  out["r_co"] = vector_json(s.rewards.concentration);
  out["alpha"] = s.rewards.decay;
  out["T"] = s.config.horizon;
  out["T_pl"] = s.config.period;
  out["X"] = vector_json(s.config.bins);
  out["beta"] = s.config.discount;
  if (const auto* c = std::get_if<ConstantRate>(&s.config.rate)) {
    out["gamma_schedule"] = c->alpha;
  } else {
    out["gamma_schedule"] = Json{{"k_c", std::get<HarmonicVisitRate>(s.config.rate).k_c}};
  }
  out["epsilon"] = s.config.exploration;
  out["episodes"] = s.config.episodes;
  out["start_state"] = s.config.start_state;
  return out;
}

}  // namespace cyres
