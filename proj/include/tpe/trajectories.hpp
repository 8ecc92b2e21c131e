#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "tpe/model.hpp"
#include "tpe/parallel.hpp"
#include "tpe/rng.hpp"

namespace tpe {

enum class Propagation { block, full };

struct TrajectoryConfig {
  TwoLevelParams params;
  SpaceSpec spec{2, 3, 6};
  double t_max = 3000.0;
  double dt = 0.0015;
  std::uint64_t seed = 1;
  std::uint64_t trajectory_index = 0;
  int sample_stride = 1000;
  Propagation propagation = Propagation::block;
};

struct JumpEvent {
  double time = 0.0;
  Channel channel = Channel::pump;
  double n_before = 0.0;  // <N> just before and after the jump
  double n_after = 0.0;
  bool operator==(const JumpEvent&) const = default;
};

struct PopulationSample {
  double time = 0.0;
  double pop_e = 0.0;
  double n_a = 0.0;
  double n_b = 0.0;
  double n_exc = 0.0;
  double n_exc_variance = 0.0;
};

struct TrajectoryRecord {
  std::uint64_t trajectory_index = 0;
  double t_max = 0.0;
  std::vector<JumpEvent> events;
  std::vector<PopulationSample> samples;
  double max_jump_probability = 0.0;  // largest per-step delta p encountered
};

// Precomputed per-configuration data: channel weights, jump maps and the
// no-jump propagators of each excitation-number block.
class TrajectoryModel {
 public:
  static constexpr int channels = 4;

  TrajectoryModel(const TwoLevelParams& p, const SpaceSpec& spec, double dt) : spec_(spec), dt_(dt) {
    p.validate();
    if (spec.atom_levels() != 2) fail(ErrorClass::unsupported, "trajectories need a two-level space");
    const Index d = spec.dim();
    twice_n_.resize(d);
    for (Index i = 0; i < d; ++i) {
      const BasisLabel l = spec.label(i);
      twice_n_[i] = 2 * (l.atom == excited ? 1 : 0) + 2 * l.a + l.b;
    }
    std::map<int, int> block_of_n;
    for (Index i = 0; i < d; ++i) block_of_n.emplace(twice_n_[i], 0);
    int b = 0;
    for (auto& [n, id] : block_of_n) id = b++;
    members_.assign(block_of_n.size(), {});
    block_.resize(d);
    pos_.resize(d);
    for (Index i = 0; i < d; ++i) {
      const int id = block_of_n[twice_n_[i]];
      block_[i] = id;
      pos_[i] = static_cast<Index>(members_[id].size());
      members_[id].push_back(i);
    }

    for (auto& w : weight_) w.assign(d, 0.0);
    for (auto& t : target_) t.assign(d, -1);
    for (auto& c : coeff_) c.assign(d, 0.0);
    for (const auto& ch : build_collapse_ops(p, spec)) {
      const int j = static_cast<int>(ch.channel);
      const Operator cdc(SparseMatrix(ch.op.matrix().adjoint() * ch.op.matrix()));
      if (!cdc.is_diagonal()) fail(ErrorClass::unsupported, "jump weights must be diagonal");
      for (Index i = 0; i < d; ++i) weight_[j][i] = cdc.element(i, i).real();
      const SparseMatrix& m = ch.op.matrix();
      for (Index k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
          if (target_[j][it.col()] >= 0) fail(ErrorClass::unsupported, "jump operators must map basis states to basis states");
          target_[j][it.col()] = it.row();
          coeff_[j][it.col()] = it.value();
        }
    }
    max_rate_ = 0.0;
    for (Index i = 0; i < d; ++i) {
      double s = 0.0;
      for (int j = 0; j < channels; ++j) s += weight_[j][i];
      max_rate_ = std::max(max_rate_, s);
    }

    // 4th-order Taylor step of exp(-i H_e dt), i.e. one classical RK4 step.
    const Operator he = build_h_effective(p, spec);
    a_full_ = cplx(0.0, -dt) * he.matrix();
    const DenseMatrix hd = he.dense();
    props_.resize(members_.size());
    for (std::size_t id = 0; id < members_.size(); ++id) {
      const auto& mem = members_[id];
      const Index n = static_cast<Index>(mem.size());
      DenseMatrix a(n, n);
      for (Index r = 0; r < n; ++r)
        for (Index c = 0; c < n; ++c) a(r, c) = cplx(0.0, -dt) * hd(mem[r], mem[c]);
      DenseMatrix u = DenseMatrix::Identity(n, n);
      DenseMatrix term = DenseMatrix::Identity(n, n);
      for (int k = 1; k <= 4; ++k) {
        term = (term * a / static_cast<double>(k)).eval();
        u += term;
      }
      props_[id] = std::move(u);
    }
  }

  const SpaceSpec& spec() const noexcept { return spec_; }
  double dt() const noexcept { return dt_; }
  double max_total_rate() const noexcept { return max_rate_; }
  double excitation(Index i) const noexcept { return 0.5 * twice_n_[i]; }
  int block(Index i) const noexcept { return block_[i]; }
  Index position(Index i) const noexcept { return pos_[i]; }
  const std::vector<Index>& members(int id) const noexcept { return members_[id]; }
  const DenseMatrix& propagator(int id) const noexcept { return props_[id]; }
  const SparseMatrix& full_generator() const noexcept { return a_full_; }
  double weight(int channel, Index i) const noexcept { return weight_[channel][i]; }
  Index target(int channel, Index i) const noexcept { return target_[channel][i]; }
  cplx coefficient(int channel, Index i) const noexcept { return coeff_[channel][i]; }

 private:
  SpaceSpec spec_;
  double dt_;
  std::vector<int> twice_n_;
  std::vector<int> block_;
  std::vector<Index> pos_;
  std::vector<std::vector<Index>> members_;
  std::vector<DenseMatrix> props_;
  SparseMatrix a_full_;
  std::array<std::vector<double>, channels> weight_;
  std::array<std::vector<Index>, channels> target_;
  std::array<std::vector<cplx>, channels> coeff_;
  double max_rate_ = 0.0;
};

inline void validate(const TrajectoryConfig& c, const TrajectoryModel& m) {
  if (!(c.t_max > 0.0)) fail(ErrorClass::invalid_parameter, "t_max must be > 0");
  if (!(c.dt > 0.0)) fail(ErrorClass::invalid_parameter, "dt must be > 0");
  if (c.sample_stride < 1) fail(ErrorClass::invalid_parameter, "sample_stride must be >= 1");
  if (!(c.dt * m.max_total_rate() < 0.01))
    fail(ErrorClass::invalid_parameter, "dt * max total jump rate must be < 0.01 (dt = " + std::to_string(c.dt) +
                                            ", max rate = " + std::to_string(m.max_total_rate()) + ")");
}

// Largest dt satisfying the step invariant, rounded down to two significant digits.
inline double suggested_dt(const TwoLevelParams& p, const SpaceSpec& spec) {
  const TrajectoryModel m(p, spec, 1.0);
  if (m.max_total_rate() <= 0.0) return 0.01;
  const double x = 0.0099 / m.max_total_rate();
  const double e = std::pow(10.0, std::floor(std::log10(x)) - 1.0);
  return std::floor(x / e) * e;
}

namespace detail {

class WaveState {
 public:
  WaveState(const TrajectoryModel& m, Propagation mode) : m_(m), mode_(mode), full_(ComplexVector::Zero(m.spec().dim())) {}

  void set_basis(Index i) {
    full_.setZero();
    full_(i) = 1.0;
    block_ = m_.block(i);
    if (mode_ == Propagation::block) {
      amp_ = ComplexVector::Zero(static_cast<Index>(m_.members(block_).size()));
      amp_(m_.position(i)) = 1.0;
    }
  }

  // Per-channel jump probabilities for one step.
  std::array<double, TrajectoryModel::channels> jump_probabilities() const {
    std::array<double, TrajectoryModel::channels> dp{};
    for_each([&](Index i, const cplx& c) {
      const double w = std::norm(c);
      for (int j = 0; j < TrajectoryModel::channels; ++j) dp[j] += m_.weight(j, i) * w;
    });
    for (auto& x : dp) x *= m_.dt();
    return dp;
  }

  void propagate() {
    if (mode_ == Propagation::block) {
      if (amp_.size() == 1) return;  // a lone state only changes norm and phase
      amp_ = (m_.propagator(block_) * amp_).eval();
      amp_ /= amp_.norm();
    } else {
      // Horner form of I + A + A^2/2 + A^3/6 + A^4/24.
      const SparseMatrix& a = m_.full_generator();
      ComplexVector y = full_;
      for (int k = 4; k >= 1; --k) y = full_ + (a * y) / static_cast<double>(k);
      full_ = y / y.norm();
    }
  }

  void jump(int channel) {
    ComplexVector out = ComplexVector::Zero(full_.size());
    for_each([&](Index i, const cplx& c) {
      const Index t = m_.target(channel, i);
      if (t >= 0) out(t) += m_.coefficient(channel, i) * c;
    });
    const double n = out.norm();
    if (!(n > 0.0)) fail(ErrorClass::numerical_failure, "jump produced a null state");
    out /= n;
    Index any = 0;
    for (Index i = 0; i < out.size(); ++i)
      if (out(i) != cplx(0.0)) {
        any = i;
        break;
      }
    block_ = m_.block(any);
    if (mode_ == Propagation::block) {
      const auto& mem = m_.members(block_);
      amp_.resize(static_cast<Index>(mem.size()));
      for (std::size_t k = 0; k < mem.size(); ++k) amp_(static_cast<Index>(k)) = out(mem[k]);
    } else {
      full_ = std::move(out);
    }
  }

  PopulationSample sample(double t) const {
    PopulationSample s;
    s.time = t;
    double n2 = 0.0;
    for_each([&](Index i, const cplx& c) {
      const double w = std::norm(c);
      const BasisLabel l = m_.spec().label(i);
      if (l.atom == excited) s.pop_e += w;
      s.n_a += l.a * w;
      s.n_b += l.b * w;
      const double n = m_.excitation(i);
      s.n_exc += n * w;
      n2 += n * n * w;
    });
    s.n_exc_variance = std::max(0.0, n2 - s.n_exc * s.n_exc);
    return s;
  }

  double mean_excitation() const {
    double n = 0.0;
    for_each([&](Index i, const cplx& c) { n += m_.excitation(i) * std::norm(c); });
    return n;
  }

 private:
  template <class F>
  void for_each(F&& f) const {
    if (mode_ == Propagation::block) {
      const auto& mem = m_.members(block_);
      for (std::size_t k = 0; k < mem.size(); ++k) f(mem[k], amp_(static_cast<Index>(k)));
    } else {
      for (Index i = 0; i < full_.size(); ++i)
        if (full_(i) != cplx(0.0)) f(i, full_(i));
    }
  }

  const TrajectoryModel& m_;
  Propagation mode_;
  ComplexVector full_;
  ComplexVector amp_;
  int block_ = 0;
};

}  // namespace detail

// First-order quantum-jump unraveling from |e,0,0>: per step draw r; if r < dp jump on a
// channel chosen with probability dp_j/dp, otherwise take one no-jump step under H_e.
inline TrajectoryRecord run_trajectory(const TrajectoryConfig& cfg, const TrajectoryModel& model) {
  validate(cfg, model);
  const CounterRng rng(cfg.seed, cfg.trajectory_index);
  detail::WaveState psi(model, cfg.propagation);
  psi.set_basis(cfg.spec.index({excited, 0, 0}));
  TrajectoryRecord rec;
  rec.trajectory_index = cfg.trajectory_index;
  rec.t_max = cfg.t_max;
  const auto steps = static_cast<std::uint64_t>(std::llround(cfg.t_max / cfg.dt));
  rec.samples.push_back(psi.sample(0.0));
  for (std::uint64_t step = 0; step < steps; ++step) {
    const auto dp = psi.jump_probabilities();
    const double total = dp[0] + dp[1] + dp[2] + dp[3];
    rec.max_jump_probability = std::max(rec.max_jump_probability, total);
    if (total >= 0.1) fail(ErrorClass::step_size, "jump probability per step reached " + std::to_string(total));
    const auto u = rng.uniforms(step);
    const double t = static_cast<double>(step + 1) * cfg.dt;
    if (u[0] < total) {
      const double x = u[1] * total;
      int chosen = -1;
      double acc = 0.0;
      for (int j = 0; j < TrajectoryModel::channels; ++j) {
        if (dp[j] <= 0.0) continue;
        chosen = j;
        acc += dp[j];
        if (x < acc) break;
      }
      const double before = psi.mean_excitation();
      psi.jump(chosen);
      rec.events.push_back({t, static_cast<Channel>(chosen), before, psi.mean_excitation()});
    } else {
      psi.propagate();
    }
    if ((step + 1) % static_cast<std::uint64_t>(cfg.sample_stride) == 0) rec.samples.push_back(psi.sample(t));
  }
  return rec;
}

inline TrajectoryRecord run_trajectory(const TrajectoryConfig& cfg) {
  const TrajectoryModel model(cfg.params, cfg.spec, cfg.dt);
  return run_trajectory(cfg, model);
}

// Trajectories base.trajectory_index .. base.trajectory_index + count - 1, ordered by index.
inline std::vector<TrajectoryRecord> run_ensemble(const TrajectoryConfig& base, std::size_t count, int threads = 1) {
  const TrajectoryModel model(base.params, base.spec, base.dt);
  validate(base, model);
  std::vector<TrajectoryRecord> out(count);
  parallel_for(count, threads, [&](std::size_t i) {
    TrajectoryConfig c = base;
    c.trajectory_index = base.trajectory_index + i;
    out[i] = run_trajectory(c, model);
  });
  return out;
}

// Pairs of consecutive B_PHOTON events with nothing in between; pairs do not overlap.
inline std::vector<std::pair<double, double>> cascade_detect(const TrajectoryRecord& rec) {
  std::vector<std::pair<double, double>> out;
  const auto& ev = rec.events;
  for (std::size_t i = 0; i + 1 < ev.size();) {
    if (ev[i].channel == Channel::b_photon && ev[i + 1].channel == Channel::b_photon) {
      out.emplace_back(ev[i].time, ev[i + 1].time);
      i += 2;
    } else {
      ++i;
    }
  }
  return out;
}

struct JumpStats {
  std::array<std::uint64_t, 4> counts{};  // indexed by Channel
  std::uint64_t cascade_count = 0;
  std::optional<double> mean_intra_cascade_gap;
  double eta_estimate = 0.0;  // percent, 100 (B/2) / PUMP
  double eta_stderr = 0.0;    // percent, binomial per pump cycle
  double total_time = 0.0;
  double half_b_rate = 0.0;  // B/2 per unit time, estimates T
  double half_b_rate_stderr = 0.0;
  double pump_rate = 0.0;  // estimates P <gg>
  double pump_rate_stderr = 0.0;

  std::uint64_t count(Channel c) const noexcept { return counts[static_cast<int>(c)]; }
};

inline JumpStats jump_statistics(std::span<const TrajectoryRecord> records) {
  if (records.empty()) fail(ErrorClass::invalid_parameter, "jump_statistics needs at least one record");
  JumpStats s;
  double gap_sum = 0.0;
  std::vector<double> half_b, pump;
  for (const auto& r : records) {
    std::array<std::uint64_t, 4> c{};
    for (const auto& e : r.events) ++c[static_cast<int>(e.channel)];
    for (int j = 0; j < 4; ++j) s.counts[j] += c[j];
    for (const auto& [t0, t1] : cascade_detect(r)) {
      ++s.cascade_count;
      gap_sum += t1 - t0;
    }
    s.total_time += r.t_max;
    if (r.t_max > 0.0) {
      half_b.push_back(0.5 * static_cast<double>(c[1]) / r.t_max);
      pump.push_back(static_cast<double>(c[3]) / r.t_max);
    }
  }
  const std::uint64_t n_pump = s.count(Channel::pump);
  if (n_pump == 0) fail(ErrorClass::undefined_estimate, "no PUMP events: efficiency estimate undefined");
  if (s.cascade_count > 0) s.mean_intra_cascade_gap = gap_sum / static_cast<double>(s.cascade_count);
  const double ratio = 0.5 * static_cast<double>(s.count(Channel::b_photon)) / static_cast<double>(n_pump);
  s.eta_estimate = 100.0 * ratio;
  const double p = std::clamp(ratio, 0.0, 1.0);
  s.eta_stderr = 100.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n_pump));
  s.half_b_rate = 0.5 * static_cast<double>(s.count(Channel::b_photon)) / s.total_time;
  s.pump_rate = static_cast<double>(n_pump) / s.total_time;
  // Between-record spread when there are several records, counting noise otherwise.
  auto spread = [&](const std::vector<double>& x, double mean, double poisson) {
    if (x.size() < 2) return poisson;
    double v = 0.0;
    for (double xi : x) v += (xi - mean) * (xi - mean);
    return std::sqrt(v / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  };
  s.half_b_rate_stderr = spread(half_b, s.half_b_rate,
                                std::sqrt(2.0 * static_cast<double>(s.count(Channel::b_photon))) / (2.0 * s.total_time));
  s.pump_rate_stderr = spread(pump, s.pump_rate, std::sqrt(static_cast<double>(n_pump)) / s.total_time);
  return s;
}

struct EnsembleSeries {
  std::vector<double> time;
  std::vector<double> pop_e, pop_e_stderr;
  std::vector<double> n_a, n_a_stderr;
  std::vector<double> n_b, n_b_stderr;
  std::size_t trajectories = 0;
};

// Sample-wise mean and standard error; standard errors are NaN for a single record.
inline EnsembleSeries ensemble_average(std::span<const TrajectoryRecord> records) {
  if (records.empty()) fail(ErrorClass::invalid_parameter, "ensemble_average needs at least one record");
  const std::size_t n = records.front().samples.size();
  for (const auto& r : records)
    if (r.samples.size() != n) fail(ErrorClass::dimension_mismatch, "records have different sample grids");
  EnsembleSeries e;
  e.trajectories = records.size();
  const double m = static_cast<double>(records.size());
  auto stat = [&](std::size_t k, double PopulationSample::*f, std::vector<double>& mean, std::vector<double>& se) {
    double s = 0.0, s2 = 0.0;
    for (const auto& r : records) {
      const double x = r.samples[k].*f;
      s += x;
      s2 += x * x;
    }
    const double mu = s / m;
    mean.push_back(mu);
    se.push_back(records.size() > 1 ? std::sqrt(std::max(0.0, (s2 - m * mu * mu) / (m - 1.0)) / m)
                                    : std::numeric_limits<double>::quiet_NaN());
  };
  for (std::size_t k = 0; k < n; ++k) {
    e.time.push_back(records.front().samples[k].time);
    stat(k, &PopulationSample::pop_e, e.pop_e, e.pop_e_stderr);
    stat(k, &PopulationSample::n_a, e.n_a, e.n_a_stderr);
    stat(k, &PopulationSample::n_b, e.n_b, e.n_b_stderr);
  }
  return e;
}

inline EnsembleSeries ensemble_average(std::span<const TrajectoryConfig> configs, int threads = 1) {
  if (configs.empty()) fail(ErrorClass::invalid_parameter, "ensemble_average needs at least one config");
  for (const auto& c : configs)
    if (!(c.params == configs.front().params) || !(c.spec == configs.front().spec))
      fail(ErrorClass::invalid_parameter, "ensemble members must share params and spec");
  const TrajectoryModel model(configs.front().params, configs.front().spec, configs.front().dt);
  std::vector<TrajectoryRecord> recs(configs.size());
  parallel_for(configs.size(), threads, [&](std::size_t i) {
    if (configs[i].dt != model.dt()) fail(ErrorClass::invalid_parameter, "ensemble members must share dt");
    recs[i] = run_trajectory(configs[i], model);
  });
  return ensemble_average(std::span<const TrajectoryRecord>(recs));
}

// One row per event: trajectory_id,time,channel.
inline void write_event_log(std::ostream& os, std::span<const TrajectoryRecord> records) {
  os << "trajectory_id,time,channel\n";
  char buf[64];
  for (const auto& r : records)
    for (const auto& e : r.events) {
      std::snprintf(buf, sizeof buf, "%.17g", e.time);
      os << r.trajectory_index << ',' << buf << ',' << channel_name(e.channel) << '\n';
    }
}

}  // namespace tpe
