#pragma once

// Proactive-optimization harness: SNR collection, pose/channel prediction and the
// precoder comparison between the genie, predicted and stale channel cases.

#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lifi/channel.hpp"
#include "lifi/dataset.hpp"
#include "lifi/lstm.hpp"
#include "lifi/mobility.hpp"
#include "lifi/rng.hpp"
#include "lifi/zf_ccp.hpp"

namespace lifi {

/// The N most recent linear SNR vectors of one UE, measured with the uplink band
/// split over `users` UEs.
class SnrWindow {
 public:
  SnrWindow(std::size_t capacity, int users) : capacity_(capacity), users_(users) {
    if (capacity == 0) throw ConfigError("SNR window needs capacity >= 1");
    if (users < 1) throw ConfigError("SNR window needs users >= 1");
  }

  void push(long slot, Eigen::VectorXd snr) {
    if (!slots_.empty() && slot != slots_.back() + 1)
      throw ConfigError("SNR window slots must be consecutive");
    slots_.push_back(slot);
    snr_.push_back(std::move(snr));
    if (snr_.size() > capacity_) {
      snr_.pop_front();
      slots_.pop_front();
    }
  }

  bool warm() const { return snr_.size() == capacity_; }
  std::size_t size() const { return snr_.size(); }
  int users() const { return users_; }
  const std::deque<long>& slots() const { return slots_; }
  const Eigen::VectorXd& snr(std::size_t i) const { return snr_[i]; }

  /// True when every stored vector equals the newest one (no change observed).
  bool unchanged(double rel_tol = 1e-12) const {
    for (const auto& v : snr_)
      if ((v - snr_.back()).cwiseAbs().maxCoeff() > rel_tol * snr_.back().cwiseAbs().maxCoeff())
        return false;
    return true;
  }

  /// N x M feature matrix in the units of a dataset generated with `reference_users`.
  Eigen::MatrixXd features(int reference_users, FeatureScale scale, double floor_db) const {
    if (!warm()) throw ConfigError("SNR window is not warmed up");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(snr_.size()), snr_.front().size());
    for (std::size_t j = 0; j < snr_.size(); ++j)
      out.row(static_cast<Eigen::Index>(j)) =
          snr_features(snr_[j], users_, reference_users, scale, floor_db);
    return out;
  }

  Eigen::MatrixXd features(const DatasetMeta& meta) const {
    return features(meta.snr_users, meta.feature_scale, meta.snr_floor_db);
  }

 private:
  std::size_t capacity_;
  int users_;
  std::deque<Eigen::VectorXd> snr_;
  std::deque<long> slots_;
};

/// Uplink SNR vectors for slots t-N+1 .. t with K users sharing the band.
inline SnrWindow collect_window(const Trajectory& traj, long t, int prior_slots,
                                const RoomLayout& room, const DeviceGeometry& geom, int users) {
  if (t < prior_slots - 1 || t >= static_cast<long>(traj.size()))
    throw ConfigError("not enough trajectory history for an SNR window ending at slot " +
                      std::to_string(t));
  SnrWindow w(static_cast<std::size_t>(prior_slots), users);
  for (long j = t - prior_slots + 1; j <= t; ++j)
    w.push(j, uplink_snr(uplink_channel(traj[static_cast<std::size_t>(j)], room, geom), room, users));
  return w;
}

inline Matrix stack_downlink(const std::vector<Pose>& poses, const RoomLayout& room,
                             const DeviceGeometry& geom) {
  Matrix h(static_cast<Eigen::Index>(poses.size()), static_cast<Eigen::Index>(room.num_aps()));
  for (std::size_t k = 0; k < poses.size(); ++k)
    h.row(static_cast<Eigen::Index>(k)) = downlink_channel(poses[k], room, geom).transpose();
  return h;
}

/// (user index, window, L) -> predicted pose at t+L.
using PosePredictor = std::function<Pose(std::size_t, const SnrWindow&, int)>;

inline PosePredictor lstm_predictor(const LstmModel& model, const RoomLayout& room) {
  return [&model, &room](std::size_t, const SnrWindow& w, int horizon) {
    return predict_pose(model, w.features(model.meta), horizon, room);
  };
}

/// Predicted K x M channel for slot t+L. When `current` holds H(t) and a user's SNR
/// window shows no change, that user's current row is reused instead of invoking the
/// predictor.
inline Matrix predict_channel_matrix(const PosePredictor& predictor,
                                     const std::vector<SnrWindow>& windows, int horizon,
                                     const RoomLayout& room, const DeviceGeometry& geom,
                                     const Matrix* current = nullptr,
                                     std::vector<Pose>* predicted = nullptr) {
  Matrix h(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(room.num_aps()));
  if (predicted) predicted->assign(windows.size(), Pose{});
  for (std::size_t k = 0; k < windows.size(); ++k) {
    if (!windows[k].warm()) throw ConfigError("SNR window of user " + std::to_string(k) + " is not warm");
    const auto row = static_cast<Eigen::Index>(k);
    if (current && windows[k].unchanged()) {
      h.row(row) = current->row(row);
      continue;
    }
    const Pose p = predictor(k, windows[k], horizon);
    if (predicted) (*predicted)[k] = p;
    h.row(row) = downlink_channel(p, room, geom).transpose();
  }
  return h;
}

enum class CaseId { kGenie, kPoLstm, kPersistence, kAged };
inline constexpr std::array<CaseId, 4> kAllCases = {CaseId::kGenie, CaseId::kPoLstm,
                                                    CaseId::kPersistence, CaseId::kAged};

inline const char* to_string(CaseId c) {
  switch (c) {
    case CaseId::kGenie: return "genie";
    case CaseId::kPoLstm: return "po_lstm";
    case CaseId::kPersistence: return "persistence";
    case CaseId::kAged: return "aged";
  }
  return "?";
}

struct ScenarioConfig {
  int users = 4;      // K
  int horizon = 2;    // L
  int slots = 500;    // Monte-Carlo slots
  double rate_threshold = 1.0;
  double headroom = 0.0;  // Delta; 0 means "use the LED DC bias"
  std::uint64_t seed = 1;
  CcpOptions solver;
  std::vector<int> user_sweep = {2, 4, 6, 8};
  std::vector<double> threshold_sweep = {0.5, 1.0, 1.5, 2.0};
  bool change_gate = true;
};

struct Environment {
  GeneratorSetup setup;  // room, device, mobility and dataset shape
  const LstmModel* model = nullptr;
};

inline void validate(const ScenarioConfig& s, const Environment& env) {
  if (s.users < 1) throw ConfigError("scenario.users must be >= 1");
  if (s.users > static_cast<int>(env.setup.room.num_aps()))
    throw ConfigError("scenario.users must not exceed the number of APs");
  if (s.horizon < 1 || s.horizon > env.setup.dataset.posterior_slots)
    throw ConfigError("scenario.horizon must lie in [1, L_max]");
  if (s.slots < 1) throw ConfigError("scenario.slots must be >= 1");
  if (!(s.rate_threshold >= 0)) throw ConfigError("scenario.rate_threshold must be >= 0");
}

struct CaseOutcome {
  double sum_rate = 0.0;          // realized on H(t+L), nats/s/Hz
  double design_objective = 0.0;  // solver objective on the channel it was given
  int admitted = 0;
  double solve_time = 0.0;  // s
};

/// One Monte-Carlo slot: K independent users observed for N slots, served at t+L.
struct TrialRecord {
  long slot = 0;
  std::uint64_t seed = 0;
  int users = 0;
  double position_error = 0.0;  // mean LSTM positioning error at t+L over predicted users, m
  std::map<std::pair<CaseId, SolverKind>, CaseOutcome> outcomes;
};

/// Channels and windows of one slot, shared by every case so comparisons are paired.
struct SlotState {
  std::vector<Trajectory> trajectories;
  std::vector<SnrWindow> windows;
  Matrix h_now;     // H(t)
  Matrix h_target;  // H(t+L)
  long t = 0;
};

inline std::uint64_t slot_seed(std::uint64_t scenario_seed, long slot) {
  return derive_seed(scenario_seed, stream::kSlot, static_cast<std::uint64_t>(slot));
}

inline SlotState simulate_slot(const Environment& env, const ScenarioConfig& sc, std::uint64_t seed) {
  const auto& s = env.setup;
  SlotState st;
  st.t = s.dataset.prior_slots - 1;
  std::vector<Pose> now, target;
  for (int k = 0; k < sc.users; ++k) {
    st.trajectories.push_back(sample_trajectory(derive_seed(seed, stream::kSample, static_cast<std::uint64_t>(k)),
                                                static_cast<std::size_t>(s.dataset.prior_slots + s.dataset.posterior_slots),
                                                s.mobility, s.room));
    const auto& tr = st.trajectories.back();
    st.windows.push_back(collect_window(tr, st.t, s.dataset.prior_slots, s.room, s.device, sc.users));
    now.push_back(tr[static_cast<std::size_t>(st.t)]);
    target.push_back(tr[static_cast<std::size_t>(st.t + sc.horizon)]);
  }
  st.h_now = stack_downlink(now, s.room, s.device);
  st.h_target = stack_downlink(target, s.room, s.device);
  return st;
}

inline ProblemSpec problem_for(const Environment& env, const ScenarioConfig& sc, const Matrix& h) {
  ProblemSpec p;
  p.channel = h;
  p.headroom = sc.headroom > 0 ? sc.headroom : env.setup.room.dc_bias;
  p.noise_term = env.setup.room.noise_term();
  p.rate_threshold = sc.rate_threshold;
  return p;
}

/// Solves on `design` and scores the precoder on `truth` (same user order).
inline CaseOutcome run_case_on(const Environment& env, const ScenarioConfig& sc,
                               const Matrix& design, const Matrix& truth, SolverKind solver,
                               std::uint64_t solver_seed) {
  CcpOptions opt = sc.solver;
  opt.seed = solver_seed;
  const PrecoderSolution sol = solve_precoder(problem_for(env, sc, design), solver, opt);
  CaseOutcome out;
  out.admitted = static_cast<int>(sol.admitted.size());
  out.design_objective = sol.objective;
  out.solve_time = sol.solve_time;
  if (!sol.admitted.empty()) {
    const Vector r = realized_rates(sol.precoder, select_rows(truth, sol.admitted),
                                    env.setup.room.noise_term());
    out.sum_rate = r.sum();
  }
  return out;
}

/// Design channel of a case: genie uses H(t+L), po_lstm the LSTM prediction,
/// persistence the channel at the last known pose, aged the measured H(t).
inline Matrix design_channel(CaseId c, const Environment& env, const ScenarioConfig& sc,
                             const SlotState& st, double* position_error = nullptr) {
  const auto& s = env.setup;
  const Matrix* gate = sc.change_gate ? &st.h_now : nullptr;
  switch (c) {
    case CaseId::kGenie: return st.h_target;
    case CaseId::kAged: return st.h_now;
    case CaseId::kPersistence: {
      const PosePredictor persist = [&](std::size_t k, const SnrWindow&, int horizon) {
        return persistence_predict(st.trajectories[k][static_cast<std::size_t>(st.t)], horizon);
      };
      return predict_channel_matrix(persist, st.windows, sc.horizon, s.room, s.device, gate);
    }
    case CaseId::kPoLstm: {
      if (!env.model) throw ConfigError("po_lstm case needs a trained model");
      std::vector<Pose> predicted;
      Matrix h = predict_channel_matrix(lstm_predictor(*env.model, s.room), st.windows, sc.horizon,
                                        s.room, s.device, gate, &predicted);
      if (position_error) {
        double sum = 0;
        int n = 0;
        for (std::size_t k = 0; k < st.windows.size(); ++k) {
          if (gate && st.windows[k].unchanged()) continue;
          sum += (predicted[k].position() -
                  st.trajectories[k][static_cast<std::size_t>(st.t + sc.horizon)].position())
                     .norm();
          ++n;
        }
        *position_error = n ? sum / n : 0.0;
      }
      return h;
    }
  }
  return {};
}

inline TrialRecord run_slot(const Environment& env, const ScenarioConfig& sc, long slot,
                            const std::vector<CaseId>& cases,
                            const std::vector<SolverKind>& solvers) {
  validate(sc, env);
  TrialRecord rec;
  rec.slot = slot;
  rec.seed = slot_seed(sc.seed, slot);
  rec.users = sc.users;
  const SlotState st = simulate_slot(env, sc, rec.seed);
  const std::uint64_t solver_seed = derive_seed(rec.seed, stream::kSolver);
  for (CaseId c : cases) {
    const Matrix design = design_channel(c, env, sc, st, c == CaseId::kPoLstm ? &rec.position_error : nullptr);
    for (SolverKind sk : solvers)
      rec.outcomes[{c, sk}] = run_case_on(env, sc, design, st.h_target, sk, solver_seed);
  }
  return rec;
}

inline std::vector<TrialRecord> run_scenario(const Environment& env, const ScenarioConfig& sc,
                                             const std::vector<CaseId>& cases,
                                             const std::vector<SolverKind>& solvers) {
  std::vector<TrialRecord> out;
  out.reserve(static_cast<std::size_t>(sc.slots));
  for (long t = 0; t < sc.slots; ++t) out.push_back(run_slot(env, sc, t, cases, solvers));
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // 95 % normal-approximation half-width
  std::size_t n = 0;

  double lower() const { return mean - half_width; }
  double upper() const { return mean + half_width; }
};

inline MeanCi mean_ci(const std::vector<double>& v) {
  MeanCi r;
  r.n = v.size();
  if (v.empty()) return r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    r.half_width = 1.96 * sd / std::sqrt(static_cast<double>(v.size()));
  }
  return r;
}

template <class Field>
MeanCi summarize(const std::vector<TrialRecord>& recs, CaseId c, SolverKind s, Field field) {
  std::vector<double> v;
  v.reserve(recs.size());
  for (const auto& r : recs) {
    auto it = r.outcomes.find({c, s});
    if (it != r.outcomes.end()) v.push_back(field(it->second));
  }
  return mean_ci(v);
}

struct SweepRow {
  double sweep_value = 0.0;  // K or R_th
  CaseId case_id{};
  SolverKind solver{};
  MeanCi sum_rate, admitted, solve_time;
};

inline std::vector<SweepRow> summarize_sweep(double value, const std::vector<TrialRecord>& recs,
                                             const std::vector<CaseId>& cases,
                                             const std::vector<SolverKind>& solvers) {
  std::vector<SweepRow> rows;
  for (CaseId c : cases)
    for (SolverKind s : solvers)
      rows.push_back({value, c, s, summarize(recs, c, s, [](const CaseOutcome& o) { return o.sum_rate; }),
                      summarize(recs, c, s, [](const CaseOutcome& o) { return double(o.admitted); }),
                      summarize(recs, c, s, [](const CaseOutcome& o) { return o.solve_time; })});
  return rows;
}

struct ExperimentResult {
  std::vector<SweepRow> rows;
  std::vector<std::pair<double, TrialRecord>> trials;  // (sweep value, record)
};

/// Sum-rate versus K at the scenario's L and R_th, for both solvers.
inline ExperimentResult experiment_sumrate_vs_users(const Environment& env, ScenarioConfig sc,
                                                    const std::vector<SolverKind>& solvers) {
  ExperimentResult res;
  const std::vector<CaseId> cases(kAllCases.begin(), kAllCases.end());
  for (int k : sc.user_sweep) {
    sc.users = k;
    const auto recs = run_scenario(env, sc, cases, solvers);
    auto rows = summarize_sweep(k, recs, cases, solvers);
    res.rows.insert(res.rows.end(), rows.begin(), rows.end());
    for (const auto& r : recs) res.trials.emplace_back(k, r);
  }
  return res;
}

/// Sum-rate versus R_th at the scenario's K and L.
inline ExperimentResult experiment_sumrate_vs_threshold(const Environment& env, ScenarioConfig sc,
                                                        const std::vector<SolverKind>& solvers) {
  ExperimentResult res;
  const std::vector<CaseId> cases(kAllCases.begin(), kAllCases.end());
  for (double r : sc.threshold_sweep) {
    sc.rate_threshold = r;
    const auto recs = run_scenario(env, sc, cases, solvers);
    auto rows = summarize_sweep(r, recs, cases, solvers);
    res.rows.insert(res.rows.end(), rows.begin(), rows.end());
    for (const auto& t : recs) res.trials.emplace_back(r, t);
  }
  return res;
}

// ---------------------------------------------------------------------------
// CSV output. Timing columns are omitted when `with_timing` is false so that runs
// with a fixed seed are byte-for-byte reproducible.

inline void write_sweep_csv(std::ostream& out, const std::string& sweep_column,
                            const std::vector<SweepRow>& rows, bool with_timing) {
  out << sweep_column
      << ",case,solver,slots,mean_sum_rate_nats,ci95_sum_rate_nats,mean_admitted,ci95_admitted";
  if (with_timing) out << ",mean_solve_time_s,ci95_solve_time_s";
  out << '\n';
  for (const auto& r : rows) {
    out << io::format_double(r.sweep_value) << ',' << to_string(r.case_id) << ','
        << to_string(r.solver) << ',' << r.sum_rate.n << ',' << io::format_double(r.sum_rate.mean)
        << ',' << io::format_double(r.sum_rate.half_width) << ','
        << io::format_double(r.admitted.mean) << ',' << io::format_double(r.admitted.half_width);
    if (with_timing)
      out << ',' << io::format_double(r.solve_time.mean) << ','
          << io::format_double(r.solve_time.half_width);
    out << '\n';
  }
}

inline void write_timing_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "users,case,solver,samples,mean_solve_time_s,ci95_solve_time_s\n";
  for (const auto& r : rows)
    out << io::format_double(r.sweep_value) << ',' << to_string(r.case_id) << ','
        << to_string(r.solver) << ',' << r.solve_time.n << ','
        << io::format_double(r.solve_time.mean) << ',' << io::format_double(r.solve_time.half_width)
        << '\n';
}

inline void write_trials_csv(std::ostream& out, const std::string& sweep_column,
                             const std::vector<std::pair<double, TrialRecord>>& trials,
                             bool with_timing) {
  out << sweep_column
      << ",slot,seed,scheduled_users,case,solver,realized_sum_rate_nats,design_objective_nats,admitted,"
         "position_error_m";
  if (with_timing) out << ",solve_time_s";
  out << '\n';
  for (const auto& [value, rec] : trials)
    for (const auto& [key, o] : rec.outcomes) {
      out << io::format_double(value) << ',' << rec.slot << ',' << rec.seed << ',' << rec.users
          << ',' << to_string(key.first) << ',' << to_string(key.second) << ','
          << io::format_double(o.sum_rate) << ',' << io::format_double(o.design_objective) << ','
          << o.admitted << ',' << io::format_double(rec.position_error);
      if (with_timing) out << ',' << io::format_double(o.solve_time);
      out << '\n';
    }
}

}  // namespace lifi
