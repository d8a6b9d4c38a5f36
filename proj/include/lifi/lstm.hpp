#pragma once

// Single-layer LSTM sequence-to-sequence regressor trained with backpropagation
// through time. The final hidden state feeds one affine head that emits all
// L_max posterior pose blocks at once.

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "lifi/dataset.hpp"
#include "lifi/error.hpp"
#include "lifi/io.hpp"
#include "lifi/rng.hpp"

namespace lifi {

/// All trainable parameters live in one flat vector; the accessors map views onto
/// it in the declared tensor order: wx (4H x M), wh (4H x H), b (4H), wy (D x H), by (D).
/// Matrices are column-major. Gate blocks are stacked as [input, forget, candidate, output].
class LstmParams {
 public:
  using MatMap = Eigen::Map<Eigen::MatrixXd>;
  using CMatMap = Eigen::Map<const Eigen::MatrixXd>;
  using VecMap = Eigen::Map<Eigen::VectorXd>;
  using CVecMap = Eigen::Map<const Eigen::VectorXd>;

  LstmParams() = default;
  LstmParams(int input, int hidden, int output)
      : input_(input), hidden_(hidden), output_(output), data_(Eigen::VectorXd::Zero(count(input, hidden, output))) {}

  static Eigen::Index count(int m, int h, int d) {
    return static_cast<Eigen::Index>(4 * h) * m + 4 * h * h + 4 * h + d * h + d;
  }

  int input() const { return input_; }
  int hidden() const { return hidden_; }
  int output() const { return output_; }

  Eigen::VectorXd& flat() { return data_; }
  const Eigen::VectorXd& flat() const { return data_; }

  MatMap wx() { return {data_.data() + off_wx(), 4 * hidden_, input_}; }
  MatMap wh() { return {data_.data() + off_wh(), 4 * hidden_, hidden_}; }
  VecMap b() { return {data_.data() + off_b(), 4 * hidden_}; }
  MatMap wy() { return {data_.data() + off_wy(), output_, hidden_}; }
  VecMap by() { return {data_.data() + off_by(), output_}; }
  CMatMap wx() const { return {data_.data() + off_wx(), 4 * hidden_, input_}; }
  CMatMap wh() const { return {data_.data() + off_wh(), 4 * hidden_, hidden_}; }
  CVecMap b() const { return {data_.data() + off_b(), 4 * hidden_}; }
  CMatMap wy() const { return {data_.data() + off_wy(), output_, hidden_}; }
  CVecMap by() const { return {data_.data() + off_by(), output_}; }

 private:
  Eigen::Index off_wx() const { return 0; }
  Eigen::Index off_wh() const { return off_wx() + 4 * hidden_ * input_; }
  Eigen::Index off_b() const { return off_wh() + 4 * hidden_ * hidden_; }
  Eigen::Index off_wy() const { return off_b() + 4 * hidden_; }
  Eigen::Index off_by() const { return off_wy() + output_ * hidden_; }

  int input_ = 0, hidden_ = 0, output_ = 0;
  Eigen::VectorXd data_;
};

struct LstmModel {
  LstmParams params;
  DatasetMeta meta;  // normalization statistics and shape of the training data
  std::string activation = "tanh";
  std::string recurrent_activation = "sigmoid";

  int hidden() const { return params.hidden(); }
  int posterior_slots() const { return params.output() / kPoseDims; }
};

/// Forget-gate bias +1, all other biases zero, weights uniform in +-1/sqrt(H).
inline LstmParams init_params(int input, int hidden, int output, std::uint64_t seed) {
  if (input < 1 || hidden < 1 || output < 1) throw ConfigError("LSTM dimensions must be >= 1");
  LstmParams p(input, hidden, output);
  Rng rng(derive_seed(seed, stream::kInit));
  const double r = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> u(-r, r);
  for (auto m : {p.wx(), p.wh(), p.wy()})
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  p.b().segment(hidden, hidden).setOnes();
  return p;
}

/// One mini-batch: inputs[t] is M x B (time step t, one column per sample); targets is D x B.
struct SequenceBatch {
  std::vector<Eigen::MatrixXd> inputs;
  Eigen::MatrixXd targets;

  Eigen::Index size() const { return inputs.empty() ? 0 : inputs.front().cols(); }
};

namespace detail {

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

struct ForwardTrace {
  std::vector<Eigen::MatrixXd> i, f, g, o, c, tc, h;  // h[0], c[0] are the zero initial state
  Eigen::MatrixXd y;
};

inline ForwardTrace forward_trace(const LstmParams& p, const std::vector<Eigen::MatrixXd>& x) {
  const int h = p.hidden();
  const Eigen::Index b = x.front().cols();
  ForwardTrace tr;
  const std::size_t n = x.size();
  for (auto* v : {&tr.i, &tr.f, &tr.g, &tr.o, &tr.tc}) v->resize(n);
  tr.c.assign(n + 1, Eigen::MatrixXd::Zero(h, b));
  tr.h.assign(n + 1, Eigen::MatrixXd::Zero(h, b));
  Eigen::MatrixXd z(4 * h, b);
  for (std::size_t t = 0; t < n; ++t) {
    z.noalias() = p.wx() * x[t];
    z.noalias() += p.wh() * tr.h[t];
    z.colwise() += p.b();
    tr.i[t] = sigmoid(z.topRows(h));
    tr.f[t] = sigmoid(z.middleRows(h, h));
    tr.g[t] = z.middleRows(2 * h, h).array().tanh().matrix();
    tr.o[t] = sigmoid(z.bottomRows(h));
    tr.c[t + 1] = (tr.f[t].array() * tr.c[t].array() + tr.i[t].array() * tr.g[t].array()).matrix();
    tr.tc[t] = tr.c[t + 1].array().tanh().matrix();
    tr.h[t + 1] = (tr.o[t].array() * tr.tc[t].array()).matrix();
  }
  tr.y = p.wy() * tr.h[n];
  tr.y.colwise() += p.by();
  return tr;
}

inline void check_finite(const std::vector<Eigen::MatrixXd>& x) {
  if (x.empty()) throw ConfigError("LSTM input sequence is empty");
  for (const auto& m : x)
    if (!m.allFinite()) throw NumericError("non-finite LSTM input");
}

}  // namespace detail

/// Runs the recursion over all steps; returns D x B normalized predictions.
inline Eigen::MatrixXd lstm_forward(const LstmParams& p, const std::vector<Eigen::MatrixXd>& x) {
  detail::check_finite(x);
  for (const auto& m : x)
    if (m.rows() != p.input()) throw ConfigError("LSTM input width does not match the model");
  return detail::forward_trace(p, x).y;
}

/// Single window (N x M, normalized) -> D values.
inline Eigen::VectorXd lstm_forward(const LstmParams& p, const Eigen::MatrixXd& window) {
  std::vector<Eigen::MatrixXd> x;
  x.reserve(static_cast<std::size_t>(window.rows()));
  for (Eigen::Index t = 0; t < window.rows(); ++t) x.emplace_back(window.row(t).transpose());
  return lstm_forward(p, x).col(0);
}

struct LossAndGradient {
  double loss = 0.0;
  LstmParams grad;
};

/// Mean squared error over all outputs and samples (times `loss_weight`) and its
/// exact gradient by reverse accumulation through the unrolled recursion.
inline LossAndGradient lstm_backward(const LstmParams& p, const SequenceBatch& batch,
                                     double loss_weight = 1.0) {
  if (batch.size() == 0) throw ConfigError("empty training batch");
  detail::check_finite(batch.inputs);
  const int h = p.hidden();
  const Eigen::Index bsz = batch.size();
  const auto tr = detail::forward_trace(p, batch.inputs);
  const Eigen::MatrixXd resid = tr.y - batch.targets;
  const double denom = static_cast<double>(resid.size());

  LossAndGradient out{loss_weight * resid.squaredNorm() / denom,
                      LstmParams(p.input(), p.hidden(), p.output())};
  auto& gr = out.grad;
  const Eigen::MatrixXd dy = (2.0 * loss_weight / denom) * resid;
  const std::size_t n = batch.inputs.size();
  gr.wy().noalias() = dy * tr.h[n].transpose();
  gr.by() = dy.rowwise().sum();

  Eigen::MatrixXd dh = p.wy().transpose() * dy;
  Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(h, bsz);
  Eigen::MatrixXd dz(4 * h, bsz);
  for (std::size_t k = n; k-- > 0;) {
    const auto& i = tr.i[k].array();
    const auto& f = tr.f[k].array();
    const auto& g = tr.g[k].array();
    const auto& o = tr.o[k].array();
    const auto& tc = tr.tc[k].array();
    dc.array() += dh.array() * o * (1.0 - tc.square());
    dz.topRows(h) = (dc.array() * g * i * (1.0 - i)).matrix();
    dz.middleRows(h, h) = (dc.array() * tr.c[k].array() * f * (1.0 - f)).matrix();
    dz.middleRows(2 * h, h) = (dc.array() * i * (1.0 - g.square())).matrix();
    dz.bottomRows(h) = (dh.array() * tc * o * (1.0 - o)).matrix();
    gr.wx().noalias() += dz * batch.inputs[k].transpose();
    gr.wh().noalias() += dz * tr.h[k].transpose();
    gr.b() += dz.rowwise().sum();
    dh.noalias() = p.wh().transpose() * dz;
    dc.array() *= f;
  }
  return out;
}

inline double lstm_loss(const LstmParams& p, const SequenceBatch& batch) {
  const Eigen::MatrixXd y = lstm_forward(p, batch.inputs);
  return (y - batch.targets).squaredNorm() / static_cast<double>(y.size());
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  int hidden = 100;
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  int epochs = 30;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  double validation_fraction = 0.1;
  double clip_norm = 5.0;
};

inline void validate(const TrainConfig& c) {
  if (!(c.learning_rate > 0)) throw ConfigError("train.learning_rate must be positive");
  if (c.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (c.epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (!(c.clip_norm > 0)) throw ConfigError("train.clip_norm must be positive");
  if (c.hidden < 1) throw ConfigError("train.hidden must be >= 1");
  if (!(c.beta1 >= 0 && c.beta1 < 1 && c.beta2 >= 0 && c.beta2 < 1))
    throw ConfigError("train.beta1/beta2 must lie in [0, 1)");
  if (!(c.validation_fraction > 0 && c.validation_fraction < 1))
    throw ConfigError("train.validation_fraction must lie in (0, 1)");
}

struct EpochLoss {
  int epoch;
  double train;
  double validation;
};

struct TrainResult {
  LstmModel model;
  std::vector<EpochLoss> history;  // entry 0 is the untrained model
  int best_epoch = 0;
};

/// Normalized copy of selected dataset rows, laid out for batched LSTM evaluation.
struct PreparedData {
  std::vector<Eigen::MatrixXd> inputs;  // per step: M x n
  Eigen::MatrixXd targets;              // D x n

  Eigen::Index size() const { return targets.cols(); }

  SequenceBatch gather(const std::vector<std::size_t>& cols, std::size_t begin,
                       std::size_t end) const {
    SequenceBatch b;
    const auto n = static_cast<Eigen::Index>(end - begin);
    b.inputs.assign(inputs.size(), Eigen::MatrixXd(inputs.front().rows(), n));
    b.targets.resize(targets.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto src = static_cast<Eigen::Index>(cols[begin + static_cast<std::size_t>(j)]);
      for (std::size_t t = 0; t < inputs.size(); ++t) b.inputs[t].col(j) = inputs[t].col(src);
      b.targets.col(j) = targets.col(src);
    }
    return b;
  }
};

inline PreparedData prepare(const Dataset& d, const std::vector<std::size_t>& rows,
                            const DatasetMeta& stats) {
  const int n = d.meta.prior_slots, m = d.meta.num_aps;
  const auto count = static_cast<Eigen::Index>(rows.size());
  PreparedData out;
  out.inputs.assign(static_cast<std::size_t>(n), Eigen::MatrixXd(m, count));
  out.targets.resize(d.meta.label_cols(), count);
  for (Eigen::Index j = 0; j < count; ++j) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(j)]);
    for (int t = 0; t < n; ++t)
      for (int a = 0; a < m; ++a)
        out.inputs[t](a, j) = (d.features(r, t * m + a) - stats.feature_mean[a]) / stats.feature_std[a];
    out.targets.col(j) = normalize_labels(d.labels.row(r).transpose(), stats);
  }
  return out;
}

inline double mean_loss(const LstmParams& p, const PreparedData& data, std::size_t chunk = 2048) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(data.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  double total = 0.0;
  for (std::size_t b = 0; b < idx.size(); b += chunk) {
    const std::size_t e = std::min(idx.size(), b + chunk);
    const auto batch = data.gather(idx, b, e);
    total += lstm_loss(p, batch) * static_cast<double>(e - b);
  }
  return total / static_cast<double>(idx.size());
}

/// Splits the training partition into fit/validation rows (deterministic in the seed).
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> validation_split(
    std::vector<std::size_t> train_rows, const TrainConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, stream::kSplit));
  for (std::size_t i = train_rows.size(); i > 1; --i)
    std::swap(train_rows[i - 1], train_rows[static_cast<std::size_t>(rng() % i)]);
  auto n_val = static_cast<std::size_t>(
      std::llround(cfg.validation_fraction * static_cast<double>(train_rows.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, train_rows.size() - 1);
  std::vector<std::size_t> val(train_rows.end() - static_cast<std::ptrdiff_t>(n_val), train_rows.end());
  train_rows.resize(train_rows.size() - n_val);
  return {std::move(train_rows), std::move(val)};
}

/// Mini-batch Adam with global-norm gradient clipping. Returns the snapshot with the
/// lowest validation loss and the per-epoch loss history (train loss is the mean of
/// the mini-batch losses seen during the epoch). Single-threaded and deterministic.
inline TrainResult train(const Dataset& d, const TrainConfig& cfg,
                         const std::function<void(const EpochLoss&)>& on_epoch = {}) {
  validate(cfg);
  if (!d.meta.has_statistics()) throw ConfigError("dataset has no normalization statistics");
  const Split part = split(d);
  if (part.train.size() < 2) throw ConfigError("training partition too small");
  auto [fit_rows, val_rows] = validation_split(part.train, cfg);
  const PreparedData fit = prepare(d, fit_rows, d.meta);
  const PreparedData val = prepare(d, val_rows, d.meta);

  TrainResult res;
  res.model.meta = d.meta;
  res.model.params = init_params(d.meta.num_aps, cfg.hidden, d.meta.label_cols(), cfg.seed);
  LstmParams& p = res.model.params;

  double best = mean_loss(p, val);
  res.history.push_back({0, mean_loss(p, fit), best});
  if (on_epoch) on_epoch(res.history.back());
  Eigen::VectorXd best_flat = p.flat();

  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(p.flat().size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(p.flat().size());
  long long step = 0;
  Rng rng(derive_seed(cfg.seed, stream::kTrain));
  std::vector<std::size_t> order(static_cast<std::size_t>(fit.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      const auto batch = fit.gather(order, b, e);
      auto lg = lstm_backward(p, batch);
      if (!std::isfinite(lg.loss))
        throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += lg.loss * static_cast<double>(e - b);
      Eigen::VectorXd& g = lg.grad.flat();
      const double gnorm = g.norm();
      if (gnorm > cfg.clip_norm) g *= cfg.clip_norm / gnorm;
      ++step;
      m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * g;
      m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      p.flat().array() -= cfg.learning_rate * (m1.array() / c1) /
                          ((m2.array() / c2).sqrt() + cfg.epsilon);
    }
    const double vloss = mean_loss(p, val);
    const double tloss = loss_sum / static_cast<double>(order.size());
    if (!std::isfinite(vloss) || !std::isfinite(tloss))
      throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
    res.history.push_back({epoch, tloss, vloss});
    if (on_epoch) on_epoch(res.history.back());
    if (vloss < best) {
      best = vloss;
      best_flat = p.flat();
      res.best_epoch = epoch;
    }
  }
  p.flat() = best_flat;
  return res;
}

// ---------------------------------------------------------------------------
// Prediction and evaluation

inline void check_window(const LstmModel& model, const Eigen::MatrixXd& features) {
  if (features.rows() != model.meta.prior_slots || features.cols() != model.meta.num_aps)
    throw ConfigError("SNR window must be " + std::to_string(model.meta.prior_slots) + " x " +
                      std::to_string(model.meta.num_aps));
}

inline Pose clamp_to_room(Pose p, double length, double width, double height) {
  p.x = std::clamp(p.x, 0.0, length);
  p.y = std::clamp(p.y, 0.0, width);
  p.z = std::clamp(p.z, 0.0, height);
  return p;
}

/// Predicted poses for steps t+1 .. t+L_max from one feature window (feature units,
/// not normalized). Positions are clamped into the room.
inline std::vector<Pose> predict_poses(const LstmModel& model, const Eigen::MatrixXd& features,
                                       const RoomLayout& room) {
  check_window(model, features);
  const Eigen::VectorXd y = denormalize_labels(
      lstm_forward(model.params, normalize_features(features, model.meta)), model.meta);
  std::vector<Pose> out;
  for (int l = 0; l < model.posterior_slots(); ++l) {
    EncodedPose e;
    for (int k = 0; k < kPoseDims; ++k) e[k] = y[l * kPoseDims + k];
    out.push_back(clamp_to_room(decode_pose(e), room.length, room.width, room.height));
  }
  return out;
}

inline Pose predict_pose(const LstmModel& model, const Eigen::MatrixXd& features, int horizon,
                         const RoomLayout& room) {
  if (horizon < 1 || horizon > model.posterior_slots())
    throw ConfigError("posterior index L=" + std::to_string(horizon) + " outside [1, " +
                      std::to_string(model.posterior_slots()) + "]");
  return predict_poses(model, features, room)[static_cast<std::size_t>(horizon - 1)];
}

/// Baseline: the last observed pose, for any horizon.
inline Pose persistence_predict(const Pose& last_known, int /*horizon*/) { return last_known; }

struct HorizonErrors {
  double mean_position = 0.0;  // m
  double mean_yaw = 0.0, mean_pitch = 0.0, mean_roll = 0.0;  // deg
  std::vector<double> position;  // per test sample, for CDFs
};

struct Evaluation {
  std::vector<HorizonErrors> horizons;  // index L-1
};

/// Scores a predictor over dataset rows. `predict(row)` returns L_max poses.
template <class Predictor>
Evaluation evaluate(const Dataset& d, const std::vector<std::size_t>& rows, Predictor&& predict) {
  const int l_max = d.meta.posterior_slots;
  Evaluation ev;
  ev.horizons.resize(static_cast<std::size_t>(l_max));
  for (auto r : rows) {
    const std::vector<Pose> pred = predict(r);
    for (int l = 0; l < l_max; ++l) {
      EncodedPose e;
      for (int k = 0; k < kPoseDims; ++k)
        e[k] = d.labels(static_cast<Eigen::Index>(r), l * kPoseDims + k);
      const Pose truth = decode_pose(e);
      const Pose& p = pred[static_cast<std::size_t>(l)];
      auto& h = ev.horizons[static_cast<std::size_t>(l)];
      h.position.push_back((p.position() - truth.position()).norm());
      h.mean_yaw += angle_distance(p.alpha, truth.alpha);
      h.mean_pitch += angle_distance(p.beta, truth.beta);
      h.mean_roll += std::abs(p.gamma - truth.gamma);
    }
  }
  const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
  for (auto& h : ev.horizons) {
    h.mean_position = std::accumulate(h.position.begin(), h.position.end(), 0.0) / n;
    h.mean_yaw /= n;
    h.mean_pitch /= n;
    h.mean_roll /= n;
  }
  return ev;
}

inline Evaluation evaluate(const LstmModel& model, const Dataset& d,
                           const std::vector<std::size_t>& rows, const RoomLayout& room) {
  return evaluate(d, rows, [&](std::size_t r) {
    return predict_poses(model, feature_window(d, r), room);
  });
}

// ---------------------------------------------------------------------------
// Persistence: <base>.meta + <base>.params (LE float64 in the declared tensor order)

inline void save_model(const LstmModel& model, const std::string& base) {
  io::KeyValueFile kv;
  kv.set("kind", "lifi-lstm");
  kv.set_int("version", 1);
  kv.set_int("input_size", model.params.input());
  kv.set_int("hidden_size", model.params.hidden());
  kv.set_int("output_size", model.params.output());
  kv.set("activation", model.activation);
  kv.set("recurrent_activation", model.recurrent_activation);
  kv.set("gate_order", "input forget candidate output");
  kv.set("tensor_order", "wx[4H,M] wh[4H,H] b[4H] wy[D,H] by[D] (column-major)");
  kv.set_int("parameter_count", model.params.flat().size());
  const auto dm = meta_to_kv(model.meta);
  for (const char* key : {"num_aps", "prior_slots", "posterior_slots", "size", "snr_floor_db",
                          "snr_users", "feature_scale", "train_fraction", "seed", "fingerprint",
                          "feature_mean", "feature_std", "label_offset", "label_scale"})
    kv.set(std::string("dataset.") + key, dm.get(key));
  kv.write(base + ".meta");
  std::ofstream out(base + ".params", std::ios::binary);
  if (!out) throw Error("cannot open '" + base + ".params' for writing");
  io::write_f64(out, model.params.flat().data(), static_cast<std::size_t>(model.params.flat().size()));
}

inline LstmModel load_model(const std::string& base) {
  const auto kv = io::KeyValueFile::read(base + ".meta");
  if (kv.get("kind") != "lifi-lstm") throw ParseError(base + ".meta: not an LSTM model file");
  io::KeyValueFile dm;
  dm.set("kind", "lifi-dataset");
  for (const char* key : {"num_aps", "prior_slots", "posterior_slots", "size", "snr_floor_db",
                          "snr_users", "feature_scale", "train_fraction", "seed", "fingerprint",
                          "feature_mean", "feature_std", "label_offset", "label_scale"})
    dm.set(key, kv.get(std::string("dataset.") + key));
  LstmModel model;
  model.meta = meta_from_kv(dm);
  model.activation = kv.get("activation");
  model.recurrent_activation = kv.get("recurrent_activation");
  if (model.activation != "tanh" || model.recurrent_activation != "sigmoid")
    throw ParseError(base + ".meta: only tanh/sigmoid LSTM cells are supported");
  const int m = static_cast<int>(kv.get_int("input_size"));
  const int h = static_cast<int>(kv.get_int("hidden_size"));
  const int d = static_cast<int>(kv.get_int("output_size"));
  if (m != model.meta.num_aps || d != model.meta.label_cols())
    throw ParseError(base + ".meta: model shape does not match its normalization metadata");
  model.params = LstmParams(m, h, d);
  const auto n = static_cast<std::size_t>(model.params.flat().size());
  if (static_cast<std::size_t>(kv.get_int("parameter_count")) != n)
    throw ParseError(base + ".meta: parameter_count does not match the declared shape");
  std::ifstream in(base + ".params", std::ios::binary);
  if (!in) throw ParseError("cannot open '" + base + ".params'");
  const std::size_t got = io::read_f64(in, model.params.flat().data(), n);
  if (got != n)
    throw ParseError(base + ".params: expected " + std::to_string(n) + " parameters, found " +
                     std::to_string(got));
  if (in.peek() != std::char_traits<char>::eof())
    throw ParseError(base + ".params: trailing bytes after " + std::to_string(n) + " parameters");
  if (!model.params.flat().allFinite()) throw ParseError(base + ".params: non-finite parameter");
  return model;
}

}  // namespace lifi
