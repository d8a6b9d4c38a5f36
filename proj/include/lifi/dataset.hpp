#pragma once

// Supervised dataset: windows of N prior uplink SNR vectors (features) paired with
// the L_max posterior poses of the same trajectory (labels).

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lifi/channel.hpp"
#include "lifi/error.hpp"
#include "lifi/io.hpp"
#include "lifi/mobility.hpp"
#include "lifi/rng.hpp"

namespace lifi {

enum class FeatureScale { kDecibel, kLinear };

inline const char* to_string(FeatureScale s) { return s == FeatureScale::kDecibel ? "db" : "linear"; }

inline FeatureScale parse_feature_scale(const std::string& s) {
  if (s == "db") return FeatureScale::kDecibel;
  if (s == "linear") return FeatureScale::kLinear;
  throw ConfigError("feature_scale must be 'db' or 'linear', got '" + s + "'");
}

struct DatasetConfig {
  int prior_slots = 8;      // N
  int posterior_slots = 4;  // L_max
  std::size_t size = 20000;  // Q
  double snr_floor_db = -30.0;
  double train_fraction = 0.9;
  int snr_users = 1;  // users sharing the uplink band when the features were measured
  FeatureScale feature_scale = FeatureScale::kDecibel;
  double feature_noise_std = 0.0;  // multiplicative gain noise, off by default
};

inline constexpr int kPoseDims = 7;
using EncodedPose = std::array<double, kPoseDims>;

/// (x, y, z, sin yaw, cos yaw, pitch, roll), positions in m and angles in deg.
inline EncodedPose encode_pose(const Pose& p) {
  const double a = deg2rad(p.alpha);
  return {p.x, p.y, p.z, std::sin(a), std::cos(a), p.beta, p.gamma};
}

inline Pose decode_pose(const EncodedPose& e) {
  Pose p;
  p.x = e[0];
  p.y = e[1];
  p.z = e[2];
  p.alpha = wrap_360(rad2deg(std::atan2(e[3], e[4])));
  p.beta = std::clamp(e[5], -180.0, std::nextafter(180.0, 0.0));
  p.gamma = std::clamp(e[6], -90.0, std::nextafter(90.0, 0.0));
  return p;
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct DatasetMeta {
  int num_aps = 0;          // M
  int prior_slots = 0;      // N
  int posterior_slots = 0;  // L_max
  std::size_t size = 0;     // Q
  double snr_floor_db = -30.0;
  int snr_users = 1;
  FeatureScale feature_scale = FeatureScale::kDecibel;
  double train_fraction = 0.9;
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::vector<double> feature_mean, feature_std;  // per AP
  std::vector<double> label_offset, label_scale;     // per encoded pose dimension

  int feature_cols() const { return prior_slots * num_aps; }
  int label_cols() const { return posterior_slots * kPoseDims; }
  bool has_statistics() const { return !feature_mean.empty(); }
};

/// Row q holds N*M features (slot-major) followed by L_max*7 encoded labels.
struct Dataset {
  DatasetMeta meta;
  RowMatrix features;  // Q x (N*M), dB (or linear) SNR, not normalized
  RowMatrix labels;    // Q x (L_max*7), encoded poses, not normalized
};

struct Sample {
  Eigen::MatrixXd features;  // N x M
  Eigen::MatrixXd labels;    // L_max x 7
};

inline std::uint64_t sample_seed(std::uint64_t master, std::size_t q) {
  return derive_seed(master, stream::kSample, q);
}

/// Converts one linear SNR vector into feature units. `users` is the K the SNR was
/// measured with; values are rescaled to the dataset's reference K before conversion.
inline Eigen::RowVectorXd snr_features(const Eigen::VectorXd& snr_linear, int users,
                                       int reference_users, FeatureScale scale,
                                       double floor_db) {
  Eigen::RowVectorXd out(snr_linear.size());
  const double rescale = static_cast<double>(reference_users) / users;
  for (Eigen::Index i = 0; i < snr_linear.size(); ++i) {
    const double r = snr_linear[i] * rescale;
    if (scale == FeatureScale::kDecibel) {
      out[i] = r > 0 ? std::max(10.0 * std::log10(r), floor_db) : floor_db;
    } else {
      out[i] = r;
    }
  }
  return out;
}

inline void validate(const DatasetConfig& c) {
  if (c.prior_slots < 1) throw ConfigError("dataset.prior_slots must be >= 1");
  if (c.posterior_slots < 1) throw ConfigError("dataset.posterior_slots must be >= 1");
  if (!(c.train_fraction > 0 && c.train_fraction < 1))
    throw ConfigError("dataset.train_fraction must lie in (0, 1)");
  if (c.snr_users < 1) throw ConfigError("dataset.snr_users must be >= 1");
  if (c.feature_noise_std < 0) throw ConfigError("dataset.feature_noise_std must be >= 0");
}

/// Everything the generator depends on.
struct GeneratorSetup {
  RoomLayout room = default_room();
  DeviceGeometry device;
  MobilityConfig mobility;
  DatasetConfig dataset;
};

inline std::string fingerprint(const GeneratorSetup& s) {
  std::ostringstream o;
  auto d = [&](double v) { o << io::format_double(v) << ';'; };
  d(s.room.length), d(s.room.width), d(s.room.height);
  for (const auto& p : s.room.ap_positions) d(p.x()), d(p.y()), d(p.z());
  for (const LinkParams* lp : {&s.room.downlink, &s.room.uplink}) {
    d(lp->half_power_angle_deg), d(lp->pd_area), d(lp->fov_deg), d(lp->responsivity);
    d(lp->filter_gain), d(lp->concentrator_gain);
  }
  d(s.room.noise_psd), d(s.room.bandwidth), d(s.room.dc_bias), d(s.room.wall_reflectance);
  d(s.room.nlos_enabled ? 1.0 : 0.0), d(s.room.nlos_patch_size);
  d(s.device.offset.x()), d(s.device.offset.y()), d(s.device.offset.z());
  const auto& m = s.mobility;
  d(m.speed), d(m.slot_duration), d(m.ue_height), d(m.wall_margin), d(m.yaw_jitter_std);
  d(m.pitch_mean), d(m.pitch_std), d(m.roll_mean), d(m.roll_std), d(m.pause_probability);
  const auto& c = s.dataset;
  d(c.prior_slots), d(c.posterior_slots), d(c.snr_floor_db), d(c.snr_users);
  o << to_string(c.feature_scale) << ';';
  d(c.feature_noise_std);
  return io::hex64(io::fnv1a(o.str()));
}

/// Builds one (features, labels) pair from a trajectory of N + L_max poses.
inline Sample sample_from_trajectory(const Trajectory& traj, std::uint64_t noise_seed,
                                     const GeneratorSetup& s) {
  const int n = s.dataset.prior_slots, l = s.dataset.posterior_slots;
  const auto m = static_cast<Eigen::Index>(s.room.num_aps());
  Sample out{Eigen::MatrixXd(n, m), Eigen::MatrixXd(l, kPoseDims)};
  Rng noise_rng(noise_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int j = 0; j < n; ++j) {
    ChannelVector g = uplink_channel(traj[j], s.room, s.device);
    if (s.dataset.feature_noise_std > 0)
      for (Eigen::Index i = 0; i < m; ++i)
        g[i] *= std::max(0.0, 1.0 + s.dataset.feature_noise_std * noise(noise_rng));
    const Eigen::VectorXd snr = uplink_snr(g, s.room, s.dataset.snr_users);
    out.features.row(j) = snr_features(snr, s.dataset.snr_users, s.dataset.snr_users,
                                       s.dataset.feature_scale, s.dataset.snr_floor_db);
  }
  for (int j = 0; j < l; ++j) {
    const EncodedPose e = encode_pose(traj[n + j]);
    for (int d = 0; d < kPoseDims; ++d) out.labels(j, d) = e[d];
  }
  return out;
}

inline Trajectory sample_trajectory_for(std::uint64_t seed, const GeneratorSetup& s) {
  return sample_trajectory(seed, s.dataset.prior_slots + s.dataset.posterior_slots, s.mobility,
                           s.room);
}

inline Sample generate_sample(std::uint64_t seed, const GeneratorSetup& s) {
  return sample_from_trajectory(sample_trajectory_for(seed, s),
                                derive_seed(seed, stream::kNoise), s);
}

struct Split {
  std::vector<std::size_t> train, test;
};

/// Deterministic shuffled split; the first round(fraction * n) shuffled indices train.
inline Split split(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0 && fraction < 1)) throw ConfigError("split fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, stream::kSplit));
  // Fisher-Yates with an explicit draw so the permutation is library-independent.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return s;
}

inline Split split(const Dataset& d) {
  return split(d.meta.size, d.meta.train_fraction, d.meta.seed);
}

/// Feature standardization (per AP, pooled over slots) and label min-max scaling,
/// estimated on the given rows only. Constant columns get unit scale.
inline void compute_statistics(Dataset& d, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw ConfigError("cannot compute statistics on an empty partition");
  auto& meta = d.meta;
  const int m = meta.num_aps, n = meta.prior_slots, l = meta.posterior_slots;
  meta.feature_mean.assign(m, 0.0);
  meta.feature_std.assign(m, 1.0);
  const double count = static_cast<double>(rows.size()) * n;
  for (int a = 0; a < m; ++a) {
    double sum = 0;
    for (auto r : rows)
      for (int j = 0; j < n; ++j) sum += d.features(r, j * m + a);
    const double mean = sum / count;
    double var = 0;
    for (auto r : rows)
      for (int j = 0; j < n; ++j) {
        const double dv = d.features(r, j * m + a) - mean;
        var += dv * dv;
      }
    var /= count;
    meta.feature_mean[a] = mean;
    meta.feature_std[a] = var > 0 ? std::sqrt(var) : 1.0;
  }
  meta.label_offset.assign(kPoseDims, 0.0);
  meta.label_scale.assign(kPoseDims, 1.0);
  for (int dim : {0, 1, 2, 5, 6}) {
    double lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
    for (auto r : rows)
      for (int j = 0; j < l; ++j) {
        const double v = d.labels(r, j * kPoseDims + dim);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    meta.label_offset[dim] = lo;
    meta.label_scale[dim] = hi > lo ? hi - lo : 1.0;
  }
}

namespace detail {
inline void check_scales(const DatasetMeta& meta) {
  if (!meta.has_statistics()) throw ConfigError("dataset metadata has no normalization statistics");
  for (double s : meta.feature_std)
    if (!(s > 0)) throw NumericError("zero feature scale in normalization statistics");
  for (double s : meta.label_scale)
    if (!(s > 0)) throw NumericError("zero label scale in normalization statistics");
}
}  // namespace detail

/// N x M feature window -> standardized copy.
inline Eigen::MatrixXd normalize_features(const Eigen::MatrixXd& window, const DatasetMeta& meta) {
  detail::check_scales(meta);
  Eigen::MatrixXd out(window.rows(), window.cols());
  for (Eigen::Index j = 0; j < window.rows(); ++j)
    for (Eigen::Index a = 0; a < window.cols(); ++a)
      out(j, a) = (window(j, a) - meta.feature_mean[a]) / meta.feature_std[a];
  return out;
}

/// Works on any row-vector layout of L blocks of 7 encoded pose values.
inline Eigen::VectorXd normalize_labels(const Eigen::VectorXd& encoded, const DatasetMeta& meta) {
  detail::check_scales(meta);
  Eigen::VectorXd out(encoded.size());
  for (Eigen::Index i = 0; i < encoded.size(); ++i) {
    const auto dim = static_cast<std::size_t>(i % kPoseDims);
    out[i] = (encoded[i] - meta.label_offset[dim]) / meta.label_scale[dim];
  }
  return out;
}

inline Eigen::VectorXd denormalize_labels(const Eigen::VectorXd& normalized,
                                          const DatasetMeta& meta) {
  detail::check_scales(meta);
  Eigen::VectorXd out(normalized.size());
  for (Eigen::Index i = 0; i < normalized.size(); ++i) {
    const auto dim = static_cast<std::size_t>(i % kPoseDims);
    out[i] = normalized[i] * meta.label_scale[dim] + meta.label_offset[dim];
  }
  return out;
}

inline Eigen::MatrixXd feature_window(const Dataset& d, std::size_t row) {
  const int n = d.meta.prior_slots, m = d.meta.num_aps;
  Eigen::MatrixXd w(n, m);
  for (int j = 0; j < n; ++j)
    for (int a = 0; a < m; ++a) w(j, a) = d.features(static_cast<Eigen::Index>(row), j * m + a);
  return w;
}

/// Generates Q samples with per-sample seeds derived from `seed`, then fits the
/// normalization statistics on the training partition. `threads` = 1 runs serially;
/// the output does not depend on the thread count.
inline Dataset build_dataset(std::size_t q, std::uint64_t seed, const GeneratorSetup& s,
                             unsigned threads = 1) {
  if (q < 10) throw ConfigError("dataset size Q must be >= 10");
  validate(s.room);
  validate(s.mobility, s.room);
  validate(s.dataset);
  Dataset d;
  auto& meta = d.meta;
  meta.num_aps = static_cast<int>(s.room.num_aps());
  meta.prior_slots = s.dataset.prior_slots;
  meta.posterior_slots = s.dataset.posterior_slots;
  meta.size = q;
  meta.snr_floor_db = s.dataset.snr_floor_db;
  meta.snr_users = s.dataset.snr_users;
  meta.feature_scale = s.dataset.feature_scale;
  meta.train_fraction = s.dataset.train_fraction;
  meta.seed = seed;
  meta.fingerprint = fingerprint(s);
  d.features.resize(static_cast<Eigen::Index>(q), meta.feature_cols());
  d.labels.resize(static_cast<Eigen::Index>(q), meta.label_cols());

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const Sample smp = generate_sample(sample_seed(seed, r), s);
      const auto row = static_cast<Eigen::Index>(r);
      for (int j = 0; j < meta.prior_slots; ++j)
        d.features.row(row).segment(j * meta.num_aps, meta.num_aps) = smp.features.row(j);
      for (int j = 0; j < meta.posterior_slots; ++j)
        d.labels.row(row).segment(j * kPoseDims, kPoseDims) = smp.labels.row(j);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(q)));
  if (threads == 1) {
    work(0, q);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (q + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk, e = std::min(q, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  compute_statistics(d, split(d).train);
  return d;
}

// ---------------------------------------------------------------------------
// Persistence: <base>.meta (key: value text) + <base>.bin (LE float64 rows) or
// <base>.csv when saved in text mode.

inline io::KeyValueFile meta_to_kv(const DatasetMeta& m) {
  io::KeyValueFile kv;
  kv.set("kind", "lifi-dataset");
  kv.set_int("version", 1);
  kv.set_int("num_aps", m.num_aps);
  kv.set_int("prior_slots", m.prior_slots);
  kv.set_int("posterior_slots", m.posterior_slots);
  kv.set_int("size", static_cast<long long>(m.size));
  kv.set("snr_floor_db", m.snr_floor_db);
  kv.set_int("snr_users", m.snr_users);
  kv.set("feature_scale", to_string(m.feature_scale));
  kv.set("train_fraction", m.train_fraction);
  kv.set("seed", std::to_string(m.seed));
  kv.set("fingerprint", m.fingerprint);
  kv.set("feature_mean", m.feature_mean);
  kv.set("feature_std", m.feature_std);
  kv.set("label_offset", m.label_offset);
  kv.set("label_scale", m.label_scale);
  return kv;
}

inline DatasetMeta meta_from_kv(const io::KeyValueFile& kv) {
  if (kv.get("kind") != "lifi-dataset") throw ParseError("not a dataset metadata file");
  DatasetMeta m;
  m.num_aps = static_cast<int>(kv.get_int("num_aps"));
  m.prior_slots = static_cast<int>(kv.get_int("prior_slots"));
  m.posterior_slots = static_cast<int>(kv.get_int("posterior_slots"));
  m.size = static_cast<std::size_t>(kv.get_int("size"));
  m.snr_floor_db = kv.get_double("snr_floor_db");
  m.snr_users = static_cast<int>(kv.get_int("snr_users"));
  m.feature_scale = parse_feature_scale(kv.get("feature_scale"));
  m.train_fraction = kv.get_double("train_fraction");
  m.seed = std::stoull(kv.get("seed"));
  m.fingerprint = kv.get("fingerprint");
  m.feature_mean = kv.get_vector("feature_mean");
  m.feature_std = kv.get_vector("feature_std");
  m.label_offset = kv.get_vector("label_offset");
  m.label_scale = kv.get_vector("label_scale");
  if (m.num_aps < 1 || m.prior_slots < 1 || m.posterior_slots < 1)
    throw ParseError("dataset metadata: M, N and L_max must be >= 1");
  if (m.feature_mean.size() != static_cast<std::size_t>(m.num_aps) ||
      m.feature_std.size() != static_cast<std::size_t>(m.num_aps))
    throw ParseError("dataset metadata: feature statistics length " +
                     std::to_string(m.feature_mean.size()) + " does not match num_aps " +
                     std::to_string(m.num_aps));
  if (m.label_offset.size() != kPoseDims || m.label_scale.size() != kPoseDims)
    throw ParseError("dataset metadata: label statistics must have 7 entries");
  return m;
}

inline void save_dataset(const Dataset& d, const std::string& base, bool text = false) {
  auto kv = meta_to_kv(d.meta);
  kv.set("format", text ? "csv" : "binary");
  kv.write(base + ".meta");
  const Eigen::Index rows = d.features.rows();
  if (text) {
    std::ofstream out(base + ".csv", std::ios::binary);
    if (!out) throw Error("cannot open '" + base + ".csv' for writing");
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < d.features.cols(); ++c)
        out << (c ? "," : "") << io::format_double(d.features(r, c));
      for (Eigen::Index c = 0; c < d.labels.cols(); ++c)
        out << ',' << io::format_double(d.labels(r, c));
      out << '\n';
    }
  } else {
    std::ofstream out(base + ".bin", std::ios::binary);
    if (!out) throw Error("cannot open '" + base + ".bin' for writing");
    std::vector<double> row(static_cast<std::size_t>(d.features.cols() + d.labels.cols()));
    for (Eigen::Index r = 0; r < rows; ++r) {
      std::copy(d.features.row(r).begin(), d.features.row(r).end(), row.begin());
      std::copy(d.labels.row(r).begin(), d.labels.row(r).end(),
                row.begin() + d.features.cols());
      io::write_f64(out, row.data(), row.size());
    }
  }
}

inline Dataset load_dataset(const std::string& base) {
  Dataset d;
  const auto kv = io::KeyValueFile::read(base + ".meta");
  d.meta = meta_from_kv(kv);
  const auto& m = d.meta;
  const auto q = static_cast<Eigen::Index>(m.size);
  const int fc = m.feature_cols(), lc = m.label_cols(), cols = fc + lc;
  d.features.resize(q, fc);
  d.labels.resize(q, lc);
  const std::string expect = "expected " + std::to_string(m.size) + " records of " +
                             std::to_string(cols) + " values";
  std::vector<double> row(static_cast<std::size_t>(cols));
  auto store = [&](Eigen::Index r) {
    for (int c = 0; c < fc; ++c) d.features(r, c) = row[c];
    for (int c = 0; c < lc; ++c) d.labels(r, c) = row[fc + c];
  };

  const std::string format = kv.has("format") ? kv.get("format") : "binary";
  if (format == "csv") {
    const std::string path = base + ".csv";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    for (Eigen::Index r = 0; r < q; ++r) {
      if (!std::getline(in, line))
        throw ParseError(path + ": truncated after " + std::to_string(r) + " records; " + expect);
      std::size_t c = 0, start = 0;
      while (true) {
        const auto comma = line.find(',', start);
        const std::string tok = line.substr(start, comma - start);
        if (c >= static_cast<std::size_t>(cols))
          throw ParseError(path + ":" + std::to_string(r + 1) + ": too many columns; " + expect);
        row[c++] = io::parse_double(tok, path + ":" + std::to_string(r + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (c != static_cast<std::size_t>(cols))
        throw ParseError(path + ":" + std::to_string(r + 1) + ": found " + std::to_string(c) +
                         " columns; " + expect);
      store(r);
    }
    if (std::getline(in, line) && !line.empty())
      throw ParseError(path + ": extra data after " + std::to_string(q) + " records; " + expect);
  } else if (format == "binary") {
    const std::string path = base + ".bin";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    for (Eigen::Index r = 0; r < q; ++r) {
      const std::size_t got = io::read_f64(in, row.data(), row.size());
      if (got != row.size())
        throw ParseError(path + ": truncated at byte offset " +
                         std::to_string((static_cast<std::size_t>(r) * cols + got) * 8) + " (record " +
                         std::to_string(r) + "); " + expect);
      store(r);
    }
    if (in.peek() != std::char_traits<char>::eof())
      throw ParseError(path + ": trailing bytes after " + std::to_string(q) + " records; " + expect +
                       " (record width does not match metadata)");
  } else {
    throw ParseError(base + ".meta: unknown format '" + format + "'");
  }
  return d;
}

}  // namespace lifi
