#include <gtest/gtest.h>

#include <sstream>

#include "lifi/harness.hpp"

using namespace lifi;

namespace {

const LstmModel& small_model() {
  static const LstmModel model = [] {
    GeneratorSetup s;
    const Dataset d = build_dataset(300, 21, s);
    TrainConfig c;
    c.hidden = 8;
    c.epochs = 2;
    c.batch_size = 64;
    return train(d, c).model;
  }();
  return model;
}

Environment environment(const GeneratorSetup& s = {}) {
  Environment env;
  env.setup = s;
  env.model = &small_model();
  return env;
}

ScenarioConfig scenario(int users, int slots) {
  ScenarioConfig sc;
  sc.users = users;
  sc.slots = slots;
  sc.horizon = 2;
  sc.rate_threshold = 1.0;
  return sc;
}

}  // namespace

TEST(SnrWindow, KeepsLastEntriesWithConsecutiveSlots) {
  SnrWindow w(3, 1);
  for (long t = 5; t < 10; ++t) w.push(t, Eigen::VectorXd::Constant(2, double(t)));
  EXPECT_TRUE(w.warm());
  EXPECT_EQ(w.size(), 3u);
  EXPECT_EQ(w.slots().front(), 7);
  EXPECT_EQ(w.snr(0)[0], 7.0);
  EXPECT_THROW(w.push(12, Eigen::VectorXd::Zero(2)), ConfigError);
}

TEST(CollectWindow, MatchesDatasetFeaturesForSameTrajectory) {
  const GeneratorSetup s;
  const Trajectory t = sample_trajectory_for(55, s);
  const Sample smp = generate_sample(55, s);
  const SnrWindow w = collect_window(t, 7, 8, s.room, s.device, 1);
  ASSERT_EQ(w.size(), 8u);
  EXPECT_EQ(w.slots().front(), 0);
  EXPECT_TRUE(w.features(1, FeatureScale::kDecibel, -30).isApprox(smp.features, 1e-12));
}

TEST(CollectWindow, UserCountShiftsDecibelsByConstant) {
  const GeneratorSetup s;
  const Trajectory t = sample_trajectory_for(56, s);
  const auto one = collect_window(t, 7, 8, s.room, s.device, 1).features(1, FeatureScale::kDecibel, -300);
  const auto four = collect_window(t, 7, 8, s.room, s.device, 4).features(4, FeatureScale::kDecibel, -300);
  for (Eigen::Index i = 0; i < one.size(); ++i)
    if (one.data()[i] > -300) {
      EXPECT_NEAR(four.data()[i] - one.data()[i], 10 * std::log10(4.0), 1e-9);
    }
  // Rescaled to the reference user count, the shift disappears.
  const auto back = collect_window(t, 7, 8, s.room, s.device, 4).features(1, FeatureScale::kDecibel, -300);
  EXPECT_TRUE(back.isApprox(one, 1e-12));
}

TEST(CollectWindow, InsufficientHistoryIsAnError) {
  const GeneratorSetup s;
  const Trajectory t = sample_trajectory_for(57, s);
  EXPECT_THROW(collect_window(t, 6, 8, s.room, s.device, 1), ConfigError);
}

TEST(PredictChannel, PerfectPredictorReproducesTrueChannel) {
  const GeneratorSetup s;
  std::vector<Trajectory> trajs;
  std::vector<SnrWindow> windows;
  std::vector<Pose> target;
  for (int k = 0; k < 3; ++k) {
    trajs.push_back(sample_trajectory_for(100 + k, s));
    windows.push_back(collect_window(trajs.back(), 7, 8, s.room, s.device, 3));
    target.push_back(trajs.back()[9]);
  }
  const PosePredictor perfect = [&](std::size_t k, const SnrWindow&, int l) { return trajs[k][7 + l]; };
  const Matrix h = predict_channel_matrix(perfect, windows, 2, s.room, s.device);
  EXPECT_EQ(h, stack_downlink(target, s.room, s.device));
  const Matrix one = predict_channel_matrix(perfect, {windows[0]}, 2, s.room, s.device);
  EXPECT_EQ(one.rows(), 1);
  EXPECT_EQ(one.cols(), 16);
}

TEST(PredictChannel, StaleChannelErrorGrowsWithHorizon) {
  const GeneratorSetup s;
  std::vector<double> err(4, 0.0);
  for (int q = 0; q < 400; ++q) {
    const Trajectory t = sample_trajectory_for(sample_seed(8, q), s);
    const SnrWindow w = collect_window(t, 7, 8, s.room, s.device, 1);
    const PosePredictor persist = [&](std::size_t, const SnrWindow&, int) { return t[7]; };
    for (int l = 1; l <= 4; ++l) {
      const Matrix h = predict_channel_matrix(persist, {w}, l, s.room, s.device);
      const Eigen::VectorXd truth = downlink_channel(t[7 + l], s.room, s.device);
      err[l - 1] += (h.row(0).transpose() - truth).norm() / std::max(truth.norm(), 1e-12);
    }
  }
  for (int l = 1; l < 4; ++l) EXPECT_GT(err[l], err[l - 1]);
}

TEST(PredictChannel, ChangeGateReusesCurrentRowForStaticUser) {
  GeneratorSetup s;
  s.mobility.speed = 0;
  s.mobility.yaw_jitter_std = s.mobility.pitch_std = s.mobility.roll_std = 0;
  const Trajectory t = sample_trajectory_for(9, s);
  const SnrWindow w = collect_window(t, 7, 8, s.room, s.device, 1);
  EXPECT_TRUE(w.unchanged());
  const Matrix now = stack_downlink({t[7]}, s.room, s.device);
  int calls = 0;
  const PosePredictor counting = [&](std::size_t, const SnrWindow&, int) { ++calls; return t[0]; };
  EXPECT_EQ(predict_channel_matrix(counting, {w}, 2, s.room, s.device, &now), now);
  EXPECT_EQ(calls, 0);
}

TEST(RunSlot, GenieRealizesItsDesignRates) {
  const auto env = environment();
  const auto rec = run_slot(env, scenario(4, 1), 3, {CaseId::kGenie}, {SolverKind::kCcp});
  const auto& o = rec.outcomes.at({CaseId::kGenie, SolverKind::kCcp});
  EXPECT_NEAR(o.sum_rate, o.design_objective, 1e-6);
  EXPECT_GT(o.admitted, 0);
}

TEST(RunSlot, PersistenceMatchesAgedChannel) {
  const auto env = environment();
  const auto rec = run_slot(env, scenario(4, 1), 4, {CaseId::kPersistence, CaseId::kAged},
                            {SolverKind::kCcp});
  EXPECT_EQ(rec.outcomes.at({CaseId::kPersistence, SolverKind::kCcp}).sum_rate,
            rec.outcomes.at({CaseId::kAged, SolverKind::kCcp}).sum_rate);
}

TEST(RunSlot, RecomputableFromSeedInIsolation) {
  const auto env = environment();
  const auto sc = scenario(3, 6);
  const std::vector<CaseId> cases(kAllCases.begin(), kAllCases.end());
  const auto all = run_scenario(env, sc, cases, {SolverKind::kCcp});
  const auto again = run_slot(env, sc, 5, cases, {SolverKind::kCcp});
  EXPECT_EQ(again.seed, all[5].seed);
  for (const auto& [key, o] : all[5].outcomes) {
    EXPECT_EQ(again.outcomes.at(key).sum_rate, o.sum_rate);
    EXPECT_EQ(again.outcomes.at(key).admitted, o.admitted);
  }
  EXPECT_EQ(again.position_error, all[5].position_error);
}

TEST(RunSlot, StaticUsersCollapseAllCases) {
  GeneratorSetup s;
  s.mobility.speed = 0;
  s.mobility.yaw_jitter_std = s.mobility.pitch_std = s.mobility.roll_std = 0;
  const auto env = environment(s);
  const std::vector<CaseId> cases(kAllCases.begin(), kAllCases.end());
  for (const auto& rec : run_scenario(env, scenario(4, 10), cases, {SolverKind::kCcp})) {
    const double ref = rec.outcomes.at({CaseId::kGenie, SolverKind::kCcp}).sum_rate;
    for (const auto& [key, o] : rec.outcomes)
      EXPECT_LE(std::abs(o.sum_rate - ref), 1e-4 * std::max(ref, 1e-12));
  }
}

TEST(RunSlot, InfeasibleSlotsAreRecordedWithZeroAdmitted) {
  const auto env = environment();
  auto sc = scenario(2, 1);
  sc.rate_threshold = 40.0;
  const auto rec = run_slot(env, sc, 0, {CaseId::kGenie}, {SolverKind::kCcp});
  const auto& o = rec.outcomes.at({CaseId::kGenie, SolverKind::kCcp});
  EXPECT_EQ(o.admitted, 0);
  EXPECT_EQ(o.sum_rate, 0.0);
}

TEST(Scenario, ValidationRejectsBadValues) {
  const auto env = environment();
  auto sc = scenario(4, 1);
  sc.horizon = 5;
  EXPECT_THROW(validate(sc, env), ConfigError);
  sc = scenario(17, 1);
  EXPECT_THROW(validate(sc, env), ConfigError);
}

TEST(Aggregate, MeanAndHalfWidth) {
  const auto m = mean_ci({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.half_width, 1.96 * std::sqrt(5.0 / 3.0) / 2.0, 1e-12);
  EXPECT_EQ(mean_ci({}).n, 0u);
}

TEST(Csv, HeadersNameUnitsAndTimingIsOptional) {
  const auto env = environment();
  auto sc = scenario(2, 3);
  sc.user_sweep = {2};
  const auto res = experiment_sumrate_vs_users(env, sc, {SolverKind::kCcp});
  std::ostringstream with, without, trials;
  write_sweep_csv(with, "users", res.rows, true);
  write_sweep_csv(without, "users", res.rows, false);
  write_trials_csv(trials, "users", res.trials, false);
  EXPECT_NE(with.str().find("mean_sum_rate_nats"), std::string::npos);
  EXPECT_NE(with.str().find("solve_time_s"), std::string::npos);
  EXPECT_EQ(without.str().find("solve_time_s"), std::string::npos);
  EXPECT_NE(trials.str().find("position_error_m"), std::string::npos);
  const std::string header = trials.str().substr(0, trials.str().find('\n'));
  EXPECT_EQ(header.find(",users,"), std::string::npos) << header;
  // header + 4 cases
  const std::string text = with.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}
