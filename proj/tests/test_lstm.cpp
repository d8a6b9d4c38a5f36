#include <gtest/gtest.h>

#include <filesystem>

#include "lifi/lstm.hpp"
#include "support/gradcheck.hpp"

using namespace lifi;
using lifi::testing::check_gradient;
using lifi::testing::random_batch;
using lifi::testing::random_params;

TEST(LstmForward, ZeroParametersOutputHeadBias) {
  LstmParams p(4, 5, 14);
  p.by().setLinSpaced(14, -1, 1);
  Eigen::MatrixXd w = Eigen::MatrixXd::Random(3, 4);
  EXPECT_TRUE(lstm_forward(p, w).isApprox(p.by().eval()));
}

TEST(LstmForward, OutputWidthIndependentOfSequenceLength) {
  const auto p = random_params(4, 5, 14, 1);
  for (int n : {1, 3, 8}) EXPECT_EQ(lstm_forward(p, Eigen::MatrixXd::Random(n, 4)).size(), 14);
}

TEST(LstmForward, SensitiveToInputOrder) {
  const auto p = random_params(4, 5, 14, 2);
  Eigen::MatrixXd w = Eigen::MatrixXd::Random(3, 4);
  Eigen::MatrixXd swapped = w;
  swapped.row(0).swap(swapped.row(1));
  EXPECT_GT((lstm_forward(p, w) - lstm_forward(p, swapped)).norm(), 1e-6);
}

TEST(LstmForward, NonFiniteInputIsAnError) {
  const auto p = random_params(4, 5, 14, 3);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 4);
  w(1, 2) = std::nan("");
  EXPECT_THROW(lstm_forward(p, w), NumericError);
}

TEST(LstmForward, HandComputedSingleUnitStep) {
  // M = 1, H = 1, D = 1, one step: everything can be evaluated by hand.
  LstmParams p(1, 1, 1);
  p.wx() << 0.5, -0.3, 0.8, 0.2;
  p.b() << 0.1, 1.0, -0.2, 0.0;
  p.wy() << 2.0;
  p.by() << 0.5;
  const double x = 0.7;
  auto sig = [](double z) { return 1 / (1 + std::exp(-z)); };
  const double i = sig(0.5 * x + 0.1), g = std::tanh(0.8 * x - 0.2), o = sig(0.2 * x);
  const double c = i * g;
  const double expected = 2.0 * o * std::tanh(c) + 0.5;
  EXPECT_NEAR(lstm_forward(p, Eigen::MatrixXd::Constant(1, 1, x))[0], expected, 1e-14);
}

TEST(LstmBackward, MatchesFiniteDifferences) {
  const auto p = random_params(4, 5, 14, 4);
  const auto batch = random_batch(4, 3, 14, 6, 5);
  const auto gc = check_gradient(p, batch);
  EXPECT_LT(gc.max_rel_error, 1e-4) << "worst parameter " << gc.worst;
}

TEST(LstmBackward, MatchesFiniteDifferencesAtInitialization) {
  const auto p = init_params(4, 5, 14, 6);
  const auto batch = random_batch(4, 3, 14, 4, 7);
  EXPECT_LT(check_gradient(p, batch).max_rel_error, 1e-4);
}

TEST(LstmBackward, ZeroResidualGivesZeroLossAndGradient) {
  const auto p = random_params(4, 5, 14, 8);
  auto batch = random_batch(4, 3, 14, 5, 9);
  batch.targets = lstm_forward(p, batch.inputs);
  const auto lg = lstm_backward(p, batch);
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_EQ(lg.grad.flat().cwiseAbs().maxCoeff(), 0.0);
}

TEST(LstmBackward, LossWeightScalesGradient) {
  const auto p = random_params(4, 5, 14, 10);
  const auto batch = random_batch(4, 3, 14, 5, 11);
  const auto a = lstm_backward(p, batch);
  const auto b = lstm_backward(p, batch, 3.0);
  EXPECT_NEAR(b.loss, 3 * a.loss, 1e-12 * b.loss);
  EXPECT_TRUE(b.grad.flat().isApprox(3 * a.grad.flat(), 1e-12));
}

TEST(LstmBackward, EmptyBatchIsAnError) {
  const auto p = random_params(4, 5, 14, 12);
  EXPECT_THROW(lstm_backward(p, SequenceBatch{}), ConfigError);
}

TEST(InitParams, ForgetBiasOneOthersBounded) {
  const auto p = init_params(16, 10, 28, 1);
  EXPECT_EQ(p.b().segment(10, 10), Eigen::VectorXd::Ones(10));
  EXPECT_EQ(p.b().head(10).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(p.wx().cwiseAbs().maxCoeff(), 1 / std::sqrt(10.0));
}

namespace {

GeneratorSetup tiny_setup() {
  GeneratorSetup s;
  s.dataset.prior_slots = 4;
  s.dataset.posterior_slots = 2;
  return s;
}

TrainConfig tiny_train() {
  TrainConfig c;
  c.hidden = 8;
  c.epochs = 3;
  c.batch_size = 32;
  c.learning_rate = 3e-3;
  return c;
}

}  // namespace

TEST(Train, HistoryHasOneEntryPerEpochAndIsDeterministic) {
  const Dataset d = build_dataset(300, 1, tiny_setup());
  const auto a = train(d, tiny_train());
  const auto b = train(d, tiny_train());
  ASSERT_EQ(a.history.size(), 4u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train, b.history[i].train);
    EXPECT_EQ(a.history[i].validation, b.history[i].validation);
  }
  EXPECT_EQ(a.model.params.flat(), b.model.params.flat());
}

TEST(Train, ReturnsBestValidationSnapshotAndImproves) {
  const Dataset d = build_dataset(300, 2, tiny_setup());
  const auto r = train(d, tiny_train());
  double best = r.history.front().validation;
  for (const auto& h : r.history) best = std::min(best, h.validation);
  EXPECT_EQ(r.history[static_cast<std::size_t>(r.best_epoch)].validation, best);
  EXPECT_LT(best, r.history.front().validation);
}

TEST(Train, RejectsBadConfig) {
  const Dataset d = build_dataset(100, 3, tiny_setup());
  auto c = tiny_train();
  c.learning_rate = 0;
  EXPECT_THROW(train(d, c), ConfigError);
}

TEST(Train, DivergenceReportsEpoch) {
  const Dataset d = build_dataset(100, 4, tiny_setup());
  auto c = tiny_train();
  c.learning_rate = 1e308;
  c.clip_norm = 1e308;
  try {
    train(d, c);
    FAIL() << "expected divergence";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
  }
}

TEST(Predict, HorizonIndexingAndRanges) {
  const auto s = tiny_setup();
  const Dataset d = build_dataset(200, 5, s);
  const auto model = train(d, tiny_train()).model;
  const auto w = feature_window(d, 0);
  const auto all = predict_poses(model, w, s.room);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(predict_pose(model, w, 2, s.room), all.back());
  EXPECT_THROW(predict_pose(model, w, 3, s.room), ConfigError);
  EXPECT_THROW(predict_pose(model, w, 0, s.room), ConfigError);
  for (const auto& p : all) {
    EXPECT_TRUE(angles_in_range(p));
    EXPECT_GE(p.x, 0.0);
    EXPECT_LE(p.x, s.room.length);
  }
}

TEST(Predict, ErrorBelowRoomDiagonal) {
  const auto s = tiny_setup();
  const Dataset d = build_dataset(200, 6, s);
  const auto model = train(d, tiny_train()).model;
  const auto ev = evaluate(model, d, split(d).test, s.room);
  const double diag = std::hypot(s.room.length, s.room.width, s.room.height);
  for (const auto& h : ev.horizons)
    for (double e : h.position) EXPECT_LT(e, diag);
}

TEST(Evaluate, PerfectPredictorScoresZero) {
  const Dataset d = build_dataset(50, 7, tiny_setup());
  const auto ev = evaluate(d, split(d).test, [&](std::size_t r) {
    std::vector<Pose> out;
    for (int l = 0; l < 2; ++l) {
      EncodedPose e;
      for (int k = 0; k < kPoseDims; ++k) e[k] = d.labels(static_cast<Eigen::Index>(r), l * kPoseDims + k);
      out.push_back(decode_pose(e));
    }
    return out;
  });
  for (const auto& h : ev.horizons) {
    EXPECT_EQ(h.mean_position, 0.0);
    EXPECT_NEAR(h.mean_yaw, 0.0, 1e-9);
  }
}

TEST(Persistence, ReturnsLastPoseAndErrorIsDisplacement) {
  const auto s = tiny_setup();
  const Pose p{1, 2, 1.2, 10, 20, 3};
  EXPECT_EQ(persistence_predict(p, 1), p);
  EXPECT_EQ(persistence_predict(p, 4), p);
  const auto t = sample_trajectory(9, 6, s.mobility, s.room);
  EXPECT_DOUBLE_EQ((persistence_predict(t[3], 2).position() - t[5].position()).norm(),
                   (t[3].position() - t[5].position()).norm());
}

TEST(Persistence, AverageErrorGrowsWithHorizon) {
  const GeneratorSetup s;
  std::vector<double> err(4, 0.0);
  for (int q = 0; q < 2000; ++q) {
    const auto t = sample_trajectory_for(sample_seed(3, q), s);
    for (int l = 1; l <= 4; ++l) err[l - 1] += (t[7].position() - t[7 + l].position()).norm();
  }
  for (int l = 1; l < 4; ++l) EXPECT_GT(err[l], err[l - 1]);
}

TEST(ModelFile, SaveLoadRoundTrip) {
  const Dataset d = build_dataset(100, 8, tiny_setup());
  const auto model = train(d, tiny_train()).model;
  const auto dir = std::filesystem::temp_directory_path() / "lifi_lstm_test";
  std::filesystem::create_directories(dir);
  const std::string base = (dir / "model").string();
  save_model(model, base);
  const auto loaded = load_model(base);
  EXPECT_EQ(loaded.params.flat(), model.params.flat());
  EXPECT_EQ(loaded.meta.feature_mean, model.meta.feature_mean);
  EXPECT_EQ(lstm_forward(loaded.params, feature_window(d, 1)),
            lstm_forward(model.params, feature_window(d, 1)));
}
