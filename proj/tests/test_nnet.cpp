#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doa/nnet/adam.hpp"
#include "doa/nnet/inference.hpp"
#include "doa/nnet/loss.hpp"
#include "doa/nnet/model_io.hpp"
#include "doa/nnet/network.hpp"
#include "doa/nnet/trainer.hpp"
#include "doa/rng.hpp"

using namespace doa;
using namespace doa::nn;

namespace {

ModelSpec tiny_spec(std::size_t conv_layers = 2, double dropout = 0.0) {
  return ModelSpec::uniform(3, 8, conv_layers, 4, {6, 5}, 5, dropout);
}

Mat<double> random_input(std::size_t batch, std::size_t mk, std::uint64_t seed) {
  CounterRng rng(seed);
  Mat<double> x(1, static_cast<Eigen::Index>(batch * mk));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(-3.0, 3.0);
  return x;
}

Mat<double> random_targets(std::size_t classes, std::size_t batch, std::uint64_t seed) {
  CounterRng rng(seed);
  Mat<double> t(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(batch));
  for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = rng.uniform() < 0.4 ? 1.0 : 0.0;
  return t;
}

// Zero-initialised biases put dead positions exactly on the ReLU kink,
// where a central difference disagrees with any one-sided derivative.
void jitter_biases(Network<double>& net, std::uint64_t seed) {
  CounterRng rng(seed);
  for (const auto& layer : net.layers()) {
    const auto params = layer->parameters();
    if (params.size() == 2)
      for (double& b : params[1]->data) b = rng.uniform(-0.1, 0.1);
  }
}

double net_loss(Network<double>& net, const Mat<double>& x, const Mat<double>& t, std::size_t batch) {
  return bce_with_logits<double>(net.logits(x, batch), t, nullptr);
}

// Central-difference check of every parameter; returns the worst relative error.
double max_param_gradient_error(Network<double>& net, const Mat<double>& x, const Mat<double>& t, std::size_t batch) {
  Mat<double> dlogits;
  bce_with_logits<double>(net.forward(x, {Mode::Train, 1, batch}), t, &dlogits);
  net.zero_grad();
  net.backward(dlogits);
  const auto params = net.parameters();
  const auto grads = net.gradients();
  const double h = 1e-4;
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t j = 0; j < params[p]->size(); ++j) {
      double& w = params[p]->data[j];
      const double saved = w;
      w = saved + h;
      const double up = net_loss(net, x, t, batch);
      w = saved - h;
      const double down = net_loss(net, x, t, batch);
      w = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[p]->data[j];
      const double err = std::abs(numeric - analytic) / std::max(1e-6, std::abs(numeric) + std::abs(analytic));
      worst = std::max(worst, err);
    }
  return worst;
}

}  // namespace

TEST(ModelSpec, ConvOutputShape) {
  const ModelSpec s = ModelSpec::uniform(4, 129, 1, 64, {512, 512}, 37);
  Network<float> net(s);
  net.initialize(1);
  Mat<float> x = Mat<float>::Zero(1, 4 * 129);
  auto* conv = dynamic_cast<Conv2x1<float>*>(net.layers()[0].get());
  ASSERT_NE(conv, nullptr);
  const Mat<float> y = conv->apply(x, 1);
  EXPECT_EQ(y.rows(), 64);
  EXPECT_EQ(y.cols(), 3 * 129);
}

TEST(ModelSpec, RejectsTooManyConvLayers) {
  EXPECT_THROW(ModelSpec::uniform(4, 10, 4, 8, {16}, 5).validate(), std::invalid_argument);
  EXPECT_NO_THROW(ModelSpec::uniform(4, 10, 3, 8, {16}, 5).validate());
  ModelSpec bad = tiny_spec();
  bad.dropout_rate = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(ModelSpec, MicDimensionIsMMinusC) {
  for (std::size_t c = 1; c <= 3; ++c) EXPECT_EQ(ModelSpec::uniform(4, 10, c, 8, {16}, 5).conv_output_rows(), 4 - c);
  EXPECT_EQ(ModelSpec::uniform(4, 10, 3, 8, {16}, 5).conv_output_rows(), 1u);
}

TEST(ModelSpec, ParameterCountMatchesNetworkAndShrinksWithDepth) {
  std::size_t previous = SIZE_MAX;
  for (std::size_t c = 1; c <= 7; ++c) {
    const ModelSpec s = ModelSpec::uniform(8, 129, c, 64, {512, 512}, 37);
    Network<float> net(s);
    EXPECT_EQ(net.parameter_count(), s.parameter_count());
    EXPECT_LT(s.parameter_count(), previous);
    previous = s.parameter_count();
  }
}

TEST(ModelSpec, TextRoundTrip) {
  const ModelSpec s = ModelSpec::uniform(6, 33, 4, 12, {40, 20}, 13, 0.25);
  EXPECT_EQ(parse_model_spec(s.to_text()), s);
  EXPECT_THROW(parse_model_spec("mics = 4\nbogus = 1\n"), std::invalid_argument);
}

TEST(Conv2x1, DifferenceFilterOnEqualRowsIsZero) {
  Conv2x1<double> conv(1, 1, 2, 5);
  conv.weight.data = {1.0, -1.0};
  Mat<double> x(1, 10);
  for (int k = 0; k < 5; ++k) x(0, k) = x(0, 5 + k) = 0.3 * k - 1.0;
  const Mat<double> y = conv.apply(x, 1);
  EXPECT_EQ(y.cols(), 5);
  EXPECT_DOUBLE_EQ(y.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Conv2x1, TopTapFilterCopiesTopRow) {
  Conv2x1<double> conv(1, 1, 3, 4);
  conv.weight.data = {1.0, 0.0};
  const Mat<double> x = random_input(1, 12, 3);
  const Mat<double> y = conv.apply(x, 1);
  for (int k = 0; k < 4; ++k) {
    EXPECT_DOUBLE_EQ(y(0, k), x(0, k));
    EXPECT_DOUBLE_EQ(y(0, 4 + k), x(0, 4 + k));
  }
}

TEST(Conv2x1, RejectsSingleRowAndBadShapes) {
  EXPECT_THROW(Conv2x1<double>(1, 2, 1, 4), std::invalid_argument);
  Conv2x1<double> conv(1, 2, 3, 4);
  EXPECT_THROW(conv.apply(Mat<double>::Zero(1, 11), 1), std::invalid_argument);
  EXPECT_THROW(conv.backward(Mat<double>::Zero(2, 8), true), std::logic_error);
}

TEST(Gradient, FullNetworkMatchesFiniteDifferences) {
  Network<double> net(tiny_spec(2));
  net.initialize(11);
  jitter_biases(net, 99);
  const std::size_t batch = 3;
  const Mat<double> x = random_input(batch, 24, 5);
  const Mat<double> t = random_targets(5, batch, 6);
  EXPECT_LT(max_param_gradient_error(net, x, t, batch), 1e-4);
}

TEST(Gradient, EachConvDepthMatchesFiniteDifferences) {
  for (std::size_t c = 1; c <= 2; ++c) {
    Network<double> net(ModelSpec::uniform(3, 8, c, 3, {}, 5, 0.0));
    net.initialize(20 + c);
    jitter_biases(net, 99);
    const Mat<double> x = random_input(2, 24, 7);
    const Mat<double> t = random_targets(5, 2, 8);
    EXPECT_LT(max_param_gradient_error(net, x, t, 2), 1e-4) << "conv layers " << c;
  }
}

TEST(Gradient, InputGradientMatchesFiniteDifferences) {
  Network<double> net(tiny_spec(2));
  net.initialize(4);
  jitter_biases(net, 99);
  Mat<double> x = random_input(2, 24, 9);
  const Mat<double> t = random_targets(5, 2, 10);
  Mat<double> dlogits;
  bce_with_logits<double>(net.forward(x, {Mode::Train, 0, 2}), t, &dlogits);
  net.zero_grad();
  const Mat<double> dx = net.backward(dlogits, true);
  ASSERT_EQ(dx.size(), x.size());
  const double h = 1e-4;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x(i);
    x(i) = saved + h;
    const double up = net_loss(net, x, t, 2);
    x(i) = saved - h;
    const double down = net_loss(net, x, t, 2);
    x(i) = saved;
    const double numeric = (up - down) / (2 * h);
    EXPECT_LT(std::abs(numeric - dx(i)) / std::max(1e-6, std::abs(numeric) + std::abs(dx(i))), 1e-4);
  }
}

TEST(Gradient, DropoutLayerMatchesFiniteDifferencesWithFixedMask) {
  Network<double> net(tiny_spec(2, 0.5));
  net.initialize(2);
  jitter_biases(net, 99);
  const Mat<double> x = random_input(2, 24, 12);
  const Mat<double> t = random_targets(5, 2, 13);
  const ForwardContext ctx{Mode::Train, 77, 2};
  Mat<double> dlogits;
  bce_with_logits<double>(net.forward(x, ctx), t, &dlogits);
  net.zero_grad();
  net.backward(dlogits);
  auto params = net.parameters();
  auto grads = net.gradients();
  const double h = 1e-4;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t j = 0; j < params[p]->size(); ++j) {
      double& w = params[p]->data[j];
      const double saved = w;
      w = saved + h;
      const double up = bce_with_logits<double>(net.forward(x, ctx), t, nullptr);
      w = saved - h;
      const double down = bce_with_logits<double>(net.forward(x, ctx), t, nullptr);
      w = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[p]->data[j];
      EXPECT_LT(std::abs(numeric - analytic) / std::max(1e-6, std::abs(numeric) + std::abs(analytic)), 1e-4);
    }
}

TEST(Gradient, ZeroUpstreamGivesZeroParameterGradients) {
  Network<double> net(tiny_spec());
  net.initialize(3);
  jitter_biases(net, 99);
  const Mat<double> x = random_input(2, 24, 1);
  const Mat<double> logits = net.forward(x, {Mode::Train, 0, 2});
  net.zero_grad();
  net.backward(Mat<double>::Zero(logits.rows(), logits.cols()));
  for (const auto* g : net.gradients())
    for (double v : g->data) EXPECT_EQ(v, 0.0);
}

TEST(Relu, BackwardZeroesNegativePreactivations) {
  Relu<double> relu;
  Mat<double> x(1, 4);
  x << -1.0, 2.0, -0.5, 3.0;
  relu.forward(x, {});
  const Mat<double> dx = relu.backward(Mat<double>::Ones(1, 4), true);
  EXPECT_EQ(dx(0), 0.0);
  EXPECT_EQ(dx(1), 1.0);
  EXPECT_EQ(dx(2), 0.0);
  EXPECT_EQ(dx(3), 1.0);
  EXPECT_THROW(relu.backward(Mat<double>::Ones(2, 2), true), std::invalid_argument);
}

TEST(Loss, HalfProbabilityGivesLog2) {
  const std::vector<double> p(7, 0.5);
  const std::vector<double> t{1, 0, 0, 1, 0, 0, 0};
  EXPECT_NEAR(bce_loss(p, t).loss, std::log(2.0), 1e-12);
}

TEST(Loss, PerfectPredictionIsTiny) {
  const std::vector<double> t{1, 0, 0, 1, 0};
  EXPECT_LE(bce_loss(t, t).loss, 5 * -std::log(1 - 1e-7));
  EXPECT_TRUE(std::isfinite(bce_loss(std::vector<double>{0, 1}, std::vector<double>{1, 0}).loss));
}

TEST(Loss, LogitGradientMatchesFiniteDifferences) {
  Mat<double> z(4, 2);
  z << 0.3, -1.2, 2.0, 0.1, -0.7, 0.5, 1.1, -2.2;
  Mat<double> t(4, 2);
  t << 1, 0, 0, 1, 1, 1, 0, 0;
  Mat<double> dz;
  bce_with_logits<double>(z, t, &dz);
  const Mat<double> p = sigmoid<double>(z);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(dz(i), (p(i) - t(i)) / 8.0, 1e-15);
    Mat<double> zp = z, zm = z;
    zp(i) += 1e-5;
    zm(i) -= 1e-5;
    const double numeric =
        (bce_with_logits<double>(zp, t, nullptr) - bce_with_logits<double>(zm, t, nullptr)) / 2e-5;
    EXPECT_NEAR(numeric, dz(i), 1e-8);
  }
}

TEST(Loss, ProbabilityGradientMatchesFiniteDifferences) {
  const std::vector<double> p{0.2, 0.7, 0.55};
  const std::vector<double> t{0, 1, 1};
  const auto r = bce_loss(p, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pp = p, pm = p;
    pp[i] += 1e-6;
    pm[i] -= 1e-6;
    EXPECT_NEAR((bce_loss(pp, t).loss - bce_loss(pm, t).loss) / 2e-6, r.grad[i], 1e-7);
  }
}

TEST(Dropout, EvalAndZeroRateAreIdentity) {
  const std::vector<double> a{1.0, -2.0, 3.5, 0.25};
  EXPECT_EQ(dropout(a, 0.5, Mode::Eval, 9), a);
  EXPECT_EQ(dropout(a, 0.0, Mode::Train, 9), a);
  EXPECT_EQ(dropout(a, 0.0, Mode::Eval, 9), a);
  EXPECT_THROW(dropout(a, 1.0, Mode::Train, 9), std::invalid_argument);
}

TEST(Dropout, PreservesExpectation) {
  const std::vector<double> a(100, 1.5);
  double total = 0.0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto y = dropout(a, 0.5, Mode::Train, s);
    for (double v : y) {
      EXPECT_TRUE(v == 0.0 || std::abs(v - 3.0) < 1e-12);
      total += v;
    }
  }
  EXPECT_NEAR(total / 1e6 / 1.5, 1.0, 0.02);
}

TEST(Adam, ZeroGradientLeavesWeightsUnchanged) {
  Tensor<double> w({3}), g({3});
  w.data = {1.0, -2.0, 0.5};
  AdamState<double> s;
  for (int i = 0; i < 5; ++i) adam_step<double>({&w}, {&g}, s);
  EXPECT_EQ(w.data, (std::vector<double>{1.0, -2.0, 0.5}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor<double> w({1}), g({1});
  w.data = {0.4};
  g.data = {3.7};
  AdamState<double> s;
  s.lr = 0.01;
  adam_step<double>({&w}, {&g}, s);
  EXPECT_NEAR(0.4 - w.data[0], 0.01, 1e-8);
}

TEST(Adam, QuadraticBowlConverges) {
  Tensor<double> w({1}), g({1});
  w.data = {1.0};
  AdamState<double> s;
  s.lr = 0.05;
  for (int i = 0; i < 500; ++i) {
    g.data[0] = 2 * w.data[0];
    adam_step<double>({&w}, {&g}, s);
  }
  EXPECT_LT(std::abs(w.data[0]), 1e-2);
}

TEST(Adam, NonFiniteGradientDiverges) {
  Tensor<double> w({2}), g({2});
  g.data = {1.0, NAN};
  AdamState<double> s;
  try {
    adam_step<double>({&w}, {&g}, s);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("diverged"), std::string::npos);
  }
  EXPECT_EQ(w.data, (std::vector<double>{0.0, 0.0}));
}

namespace {

dataset::Dataset random_dataset(std::size_t n, std::size_t mics, std::size_t bins, std::size_t classes,
                                std::uint64_t seed) {
  dataset::Dataset d;
  d.mics = mics;
  d.bins = bins;
  d.classes = classes;
  CounterRng rng(seed);
  d.features.resize(n * mics * bins);
  for (auto& v : d.features) v = static_cast<float>(rng.uniform(-3.14, 3.14));
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = rng.below(classes);
    auto b = rng.below(classes);
    if (b == a) b = (a + 1) % classes;
    d.labels.push_back((1ULL << a) | (1ULL << b));
  }
  return d;
}

}  // namespace

TEST(Train, MemorizesSmallSet) {
  const auto data = random_dataset(512, 4, 16, 5, 42);
  Network<float> net(ModelSpec::uniform(4, 16, 2, 8, {128, 128}, 5, 0.0));
  net.initialize(1);
  TrainOptions opt;
  opt.epochs = 200;
  opt.batch_size = 64;
  opt.validation_fraction = 0.0;
  opt.patience = 0;
  opt.seed = 5;
  const auto result = train(net, data, opt);
  double best = INFINITY;
  for (const auto& e : result.history) best = std::min(best, e.train_loss);
  EXPECT_LT(evaluate_loss(net, data), 0.05);
  EXPECT_LT(best, 0.05);
}

TEST(Train, DeterministicForSeed) {
  const auto data = random_dataset(200, 3, 8, 5, 1);
  TrainOptions opt;
  opt.epochs = 3;
  opt.batch_size = 32;
  opt.seed = 9;
  opt.patience = 0;
  Network<float> a(tiny_spec(2, 0.5)), b(tiny_spec(2, 0.5));
  a.initialize(3);
  b.initialize(3);
  const auto ra = train(a, data, opt);
  const auto rb = train(b, data, opt);
  EXPECT_EQ(a.snapshot(), b.snapshot());
  ASSERT_EQ(ra.history.size(), 3u);
  for (const auto& e : ra.history) {
    EXPECT_GE(e.val_loss, 0.0);
    EXPECT_TRUE(std::isfinite(e.val_loss));
  }
}

TEST(Train, ShapeMismatchThrows) {
  const auto data = random_dataset(10, 4, 8, 5, 1);
  Network<float> net(tiny_spec());
  EXPECT_THROW(train(net, data, {}), std::invalid_argument);
}

TEST(Train, FullBatchLossNonIncreasingAtSmallRate) {
  const auto data = random_dataset(128, 3, 8, 5, 17);
  Network<float> net(tiny_spec(2, 0.0));
  net.initialize(8);
  AdamState<float> adam;
  adam.lr = 1e-4;
  Mat<float> input = pack_input<float>(data.features, data.size());
  const Mat<float> targets = label_matrix<float>(data.labels, 5);
  double prev = bce_with_logits<float>(net.logits(input, data.size()), targets, nullptr);
  for (int step = 0; step < 10; ++step) {
    Mat<float> d;
    bce_with_logits<float>(net.forward(input, {Mode::Train, 0, data.size()}), targets, &d);
    net.zero_grad();
    net.backward(d);
    adam_step(net.parameters(), net.gradients(), adam);
    const double now = bce_with_logits<float>(net.logits(input, data.size()), targets, nullptr);
    EXPECT_LE(now, prev + 1e-7);
    prev = now;
  }
}

TEST(Train, WritesLog) {
  const auto path = std::filesystem::temp_directory_path() / "doa_test_train_log.csv";
  write_training_log(path, {{1, 0.5, 0.6, 1.25}});
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "epoch,train_loss,val_loss,seconds");
  EXPECT_EQ(row.substr(0, 6), "1,0.5,");
  std::filesystem::remove(path);
}

TEST(Predict, OutputsAreProbabilitiesAndBatchMatchesSingle) {
  Network<float> net(ModelSpec::uniform(4, 129, 3, 16, {64, 64}, 13));
  net.initialize(7);
  const auto data = random_dataset(20, 4, 129, 13, 3);
  const auto batch = predict_batch(net, data.features, data.size(), 7);
  ASSERT_EQ(batch.size(), 20u);
  for (std::size_t i = 0; i < data.size(); ++i) {
    dataset::PhaseMap pm{4, 129, std::vector<float>(data.feature(i).begin(), data.feature(i).end())};
    const auto single = predict(net, pm);
    ASSERT_EQ(single.size(), 13u);
    for (std::size_t c = 0; c < 13; ++c) {
      EXPECT_GE(single[c], 0.0);
      EXPECT_LE(single[c], 1.0);
      EXPECT_NEAR(single[c], batch[i][c], 1e-6);
    }
  }
  EXPECT_THROW(predict(net, dataset::PhaseMap{3, 129, std::vector<float>(3 * 129)}), std::invalid_argument);
}

TEST(Predict, FreshNetworkCentredNearHalf) {
  // Individual sigmoids spread with the init draw; their average over
  // classes and inputs sits near 0.5.
  Network<float> net(ModelSpec::uniform(4, 129, 3, 64, {512, 512}, 37));
  net.initialize(123);
  const auto data = random_dataset(64, 4, 129, 37, 4);
  const auto post = predict_batch(net, data.features, data.size());
  double mean = 0.0;
  for (const auto& p : post) mean += std::accumulate(p.begin(), p.end(), 0.0);
  mean /= static_cast<double>(post.size() * 37);
  EXPECT_GE(mean, 0.3);
  EXPECT_LE(mean, 0.7);
}

TEST(ModelIo, RoundTripIsExact) {
  const auto path = std::filesystem::temp_directory_path() / "doa_test_model.dnet";
  Network<float> net(ModelSpec::uniform(4, 17, 2, 6, {12}, 7, 0.3));
  net.initialize(5);
  save_model(path, net);
  const Network<float> back = load_model(path);
  EXPECT_EQ(back.spec(), net.spec());
  EXPECT_EQ(back.snapshot(), net.snapshot());
  const auto data = random_dataset(5, 4, 17, 7, 2);
  const auto a = predict_batch(net, data.features, 5);
  const auto b = predict_batch(back, data.features, 5);
  EXPECT_EQ(a, b);
  std::filesystem::remove(path);
}

TEST(ModelIo, TruncatedAndMismatchedFilesThrow) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "doa_test_model_bad.dnet";
  Network<float> net(ModelSpec::uniform(3, 8, 1, 2, {4}, 5));
  net.initialize(1);
  save_model(path, net);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  };
  write(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(load_model(path), std::runtime_error);

  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  write(wrong_version);
  EXPECT_THROW(load_model(path), std::runtime_error);

  // Same header length but a different architecture: the blob count no
  // longer matches the declared spec.
  std::string mismatch = bytes;
  const auto pos = mismatch.find("dense_widths = 4");
  ASSERT_NE(pos, std::string::npos);
  mismatch[pos + 15] = '5';
  write(mismatch);
  try {
    load_model(path);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("mismatch"), std::string::npos);
  }
  std::filesystem::remove(path);
}
