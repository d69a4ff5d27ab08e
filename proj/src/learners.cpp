#include "cofed/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace cofed {
namespace {

/// Column-wise mean and std-dev (1 where an axis is constant).
void standardizer(const Eigen::MatrixXd& x, Eigen::RowVectorXd& mean, Eigen::RowVectorXd& scale) {
  mean = x.colwise().mean();
  scale = ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt();
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    if (!(scale(j) > 1e-12)) scale(j) = 1.0;
}

Eigen::MatrixXd standardize(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::RowVectorXd& mean,
                            const Eigen::RowVectorXd& scale) {
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

/// Row-wise softmax, in place.
void softmax_rows(Eigen::MatrixXd& z) {
  z.colwise() -= z.rowwise().maxCoeff();
  z = z.array().exp();
  z.array().colwise() /= z.rowwise().sum().array();
}

Eigen::MatrixXd one_hot(const std::vector<int>& targets, std::span<const std::size_t> rows, Eigen::Index classes) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), classes);
  for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Eigen::Index>(i), targets[rows[i]]) = 1.0;
  return y;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

/// Drives minibatch steps over a seeded, per-epoch reshuffled order.
template <class Step>
void for_each_minibatch(std::size_t n, const TrainConfig& config, std::mt19937_64& rng, Step&& step) {
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), n);
  const std::size_t per_epoch = (n + batch - 1) / batch;
  const std::size_t total = config.steps > 0 ? static_cast<std::size_t>(config.steps)
                                             : per_epoch * static_cast<std::size_t>(config.epochs);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n;
  for (std::size_t s = 0; s < total; ++s) {
    if (cursor >= n) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const std::size_t len = std::min(batch, n - cursor);
    step(std::span<const std::size_t>(order.data() + cursor, len));
    cursor += len;
  }
}

}  // namespace

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Logistic: return "logistic";
    case LearnerKind::KNearest: return "knn";
    case LearnerKind::GaussianNaiveBayes: return "naive_bayes";
    case LearnerKind::MLP: return "mlp";
  }
  return "unknown";
}

std::optional<LearnerKind> parse_learner_kind(std::string_view name) {
  for (auto k : {LearnerKind::Logistic, LearnerKind::KNearest, LearnerKind::GaussianNaiveBayes, LearnerKind::MLP})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

void validate(const TrainConfig& c) {
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate))
    throw std::invalid_argument("learning_rate must be positive");
  if (c.epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (c.batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (c.steps < 0) throw std::invalid_argument("steps must be non-negative");
  if (c.l2 < 0.0) throw std::invalid_argument("l2 must be non-negative");
  if (c.k < 1) throw std::invalid_argument("k must be positive");
  if (!(c.var_smoothing > 0.0)) throw std::invalid_argument("var_smoothing must be positive");
  if (c.hidden < 1) throw std::invalid_argument("hidden must be positive");
}

// --- Classifier -------------------------------------------------------------

Classifier::Classifier(LabelSpace space) : space_(std::move(space)) {
  if (space_.empty()) throw std::invalid_argument("classifier needs a non-empty label space");
}

void Classifier::fit(const LabeledDataset& data, const TrainConfig& config) {
  if (data.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  validate(data, space_);
  validate(config);
  std::vector<int> targets;
  targets.reserve(data.size());
  std::set<int> distinct;
  for (auto label : data.labels) {
    targets.push_back(static_cast<int>(space_.index_of(label)));
    distinct.insert(targets.back());
  }
  constant_.reset();
  if (distinct.size() == 1) {
    constant_ = static_cast<std::size_t>(*distinct.begin());
  } else {
    do_fit(data.features, targets, config);
  }
  dim_ = data.dim();
  trained_ = true;
}

void Classifier::mark_trained(Eigen::Index dim) {
  dim_ = dim;
  trained_ = true;
}

Eigen::MatrixXd Classifier::scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (!trained_) throw std::logic_error("classifier has not been trained");
  if (x.cols() != dim_)
    throw std::invalid_argument("input has " + std::to_string(x.cols()) + " features, model expects " +
                                std::to_string(dim_));
  if (constant_) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.rows(), static_cast<Eigen::Index>(space_.size()));
    s.col(static_cast<Eigen::Index>(*constant_)).setOnes();
    return s;
  }
  return do_scores(x);
}

PredictionVector Classifier::predict_batch(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  const Eigen::MatrixXd s = scores(x);
  PredictionVector out;
  out.reserve(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < s.cols(); ++c)
      if (s(r, c) > s(r, best)) best = c;
    out.push_back(space_[static_cast<std::size_t>(best)]);
  }
  return out;
}

CategoryId Classifier::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return predict_batch(x).front();
}

// --- LogisticRegression -----------------------------------------------------

void LogisticRegression::do_fit(const Eigen::MatrixXd& x, const std::vector<int>& targets,
                                const TrainConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> init(0.0, 0.01);
  const auto classes = static_cast<Eigen::Index>(label_space().size());
  standardizer(x, mean_, scale_);
  const Eigen::MatrixXd xs = standardize(x, mean_, scale_);
  w_ = Eigen::MatrixXd::NullaryExpr(x.cols(), classes, [&] { return init(rng); });
  b_ = Eigen::RowVectorXd::Zero(classes);

  for_each_minibatch(targets.size(), config, rng, [&](std::span<const std::size_t> rows) {
    const Eigen::MatrixXd xb = gather_rows(xs, rows);
    Eigen::MatrixXd p = (xb * w_).rowwise() + b_;
    softmax_rows(p);
    const Eigen::MatrixXd g = (p - one_hot(targets, rows, classes)) / static_cast<double>(rows.size());
    w_ -= config.learning_rate * (xb.transpose() * g + config.l2 * w_);
    b_ -= config.learning_rate * g.colwise().sum();
  });
}

Eigen::MatrixXd LogisticRegression::do_scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (mean_.size() == 0) return (x * w_).rowwise() + b_;
  return (standardize(x, mean_, scale_) * w_).rowwise() + b_;
}

std::unique_ptr<LogisticRegression> LogisticRegression::from_parameters(LabelSpace space, Eigen::MatrixXd weights,
                                                                        Eigen::RowVectorXd bias) {
  if (weights.cols() != static_cast<Eigen::Index>(space.size()) || bias.size() != weights.cols())
    throw std::invalid_argument("parameter shapes do not match the label space");
  auto model = std::make_unique<LogisticRegression>(std::move(space));
  model->w_ = std::move(weights);
  model->b_ = std::move(bias);
  model->mark_trained(model->w_.rows());
  return model;
}

Eigen::MatrixXd LogisticRegression::weights() const {
  if (mean_.size() == 0) return w_;
  return w_.array().colwise() / scale_.transpose().array();
}

Eigen::RowVectorXd LogisticRegression::bias() const {
  if (mean_.size() == 0) return b_;
  return b_ - (mean_.array() / scale_.array()).matrix() * w_;
}

// --- KNearest ---------------------------------------------------------------

void KNearest::do_fit(const Eigen::MatrixXd& x, const std::vector<int>& targets, const TrainConfig& config) {
  train_ = x;
  targets_ = targets;
  k_ = std::min<int>(config.k, static_cast<int>(targets.size()));
}

Eigen::MatrixXd KNearest::do_scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  const auto classes = static_cast<Eigen::Index>(label_space().size());
  Eigen::MatrixXd votes = Eigen::MatrixXd::Zero(x.rows(), classes);
  std::vector<std::size_t> idx(targets_.size());
  Eigen::VectorXd dist(train_.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    dist = (train_.rowwise() - x.row(r)).rowwise().squaredNorm();
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + k_, idx.end(), [&](std::size_t a, std::size_t b) {
      const double da = dist(static_cast<Eigen::Index>(a));
      const double db = dist(static_cast<Eigen::Index>(b));
      return da < db || (da == db && a < b);
    });
    for (int i = 0; i < k_; ++i) votes(r, targets_[idx[static_cast<std::size_t>(i)]]) += 1.0;
  }
  return votes;
}

// --- GaussianNaiveBayes -----------------------------------------------------

void GaussianNaiveBayes::do_fit(const Eigen::MatrixXd& x, const std::vector<int>& targets,
                                const TrainConfig& config) {
  const auto classes = static_cast<Eigen::Index>(label_space().size());
  mean_ = Eigen::MatrixXd::Zero(classes, x.cols());
  var_ = Eigen::MatrixXd::Zero(classes, x.cols());
  Eigen::VectorXd count = Eigen::VectorXd::Zero(classes);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    mean_.row(targets[i]) += x.row(static_cast<Eigen::Index>(i));
    count(targets[i]) += 1.0;
  }
  present_.assign(static_cast<std::size_t>(classes), false);
  for (Eigen::Index c = 0; c < classes; ++c) {
    present_[static_cast<std::size_t>(c)] = count(c) > 0.0;
    if (count(c) > 0.0) mean_.row(c) /= count(c);
  }
  for (std::size_t i = 0; i < targets.size(); ++i)
    var_.row(targets[i]).array() += (x.row(static_cast<Eigen::Index>(i)) - mean_.row(targets[i])).array().square();
  for (Eigen::Index c = 0; c < classes; ++c)
    if (count(c) > 0.0) var_.row(c) /= count(c);

  const Eigen::RowVectorXd mu = x.colwise().mean();
  const double max_var = ((x.rowwise() - mu).array().square().colwise().sum() / static_cast<double>(x.rows())).maxCoeff();
  var_.array() += config.var_smoothing * std::max(max_var, 1e-300);
  log_prior_ = (count.array() / static_cast<double>(targets.size())).log().transpose();
}

Eigen::MatrixXd GaussianNaiveBayes::do_scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  const auto classes = mean_.rows();
  Eigen::MatrixXd s(x.rows(), classes);
  constexpr double kLog2Pi = 1.8378770664093453;
  for (Eigen::Index c = 0; c < classes; ++c) {
    if (!present_[static_cast<std::size_t>(c)]) {
      s.col(c).setConstant(-std::numeric_limits<double>::infinity());
      continue;
    }
    const double norm = -0.5 * (kLog2Pi * static_cast<double>(x.cols()) + var_.row(c).array().log().sum());
    const Eigen::ArrayXXd diff = x.rowwise() - mean_.row(c);
    s.col(c) = ((diff.square().rowwise() / var_.row(c).array()).rowwise().sum() * -0.5 + norm + log_prior_(c))
                   .matrix();
  }
  return s;
}

// --- MultilayerPerceptron ---------------------------------------------------

void MultilayerPerceptron::do_fit(const Eigen::MatrixXd& x, const std::vector<int>& targets,
                                  const TrainConfig& config) {
  std::mt19937_64 rng(config.seed);
  const auto classes = static_cast<Eigen::Index>(label_space().size());
  const Eigen::Index d = x.cols();
  const Eigen::Index h = config.hidden;
  auto glorot = [&](Eigen::Index fan_in, Eigen::Index fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    return Eigen::MatrixXd(Eigen::MatrixXd::NullaryExpr(fan_in, fan_out, [&] { return u(rng); }));
  };
  standardizer(x, mean_, scale_);
  const Eigen::MatrixXd xs = standardize(x, mean_, scale_);
  w1_ = glorot(d, h);
  b1_ = Eigen::RowVectorXd::Zero(h);
  w2_ = glorot(h, classes);
  b2_ = Eigen::RowVectorXd::Zero(classes);

  for_each_minibatch(targets.size(), config, rng, [&](std::span<const std::size_t> rows) {
    const Eigen::MatrixXd xb = gather_rows(xs, rows);
    const Eigen::MatrixXd a = ((xb * w1_).rowwise() + b1_).array().tanh().matrix();
    Eigen::MatrixXd p = (a * w2_).rowwise() + b2_;
    softmax_rows(p);
    const Eigen::MatrixXd g = (p - one_hot(targets, rows, classes)) / static_cast<double>(rows.size());
    const Eigen::MatrixXd dh = ((g * w2_.transpose()).array() * (1.0 - a.array().square())).matrix();
    w2_ -= config.learning_rate * (a.transpose() * g + config.l2 * w2_);
    b2_ -= config.learning_rate * g.colwise().sum();
    w1_ -= config.learning_rate * (xb.transpose() * dh + config.l2 * w1_);
    b1_ -= config.learning_rate * dh.colwise().sum();
  });
}

Eigen::MatrixXd MultilayerPerceptron::do_scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  const Eigen::MatrixXd a = ((standardize(x, mean_, scale_) * w1_).rowwise() + b1_).array().tanh().matrix();
  return (a * w2_).rowwise() + b2_;
}

// --- free functions ---------------------------------------------------------

std::unique_ptr<Classifier> make_classifier(LearnerKind kind, LabelSpace space) {
  switch (kind) {
    case LearnerKind::Logistic: return std::make_unique<LogisticRegression>(std::move(space));
    case LearnerKind::KNearest: return std::make_unique<KNearest>(std::move(space));
    case LearnerKind::GaussianNaiveBayes: return std::make_unique<GaussianNaiveBayes>(std::move(space));
    case LearnerKind::MLP: return std::make_unique<MultilayerPerceptron>(std::move(space));
  }
  throw std::invalid_argument("unknown learner kind");
}

std::unique_ptr<Classifier> train_local(LearnerKind kind, const LabelSpace& space, const LabeledDataset& data,
                                        const TrainConfig& config) {
  auto model = make_classifier(kind, space);
  model->fit(data, config);
  return model;
}

PredictionVector pseudolabel(const Classifier& classifier, const UnlabeledDataset& pub) {
  validate(pub);
  return classifier.predict_batch(pub.features);
}

double evaluate(const Classifier& classifier, const LabeledDataset& test) {
  if (test.empty()) throw std::invalid_argument("cannot evaluate on an empty test set");
  validate(test, classifier.label_space());
  const auto predicted = classifier.predict_batch(test.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == test.labels[i];
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace cofed
