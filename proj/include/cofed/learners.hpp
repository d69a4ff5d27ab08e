#pragma once

#include "cofed/core.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace cofed {

enum class LearnerKind { Logistic, KNearest, GaussianNaiveBayes, MLP };

std::string_view to_string(LearnerKind kind);
std::optional<LearnerKind> parse_learner_kind(std::string_view name);

/// Hyperparameters; each learner reads only the fields it understands.
struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 60;
  int batch_size = 50;
  /// When positive, gradient learners run exactly this many minibatch steps
  /// instead of `epochs` passes.
  long steps = 0;
  double l2 = 1e-4;
  int k = 5;
  double var_smoothing = 1e-9;
  int hidden = 32;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Throws std::invalid_argument for non-positive counts or rates.
void validate(const TrainConfig& config);

/// Black-box classifier over a fixed label space.
///
/// Predictions are the arg-max of `scores`, with ties resolved toward the
/// lowest CategoryId, so every prediction lies in `label_space()`. A dataset
/// with a single distinct label yields a constant classifier whatever the kind.
class Classifier {
 public:
  explicit Classifier(LabelSpace space);
  virtual ~Classifier() = default;

  Classifier(const Classifier&) = delete;
  Classifier& operator=(const Classifier&) = delete;

  void fit(const LabeledDataset& data, const TrainConfig& config);
  bool is_trained() const { return trained_; }
  const LabelSpace& label_space() const { return space_; }
  virtual LearnerKind kind() const = 0;

  /// n x |label_space| matrix; larger is more likely.
  Eigen::MatrixXd scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  PredictionVector predict_batch(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  CategoryId predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

 protected:
  /// `targets` holds label-space positions, one per row of `x`.
  virtual void do_fit(const Eigen::MatrixXd& x, const std::vector<int>& targets,
                      const TrainConfig& config) = 0;
  virtual Eigen::MatrixXd do_scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const = 0;
  /// For subclasses restoring explicit parameters.
  void mark_trained(Eigen::Index dim);

 private:
  LabelSpace space_;
  bool trained_ = false;
  Eigen::Index dim_ = 0;
  std::optional<std::size_t> constant_;
};

/// Softmax regression trained by minibatch gradient descent on standardized inputs.
class LogisticRegression final : public Classifier {
 public:
  using Classifier::Classifier;
  LearnerKind kind() const override { return LearnerKind::Logistic; }

  /// Builds a trained model from raw-space parameters (no standardization).
  static std::unique_ptr<LogisticRegression> from_parameters(LabelSpace space, Eigen::MatrixXd weights,
                                                             Eigen::RowVectorXd bias);
  /// Parameters folded back to raw input space: scores = x * weights + bias.
  Eigen::MatrixXd weights() const;
  Eigen::RowVectorXd bias() const;

 protected:
  void do_fit(const Eigen::MatrixXd& x, const std::vector<int>& targets, const TrainConfig& config) override;
  Eigen::MatrixXd do_scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const override;

 private:
  Eigen::RowVectorXd mean_, scale_;
  Eigen::MatrixXd w_;
  Eigen::RowVectorXd b_;
};

/// k-nearest neighbours, Euclidean distance; distance ties go to the earlier
/// training row, vote ties to the lowest category.
class KNearest final : public Classifier {
 public:
  using Classifier::Classifier;
  LearnerKind kind() const override { return LearnerKind::KNearest; }

 protected:
  void do_fit(const Eigen::MatrixXd& x, const std::vector<int>& targets, const TrainConfig& config) override;
  Eigen::MatrixXd do_scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const override;

 private:
  Eigen::MatrixXd train_;
  Eigen::VectorXd train_sq_norm_;
  std::vector<int> targets_;
  int k_ = 1;
};

/// Gaussian naive Bayes. Categories absent from training never win.
class GaussianNaiveBayes final : public Classifier {
 public:
  using Classifier::Classifier;
  LearnerKind kind() const override { return LearnerKind::GaussianNaiveBayes; }

 protected:
  void do_fit(const Eigen::MatrixXd& x, const std::vector<int>& targets, const TrainConfig& config) override;
  Eigen::MatrixXd do_scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const override;

 private:
  Eigen::MatrixXd mean_, var_;
  Eigen::RowVectorXd log_prior_;
  std::vector<bool> present_;
};

/// One tanh hidden layer with a softmax output, minibatch gradient descent.
class MultilayerPerceptron final : public Classifier {
 public:
  using Classifier::Classifier;
  LearnerKind kind() const override { return LearnerKind::MLP; }

 protected:
  void do_fit(const Eigen::MatrixXd& x, const std::vector<int>& targets, const TrainConfig& config) override;
  Eigen::MatrixXd do_scores(const Eigen::Ref<const Eigen::MatrixXd>& x) const override;

 private:
  Eigen::RowVectorXd mean_, scale_;
  Eigen::MatrixXd w1_, w2_;
  Eigen::RowVectorXd b1_, b2_;
};

std::unique_ptr<Classifier> make_classifier(LearnerKind kind, LabelSpace space);

/// Local training on a participant's private data.
std::unique_ptr<Classifier> train_local(LearnerKind kind, const LabelSpace& space, const LabeledDataset& data,
                                        const TrainConfig& config);

/// Predictions over the public set, aligned to its row order.
PredictionVector pseudolabel(const Classifier& classifier, const UnlabeledDataset& pub);

/// Fraction of test instances predicted correctly.
double evaluate(const Classifier& classifier, const LabeledDataset& test);

}  // namespace cofed
