#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lobfeat/protocol.hpp"

namespace lobfeat::model {

enum class Activation { Tanh, Linear, Softmax };

/// One dense hidden layer; `dropout` is applied to its output during training.
struct DenseSpec {
  std::size_t units = 0;
  Activation activation = Activation::Tanh;
  double dropout = 0.0;
};

/// Hidden stack plus output heads. Protocol I: 2-unit softmax direction head
/// and 1-unit linear horizon head. Protocol II: 3-unit softmax head.
struct ModelConfig {
  std::string name = "custom";
  std::vector<DenseSpec> hidden;
  Protocol protocol = Protocol::I;
  double lambda = 0.99;  // weight of the cross-entropy term
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double log_clamp = 1e-12;  // floor on the true-class probability inside log
  std::size_t epochs = 250;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  std::size_t shards = 1;  // >1: mini-batch gradients computed in this many shards in parallel

  std::size_t classes() const { return protocol == Protocol::I ? 2 : 3; }
  bool has_regression() const { return protocol == Protocol::I; }
  void validate() const;

  /// MLP_1 .. MLP_5 topologies; widths multiplied by width_scale (min 1 unit).
  static ModelConfig preset(std::string_view name, Protocol protocol, double width_scale = 1.0);
};

/// Parameter block shapes, in storage order: hidden layers, class head,
/// regression head (Protocol I only). Each block is W (rows x cols, column
/// major) followed by b (rows).
struct LayerShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;  // into ModelState::params
  std::size_t size() const { return rows * cols + rows; }
};

struct ModelState {
  ModelConfig config;
  std::size_t input_dim = 0;
  std::vector<LayerShape> shapes;
  std::vector<double> params;
  std::vector<double> m;  // Nadam first moment
  std::vector<double> v;  // Nadam second moment
  std::uint64_t step = 0;

  /// Fan-in scaled uniform initialisation, seeded from config.seed.
  static ModelState init(const ModelConfig& config, std::size_t input_dim);

  std::size_t hidden_layers() const { return config.hidden.size(); }
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
};

/// Column-major activations of one forward pass; samples are columns.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;   // inputs[l] feeds hidden layer l (inputs[0] = x)
  std::vector<Eigen::MatrixXd> tanh_out; // pre-dropout output of each hidden layer
  std::vector<Eigen::MatrixXd> masks;    // inverted-dropout scale per unit (empty = none)
  Eigen::MatrixXd head_input;            // input of the output heads
  Eigen::MatrixXd probs;                 // classes x batch
  Eigen::RowVectorXd regression;         // 1 x batch (Protocol I)
};

/// Dropout masks for a batch: one (units x batch) matrix per hidden layer,
/// entries 0 or 1/(1-p). Layers with p = 0 get an empty matrix.
std::vector<Eigen::MatrixXd> sample_dropout(const ModelState& state, std::size_t batch,
                                            std::uint64_t seed);

/// x is input_dim x batch. `masks` empty means inference (no dropout).
ForwardCache forward(const ModelState& state, const Eigen::MatrixXd& x,
                     const std::vector<Eigen::MatrixXd>& masks = {});

struct LossValue {
  double total = 0.0;
  double cross_entropy = 0.0;  // mean over the batch
  double mse = 0.0;            // mean over the batch (0 without a regression head)
};

/// lambda * CE + (1 - lambda) * MSE over a batch. `reg_pred` / `reg_target`
/// may be empty for a classification-only head, which uses lambda = 1.
LossValue dual_loss(const Eigen::MatrixXd& probs, std::span<const int> target_class,
                    const Eigen::RowVectorXd& reg_pred, std::span<const double> reg_target,
                    double lambda, double log_clamp = 1e-12);

/// Single-sample form.
double dual_loss(std::span<const double> class_probs, int target_class, double reg_pred,
                 double reg_target, double lambda, double log_clamp = 1e-12);

/// Gradients of the batch loss with respect to the head outputs.
struct LossGradient {
  Eigen::MatrixXd logits;            // classes x batch
  Eigen::RowVectorXd regression;     // 1 x batch
};

/// `normalizer` is the batch size the mean is taken over (lets a shard of a
/// batch produce its share of the full-batch gradient).
LossGradient dual_loss_gradient(const ModelConfig& config, const ForwardCache& cache,
                                std::span<const int> target_class,
                                std::span<const double> reg_target, double normalizer);

/// Reverse-mode pass: gradient of the loss with respect to every parameter,
/// laid out like ModelState::params.
std::vector<double> backward(const ModelState& state, const ForwardCache& cache,
                             const LossGradient& grad);

/// One Nadam update; increments state.step first.
void nadam_step(ModelState& state, std::span<const double> grads);

/// Inputs row-major (one sample per row), class indices 0..K-1
/// (Protocol I: 0 = Down, 1 = Up; Protocol II: 0 = Down, 1 = Stationary,
/// 2 = Up) and, for Protocol I, the horizon regression target.
struct Dataset {
  Matrix x;
  std::vector<int> cls;
  std::vector<double> reg;
  std::size_t size() const { return cls.size(); }
};

int class_index(Protocol p, int label);
int label_of_class(Protocol p, int cls);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double f1 = 0.0;
  double rmse = 0.0;
};

struct TrainResult {
  ModelState state;
  std::vector<EpochRecord> history;
};

/// Epoch-shuffled mini-batch training. Validation metrics are reported on
/// `validation` when non-empty, otherwise on the training set.
TrainResult train(const ModelConfig& config, const Dataset& train_set,
                  const Dataset& validation);
/// Continues from an existing state.
TrainResult train(ModelState state, const Dataset& train_set, const Dataset& validation);

struct ClassCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
  Protocol protocol = Protocol::I;
  std::size_t samples = 0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double rmse = 0.0;                 // Protocol I only
  std::vector<ClassCounts> classes;  // indexed by class
};

struct Prediction {
  std::vector<int> cls;
  std::vector<double> reg;
};

Prediction predict(const ModelState& state, const Matrix& x);

/// f1 from precision and recall; 0 when both are 0.
double f1_score(double precision, double recall);
/// Precision/recall/f1 from TP/FP/FN with 0 for empty denominators.
double precision_of(const ClassCounts& c);
double recall_of(const ClassCounts& c);

/// sqrt(mean (P_i - O_i)^2).
double rmse(std::span<const double> predicted, std::span<const double> observed);

/// Protocol I: binary f1 with Up as positive class, RMSE on the horizon.
/// Protocol II: macro-averaged f1 over the three classes.
EvalReport evaluate_predictions(Protocol protocol, const Prediction& pred,
                                const Dataset& truth);
EvalReport evaluate(const ModelState& state, const Dataset& test);

// Checkpoint, little-endian:
//   "LOBFEATM" | u32 version (=1) | u32 n, n bytes config JSON
//   | u64 input_dim | u32 blocks, blocks x (u64 rows, u64 cols)
//   | u64 count | count f64 params | count f64 m | count f64 v | u64 step
void save_checkpoint(std::ostream& out, const ModelState& state);
void save_checkpoint(const std::filesystem::path& path, const ModelState& state);
ModelState load_checkpoint(std::istream& in);
ModelState load_checkpoint(const std::filesystem::path& path);

std::string config_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& json);

void write_history(std::ostream& out, std::span<const EpochRecord> history);

}  // namespace lobfeat::model
