#include "lobfeat/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "lobfeat/error.hpp"
#include "lobfeat/rng.hpp"

namespace lobfeat::model {

namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementation so weights are portable.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
    case Activation::Softmax: return "softmax";
  }
  return "?";
}

Activation activation_from(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "linear") return Activation::Linear;
  if (s == "softmax") return Activation::Softmax;
  throw ParseError("unknown activation '" + s + "'", 0);
}

std::vector<LayerShape> layout(const ModelConfig& config, std::size_t input_dim) {
  std::vector<LayerShape> shapes;
  std::size_t offset = 0, in = input_dim;
  auto push = [&](std::size_t rows, std::size_t cols) {
    shapes.push_back({rows, cols, offset});
    offset += shapes.back().size();
  };
  for (const auto& h : config.hidden) {
    push(h.units, in);
    in = h.units;
  }
  push(config.classes(), in);
  if (config.has_regression()) push(1, in);
  return shapes;
}

Eigen::Map<MatrixXd> weight_mut(std::vector<double>& flat, const LayerShape& s) {
  return {flat.data() + s.offset, static_cast<Eigen::Index>(s.rows),
          static_cast<Eigen::Index>(s.cols)};
}
Eigen::Map<VectorXd> bias_mut(std::vector<double>& flat, const LayerShape& s) {
  return {flat.data() + s.offset + s.rows * s.cols, static_cast<Eigen::Index>(s.rows)};
}

MatrixXd gather(const Matrix& x, std::span<const std::size_t> idx) {
  MatrixXd out(static_cast<Eigen::Index>(x.cols()), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j)
    for (std::size_t c = 0; c < x.cols(); ++c)
      out(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = x.at(idx[j], c);
  return out;
}

// Columns [begin, begin + n) of every non-empty mask.
std::vector<MatrixXd> slice_masks(const std::vector<MatrixXd>& masks, Eigen::Index begin,
                                  Eigen::Index n) {
  std::vector<MatrixXd> out;
  out.reserve(masks.size());
  for (const auto& m : masks) out.push_back(m.size() ? MatrixXd(m.middleCols(begin, n)) : MatrixXd());
  return out;
}

struct BatchResult {
  std::vector<double> grads;
  double loss = 0.0;
};

// Gradient of the mean loss over a full batch of size `normalizer`, restricted
// to the samples idx (a shard of that batch). The returned loss is the shard's
// share of the batch mean.
BatchResult shard_gradient(const ModelState& state, const Dataset& data,
                           std::span<const std::size_t> idx,
                           const std::vector<MatrixXd>& masks, double normalizer) {
  const auto x = gather(data.x, idx);
  const auto cache = forward(state, x, masks);
  std::vector<int> cls(idx.size());
  std::vector<double> reg;
  for (std::size_t j = 0; j < idx.size(); ++j) cls[j] = data.cls[idx[j]];
  if (state.config.has_regression()) {
    reg.resize(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) reg[j] = data.reg[idx[j]];
  }
  const auto g = dual_loss_gradient(state.config, cache, cls, reg, normalizer);
  BatchResult out;
  out.grads = backward(state, cache, g);
  const double lam = state.config.has_regression() ? state.config.lambda : 1.0;
  const auto lv = dual_loss(cache.probs, cls, cache.regression, reg, lam, state.config.log_clamp);
  out.loss = lv.total * static_cast<double>(idx.size()) / normalizer;
  return out;
}

BatchResult batch_gradient(const ModelState& state, const Dataset& data,
                           std::span<const std::size_t> idx,
                           const std::vector<MatrixXd>& masks) {
  const std::size_t n = idx.size();
  const double norm = static_cast<double>(n);
  const std::size_t shards = std::clamp<std::size_t>(state.config.shards, 1, n);
  if (shards == 1) return shard_gradient(state, data, idx, masks, norm);

  std::vector<BatchResult> parts(shards);
  const std::size_t chunk = (n + shards - 1) / shards;
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::size_t s = 0; s < shards; ++s) {
    try {
      const std::size_t b = std::min(n, s * chunk), e = std::min(n, b + chunk);
      if (b == e) continue;
      const auto sm = slice_masks(masks, static_cast<Eigen::Index>(b),
                                  static_cast<Eigen::Index>(e - b));
      parts[s] = shard_gradient(state, data, idx.subspan(b, e - b), sm, norm);
    } catch (...) {
#pragma omp critical(lobfeat_model_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  // Fixed shard order keeps the reduction deterministic.
  BatchResult total;
  total.grads.assign(state.params.size(), 0.0);
  for (const auto& p : parts) {
    if (p.grads.empty()) continue;
    for (std::size_t i = 0; i < p.grads.size(); ++i) total.grads[i] += p.grads[i];
    total.loss += p.loss;
  }
  return total;
}

double mean_loss(const ModelState& state, const Dataset& data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto cache = forward(state, gather(data.x, idx));
  const double lam = state.config.has_regression() ? state.config.lambda : 1.0;
  return dual_loss(cache.probs, data.cls, cache.regression,
                   state.config.has_regression() ? std::span<const double>(data.reg)
                                                 : std::span<const double>{},
                   lam, state.config.log_clamp)
      .total;
}

void check_dataset(const ModelState& state, const Dataset& d, const char* what) {
  if (d.x.rows() != d.cls.size())
    throw DomainError(std::string(what) + ": feature rows and labels differ in count");
  if (d.size() && d.x.cols() != state.input_dim)
    throw DomainError(std::string(what) + ": feature dimension " + std::to_string(d.x.cols()) +
                      " does not match model input " + std::to_string(state.input_dim));
  if (state.config.has_regression() && d.reg.size() != d.cls.size())
    throw DomainError(std::string(what) + ": regression targets missing");
  for (int c : d.cls)
    if (c < 0 || static_cast<std::size_t>(c) >= state.config.classes())
      throw DomainError(std::string(what) + ": class index out of range");
}

// Little-endian primitives.
template <class T>
void put(std::ostream& out, T v) {
  std::array<char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  out.write(b.data(), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> b;
  if (!in.read(b.data(), sizeof(T))) throw ParseError("checkpoint truncated", 0);
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

constexpr char kMagic[8] = {'L', 'O', 'B', 'F', 'E', 'A', 'T', 'M'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void ModelConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  if (!(lr > 0.0)) throw DomainError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw DomainError("Nadam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw DomainError("Nadam epsilon must be positive");
  if (!(log_clamp > 0.0 && log_clamp < 1.0)) throw DomainError("log clamp must lie in (0, 1)");
  if (batch_size == 0) throw DomainError("batch size must be positive");
  for (const auto& h : hidden) {
    if (h.units == 0) throw DomainError("hidden layer with zero units");
    if (h.activation == Activation::Softmax)
      throw DomainError("softmax is only available on the output head");
    if (!(h.dropout >= 0.0 && h.dropout < 1.0)) throw DomainError("dropout must lie in [0, 1)");
  }
}

ModelConfig ModelConfig::preset(std::string_view name, Protocol protocol, double width_scale) {
  if (!(width_scale > 0.0)) throw DomainError("width scale must be positive");
  std::vector<std::pair<std::size_t, double>> layers;
  if (name == "MLP_1") layers = {{4, 0.0}};
  else if (name == "MLP_2") layers = {{512, 0.2}, {256, 0.0}};
  else if (name == "MLP_3") layers = {{256, 0.2}, {256, 0.0}};
  else if (name == "MLP_4") layers = {{256, 0.2}, {256, 0.2}, {256, 0.0}};
  else if (name == "MLP_5") layers = {{128, 0.2}, {128, 0.2}, {128, 0.0}};
  else throw DomainError("unknown model preset '" + std::string(name) + "'");

  ModelConfig c;
  c.name = std::string(name);
  c.protocol = protocol;
  for (auto [units, p] : layers) {
    const auto w = static_cast<std::size_t>(std::lround(static_cast<double>(units) * width_scale));
    c.hidden.push_back({std::max<std::size_t>(1, w), Activation::Tanh, p});
  }
  return c;
}

ModelState ModelState::init(const ModelConfig& config, std::size_t input_dim) {
  config.validate();
  if (input_dim == 0) throw DomainError("model input dimension must be positive");
  ModelState s;
  s.config = config;
  s.input_dim = input_dim;
  s.shapes = layout(config, input_dim);
  const auto& last = s.shapes.back();
  const std::size_t total = last.offset + last.size();
  s.params.assign(total, 0.0);
  s.m.assign(total, 0.0);
  s.v.assign(total, 0.0);

  auto rng = make_rng(config.seed, stream::kInit);
  for (const auto& shape : s.shapes) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(shape.cols));
    for (std::size_t i = 0; i < shape.rows * shape.cols; ++i)
      s.params[shape.offset + i] = (2.0 * unit_uniform(rng) - 1.0) * limit;
  }
  return s;
}

Eigen::Map<const Eigen::MatrixXd> ModelState::weight(std::size_t layer) const {
  const auto& s = shapes.at(layer);
  return {params.data() + s.offset, static_cast<Eigen::Index>(s.rows),
          static_cast<Eigen::Index>(s.cols)};
}

Eigen::Map<const Eigen::VectorXd> ModelState::bias(std::size_t layer) const {
  const auto& s = shapes.at(layer);
  return {params.data() + s.offset + s.rows * s.cols, static_cast<Eigen::Index>(s.rows)};
}

std::vector<MatrixXd> sample_dropout(const ModelState& state, std::size_t batch,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<MatrixXd> masks;
  for (const auto& h : state.config.hidden) {
    if (h.dropout <= 0.0) {
      masks.emplace_back();
      continue;
    }
    const double keep = 1.0 - h.dropout, scale = 1.0 / keep;
    MatrixXd m(static_cast<Eigen::Index>(h.units), static_cast<Eigen::Index>(batch));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = unit_uniform(rng) < keep ? scale : 0.0;
    masks.push_back(std::move(m));
  }
  return masks;
}

ForwardCache forward(const ModelState& state, const MatrixXd& x,
                     const std::vector<MatrixXd>& masks) {
  if (static_cast<std::size_t>(x.rows()) != state.input_dim)
    throw DomainError("input dimension " + std::to_string(x.rows()) + " does not match model input " +
                      std::to_string(state.input_dim));
  const std::size_t L = state.hidden_layers();
  if (!masks.empty() && masks.size() != L) throw DomainError("dropout mask count does not match layers");

  ForwardCache c;
  MatrixXd a = x;
  for (std::size_t l = 0; l < L; ++l) {
    c.inputs.push_back(a);
    MatrixXd z = state.weight(l) * a;
    z.colwise() += state.bias(l);
    if (state.config.hidden[l].activation == Activation::Tanh) z = z.array().tanh().matrix();
    c.tanh_out.push_back(z);
    if (!masks.empty() && masks[l].size()) {
      if (masks[l].rows() != z.rows() || masks[l].cols() != z.cols())
        throw DomainError("dropout mask shape does not match layer output");
      c.masks.push_back(masks[l]);
      a = z.cwiseProduct(masks[l]);
    } else {
      c.masks.emplace_back();
      a = std::move(z);
    }
  }
  c.head_input = a;

  MatrixXd logits = state.weight(L) * a;
  logits.colwise() += state.bias(L);
  // Shift by the column max for a stable softmax.
  const RowVectorXd mx = logits.colwise().maxCoeff();
  MatrixXd e = (logits.rowwise() - mx).array().exp().matrix();
  const RowVectorXd sum = e.colwise().sum();
  c.probs = e.array().rowwise() / sum.array();

  if (state.config.has_regression()) {
    c.regression = state.weight(L + 1) * a;
    c.regression.array() += state.bias(L + 1)(0);
  }
  return c;
}

LossValue dual_loss(const MatrixXd& probs, std::span<const int> target_class,
                    const RowVectorXd& reg_pred, std::span<const double> reg_target,
                    double lambda, double log_clamp) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  const auto n = static_cast<std::size_t>(probs.cols());
  if (target_class.size() != n) throw DomainError("class targets do not match batch");
  if (n == 0) return {};
  const bool regression = !reg_target.empty();
  if (regression && (reg_target.size() != n || static_cast<std::size_t>(reg_pred.size()) != n))
    throw DomainError("regression targets do not match batch");

  LossValue v;
  for (std::size_t j = 0; j < n; ++j) {
    const double p = probs(target_class[j], static_cast<Eigen::Index>(j));
    v.cross_entropy -= std::log(std::max(p, log_clamp));
  }
  v.cross_entropy /= static_cast<double>(n);
  if (regression) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = reg_pred(static_cast<Eigen::Index>(j)) - reg_target[j];
      v.mse += d * d;
    }
    v.mse /= static_cast<double>(n);
  }
  v.total = lambda * v.cross_entropy + (1.0 - lambda) * v.mse;
  return v;
}

double dual_loss(std::span<const double> class_probs, int target_class, double reg_pred,
                 double reg_target, double lambda, double log_clamp) {
  if (target_class < 0 || static_cast<std::size_t>(target_class) >= class_probs.size())
    throw DomainError("target class out of range");
  MatrixXd p(static_cast<Eigen::Index>(class_probs.size()), 1);
  for (std::size_t i = 0; i < class_probs.size(); ++i) p(static_cast<Eigen::Index>(i), 0) = class_probs[i];
  RowVectorXd r(1);
  r(0) = reg_pred;
  const int t[1] = {target_class};
  const double y[1] = {reg_target};
  return dual_loss(p, t, r, y, lambda, log_clamp).total;
}

LossGradient dual_loss_gradient(const ModelConfig& config, const ForwardCache& cache,
                                std::span<const int> target_class,
                                std::span<const double> reg_target, double normalizer) {
  const auto n = cache.probs.cols();
  if (static_cast<Eigen::Index>(target_class.size()) != n)
    throw DomainError("class targets do not match batch");
  if (!(normalizer > 0.0)) throw DomainError("loss normalizer must be positive");
  const double lam = config.has_regression() ? config.lambda : 1.0;

  LossGradient g;
  g.logits = cache.probs * (lam / normalizer);
  for (Eigen::Index j = 0; j < n; ++j) {
    const int t = target_class[static_cast<std::size_t>(j)];
    // A clamped log is constant in the parameters.
    if (cache.probs(t, j) < config.log_clamp) g.logits.col(j).setZero();
    else g.logits(t, j) -= lam / normalizer;
  }
  if (config.has_regression()) {
    if (static_cast<Eigen::Index>(reg_target.size()) != n)
      throw DomainError("regression targets do not match batch");
    g.regression.resize(n);
    for (Eigen::Index j = 0; j < n; ++j)
      g.regression(j) = (1.0 - lam) * 2.0 *
                        (cache.regression(j) - reg_target[static_cast<std::size_t>(j)]) / normalizer;
  }
  return g;
}

std::vector<double> backward(const ModelState& state, const ForwardCache& cache,
                             const LossGradient& grad) {
  const std::size_t L = state.hidden_layers();
  if (cache.inputs.size() != L || cache.tanh_out.size() != L || cache.masks.size() != L ||
      cache.head_input.size() == 0)
    throw DomainError("forward cache missing or from a different model");
  if (grad.logits.rows() != static_cast<Eigen::Index>(state.config.classes()) ||
      grad.logits.cols() != cache.head_input.cols())
    throw DomainError("loss gradient shape does not match forward cache");

  std::vector<double> out(state.params.size(), 0.0);
  const auto& a = cache.head_input;

  weight_mut(out, state.shapes[L]) = grad.logits * a.transpose();
  bias_mut(out, state.shapes[L]) = grad.logits.rowwise().sum();
  MatrixXd delta = state.weight(L).transpose() * grad.logits;
  if (state.config.has_regression()) {
    weight_mut(out, state.shapes[L + 1]) = grad.regression * a.transpose();
    bias_mut(out, state.shapes[L + 1])(0) = grad.regression.sum();
    delta.noalias() += state.weight(L + 1).transpose() * grad.regression;
  }

  for (std::size_t l = L; l-- > 0;) {
    if (cache.masks[l].size()) delta = delta.cwiseProduct(cache.masks[l]);
    if (state.config.hidden[l].activation == Activation::Tanh)
      delta = delta.cwiseProduct((1.0 - cache.tanh_out[l].array().square()).matrix());
    weight_mut(out, state.shapes[l]) = delta * cache.inputs[l].transpose();
    bias_mut(out, state.shapes[l]) = delta.rowwise().sum();
    if (l > 0) delta = state.weight(l).transpose() * delta;
  }
  return out;
}

void nadam_step(ModelState& state, std::span<const double> grads) {
  if (grads.size() != state.params.size()) throw DomainError("gradient size does not match parameters");
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double g = grads[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    state.params[i] -= c.lr / (std::sqrt(v_hat) + c.epsilon) *
                       (c.beta1 * m_hat + (1.0 - c.beta1) * g / bc1);
  }
}

int class_index(Protocol p, int label) {
  if (p == Protocol::I) {
    if (label == -1) return 0;
    if (label == 1) return 1;
  } else if (label >= -1 && label <= 1) {
    return label + 1;
  }
  throw DomainError("label " + std::to_string(label) + " invalid for protocol");
}

int label_of_class(Protocol p, int cls) {
  if (p == Protocol::I) {
    if (cls == 0) return -1;
    if (cls == 1) return 1;
  } else if (cls >= 0 && cls <= 2) {
    return cls - 1;
  }
  throw DomainError("class index out of range");
}

TrainResult train(const ModelConfig& config, const Dataset& train_set, const Dataset& validation) {
  if (train_set.size() == 0) throw DomainError("empty training set");
  return train(ModelState::init(config, train_set.x.cols()), train_set, validation);
}

TrainResult train(ModelState state, const Dataset& train_set, const Dataset& validation) {
  state.config.validate();
  if (train_set.size() == 0) throw DomainError("empty training set");
  check_dataset(state, train_set, "training set");
  check_dataset(state, validation, "validation set");
  const Dataset& monitor = validation.size() ? validation : train_set;

  TrainResult result;
  const auto& cfg = state.config;
  auto shuffle_rng = make_rng(cfg.seed, stream::kShuffle);
  const std::uint64_t dropout_seed = derive_seed(cfg.seed, stream::kDropout);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + b, e - b);
      const auto masks = sample_dropout(state, idx.size(), derive_seed(dropout_seed, state.step));
      const auto br = batch_gradient(state, train_set, idx, masks);
      nadam_step(state, br.grads);
      loss_sum += br.loss * static_cast<double>(idx.size());
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_loss = mean_loss(state, monitor);
    const auto rep = evaluate(state, monitor);
    rec.f1 = rep.f1;
    rec.rmse = rep.rmse;
    result.history.push_back(rec);
  }
  result.state = std::move(state);
  return result;
}

Prediction predict(const ModelState& state, const Matrix& x) {
  if (x.rows() && x.cols() != state.input_dim)
    throw DomainError("feature dimension does not match model input");
  Prediction p;
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (idx.empty()) return p;
  const auto c = forward(state, gather(x, idx));
  p.cls.resize(idx.size());
  for (Eigen::Index j = 0; j < c.probs.cols(); ++j) {
    Eigen::Index arg = 0;
    c.probs.col(j).maxCoeff(&arg);
    p.cls[static_cast<std::size_t>(j)] = static_cast<int>(arg);
  }
  if (state.config.has_regression()) p.reg.assign(c.regression.data(), c.regression.data() + c.regression.size());
  return p;
}

double precision_of(const ClassCounts& c) {
  const auto d = c.tp + c.fp;
  return d ? static_cast<double>(c.tp) / static_cast<double>(d) : 0.0;
}

double recall_of(const ClassCounts& c) {
  const auto d = c.tp + c.fn;
  return d ? static_cast<double>(c.tp) / static_cast<double>(d) : 0.0;
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

double rmse(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size()) throw DomainError("rmse: length mismatch");
  if (predicted.empty()) throw DomainError("rmse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - observed[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(predicted.size()));
}

EvalReport evaluate_predictions(Protocol protocol, const Prediction& pred, const Dataset& truth) {
  if (truth.size() == 0) throw DomainError("empty test set");
  if (pred.cls.size() != truth.size()) throw DomainError("prediction count does not match test set");
  const std::size_t k = protocol == Protocol::I ? 2 : 3;
  EvalReport r;
  r.protocol = protocol;
  r.samples = truth.size();
  r.classes.assign(k, {});
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto p = static_cast<std::size_t>(pred.cls[i]);
    const auto t = static_cast<std::size_t>(truth.cls[i]);
    if (p >= k || t >= k) throw DomainError("class index out of range");
    if (p == t) {
      ++r.classes[t].tp;
    } else {
      ++r.classes[p].fp;
      ++r.classes[t].fn;
    }
  }
  if (protocol == Protocol::I) {
    const auto& up = r.classes[1];
    r.precision = precision_of(up);
    r.recall = recall_of(up);
    r.f1 = f1_score(r.precision, r.recall);
    if (pred.reg.size() != truth.size() || truth.reg.size() != truth.size())
      throw DomainError("regression predictions or targets missing");
    r.rmse = rmse(pred.reg, truth.reg);
  } else {
    for (const auto& c : r.classes) {
      const double p = precision_of(c), q = recall_of(c);
      r.precision += p / static_cast<double>(k);
      r.recall += q / static_cast<double>(k);
      r.f1 += f1_score(p, q) / static_cast<double>(k);
    }
  }
  return r;
}

EvalReport evaluate(const ModelState& state, const Dataset& test) {
  check_dataset(state, test, "test set");
  return evaluate_predictions(state.config.protocol, predict(state, test.x), test);
}

std::string config_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["protocol"] = c.protocol == Protocol::I ? "I" : "II";
  auto layers = nlohmann::ordered_json::array();
  for (const auto& h : c.hidden)
    layers.push_back({{"units", h.units}, {"activation", activation_name(h.activation)}, {"dropout", h.dropout}});
  j["hidden"] = layers;
  j["lambda"] = c.lambda;
  j["lr"] = c.lr;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["log_clamp"] = c.log_clamp;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["shards"] = c.shards;
  return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ModelConfig c;
    c.name = j.at("name").get<std::string>();
    const auto p = j.at("protocol").get<std::string>();
    if (p != "I" && p != "II") throw ParseError("unknown protocol '" + p + "'", 0);
    c.protocol = p == "I" ? Protocol::I : Protocol::II;
    for (const auto& h : j.at("hidden"))
      c.hidden.push_back({h.at("units").get<std::size_t>(),
                          activation_from(h.at("activation").get<std::string>()),
                          h.at("dropout").get<double>()});
    c.lambda = j.at("lambda").get<double>();
    c.lr = j.at("lr").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.log_clamp = j.at("log_clamp").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.shards = j.value("shards", std::size_t{1});
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model config: ") + e.what(), 0);
  }
}

void save_checkpoint(std::ostream& out, const ModelState& s) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  const auto cfg = config_json(s.config);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  put<std::uint64_t>(out, s.input_dim);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.shapes.size()));
  for (const auto& sh : s.shapes) {
    put<std::uint64_t>(out, sh.rows);
    put<std::uint64_t>(out, sh.cols);
  }
  put<std::uint64_t>(out, s.params.size());
  for (const auto* vec : {&s.params, &s.m, &s.v})
    for (double d : *vec) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d));
  put<std::uint64_t>(out, s.step);
  if (!out) throw Error("checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const ModelState& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  save_checkpoint(out, s);
}

ModelState load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw ParseError("not a model checkpoint", 0);
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version), 0);
  std::string cfg(get<std::uint32_t>(in), '\0');
  if (!in.read(cfg.data(), static_cast<std::streamsize>(cfg.size()))) throw ParseError("checkpoint truncated", 0);

  ModelState s;
  s.config = config_from_json(cfg);
  s.config.validate();
  s.input_dim = get<std::uint64_t>(in);
  s.shapes = layout(s.config, s.input_dim);
  if (get<std::uint32_t>(in) != s.shapes.size()) throw ParseError("checkpoint layer count mismatch", 0);
  for (const auto& sh : s.shapes)
    if (get<std::uint64_t>(in) != sh.rows || get<std::uint64_t>(in) != sh.cols)
      throw ParseError("checkpoint layer shape mismatch", 0);
  const auto count = get<std::uint64_t>(in);
  if (count != s.shapes.back().offset + s.shapes.back().size())
    throw ParseError("checkpoint parameter count mismatch", 0);
  for (auto* vec : {&s.params, &s.m, &s.v}) {
    vec->resize(count);
    for (auto& d : *vec) d = std::bit_cast<double>(get<std::uint64_t>(in));
  }
  s.step = get<std::uint64_t>(in);
  return s;
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return load_checkpoint(in);
}

void write_history(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,train_loss,val_loss,f1,rmse\n";
  std::ostringstream line;
  line.precision(17);
  for (const auto& r : history) {
    line.str({});
    line << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.f1 << ',' << r.rmse << '\n';
    out << line.str();
  }
}

}  // namespace lobfeat::model
