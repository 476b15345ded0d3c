#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <vector>

#include "sabrnet/errors.hpp"
#include "sabrnet/rng.hpp"
#include "sabrnet/surface_types.hpp"

// Feedforward surrogate mapping (T, K, alpha0, nu, rho) to implied vols,
// trained with ADAM under validation-driven learning-rate decay and a
// masked squared loss.

namespace sabrnet {

struct NetConfig {
  int hidden_layers = 2;
  int nodes_per_layer = 256;
  std::uint64_t init_seed = 1;

  void validate() const {
    if (hidden_layers < 1) throw ConfigError("NetConfig: hidden_layers must be >= 1");
    if (nodes_per_layer < 1) throw ConfigError("NetConfig: nodes_per_layer must be >= 1");
  }
};

struct TrainConfig {
  int batch_size = 100;  ///< surfaces per batch
  double lr_initial = 1e-5;
  double lr_decay_factor = 10.0;
  double lr_floor = 1e-8;
  int patience = 1;  ///< non-improving validation epochs before a decay
  int max_epochs = 0;  ///< 0 = run until the learning rate drops below lr_floor
  std::uint64_t shuffle_seed = 1;
  // ADAM moments; the cited defaults.
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (!(lr_floor < lr_initial)) throw ConfigError("TrainConfig: lr_floor must be < lr_initial");
    if (!(lr_decay_factor > 1.0)) throw ConfigError("TrainConfig: decay factor must be > 1");
    if (patience < 1) throw ConfigError("TrainConfig: patience must be >= 1");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

template <typename Scalar>
class Network {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  static constexpr int kInputs = 5;

  NetConfig config;
  std::vector<Matrix> weights;  ///< layer l maps (in) -> (out): out x in
  std::vector<Vector> biases;
  /// Optional affine input standardization, recorded in checkpoints.
  /// Defaults to the identity: inputs are order-1 already (f0 = 1).
  std::array<double, kInputs> input_shift{};
  std::array<double, kInputs> input_scale{1.0, 1.0, 1.0, 1.0, 1.0};
  std::vector<EpochRecord> history;

  std::size_t parameter_count() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
      count += static_cast<std::size_t>(weights[l].size()) +
               static_cast<std::size_t>(biases[l].size());
    return count;
  }

  Eigen::VectorXd parameters() const {
    Eigen::VectorXd flat(static_cast<long>(parameter_count()));
    long at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (long i = 0; i < weights[l].rows(); ++i)
        for (long j = 0; j < weights[l].cols(); ++j) flat[at++] = weights[l](i, j);
      for (long i = 0; i < biases[l].size(); ++i) flat[at++] = biases[l][i];
    }
    return flat;
  }

  void set_parameters(const Eigen::VectorXd& flat) {
    if (static_cast<std::size_t>(flat.size()) != parameter_count())
      throw DomainError("Network::set_parameters: size mismatch");
    long at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (long i = 0; i < weights[l].rows(); ++i)
        for (long j = 0; j < weights[l].cols(); ++j)
          weights[l](i, j) = static_cast<Scalar>(flat[at++]);
      for (long i = 0; i < biases[l].size(); ++i) biases[l][i] = static_cast<Scalar>(flat[at++]);
    }
  }

  /// X is kInputs x B (one column per grid point); returns 1 x B vols.
  Matrix forward(const Matrix& X) const {
    if (!X.allFinite()) throw DomainError("Network::forward: non-finite input");
    Matrix a = standardized(X);
    for (std::size_t l = 0; l + 1 < weights.size(); ++l)
      a = ((weights[l] * a).colwise() + biases[l]).cwiseMax(Scalar(0));
    return (weights.back() * a).colwise() + biases.back();
  }

  /// Masked mean squared loss and its gradient in parameter-vector order.
  /// valid[b] == 0 drops column b from the loss.
  double loss_and_gradient(const Matrix& X, const Eigen::VectorXd& targets,
                           const std::vector<std::uint8_t>& valid, std::vector<Matrix>& grad_w,
                           std::vector<Matrix>& grad_b) const {
    const long batch = X.cols();
    const std::size_t layers = weights.size();
    std::vector<Matrix> activations(layers + 1);
    activations[0] = standardized(X);
    for (std::size_t l = 0; l + 1 < layers; ++l)
      activations[l + 1] = ((weights[l] * activations[l]).colwise() + biases[l]).cwiseMax(Scalar(0));
    activations[layers] = (weights.back() * activations[layers - 1]).colwise() + biases.back();

    long n_valid = 0;
    for (long b = 0; b < batch; ++b) n_valid += valid[static_cast<std::size_t>(b)] != 0;
    double loss = 0.0;
    Matrix delta = Matrix::Zero(1, batch);
    if (n_valid > 0) {
      for (long b = 0; b < batch; ++b) {
        if (valid[static_cast<std::size_t>(b)] == 0) continue;
        const double diff = static_cast<double>(activations[layers](0, b)) - targets[b];
        loss += diff * diff;
        delta(0, b) = static_cast<Scalar>(2.0 * diff / static_cast<double>(n_valid));
      }
      loss /= static_cast<double>(n_valid);
    }

    grad_w.resize(layers);
    grad_b.resize(layers);
    Matrix d = delta;
    for (std::size_t l = layers; l-- > 0;) {
      grad_w[l].noalias() = d * activations[l].transpose();
      grad_b[l] = d.rowwise().sum();
      if (l > 0) {
        Matrix back = weights[l].transpose() * d;
        d = back.cwiseProduct(
            (activations[l].array() > Scalar(0)).template cast<Scalar>().matrix());
      }
    }
    return loss;
  }

 private:
  Matrix standardized(const Matrix& X) const {
    Matrix a = X;
    for (int i = 0; i < kInputs; ++i)
      a.row(i) = (a.row(i).array() - static_cast<Scalar>(input_shift[static_cast<std::size_t>(i)])) /
                 static_cast<Scalar>(input_scale[static_cast<std::size_t>(i)]);
    return a;
  }
};

template <typename Scalar>
Network<Scalar> init_network(const NetConfig& cfg) {
  cfg.validate();
  Network<Scalar> net;
  net.config = cfg;
  const int layers = cfg.hidden_layers + 1;
  net.weights.resize(static_cast<std::size_t>(layers));
  net.biases.resize(static_cast<std::size_t>(layers));
  rng::NormalSampler normal(rng::mix_seed(cfg.init_seed, 0x4e455457ULL /* "NETW" */, 0));
  for (int l = 0; l < layers; ++l) {
    const int fan_in = l == 0 ? Network<Scalar>::kInputs : cfg.nodes_per_layer;
    const int fan_out = l == layers - 1 ? 1 : cfg.nodes_per_layer;
    const double scale = std::sqrt(2.0 / fan_in);  // variance scaling for ReLU
    auto& w = net.weights[static_cast<std::size_t>(l)];
    w.resize(fan_out, fan_in);
    for (long i = 0; i < w.rows(); ++i)
      for (long j = 0; j < w.cols(); ++j) w(i, j) = static_cast<Scalar>(scale * normal());
    net.biases[static_cast<std::size_t>(l)] = Network<Scalar>::Vector::Zero(fan_out);
  }
  return net;
}

/// Flattens one surface's grid into forward() inputs; returns the kInputs x
/// (m*n) matrix in row-major grid order.
template <typename Scalar>
typename Network<Scalar>::Matrix surface_inputs(const SurfaceSpec& spec) {
  typename Network<Scalar>::Matrix X(Network<Scalar>::kInputs,
                                     static_cast<long>(spec.maturities.size()) * spec.n);
  long at = 0;
  for (int row = 0; row < spec.m; ++row) {
    for (int col = 0; col < spec.n; ++col, ++at) {
      X(0, at) = static_cast<Scalar>(spec.maturities[static_cast<std::size_t>(row)]);
      X(1, at) = static_cast<Scalar>(spec.strike(row, col));
      X(2, at) = static_cast<Scalar>(spec.params.alpha0);
      X(3, at) = static_cast<Scalar>(spec.params.nu);
      X(4, at) = static_cast<Scalar>(spec.params.rho);
    }
  }
  return X;
}

/// Mean squared error over non-excluded points of one surface.
/// pred holds the full grid in row-major order.
template <typename Scalar>
double masked_mse(const typename Network<Scalar>::Matrix& pred, const IvSurface& target) {
  if (static_cast<std::size_t>(pred.size()) != target.iv.size())
    throw DomainError("masked_mse: shape mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < target.iv.size(); ++i) {
    if (target.mask[i] != 0) continue;
    const double diff = static_cast<double>(pred(0, static_cast<long>(i))) - target.iv[i];
    sum += diff * diff;
    ++count;
  }
  if (count == 0) throw DomainError("masked_mse: all points excluded");
  return sum / static_cast<double>(count);
}

template <typename Scalar>
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, Network<Scalar> last_finite)
      : NumericError(what), last_finite_state(std::move(last_finite)) {}
  Network<Scalar> last_finite_state;
};

namespace detail {

/// Masked mean squared fitting error of a network over a whole dataset.
template <typename Scalar>
double dataset_mse(const Network<Scalar>& net, const Dataset& ds) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& surface : ds.surfaces) {
    const auto pred = net.forward(surface_inputs<Scalar>(surface.spec));
    for (std::size_t i = 0; i < surface.iv.size(); ++i) {
      if (surface.mask[i] != 0) continue;
      const double diff = static_cast<double>(pred(0, static_cast<long>(i))) - surface.iv[i];
      sum += diff * diff;
      ++count;
    }
  }
  if (count == 0) throw DomainError("dataset has no usable points");
  return sum / static_cast<double>(count);
}

}  // namespace detail

/// Trains with ADAM; returns the parameter state with the best validation
/// loss seen, with the full epoch history attached. Single-controller and
/// deterministic for fixed seeds.
template <typename Scalar>
Network<Scalar> train(Network<Scalar> net, const Dataset& train_ds, const Dataset& val_ds,
                      const TrainConfig& tcfg) {
  tcfg.validate();
  if (train_ds.surfaces.empty() || val_ds.surfaces.empty())
    throw DomainError("train: datasets must be nonempty");
  if (train_ds.master_seed == val_ds.master_seed && train_ds.role == val_ds.role)
    throw DomainError("train: validation set must be disjoint from training set");

  using Matrix = typename Network<Scalar>::Matrix;
  const std::size_t layers = net.weights.size();
  std::vector<Matrix> adam_m(layers), adam_v(layers), adam_mb(layers), adam_vb(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    adam_m[l] = Matrix::Zero(net.weights[l].rows(), net.weights[l].cols());
    adam_v[l] = adam_m[l];
    adam_mb[l] = Matrix::Zero(net.biases[l].size(), 1);
    adam_vb[l] = adam_mb[l];
  }

  double lr = tcfg.lr_initial;
  double best_val = std::numeric_limits<double>::infinity();
  Network<Scalar> best = net;
  Network<Scalar> last_finite = net;
  int bad_epochs = 0;
  long adam_t = 0;

  std::vector<std::size_t> order(train_ds.surfaces.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Xoshiro256pp shuffle_rng(rng::mix_seed(tcfg.shuffle_seed, 0x53485546ULL /* "SHUF" */, 0));

  std::vector<Matrix> grad_w, grad_b;
  for (int epoch = 1; tcfg.max_epochs == 0 || epoch <= tcfg.max_epochs; ++epoch) {
    // Fisher-Yates with the dedicated stream; identical across runs.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng() % i;
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    std::size_t epoch_points = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(tcfg.batch_size));
      long batch_cols = 0;
      for (std::size_t i = start; i < stop; ++i)
        batch_cols += static_cast<long>(train_ds.surfaces[order[i]].iv.size());

      Matrix X(Network<Scalar>::kInputs, batch_cols);
      Eigen::VectorXd targets(batch_cols);
      std::vector<std::uint8_t> valid(static_cast<std::size_t>(batch_cols), 0);
      long at = 0;
      for (std::size_t i = start; i < stop; ++i) {
        const IvSurface& surface = train_ds.surfaces[order[i]];
        X.middleCols(at, static_cast<long>(surface.iv.size())) =
            surface_inputs<Scalar>(surface.spec);
        for (std::size_t p = 0; p < surface.iv.size(); ++p) {
          const long col = at + static_cast<long>(p);
          if (surface.mask[p] == 0) {
            targets[col] = surface.iv[p];
            valid[static_cast<std::size_t>(col)] = 1;
          } else {
            targets[col] = 0.0;
          }
        }
        at += static_cast<long>(surface.iv.size());
      }

      const double batch_loss = net.loss_and_gradient(X, targets, valid, grad_w, grad_b);
      if (!std::isfinite(batch_loss))
        throw TrainingDiverged<Scalar>("train: non-finite loss", last_finite);
      const std::size_t batch_valid =
          static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
      epoch_loss += batch_loss * static_cast<double>(batch_valid);
      epoch_points += batch_valid;

      ++adam_t;
      const double bias1 = 1.0 - std::pow(tcfg.adam_beta1, static_cast<double>(adam_t));
      const double bias2 = 1.0 - std::pow(tcfg.adam_beta2, static_cast<double>(adam_t));
      const Scalar b1 = static_cast<Scalar>(tcfg.adam_beta1);
      const Scalar b2 = static_cast<Scalar>(tcfg.adam_beta2);
      const Scalar step = static_cast<Scalar>(lr / bias1);
      const Scalar vscale = static_cast<Scalar>(1.0 / bias2);
      const Scalar eps = static_cast<Scalar>(tcfg.adam_eps);
      for (std::size_t l = 0; l < layers; ++l) {
        adam_m[l] = b1 * adam_m[l] + (Scalar(1) - b1) * grad_w[l];
        adam_v[l] = b2 * adam_v[l].array().matrix() +
                    (Scalar(1) - b2) * grad_w[l].cwiseProduct(grad_w[l]);
        net.weights[l].array() -=
            step * adam_m[l].array() / ((vscale * adam_v[l].array()).sqrt() + eps);
        adam_mb[l] = b1 * adam_mb[l] + (Scalar(1) - b1) * grad_b[l];
        adam_vb[l] = b2 * adam_vb[l] + (Scalar(1) - b2) * grad_b[l].cwiseProduct(grad_b[l]);
        net.biases[l].array() -=
            step * adam_mb[l].col(0).array() / ((vscale * adam_vb[l].col(0).array()).sqrt() + eps);
      }
    }
    last_finite = net;

    const double train_loss =
        epoch_points > 0 ? epoch_loss / static_cast<double>(epoch_points) : 0.0;
    const double val_loss = detail::dataset_mse(net, val_ds);
    if (!std::isfinite(val_loss))
      throw TrainingDiverged<Scalar>("train: non-finite validation loss", last_finite);
    net.history.push_back({epoch, train_loss, val_loss, lr});

    if (val_loss < best_val) {
      best_val = val_loss;
      best = net;
      best.history = net.history;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= tcfg.patience) {
        lr /= tcfg.lr_decay_factor;
        bad_epochs = 0;
        if (lr < tcfg.lr_floor) break;
      }
    }
  }

  best.history = net.history;
  return best;
}

/// Versioned checkpoint; loadable without the training data.
template <typename Scalar>
void save_network(const Network<Scalar>& net, const std::filesystem::path& path,
                  std::uint64_t config_hash = 0);
template <typename Scalar>
Network<Scalar> load_network(const std::filesystem::path& path);

/// Training history CSV: epoch,train_loss,val_loss,lr.
void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path,
                       const std::string& header_comment = "");

inline constexpr std::uint16_t kCheckpointFormatVersion = 1;

}  // namespace sabrnet
