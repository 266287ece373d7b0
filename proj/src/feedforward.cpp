#include "hoplab/feedforward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hoplab {

namespace {

std::vector<std::size_t> resolve_layers(const LabeledDataset& data, std::vector<std::size_t> sizes) {
  if (sizes.empty()) sizes = {data.dimension(), data.num_classes()};
  if (sizes.size() < 2) throw std::invalid_argument("layer_sizes: need at least input and output");
  if (sizes.front() != data.dimension())
    throw std::invalid_argument("layer_sizes: first entry " + std::to_string(sizes.front()) +
                                " differs from profile width " + std::to_string(data.dimension()));
  if (sizes.back() != data.num_classes())
    throw std::invalid_argument("layer_sizes: last entry " + std::to_string(sizes.back()) +
                                " differs from class count " + std::to_string(data.num_classes()));
  for (auto s : sizes)
    if (s == 0) throw std::invalid_argument("layer_sizes: zero-width layer");
  return sizes;
}

struct AdamState {
  std::vector<Matrix> mw, vw;
  std::vector<Vector> mb, vb;
  std::size_t t = 0;

  explicit AdamState(const MlpParams& p) {
    for (const auto& w : p.weights) {
      mw.push_back(Matrix::Zero(w.rows(), w.cols()));
      vw.push_back(Matrix::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : p.biases) {
      mb.push_back(Vector::Zero(b.size()));
      vb.push_back(Vector::Zero(b.size()));
    }
  }

  void step(MlpParams& p, const MlpParams& g, const NnOptions& o) {
    ++t;
    const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(t));
    auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
      m = o.beta1 * m + (1.0 - o.beta1) * grad;
      v = o.beta2 * v + (1.0 - o.beta2) * grad.cwiseProduct(grad);
      param.array() -= o.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + o.epsilon);
    };
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      update(p.weights[l], g.weights[l], mw[l], vw[l]);
      update(p.biases[l], g.biases[l], mb[l], vb[l]);
    }
  }
};

}  // namespace

std::vector<std::size_t> MlpParams::layer_sizes() const {
  std::vector<std::size_t> s;
  if (weights.empty()) return s;
  s.push_back(static_cast<std::size_t>(weights.front().cols()));
  for (const auto& w : weights) s.push_back(static_cast<std::size_t>(w.rows()));
  return s;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& w : weights) out.insert(out.end(), w.data(), w.data() + w.size());
  for (const auto& b : biases) out.insert(out.end(), b.data(), b.data() + b.size());
  return out;
}

void MlpParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw std::invalid_argument("MlpParams::assign: size");
  std::size_t k = 0;
  for (auto& w : weights)
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = flat[k++];
  for (auto& b : biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = flat[k++];
}

MlpParams init_mlp(std::span<const std::size_t> layer_sizes, RandomStream& rng) {
  MlpParams p;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(layer_sizes[l]);
    const auto out = static_cast<Eigen::Index>(layer_sizes[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(out, in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * rng.uniform() - 1.0) * limit;
    p.weights.push_back(std::move(w));
    p.biases.push_back(Vector::Zero(out));
  }
  return p;
}

Matrix mlp_forward(const MlpParams& p, const Matrix& x) {
  Matrix a = x;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    Matrix z = a * p.weights[l].transpose();
    z.rowwise() += p.biases[l].transpose();
    if (l + 1 < p.weights.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

double mlp_loss(const MlpParams& p, const Matrix& x, std::span<const std::size_t> labels,
                std::span<const double> sample_weights, double lambda, MlpParams* grad) {
  const std::size_t layers = p.weights.size();
  const Eigen::Index m = x.rows();
  std::vector<Matrix> acts;  // acts[l] is the input to layer l
  acts.reserve(layers + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = acts.back() * p.weights[l].transpose();
    z.rowwise() += p.biases[l].transpose();
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  const Matrix& logits = acts.back();
  const Eigen::Index k = logits.cols();

  double wsum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) wsum += sample_weights[static_cast<std::size_t>(i)];
  if (!(wsum > 0.0)) throw std::invalid_argument("mlp_loss: sample weights sum to zero");

  double ce = 0.0;
  Matrix delta(m, k);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mx = logits.row(i).maxCoeff();
    double z = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) z += std::exp(logits(i, c) - mx);
    const double lse = mx + std::log(z);
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
    const double s = sample_weights[static_cast<std::size_t>(i)] / wsum;
    ce += s * (lse - logits(i, y));
    for (Eigen::Index c = 0; c < k; ++c) delta(i, c) = s * std::exp(logits(i, c) - lse);
    delta(i, y) -= s;
  }
  double reg = 0.0;
  for (const auto& w : p.weights) reg += w.squaredNorm();
  const double loss = ce + lambda * reg;
  if (!grad) return loss;

  grad->weights.resize(layers);
  grad->biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    grad->weights[l] = delta.transpose() * acts[l] + 2.0 * lambda * p.weights[l];
    grad->biases[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix back = delta * p.weights[l];
    // Rectifier derivative, taken as zero at the kink.
    back.array() *= (acts[l].array() > 0.0).cast<double>();
    delta = std::move(back);
  }
  return loss;
}

MlpParams train_mlp(const LabeledDataset& data, const NnOptions& options) {
  data.validate();
  const auto sizes = resolve_layers(data, options.layer_sizes);
  if (options.batch_size == 0) throw std::invalid_argument("batch_size: must be positive");
  if (!(options.lambda >= 0.0)) throw std::invalid_argument("lambda: must be non-negative");
  if (!(options.learning_rate >= 0.0)) throw std::invalid_argument("learning_rate: must be non-negative");

  RandomStream rng(options.seed);
  RandomStream init_rng = rng.split({1});
  RandomStream order_rng = rng.split({2});
  MlpParams p = init_mlp(sizes, init_rng);
  AdamState adam(p);

  const auto row_w = class_weights(data).per_row(data);
  const std::size_t m = data.rows();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});

  Matrix batch;
  std::vector<std::size_t> batch_labels;
  std::vector<double> batch_w;
  MlpParams g;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t k = m; k > 1; --k) std::swap(order[k - 1], order[order_rng.index(k)]);
    for (std::size_t start = 0; start < m; start += options.batch_size) {
      const std::size_t end = std::min(m, start + options.batch_size);
      const auto rows = static_cast<Eigen::Index>(end - start);
      batch.resize(rows, data.profiles.cols());
      batch_labels.resize(end - start);
      batch_w.resize(end - start);
      for (std::size_t r = start; r < end; ++r) {
        batch.row(static_cast<Eigen::Index>(r - start)) = data.profiles.row(static_cast<Eigen::Index>(order[r]));
        batch_labels[r - start] = data.labels[order[r]];
        batch_w[r - start] = row_w[order[r]];
      }
      const double loss = mlp_loss(p, batch, batch_labels, batch_w, options.lambda, &g);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "train_mlp: non-finite loss at epoch " << epoch << ", batch starting at row " << start
            << " (layers";
        for (auto s : sizes) msg << ' ' << s;
        msg << ", lambda " << options.lambda << ", lr " << options.learning_rate << ")";
        throw TrainingDiverged(msg.str());
      }
      adam.step(p, g, options);
    }
  }
  return p;
}

Model train_nn(const LabeledDataset& data, const NnOptions& options) {
  MlpParams p = train_mlp(data, options);
  if (p.weights.size() == 1) {
    LinearModel lm;
    lm.kind = LinearKind::NeuralSoftmax;
    lm.coef = std::move(p.weights.front());
    lm.bias = std::move(p.biases.front());
    lm.class_set = data.class_set;
    lm.normalized = data.normalized;
    return lm;
  }
  DeepModel dm;
  dm.layer_sizes = p.layer_sizes();
  dm.weights = std::move(p.weights);
  dm.biases = std::move(p.biases);
  dm.class_set = data.class_set;
  dm.normalized = data.normalized;
  return dm;
}

DamModel train_dam(const LabeledDataset& data, std::size_t memories, const NnOptions& options) {
  if (memories == 0) throw std::invalid_argument("memories: must be at least 1");
  NnOptions o = options;
  o.layer_sizes = {data.dimension(), memories, data.num_classes()};
  MlpParams p = train_mlp(data, o);

  const Matrix& out = p.weights[1];
  std::vector<std::size_t> order(memories);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> strength(memories);
  for (std::size_t h = 0; h < memories; ++h) strength[h] = out.col(static_cast<Eigen::Index>(h)).norm();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return strength[a] > strength[b]; });

  DamModel dam;
  const auto hidden = static_cast<Eigen::Index>(memories);
  dam.memories.resize(hidden, p.weights[0].cols());
  dam.memory_bias.resize(hidden);
  dam.output.resize(out.rows(), hidden);
  for (Eigen::Index r = 0; r < hidden; ++r) {
    const auto src = static_cast<Eigen::Index>(order[static_cast<std::size_t>(r)]);
    dam.memories.row(r) = p.weights[0].row(src);
    dam.memory_bias(r) = p.biases[0](src);
    dam.output.col(r) = out.col(src);
  }
  dam.output_bias = p.biases[1];
  dam.class_set = data.class_set;
  dam.normalized = data.normalized;
  return dam;
}

}  // namespace hoplab
