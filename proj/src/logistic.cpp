#include "hoplab/logistic.hpp"

#include <cmath>
#include <stdexcept>

namespace hoplab {

std::vector<double> ratio_features(const Matrix& profiles, std::size_t k) {
  std::vector<double> f(static_cast<std::size_t>(profiles.rows()));
  for (Eigen::Index i = 0; i < profiles.rows(); ++i) {
    const auto row = profiles.row(i);
    f[static_cast<std::size_t>(i)] =
        stability_ratio(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), k);
  }
  return f;
}

double logistic_loss(std::span<const double> params, std::span<const double> features,
                     std::span<const std::size_t> labels, std::span<const double> sample_weights,
                     std::size_t num_classes, double l2, std::vector<double>* grad) {
  const std::size_t k = num_classes;
  if (params.size() != 2 * k) throw std::invalid_argument("logistic_loss: parameter count");
  if (grad) grad->assign(2 * k, 0.0);
  std::vector<double> z(k);
  double loss = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double x = features[i];
    double mx = -INFINITY;
    for (std::size_t c = 0; c < k; ++c) {
      z[c] = params[c] * x + params[k + c];
      mx = std::max(mx, z[c]);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) sum += std::exp(z[c] - mx);
    const double lse = mx + std::log(sum);
    const double s = sample_weights[i];
    loss += s * (lse - z[labels[i]]);
    if (grad) {
      for (std::size_t c = 0; c < k; ++c) {
        const double r = s * (std::exp(z[c] - lse) - (c == labels[i] ? 1.0 : 0.0));
        (*grad)[c] += r * x;
        (*grad)[k + c] += r;
      }
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    loss += l2 * params[c] * params[c];
    if (grad) (*grad)[c] += 2.0 * l2 * params[c];
  }
  return loss;
}

StabilityRatioModel train_stability_ratio(const LabeledDataset& data, const LogisticOptions& options) {
  data.validate();
  if (data.num_classes() < 2) throw std::invalid_argument("train_stability_ratio: need at least two classes");
  const std::size_t n = data.dimension();
  const std::size_t ratio_k = options.k == 0 ? default_ratio_k(n) : options.k;
  const auto features = ratio_features(data.profiles, ratio_k);
  for (double f : features)
    if (!std::isfinite(f)) throw std::invalid_argument("train_stability_ratio: non-finite stability ratio");
  const auto weights = class_weights(data).per_row(data);
  const std::size_t k = data.num_classes();
  const auto dim = static_cast<Eigen::Index>(2 * k);

  std::vector<double> theta(2 * k, 0.0);
  std::vector<double> g;
  double loss = logistic_loss(theta, features, data.labels, weights, k, options.l2, &g);
  std::vector<double> p(k);
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::Map<const Vector> gv(g.data(), dim);
    if (gv.norm() < options.tolerance) break;

    Matrix h = Matrix::Zero(dim, dim);
    for (std::size_t i = 0; i < features.size(); ++i) {
      const double x = features[i];
      double mx = -INFINITY;
      for (std::size_t c = 0; c < k; ++c) {
        p[c] = theta[c] * x + theta[k + c];
        mx = std::max(mx, p[c]);
      }
      double sum = 0.0;
      for (std::size_t c = 0; c < k; ++c) sum += (p[c] = std::exp(p[c] - mx));
      for (std::size_t c = 0; c < k; ++c) p[c] /= sum;
      const double s = weights[i];
      const double phi[2] = {x, 1.0};
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          const double cov = s * ((a == b ? p[a] : 0.0) - p[a] * p[b]);
          if (cov == 0.0) continue;
          for (int u = 0; u < 2; ++u)
            for (int v = 0; v < 2; ++v)
              h(static_cast<Eigen::Index>(u * k + a), static_cast<Eigen::Index>(v * k + b)) += cov * phi[u] * phi[v];
        }
      }
    }
    for (std::size_t c = 0; c < k; ++c) h(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) += 2.0 * options.l2;
    // Softmax is invariant to a shared bias shift; a small ridge removes that
    // null direction from the Newton system.
    const double ridge = 1e-10 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
    h.diagonal().array() += ridge;
    const Vector step = -h.ldlt().solve(gv);

    double t = 1.0;
    const double slope = gv.dot(step);
    std::vector<double> trial(2 * k);
    std::vector<double> trial_g;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < 2 * k; ++j) trial[j] = theta[j] + t * step(static_cast<Eigen::Index>(j));
      const double trial_loss = logistic_loss(trial, features, data.labels, weights, k, options.l2, &trial_g);
      if (std::isfinite(trial_loss) && trial_loss <= loss + 1e-4 * t * slope) {
        theta = trial;
        g = trial_g;
        loss = trial_loss;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no further decrease representable
  }

  StabilityRatioModel model;
  model.k = ratio_k;
  model.input_width = n;
  model.coef = Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(k));
  model.bias = Eigen::Map<const Vector>(theta.data() + k, static_cast<Eigen::Index>(k));
  model.l2_strength = options.l2;
  model.class_set = data.class_set;
  model.normalized = data.normalized;
  return model;
}

}  // namespace hoplab
