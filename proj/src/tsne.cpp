#include "hoplab/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hoplab/random.hpp"

namespace hoplab {

namespace {

Matrix squared_distances(const Matrix& x) {
  const Vector n = x.rowwise().squaredNorm();
  Matrix d = x * x.transpose();
  d *= -2.0;
  d.colwise() += n;
  d.rowwise() += n.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

}  // namespace

Matrix conditional_affinities(const Matrix& sq_distances, double perplexity) {
  const Eigen::Index m = sq_distances.rows();
  const double target = std::log(perplexity);
  Matrix p = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double dmin = INFINITY;
    for (Eigen::Index j = 0; j < m; ++j)
      if (j != i) dmin = std::min(dmin, sq_distances(i, j));
    double beta = 1.0;
    double lo = 0.0;
    double hi = INFINITY;
    for (int iter = 0; iter < 200; ++iter) {
      double sum = 0.0;
      double weighted = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j == i) continue;
        const double shifted = sq_distances(i, j) - dmin;
        const double v = std::exp(-beta * shifted);
        p(i, j) = v;
        sum += v;
        weighted += shifted * v;
      }
      // Entropy of the row distribution (natural log).
      const double entropy = std::log(sum) + beta * weighted / sum;
      p.row(i) /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0.0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
  }
  return p;
}

TsneResult tsne(const Matrix& x, const TsneOptions& o) {
  const Eigen::Index m = x.rows();
  if (m < 4) throw std::invalid_argument("tsne: need at least 4 points");
  if (!(o.perplexity > 0.0) || !(o.perplexity < static_cast<double>(m)))
    throw std::invalid_argument("tsne: perplexity " + std::to_string(o.perplexity) +
                                " infeasible for " + std::to_string(m) + " points");
  if (o.iterations == 0) throw std::invalid_argument("tsne: iterations must be positive");

  Matrix data = x.rowwise() - x.colwise().mean();
  const double scale = data.cwiseAbs().maxCoeff();
  if (scale > 0.0) data /= scale;

  const Matrix cond = conditional_affinities(squared_distances(data), o.perplexity);
  Matrix p = (cond + cond.transpose()) / (2.0 * static_cast<double>(m));
  p = p.cwiseMax(1e-12);
  p.diagonal().setZero();

  RandomStream rng(o.seed);
  Matrix y(m, 2);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = 1e-4 * rng.normal();
  Matrix update = Matrix::Zero(m, 2);
  Matrix gains = Matrix::Ones(m, 2);
  Matrix num(m, m);
  Matrix grad(m, 2);

  const double eta = o.learning_rate > 0.0
                        ? o.learning_rate
                        : std::max(static_cast<double>(m) / o.early_exaggeration / 4.0, 50.0);

  TsneResult result;
  result.kl.reserve(o.iterations);
  for (std::size_t iter = 0; iter < o.iterations; ++iter) {
    const double exaggeration = iter < o.exaggeration_iterations ? o.early_exaggeration : 1.0;
    const double momentum = iter < o.exaggeration_iterations ? o.initial_momentum : o.final_momentum;

    const Vector yn = y.rowwise().squaredNorm();
    num = y * y.transpose();
    num *= -2.0;
    num.colwise() += yn;
    num.rowwise() += yn.transpose();
    num = (1.0 + num.array().max(0.0)).inverse().matrix();
    num.diagonal().setZero();
    const double z = num.sum();

    grad.setZero();
    for (Eigen::Index i = 0; i < m; ++i) {
      double gx = 0.0;
      double gy = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j == i) continue;
        const double coeff = (exaggeration * p(i, j) - num(i, j) / z) * num(i, j);
        gx += coeff * (y(i, 0) - y(j, 0));
        gy += coeff * (y(i, 1) - y(j, 1));
      }
      grad(i, 0) = 4.0 * gx;
      grad(i, 1) = 4.0 * gy;
    }

    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      double& g = gains.data()[i];
      const bool same_sign = (grad.data()[i] > 0.0) == (update.data()[i] > 0.0);
      g = same_sign ? g * 0.8 : g + 0.2;
      if (g < 0.01) g = 0.01;
      update.data()[i] = momentum * update.data()[i] - eta * g * grad.data()[i];
    }
    y += update;
    y.rowwise() -= y.colwise().mean();

    // KL of the updated embedding.
    const Vector yn2 = y.rowwise().squaredNorm();
    num = y * y.transpose();
    num *= -2.0;
    num.colwise() += yn2;
    num.rowwise() += yn2.transpose();
    num = (1.0 + num.array().max(0.0)).inverse().matrix();
    num.diagonal().setZero();
    const double z2 = num.sum();
    double kl = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j == i) continue;
        const double q = std::max(num(i, j) / z2, 1e-300);
        kl += p(i, j) * std::log(p(i, j) / q);
      }
    result.kl.push_back(kl);
  }
  result.embedding = std::move(y);
  return result;
}

}  // namespace hoplab
