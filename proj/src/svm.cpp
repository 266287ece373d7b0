#include "hoplab/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hoplab/random.hpp"

namespace hoplab {

namespace {

// Evaluates the objective along o(t) = o + t * od with regulariser
// r0 + 2 t r1 + t^2 r2.
double line_objective(const Vector& o, const Vector& od, double t, std::span<const double> y,
                      std::span<const double> cost, double C, double r0, double r1, double r2) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < o.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    const double margin = 1.0 - y[u] * (o(i) + t * od(i));
    if (margin > 0.0) loss += cost[u] * margin * margin;
  }
  return r0 + 2.0 * t * r1 + t * t * r2 + C * loss;
}

// Backtracking along a Newton direction. Returns the accepted step, or 0 when
// no decrease is representable.
double backtrack(const Vector& o, const Vector& od, std::span<const double> y,
                 std::span<const double> cost, double C, double r0, double r1, double r2,
                 double current, double slope) {
  double t = 1.0;
  for (int k = 0; k < 60; ++k) {
    const double f = line_objective(o, od, t, y, cost, C, r0, r1, r2);
    if (f <= current + 1e-4 * t * slope) return t;
    t *= 0.5;
  }
  return 0.0;
}

std::vector<std::size_t> stratified_sample(const LabeledDataset& data, std::size_t cap, RandomStream& rng) {
  const std::size_t k = data.num_classes();
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < data.rows(); ++i) by_class[data.labels[i]].push_back(i);
  if (data.rows() <= cap) {
    std::vector<std::size_t> all(data.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  std::vector<std::size_t> classes(k);
  std::iota(classes.begin(), classes.end(), std::size_t{0});
  std::stable_sort(classes.begin(), classes.end(),
                   [&](std::size_t a, std::size_t b) { return by_class[a].size() < by_class[b].size(); });
  std::vector<std::size_t> chosen;
  std::size_t remaining = cap;
  for (std::size_t idx = 0; idx < k; ++idx) {
    auto& pool = by_class[classes[idx]];
    const std::size_t quota = std::min(pool.size(), remaining / (k - idx));
    for (std::size_t j = 0; j < quota; ++j) std::swap(pool[j], pool[j + rng.index(pool.size() - j)]);
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota));
    remaining -= quota;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

struct BinaryKernelSvm {
  Vector beta;
  double b = 0.0;
};

BinaryKernelSvm train_binary_kernel_svm(const Matrix& kernel, std::span<const double> y,
                                        std::span<const double> cost, double C,
                                        std::size_t max_iterations, double tolerance) {
  const Eigen::Index s = kernel.rows();
  BinaryKernelSvm m;
  m.beta = Vector::Zero(s);
  Vector o = Vector::Zero(s);
  Vector kbeta = Vector::Zero(s);
  double reg = 0.0;
  auto objective = [&](const Vector& out, double r) {
    return line_objective(out, Vector::Zero(s), 0.0, y, cost, C, r, 0.0, 0.0);
  };
  double current = objective(o, reg);
  std::vector<Eigen::Index> active;
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    active.clear();
    for (Eigen::Index i = 0; i < s; ++i)
      if (y[static_cast<std::size_t>(i)] * o(i) < 1.0) active.push_back(i);

    // Gradient: 2 K (beta - C D_A (y - o)), -2 C sum_A c_i (y_i - o_i).
    Vector r = m.beta;
    double gb = 0.0;
    for (auto i : active) {
      const auto u = static_cast<std::size_t>(i);
      r(i) -= C * cost[u] * (y[u] - o(i));
      gb -= 2.0 * C * cost[u] * (y[u] - o(i));
    }
    const double gnorm = std::sqrt((2.0 * (kernel * r)).squaredNorm() + gb * gb);
    if (gnorm < tolerance || active.empty()) break;

    const auto a = static_cast<Eigen::Index>(active.size());
    Matrix sys(a, a);
    for (Eigen::Index p = 0; p < a; ++p)
      for (Eigen::Index q = 0; q < a; ++q) sys(p, q) = kernel(active[p], active[q]);
    Vector ya(a);
    for (Eigen::Index p = 0; p < a; ++p) {
      const auto u = static_cast<std::size_t>(active[p]);
      sys(p, p) += 1.0 / (C * cost[u]);
      ya(p) = y[u];
    }
    Eigen::LLT<Matrix> llt(sys);
    const Vector u = llt.solve(ya);
    const Vector v = llt.solve(Vector::Ones(a));
    const double b_new = u.sum() / v.sum();
    Vector beta_new = Vector::Zero(s);
    const Vector beta_a = u - b_new * v;
    for (Eigen::Index p = 0; p < a; ++p) beta_new(active[p]) = beta_a(p);

    const Vector d = beta_new - m.beta;
    const double db = b_new - m.b;
    const Vector kd = kernel * d;
    const Vector od = kd + Vector::Constant(s, db);
    const double r1 = m.beta.dot(kd);
    const double r2 = d.dot(kd);
    const double slope = 2.0 * (kernel * r).dot(d) + gb * db;
    const double t = backtrack(o, od, y, cost, C, reg, r1, r2, current, slope);
    if (t == 0.0) break;
    m.beta += t * d;
    m.b += t * db;
    kbeta += t * kd;
    o = kbeta + Vector::Constant(s, m.b);
    reg = m.beta.dot(kbeta);
    const double next = objective(o, reg);
    const bool converged = t == 1.0 && std::abs(current - next) <= 1e-15 * std::max(1.0, std::abs(current));
    current = next;
    if (converged) break;
  }
  return m;
}

}  // namespace

double squared_hinge_objective(const Vector& w, double b, const Matrix& x, std::span<const double> y,
                               std::span<const double> cost, double C, Vector* grad_w, double* grad_b) {
  Vector o = x * w;
  o.array() += b;
  double loss = 0.0;
  Vector coeff = Vector::Zero(o.size());
  for (Eigen::Index i = 0; i < o.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    const double margin = 1.0 - y[u] * o(i);
    if (margin > 0.0) {
      loss += cost[u] * margin * margin;
      coeff(i) = -2.0 * C * cost[u] * y[u] * margin;
    }
  }
  if (grad_w) *grad_w = 2.0 * w + x.transpose() * coeff;
  if (grad_b) *grad_b = coeff.sum();
  return w.squaredNorm() + C * loss;
}

BinarySvm train_binary_linear_svm(const Matrix& x, std::span<const double> y,
                                  std::span<const double> cost, double C, std::size_t max_iterations,
                                  double tolerance) {
  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  BinarySvm out;
  out.w = Vector::Zero(n);
  Vector o = Vector::Zero(m);

  // Accumulated sum_A c_i [x_i 1][x_i 1]^T, updated as the active set moves.
  Matrix gram = Matrix::Zero(n + 1, n + 1);
  std::vector<char> in_active(static_cast<std::size_t>(m), 0);
  std::size_t incremental_updates = 0;
  auto accumulate = [&](const std::vector<Eigen::Index>& rows, double sign) {
    if (rows.empty()) return;
    Matrix block(static_cast<Eigen::Index>(rows.size()), n + 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double sc = std::sqrt(cost[static_cast<std::size_t>(rows[r])]);
      block.row(static_cast<Eigen::Index>(r)).head(n) = sc * x.row(rows[r]);
      block(static_cast<Eigen::Index>(r), n) = sc;
    }
    gram.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose(), sign);
  };

  double current = 0.0;
  Vector gw;
  double gb = 0.0;
  current = squared_hinge_objective(out.w, out.b, x, y, cost, C, &gw, &gb);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    out.gradient_norm = std::sqrt(gw.squaredNorm() + gb * gb);
    if (out.gradient_norm < tolerance) break;
    out.iterations = iter + 1;

    std::vector<Eigen::Index> enter, leave, all_active;
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool act = y[static_cast<std::size_t>(i)] * o(i) < 1.0;
      if (act) all_active.push_back(i);
      if (act && !in_active[static_cast<std::size_t>(i)]) enter.push_back(i);
      if (!act && in_active[static_cast<std::size_t>(i)]) leave.push_back(i);
      in_active[static_cast<std::size_t>(i)] = act;
    }
    if (enter.size() + leave.size() > all_active.size() / 4 || incremental_updates >= 20) {
      gram.setZero();
      accumulate(all_active, 1.0);
      incremental_updates = 0;
    } else {
      accumulate(enter, 1.0);
      accumulate(leave, -1.0);
      ++incremental_updates;
    }

    Matrix h = 2.0 * C * gram.selfadjointView<Eigen::Lower>();
    h.diagonal().head(n).array() += 2.0;
    h(n, n) += 1e-10 * (1.0 + h(n, n));
    Vector g(n + 1);
    g.head(n) = gw;
    g(n) = gb;
    const Vector step = -h.ldlt().solve(g);
    const Vector dw = step.head(n);
    const double db = step(n);
    Vector od = x * dw;
    od.array() += db;
    const double slope = g.dot(step);
    if (!(slope < 0.0)) break;
    const double t = backtrack(o, od, y, cost, C, out.w.squaredNorm(), out.w.dot(dw), dw.squaredNorm(),
                               current, slope);
    if (t == 0.0) break;
    out.w += t * dw;
    out.b += t * db;
    o += t * od;
    current = squared_hinge_objective(out.w, out.b, x, y, cost, C, &gw, &gb);
  }
  out.gradient_norm = std::sqrt(gw.squaredNorm() + gb * gb);
  return out;
}

double default_rbf_gamma(const Matrix& profiles) {
  const Eigen::Index m = profiles.rows();
  const Eigen::Index n = profiles.cols();
  if (m == 0 || n == 0) throw std::invalid_argument("default_rbf_gamma: empty data");
  const Eigen::RowVectorXd mean = profiles.colwise().mean();
  const double mean_var = (profiles.rowwise() - mean).array().square().colwise().sum().sum() /
                          static_cast<double>(m) / static_cast<double>(n);
  if (!(mean_var > 0.0)) return 1.0 / static_cast<double>(n);
  return 1.0 / (static_cast<double>(n) * mean_var);
}

Matrix rbf_kernel(const Matrix& a, const Matrix& b, double gamma) {
  const Vector an = a.rowwise().squaredNorm();
  const Vector bn = b.rowwise().squaredNorm();
  Matrix k = a * b.transpose();
  k *= -2.0;
  k.colwise() += an;
  k.rowwise() += bn.transpose();
  return (-gamma * k.cwiseMax(0.0)).array().exp().matrix();
}

Model train_svm(const LabeledDataset& data, const SvmOptions& options) {
  data.validate();
  if (!(options.C > 0.0)) throw std::invalid_argument("C: must be positive");
  if (options.gamma && !(*options.gamma > 0.0)) throw std::invalid_argument("gamma: must be positive");
  if (data.num_classes() < 2) throw std::invalid_argument("train_svm: need at least two classes");
  const auto weights = class_weights(data);
  const std::size_t k = data.num_classes();

  if (options.kernel == KernelKind::Linear) {
    const auto cost = weights.per_row(data);
    LinearModel lm;
    lm.kind = LinearKind::SvmOvr;
    lm.coef.resize(static_cast<Eigen::Index>(k), data.profiles.cols());
    lm.bias.resize(static_cast<Eigen::Index>(k));
    std::vector<double> y(data.rows());
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < data.rows(); ++i) y[i] = data.labels[i] == c ? 1.0 : -1.0;
      const BinarySvm one =
          train_binary_linear_svm(data.profiles, y, cost, options.C, options.max_iterations, options.tolerance);
      lm.coef.row(static_cast<Eigen::Index>(c)) = one.w.transpose();
      lm.bias(static_cast<Eigen::Index>(c)) = one.b;
    }
    lm.class_set = data.class_set;
    lm.normalized = data.normalized;
    return lm;
  }

  const double gamma = options.gamma ? *options.gamma : default_rbf_gamma(data.profiles);
  RandomStream rng(options.seed);
  const auto rows = stratified_sample(data, std::max<std::size_t>(options.max_supports, 1), rng);
  const LabeledDataset sample = subset(data, rows);
  // Each sampled point stands in for count_c / sampled_c originals so the
  // summed loss keeps the scale of the full training set.
  const auto full_counts = data.class_counts();
  const auto sample_counts = sample.class_counts();
  std::vector<double> cost(sample.rows());
  for (std::size_t i = 0; i < sample.rows(); ++i) {
    const std::size_t c = sample.labels[i];
    cost[i] = weights.weights[c] * static_cast<double>(full_counts[c]) / static_cast<double>(sample_counts[c]);
  }
  const Matrix kernel = rbf_kernel(sample.profiles, sample.profiles, gamma);
  Matrix dual(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(sample.rows()));
  Vector bias(static_cast<Eigen::Index>(k));
  std::vector<double> y(sample.rows());
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < sample.rows(); ++i) y[i] = sample.labels[i] == c ? 1.0 : -1.0;
    const auto one = train_binary_kernel_svm(kernel, y, cost, options.C, options.max_iterations, options.tolerance);
    dual.row(static_cast<Eigen::Index>(c)) = one.beta.transpose();
    bias(static_cast<Eigen::Index>(c)) = one.b;
  }

  std::vector<Eigen::Index> keep;
  for (Eigen::Index s = 0; s < dual.cols(); ++s)
    if (dual.col(s).cwiseAbs().maxCoeff() >= 1e-8) keep.push_back(s);
  KernelModel km;
  km.gamma = gamma;
  km.supports.resize(static_cast<Eigen::Index>(keep.size()), data.profiles.cols());
  km.dual.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    km.supports.row(static_cast<Eigen::Index>(j)) = sample.profiles.row(keep[j]);
    km.dual.col(static_cast<Eigen::Index>(j)) = dual.col(keep[j]);
  }
  km.bias = bias;
  km.class_set = data.class_set;
  km.normalized = data.normalized;
  return km;
}

}  // namespace hoplab
