#include <doctest.h>

#include <cmath>

#include "hoplab/random.hpp"
#include "hoplab/tsne.hpp"

using namespace hoplab;

namespace {

Matrix two_clusters(std::size_t per, std::size_t dim, std::uint64_t seed) {
  RandomStream rng(seed);
  Matrix x(static_cast<Eigen::Index>(2 * per), static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      x(r, c) = rng.normal() + (r < static_cast<Eigen::Index>(per) ? 0.0 : 20.0);
  return x;
}

}  // namespace

TEST_SUITE("tsne") {

TEST_CASE("perplexity calibration") {
  const Matrix x = two_clusters(20, 5, 1);
  Matrix d(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j) d(i, j) = (x.row(i) - x.row(j)).squaredNorm();
  const Matrix p = conditional_affinities(d, 10.0);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    CHECK(p.row(i).sum() == doctest::Approx(1.0));
    CHECK(p(i, i) == 0.0);
    double h = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (p(i, j) > 0) h -= p(i, j) * std::log(p(i, j));
    CHECK(std::exp(h) == doctest::Approx(10.0).epsilon(1e-3));
  }
}

TEST_CASE("separated clusters stay separated") {
  const Matrix x = two_clusters(25, 10, 2);
  TsneOptions o;
  o.perplexity = 10;
  o.iterations = 500;
  o.seed = 3;
  const TsneResult r = tsne(x, o);
  REQUIRE(r.embedding.rows() == 50);
  REQUIRE(r.embedding.cols() == 2);
  // Linear separability via the centroid axis.
  const Eigen::RowVector2d a = r.embedding.topRows(25).colwise().mean();
  const Eigen::RowVector2d b = r.embedding.bottomRows(25).colwise().mean();
  const Eigen::RowVector2d axis = b - a;
  const double mid = 0.5 * (a + b).dot(axis);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const double side = r.embedding.row(i).dot(axis) - mid;
    CHECK((i < 25 ? side < 0 : side > 0));
  }
}

TEST_CASE("kl settles over the final iterations") {
  const Matrix x = two_clusters(30, 6, 4);
  TsneOptions o;
  o.perplexity = 15;
  o.iterations = 1000;
  o.seed = 5;
  const auto r = tsne(x, o);
  REQUIRE(r.kl.size() == 1000);
  for (std::size_t i = 901; i < 1000; ++i) CHECK(r.kl[i] <= r.kl[i - 1] + 1e-3);
  CHECK(r.kl.back() < r.kl[260]);
}

TEST_CASE("duplicates embed together") {
  Matrix x = two_clusters(15, 4, 6);
  x.row(3) = x.row(7);
  const Matrix y = tsne_embed(x, 8, 400, 7);
  const double scale = (y.colwise().maxCoeff() - y.colwise().minCoeff()).norm();
  CHECK((y.row(3) - y.row(7)).norm() < 0.05 * scale);
}

TEST_CASE("deterministic and validated") {
  const Matrix x = two_clusters(6, 3, 8);
  CHECK(tsne_embed(x, 3, 50, 1) == tsne_embed(x, 3, 50, 1));
  CHECK_FALSE(tsne_embed(x, 3, 50, 1) == tsne_embed(x, 3, 50, 2));
  CHECK_THROWS(tsne_embed(x, 12, 50, 1));
  CHECK_THROWS(tsne_embed(x.topRows(3), 1, 50, 1));
  CHECK_THROWS(tsne_embed(x, 0, 50, 1));
}

}
