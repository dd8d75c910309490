#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ca/error.hpp"
#include "ca/pca.hpp"
#include "support.hpp"

using namespace ca;

namespace {

// Cyclic Jacobi rotations on a dense symmetric matrix; returns eigenvalues
// sorted descending.
std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i * n + i];
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

std::vector<double> covariance(const FeatureMatrix& x) {
  const std::size_t n = x.rows, d = x.cols;
  std::vector<double> mean(d, 0.0), cov(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov[a * d + b] += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
  for (auto& v : cov) v /= static_cast<double>(n - 1);
  return cov;
}

double relative_reconstruction_error(const PcaModel& model, const FeatureMatrix& x) {
  const auto z = pca_transform(model, x, model.size()).values;
  double err = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) {
      double r = 0.0;
      for (std::size_t c = 0; c < model.size(); ++c) r += z(i, c) * model.component(c)[j];
      const double centered = x(i, j) - model.mean[j];
      err += (centered - r) * (centered - r);
      norm += centered * centered;
    }
  }
  return std::sqrt(err / norm);
}

}  // namespace

TEST_CASE("elbow fixtures") {
  const std::vector<double> spectrum{10, 5, 1, 0.9, 0.8};
  CHECK(elbow_select(spectrum, 1, 4) == 2);

  const std::vector<double> flat{1, 1, 1, 1};
  CHECK(elbow_select(flat, 1, 3) == 1);

  const std::vector<double> zero_tail{8, 4, 2, 0, 0};
  CHECK(elbow_select(zero_tail, 1, 3) == 3);
}

TEST_CASE("elbow is invariant to positive scaling") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> ev(12);
    for (auto& v : ev) v = std::exp(6.0 * u(rng));
    std::sort(ev.rbegin(), ev.rend());
    const auto m = elbow_select(ev, 2, 10);
    for (double c : {2.0, 0.5, 4.0, 0.125}) {
      std::vector<double> scaled(ev);
      for (auto& v : scaled) v *= c;
      CHECK(elbow_select(scaled, 2, 10) == m);
    }
  }
}

TEST_CASE("elbow range errors") {
  const std::vector<double> ev{3, 2, 1};
  CHECK_THROWS_AS(elbow_select(ev, 3, 2), Error);
  try {
    elbow_select(ev, 3, 2);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyRange);
  }
  try {
    elbow_select(ev, 1, 3);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DimTooLarge);
  }
}

TEST_CASE("rank one line data") {
  std::vector<double> v;
  for (int i = -3; i <= 4; ++i) {
    v.push_back(i);
    v.push_back(2.0 * i);
  }
  const auto x = test::matrix(8, 2, v);
  const auto model = pca_fit(x, 2);
  CHECK(model.eigenvalues[1] <= 1e-10 * model.eigenvalues[0]);
  CHECK(model.component(0)[0] == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-9));
  CHECK(model.component(0)[1] == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-9));

  const auto z = pca_transform(model, x, 1).values;
  for (std::size_t i = 0; i < 8; ++i) {
    const double along = ((x(i, 0) - model.mean[0]) + 2.0 * (x(i, 1) - model.mean[1])) / std::sqrt(5.0);
    CHECK(z(i, 0) == doctest::Approx(along).epsilon(1e-6));
  }
}

TEST_CASE("known covariance spectrum") {
  // Directions u=(1,1,0)/sqrt2 and v=(1,-1,0)/sqrt2 with sample variances 4 and 1.
  const double s = std::sqrt(6.0), t = std::sqrt(1.5), r = 1.0 / std::sqrt(2.0);
  const double a[] = {s, -s, 0, 0}, b[] = {0, 0, t, -t};
  std::vector<double> v;
  for (int i = 0; i < 4; ++i) {
    v.push_back(r * (a[i] + b[i]) + 5.0);
    v.push_back(r * (a[i] - b[i]) - 1.0);
    v.push_back(2.0);
  }
  const auto x = test::matrix(4, 3, v);
  const auto model = pca_fit(x, 2);
  const auto oracle = jacobi_eigenvalues(covariance(x), 3);
  CHECK(oracle[0] == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(oracle[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(model.eigenvalues[0] == doctest::Approx(oracle[0]).epsilon(1e-9));
  CHECK(model.eigenvalues[1] == doctest::Approx(oracle[1]).epsilon(1e-9));
}

TEST_CASE("covariance and gram routes match the jacobi oracle") {
  for (const auto& [n, d] : {std::pair<std::size_t, std::size_t>{40, 6}, {6, 20}}) {
    const auto x = test::random_matrix(n, d, n * 31 + d);
    const std::size_t full = std::min(n - 1, d);
    const auto model = pca_fit(x, full);
    const auto oracle = jacobi_eigenvalues(covariance(x), d);
    REQUIRE(model.size() == full);
    double total = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) total += oracle[i];
    for (std::size_t i = 0; i < full; ++i) {
      CHECK(model.eigenvalues[i] == doctest::Approx(oracle[i]).epsilon(1e-5));
      sum += model.eigenvalues[i];
    }
    CHECK(sum == doctest::Approx(total).epsilon(1e-5));

    for (std::size_t i = 0; i < full; ++i) {
      for (std::size_t j = 0; j < full; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += model.component(i)[c] * model.component(j)[c];
        CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-8);
      }
      const auto comp = model.component(i);
      const auto big = std::max_element(comp.begin(), comp.end(),
                                        [](double p, double q) { return std::abs(p) < std::abs(q); });
      CHECK(*big > 0.0);
    }
    CHECK(relative_reconstruction_error(model, x) <= 1e-5);
  }
}

TEST_CASE("transform centers the training data") {
  const auto x = test::random_matrix(30, 5, 3, 4.0);
  const auto model = pca_fit(x, 4);
  const auto z = pca_transform(model, x, 3).values;
  CHECK(z.ids == x.ids);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < z.rows; ++i) mean += z(i, c);
    CHECK(std::abs(mean / static_cast<double>(z.rows)) <= 1e-6);
  }
  CHECK_THROWS_AS(pca_transform(model, x, 5), Error);
}

TEST_CASE("pca errors") {
  const auto same = test::matrix(3, 2, {1, 2, 1, 2, 1, 2});
  try {
    pca_fit(same, 1);
    FAIL("expected DegenerateInput");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateInput);
  }
  try {
    pca_fit(test::random_matrix(4, 10, 1), 4);
    FAIL("expected DimTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DimTooLarge);
  }
}

TEST_CASE("pca model files round trip") {
  test::TempDir dir("pca");
  const auto model = pca_fit(test::random_matrix(12, 4, 9), 3);
  write_pca_model(model, dir.path());
  const auto back = read_pca_model(dir.path());
  CHECK(back.dim == model.dim);
  CHECK(back.mean == model.mean);
  CHECK(back.eigenvalues == model.eigenvalues);
  REQUIRE(back.components.size() == model.components.size());
  for (std::size_t i = 0; i < back.components.size(); ++i) {
    CHECK(back.components[i] == doctest::Approx(model.components[i]).epsilon(1e-6));
  }
}
