#include "ca/pca.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ca/dataio.hpp"
#include "ca/error.hpp"

namespace ca {

namespace {

using MatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

MatrixXd centered(const FeatureMatrix& x, Eigen::VectorXd& mean) {
  MatrixXd a(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) a(i, j) = x(i, j);
  mean = a.colwise().mean().transpose();
  a.rowwise() -= mean.transpose();
  return a;
}

}  // namespace

PcaModel pca_fit(const FeatureMatrix& x, std::size_t max_dims) {
  const std::size_t n = x.rows, d = x.cols;
  if (n < 2 || d < 1) fail(Errc::InvalidArgument, "pca_fit needs n >= 2 and d >= 1");
  const std::size_t rank_bound = std::min(n - 1, d);
  if (max_dims < 1 || max_dims > rank_bound) {
    fail(Errc::DimTooLarge, "pca_fit max_dims " + std::to_string(max_dims) + " outside [1, " +
                                std::to_string(rank_bound) + "]");
  }

  Eigen::VectorXd mean;
  MatrixXd a = centered(x, mean);
  const double total_variance = a.squaredNorm() / static_cast<double>(n - 1);
  if (total_variance <= 0.0) fail(Errc::DegenerateInput, "all rows are identical (zero total variance)");

  Eigen::VectorXd values;  // ascending, covariance scale
  MatrixXd vectors;        // d x m columns, descending order after selection
  if (d <= n) {
    MatrixXd cov = (a.transpose() * a) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    if (es.info() != Eigen::Success) fail(Errc::Internal, "covariance eigendecomposition failed");
    values = es.eigenvalues().reverse().head(max_dims);
    vectors = es.eigenvectors().rowwise().reverse().leftCols(max_dims);
  } else {
    MatrixXd gram = a * a.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
    if (es.info() != Eigen::Success) fail(Errc::Internal, "Gram eigendecomposition failed");
    Eigen::VectorXd gvals = es.eigenvalues().reverse().head(max_dims);
    MatrixXd u = es.eigenvectors().rowwise().reverse().leftCols(max_dims);
    MatrixXd v = a.transpose() * u;  // columns have norm sqrt(gval)
    // Re-orthonormalise; this also completes the basis where the data has
    // fewer than max_dims non-zero directions.
    Eigen::HouseholderQR<MatrixXd> qr(v);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(d, max_dims);
    for (std::size_t c = 0; c < max_dims; ++c)
      if (q.col(c).dot(v.col(c)) < 0.0) q.col(c) *= -1.0;
    vectors = q;
    values = gvals / static_cast<double>(n - 1);
  }

  PcaModel model;
  model.dim = d;
  model.mean.assign(mean.data(), mean.data() + d);
  model.eigenvalues.resize(max_dims);
  model.components.resize(max_dims * d);
  for (std::size_t c = 0; c < max_dims; ++c) {
    model.eigenvalues[c] = std::max(0.0, values(c));
    // Sign convention: largest-magnitude coordinate positive.
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    const double sign = vectors(arg, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) model.components[c * d + j] = sign * vectors(j, c);
  }
  return model;
}

ReducedEmbedding pca_transform(const PcaModel& model, const FeatureMatrix& x, std::size_t m) {
  if (m < 1 || m > model.size()) {
    fail(Errc::DimTooLarge, "pca_transform m=" + std::to_string(m) + " but model has " +
                                std::to_string(model.size()) + " components");
  }
  if (x.cols != model.dim) fail(Errc::LengthMismatch, "pca_transform input has " + std::to_string(x.cols) +
                                                          " columns, model expects " + std::to_string(model.dim));
  ReducedEmbedding out;
  out.values = FeatureMatrix(x.rows, m, x.ids);
  std::vector<double> row(x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) row[j] = static_cast<double>(x(i, j)) - model.mean[j];
    for (std::size_t c = 0; c < m; ++c) {
      auto comp = model.component(c);
      double acc = 0.0;
      for (std::size_t j = 0; j < x.cols; ++j) acc += row[j] * comp[j];
      out.values(i, c) = static_cast<float>(acc);
    }
  }
  return out;
}

std::size_t elbow_select(std::span<const double> eigenvalues, std::size_t min_dims, std::size_t max_dims) {
  if (min_dims > max_dims) {
    fail(Errc::EmptyRange, "elbow range [" + std::to_string(min_dims) + ", " + std::to_string(max_dims) + "] is empty");
  }
  if (min_dims < 1) fail(Errc::InvalidArgument, "elbow min_dims must be >= 1");
  if (max_dims >= eigenvalues.size()) {
    fail(Errc::DimTooLarge, "elbow max_dims " + std::to_string(max_dims) + " needs more than " +
                                std::to_string(eigenvalues.size()) + " eigenvalues");
  }
  for (double v : eigenvalues)
    if (!(v >= 0.0)) fail(Errc::InvalidArgument, "elbow eigenvalues must be non-negative");

  std::size_t best = min_dims;
  double best_ratio = -1.0;
  for (std::size_t i = min_dims; i <= max_dims; ++i) {
    const double ratio = eigenvalues[i - 1] / (eigenvalues[i] + kElbowEpsilon);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = i;
    }
  }
  return best;
}

void write_pca_model(const PcaModel& model, const std::filesystem::path& dir, const std::string& stem) {
  const std::size_t m = model.size();
  FeatureMatrix comps(m, model.dim), vals(m, 1);
  for (std::size_t c = 0; c < m; ++c) {
    comps.ids.push_back("pc" + std::to_string(c));
    vals.ids.push_back("pc" + std::to_string(c));
    vals(c, 0) = static_cast<float>(model.eigenvalues[c]);
    for (std::size_t j = 0; j < model.dim; ++j) comps(c, j) = static_cast<float>(model.components[c * model.dim + j]);
  }
  write_fmat(comps, dir / (stem + "_components.fmat"));
  write_fmat(vals, dir / (stem + "_eigenvalues.fmat"));
  write_json_file(dir / (stem + ".json"), {{"dim", model.dim},
                                           {"components", m},
                                           {"eigenvalues", model.eigenvalues},
                                           {"mean", model.mean}});
}

PcaModel read_pca_model(const std::filesystem::path& dir, const std::string& stem) {
  const auto meta = read_json_file(dir / (stem + ".json"));
  const auto comps = read_fmat(dir / (stem + "_components.fmat"));
  PcaModel model;
  try {
    model.dim = meta.at("dim").get<std::size_t>();
    model.mean = meta.at("mean").get<std::vector<double>>();
    model.eigenvalues = meta.at("eigenvalues").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(Errc::BadJson, std::string("pca metadata: ") + e.what());
  }
  if (comps.cols != model.dim || comps.rows != model.eigenvalues.size() || model.mean.size() != model.dim) {
    fail(Errc::LengthMismatch, "pca model files disagree on shape");
  }
  model.components.assign(comps.data.begin(), comps.data.end());
  return model;
}

}  // namespace ca
