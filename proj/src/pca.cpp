#include "nea/pca.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "nea/error.hpp"

namespace nea {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void normalize_sign(Eigen::Ref<VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::fabs(v[i]) > std::fabs(v[best])) best = i;
  }
  if (v[best] < 0) v = -v;
}

// Extends `columns` (orthonormal, first `have` valid) to `want` columns by
// Gram-Schmidt against the canonical basis.
void complete_orthonormal(MatrixXd& columns, Eigen::Index have, Eigen::Index want) {
  const Eigen::Index n = columns.rows();
  for (Eigen::Index e = 0; e < n && have < want; ++e) {
    VectorXd v = VectorXd::Unit(n, e);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index c = 0; c < have; ++c) v -= columns.col(c).dot(v) * columns.col(c);
    }
    const double norm = v.norm();
    if (norm > 1e-6) columns.col(have++) = v / norm;
  }
}

}  // namespace

PcaModel fit_pca(std::span<const float> blocks, std::uint32_t n, std::uint32_t m) {
  if (n == 0) fail(Errc::InvalidArgument, "PCA needs n >= 1");
  if (m < 1 || m > n) {
    fail(Errc::InvalidArgument, "PCA components must lie in [1, " + std::to_string(n) + "], got " +
                                    std::to_string(m));
  }
  if (blocks.empty() || blocks.size() % n != 0) {
    fail(Errc::DimensionMismatch, "PCA needs at least one block of " + std::to_string(n) + " scalars");
  }
  const Eigen::Index count = static_cast<Eigen::Index>(blocks.size() / n);
  const Eigen::Index dim = n;

  MatrixXd x(count, dim);
  for (Eigen::Index b = 0; b < count; ++b)
    for (Eigen::Index i = 0; i < dim; ++i) x(b, i) = blocks[static_cast<std::size_t>(b * dim + i)];
  const VectorXd mean = x.colwise().mean().transpose();
  x.rowwise() -= mean.transpose();

  // Principal directions as columns, eigenvalues descending.
  MatrixXd directions(dim, m);
  VectorXd variances(m);
  Eigen::Index valid = 0;
  double top = 0.0;
  if (count >= dim) {
    MatrixXd cov = MatrixXd::Zero(dim, dim);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) fail(Errc::DecodeFailure, "PCA eigen decomposition failed");
    top = std::max(solver.eigenvalues()[dim - 1], 0.0);
    for (Eigen::Index c = 0; c < m; ++c) {
      directions.col(c) = solver.eigenvectors().col(dim - 1 - c);
      variances[c] = solver.eigenvalues()[dim - 1 - c];
    }
    valid = m;
  } else {
    // Fewer samples than dimensions: diagonalize the Gram matrix instead.
    MatrixXd gram = MatrixXd::Zero(count, count);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) fail(Errc::DecodeFailure, "PCA eigen decomposition failed");
    top = std::max(solver.eigenvalues()[count - 1], 0.0);
    const double floor = std::max(top, 1.0) * 1e-12 * static_cast<double>(dim);
    for (Eigen::Index c = 0; c < std::min<Eigen::Index>(m, count); ++c) {
      const double lambda = solver.eigenvalues()[count - 1 - c];
      if (lambda <= floor) break;
      VectorXd v = x.transpose() * solver.eigenvectors().col(count - 1 - c);
      directions.col(valid) = v / v.norm();
      variances[valid++] = lambda;
    }
    complete_orthonormal(directions, valid, m);
    for (Eigen::Index c = valid; c < m; ++c) variances[c] = 0.0;
  }

  const double rank_floor = std::max(top, 1.0) * 1e-12 * static_cast<double>(dim);
  Eigen::Index rank = 0;
  for (Eigen::Index c = 0; c < std::min<Eigen::Index>(m, valid); ++c) {
    if (variances[c] > rank_floor) ++rank;
  }

  PcaModel model;
  model.n = n;
  model.m = m;
  model.rank_deficient = rank < m;
  model.mean.resize(n);
  model.basis.resize(std::size_t{m} * n);
  for (Eigen::Index i = 0; i < dim; ++i) model.mean[static_cast<std::size_t>(i)] = static_cast<float>(mean[i]);
  for (Eigen::Index c = 0; c < m; ++c) {
    VectorXd v = directions.col(c);
    normalize_sign(v);
    for (Eigen::Index i = 0; i < dim; ++i) {
      model.basis[static_cast<std::size_t>(c * dim + i)] = static_cast<float>(v[i]);
    }
  }
  return model;
}

std::vector<float> pca_encode(std::span<const float> block, const PcaModel& model) {
  if (block.size() != model.n) {
    fail(Errc::DimensionMismatch, "PCA encode expects " + std::to_string(model.n) + " scalars, got " +
                                      std::to_string(block.size()));
  }
  std::vector<float> coeffs(model.m);
  for (std::uint32_t c = 0; c < model.m; ++c) {
    const auto row = model.row(c);
    double acc = 0.0;
    for (std::uint32_t i = 0; i < model.n; ++i) {
      acc += static_cast<double>(row[i]) * (static_cast<double>(block[i]) - model.mean[i]);
    }
    coeffs[c] = static_cast<float>(acc);
  }
  return coeffs;
}

void pca_decode_into(std::span<const float> coeffs, const PcaModel& model, std::span<float> out) {
  if (coeffs.size() != model.m || out.size() != model.n) {
    fail(Errc::DimensionMismatch, "PCA decode expects " + std::to_string(model.m) + " coefficients");
  }
  std::vector<double> acc(model.mean.begin(), model.mean.end());
  for (std::uint32_t c = 0; c < model.m; ++c) {
    const double w = coeffs[c];
    if (w == 0.0) continue;
    const auto row = model.row(c);
    for (std::uint32_t i = 0; i < model.n; ++i) acc[i] += w * row[i];
  }
  for (std::uint32_t i = 0; i < model.n; ++i) out[i] = static_cast<float>(acc[i]);
}

std::vector<float> pca_decode(std::span<const float> coeffs, const PcaModel& model) {
  std::vector<float> out(model.n);
  pca_decode_into(coeffs, model, out);
  return out;
}

}  // namespace nea
