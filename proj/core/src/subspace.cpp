/*
 * Copyright 2026 The spikesub Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "spikesub/subspace.hpp"

#include <cmath>
#include <string>

#include "spikesub/error.hpp"

namespace spikesub {

namespace {

// Eigenvectors of a symmetric matrix for the d largest eigenvalues,
// descending.
Eigen::MatrixXd top_eigenvectors(const Eigen::MatrixXd& a, int d) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) fail(ErrorKind::Numerical, "symmetric eigendecomposition failed");
  const Eigen::Index m = a.rows();
  Eigen::MatrixXd out(m, d);
  for (int j = 0; j < d; ++j) out.col(j) = es.eigenvectors().col(m - 1 - j);
  return out;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& v) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(v.rows(), v.cols());
  return q;
}

}  // namespace

void fix_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index arg = 0;
    basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, j) < 0.0) basis.col(j) *= -1.0;
  }
}

Eigen::MatrixXd ScatterPair::regularized_within(double eps) const {
  const Eigen::Index m = within.rows();
  const double tr = within.trace();
  const double shift = tr > 0.0 ? eps * tr / static_cast<double>(m) : eps;
  Eigen::MatrixXd out = within;
  out.diagonal().array() += shift;
  return out;
}

Eigen::VectorXd column_mean(const Eigen::MatrixXd& x) {
  if (x.cols() == 0) return Eigen::VectorXd::Zero(x.rows());
  return x.rowwise().mean();
}

Eigen::MatrixXd center(const Eigen::MatrixXd& x) { return x.colwise() - column_mean(x); }

ScatterPair scatter(const Eigen::MatrixXd& x, const LabelAssignment& labels) {
  require(static_cast<Eigen::Index>(labels.size()) == x.cols(), "label count does not match spike count");
  labels.validate();
  const Eigen::Index m = x.rows();
  const int k = labels.k;

  ScatterPair s;
  s.counts.assign(static_cast<std::size_t>(k), 0);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  std::size_t used = 0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const int l = labels.labels[static_cast<std::size_t>(i)];
    if (l == kOutlierLabel) continue;
    ++s.counts[static_cast<std::size_t>(l)];
    mean += x.col(i);
    ++used;
  }
  for (int c = 0; c < k; ++c)
    if (s.counts[static_cast<std::size_t>(c)] == 0)
      fail(ErrorKind::InvalidArgument, "cluster " + std::to_string(c) + " is empty");
  mean /= static_cast<double>(used);

  s.centroids = Eigen::MatrixXd::Zero(m, k);
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const int l = labels.labels[static_cast<std::size_t>(i)];
    if (l != kOutlierLabel) s.centroids.col(l) += x.col(i) - mean;
  }
  for (int c = 0; c < k; ++c) s.centroids.col(c) /= static_cast<double>(s.counts[static_cast<std::size_t>(c)]);

  // Residuals about each member's centroid, gathered so S_w is one GEMM.
  Eigen::MatrixXd resid(m, static_cast<Eigen::Index>(used));
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const int l = labels.labels[static_cast<std::size_t>(i)];
    if (l == kOutlierLabel) continue;
    resid.col(col++) = x.col(i) - mean - s.centroids.col(l);
  }
  s.within = Eigen::MatrixXd::Zero(m, m);
  s.within.selfadjointView<Eigen::Lower>().rankUpdate(resid);
  s.within = s.within.selfadjointView<Eigen::Lower>();

  Eigen::MatrixXd weighted = s.centroids;
  for (int c = 0; c < k; ++c)
    weighted.col(c) *= std::sqrt(static_cast<double>(s.counts[static_cast<std::size_t>(c)]));
  s.between = weighted * weighted.transpose();
  return s;
}

Projection pca_basis(const Eigen::MatrixXd& x, int d) {
  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  require(n >= 2, "PCA needs at least 2 spikes");
  if (d < 1 || d > m) fail(ErrorKind::InvalidArgument, "PCA dimension " + std::to_string(d) + " out of range [1, " + std::to_string(m) + "]");

  const Eigen::MatrixXd xc = center(x);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(xc, 1.0 / static_cast<double>(n - 1));
  cov = cov.selfadjointView<Eigen::Lower>();

  Projection p;
  p.basis = top_eigenvectors(cov, d);
  fix_signs(p.basis);
  return p;
}

double trace_ratio(const ScatterPair& s, const Eigen::MatrixXd& basis, double shrinkage) {
  const double num = (basis.transpose() * s.between * basis).trace();
  const double den = (basis.transpose() * s.regularized_within(shrinkage) * basis).trace();
  return den > 0.0 ? num / den : 0.0;
}

double ratio_trace_objective(const ScatterPair& s, const Eigen::MatrixXd& basis) {
  const Eigen::MatrixXd t = basis.transpose() * (s.within + s.between) * basis;
  const Eigen::MatrixXd b = basis.transpose() * s.between * basis;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  if (es.info() != Eigen::Success) fail(ErrorKind::Numerical, "symmetric eigendecomposition failed");
  const double top = es.eigenvalues().maxCoeff();
  if (!(top > 0.0)) return 0.0;
  const Eigen::MatrixXd bv = es.eigenvectors().transpose() * b * es.eigenvectors();
  double j = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    if (es.eigenvalues()[i] > 1e-12 * top) j += bv(i, i) / es.eigenvalues()[i];
  return j;
}

namespace {

bool between_vanishes(const ScatterPair& s) {
  const double tb = s.between.trace();
  const double tw = s.within.trace();
  return !(tb > 1e-12 * (tb + tw)) || tb == 0.0;
}

Projection degenerate_projection(const ScatterPair& s, int d) {
  Projection p;
  const Eigen::MatrixXd ref = s.within.trace() > 0.0 ? s.within : Eigen::MatrixXd::Identity(s.within.rows(), s.within.cols());
  p.basis = top_eigenvectors(ref, d);
  fix_signs(p.basis);
  p.degenerate = true;
  return p;
}

}  // namespace

Projection lda_ratio_trace(const ScatterPair& s, int d, double shrinkage) {
  require(d >= 1, "LDA dimension must be >= 1");
  if (d > s.k() - 1) fail(ErrorKind::InvalidArgument, "LDA rank limit: d=" + std::to_string(d) + " exceeds K-1=" + std::to_string(s.k() - 1));
  if (between_vanishes(s)) return degenerate_projection(s, d);

  const Eigen::MatrixXd sw = s.regularized_within(shrinkage);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(s.between, sw);
  if (ges.info() != Eigen::Success) fail(ErrorKind::Numerical, "generalized eigendecomposition failed");

  const Eigen::Index m = s.between.rows();
  Eigen::MatrixXd v(m, d);
  for (int j = 0; j < d; ++j) v.col(j) = ges.eigenvectors().col(m - 1 - j);

  Projection p;
  p.basis = orthonormalize(v);
  fix_signs(p.basis);
  return p;
}

ItrResult itr_trace_ratio(const ScatterPair& s, int d, const ItrOptions& opts) {
  require(opts.max_iter >= 1, "ITR needs max_iter >= 1");
  ItrResult r;
  Projection start = opts.init ? Projection{orthonormalize(*opts.init), false} : lda_ratio_trace(s, d, opts.shrinkage);
  if (start.degenerate) {
    r.projection = start;
    r.converged = true;
    return r;
  }
  require(start.basis.rows() == s.between.rows() && start.d() == d, "ITR initial basis has the wrong shape");

  const Eigen::MatrixXd sw = s.regularized_within(opts.shrinkage);
  Eigen::MatrixXd w = start.basis;
  double lambda = trace_ratio(s, w, opts.shrinkage);
  r.lambdas.push_back(lambda);
  Eigen::MatrixXd best = w;
  double best_lambda = lambda;

  for (int it = 0; it < opts.max_iter; ++it) {
    w = top_eigenvectors(s.between - lambda * sw, d);
    const double next = trace_ratio(s, w, opts.shrinkage);
    r.lambdas.push_back(next);
    r.iterations = it + 1;
    if (next > best_lambda) {
      best_lambda = next;
      best = w;
    }
    const bool done = std::abs(next - lambda) <= opts.tol * std::max(1.0, std::abs(lambda));
    lambda = next;
    if (done) {
      r.converged = true;
      break;
    }
  }
  fix_signs(best);
  r.projection.basis = best;
  r.trace_ratio = best_lambda;
  return r;
}

Eigen::MatrixXd project(const Eigen::MatrixXd& x, const Projection& p) {
  if (p.basis.rows() != x.rows())
    fail(ErrorKind::InvalidArgument, "dimension mismatch: basis has " + std::to_string(p.basis.rows()) +
                                         " rows, spikes have " + std::to_string(x.rows()) + " samples");
  return p.basis.transpose() * center(x);
}

}  // namespace spikesub
