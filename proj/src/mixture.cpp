#include "odc/mixture.hpp"

#include <cmath>

namespace odc {

void GaussianMixtureSpec::validate() const {
  require(!components.empty(), "GaussianMixtureSpec: no components");
  double total = 0.0;
  for (const GaussianComponent& c : components) {
    require(c.weight > 0.0, "GaussianMixtureSpec: component weights must be positive");
    require(c.mean.size() == dim(), "GaussianMixtureSpec: inconsistent dimensions");
    require(c.cov.rows() == dim() && c.cov.cols() == dim(),
            "GaussianMixtureSpec: covariance shape mismatch");
    total += c.weight;
  }
  require(std::abs(total - 1.0) <= 1e-9, "GaussianMixtureSpec: weights must sum to 1");
}

namespace {

/// Symmetric PSD square root via eigendecomposition; tolerates singular
/// covariances (a zero matrix yields a point mass).
Matrix psd_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) throw NumericError("sample_mixture: eigensolver failed");
  Vector ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-10 * scale)
      throw std::invalid_argument("sample_mixture: covariance is not positive semdefinite");
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Matrix sample_mixture(const GaussianMixtureSpec& spec, int n, const rng::Stream& stream) {
  spec.validate();
  require(n >= 1, "sample_mixture: n must be >= 1");
  const int d = spec.dim();

  std::vector<Matrix> roots;
  roots.reserve(spec.components.size());
  for (const GaussianComponent& c : spec.components) roots.push_back(psd_sqrt(c.cov));

  Matrix out(n, d);
  for (int i = 0; i < n; ++i) {
    const rng::Stream s = stream.at(static_cast<std::uint64_t>(i));
    const double u = s.uniform(0);
    std::size_t pick = 0;
    double acc = 0.0;
    for (std::size_t c = 0; c < spec.components.size(); ++c) {
      acc += spec.components[c].weight;
      if (u <= acc) {
        pick = c;
        break;
      }
      pick = c;  // numerical tail: keep the last component
    }
    Vector z(d);
    const rng::Stream zs = s.at(1);
    for (int j = 0; j < d; ++j) z(j) = zs.normal(static_cast<std::uint64_t>(j));
    out.row(i) = (spec.components[pick].mean + roots[pick] * z).transpose();
  }
  return out;
}

}  // namespace odc
