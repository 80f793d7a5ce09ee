#pragma once

#include "odc/common.hpp"
#include "odc/rng.hpp"

#include <vector>

namespace odc {

struct GaussianComponent {
  double weight = 1.0;
  Vector mean;
  Matrix cov;  // d x d PSD (diagonal configs are expanded on parse)
};

struct GaussianMixtureSpec {
  std::vector<GaussianComponent> components;

  int dim() const { return components.empty() ? 0 : static_cast<int>(components[0].mean.size()); }
  void validate() const;
};

/// n i.i.d. samples (n x d); deterministic under the stream.
Matrix sample_mixture(const GaussianMixtureSpec& spec, int n, const rng::Stream& stream);

}  // namespace odc
