#include <cmath>

#include "sqa/pooling_regressor.hpp"

namespace sqa {

PooledVector statistic_pooling(const EmbeddingMatrix& matrix) {
  const std::size_t dim = matrix.dim();
  // Welford's update, frame by frame.
  std::vector<double> mean(dim, 0.0);
  std::vector<double> m2(dim, 0.0);
  for (std::size_t t = 0; t < matrix.frames(); ++t) {
    const auto frame = matrix.frame(t);
    const double inv_count = 1.0 / static_cast<double>(t + 1);
    for (std::size_t d = 0; d < dim; ++d) {
      const double x = frame[d];
      const double delta = x - mean[d];
      mean[d] += delta * inv_count;
      m2[d] += delta * (x - mean[d]);
    }
  }

  PooledVector pooled;
  pooled.values.resize(2 * dim);
  const double frames = static_cast<double>(matrix.frames());
  for (std::size_t d = 0; d < dim; ++d) {
    pooled.values[d] = mean[d];
    pooled.values[dim + d] = std::sqrt(m2[d] / frames + kPoolingVarianceEpsilon);
  }
  return pooled;
}

}  // namespace sqa
