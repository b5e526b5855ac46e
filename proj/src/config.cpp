#include "afs/config.hpp"

#include <cmath>
#include <string>

#include "afs/errors.hpp"
#include "afs/text_format.hpp"

namespace afs {

void PipelineConfig::validate() const {
  if (n_steps == 0) throw InvalidArgument("config: n_steps must be >= 1");
  if (horizon == 0) throw InvalidArgument("config: horizon must be >= 1");
  if (width == 0) throw InvalidArgument("config: width must be >= 1");
  if (!std::isfinite(eta) || !(eta >= 0.0)) {
    throw InvalidArgument("config: eta must be finite and >= 0");
  }
  if (!std::isfinite(sigma) || !(sigma >= 0.0)) {
    throw InvalidArgument("config: sigma must be finite and >= 0");
  }
  if (!std::isfinite(threshold)) {
    throw InvalidArgument("config: threshold must be finite");
  }
  if (max_retries < 0) {
    throw InvalidArgument("config: max_retries must be >= 0");
  }
  decision_indices();  // throws on infeasible geometry
}

double PipelineConfig::grid_time(std::size_t index) const {
  return 1.0 - static_cast<double>(index) / static_cast<double>(n_steps);
}

std::size_t PipelineConfig::snap_index(double t) const {
  const double x = static_cast<double>(n_steps) * (1.0 - t);
  // Nearest index; exact halves round down (toward the larger grid time).
  double snapped = std::ceil(x - 0.5);
  if (snapped < 0.0) snapped = 0.0;
  return static_cast<std::size_t>(snapped);
}

std::vector<std::size_t> PipelineConfig::decision_indices() const {
  if (t_split.empty()) {
    throw InvalidArgument("config: need at least one decision point");
  }
  std::vector<std::size_t> indices;
  indices.reserve(t_split.size());
  for (double t : t_split) {
    if (!(t > 0.0 && t < 1.0)) {
      throw InvalidArgument("config: decision point " + text::fmt17(t) +
                            " must lie strictly inside (0,1)");
    }
    const std::size_t idx = snap_index(t);
    if (idx == 0 || idx >= n_steps) {
      throw InvalidArgument("config: decision point " + text::fmt17(t) +
                            " snaps to the grid boundary");
    }
    if (!indices.empty() && idx < indices.back() + horizon) {
      throw InvalidArgument(
          "config: decision points must be strictly decreasing in t and at "
          "least `horizon` grid steps apart after snapping (the next stage "
          "resumes from the end of the previous stage's branch)");
    }
    indices.push_back(idx);
  }
  if (indices.back() + horizon > n_steps) {
    throw InvalidArgument(
        "config: horizon overruns t=0 from the last decision point (index " +
        std::to_string(indices.back()) + " + horizon " +
        std::to_string(horizon) + " > n_steps " + std::to_string(n_steps) +
        ")");
  }
  return indices;
}

}  // namespace afs
