#pragma once

#include <cstddef>
#include <vector>

#include "afs/critic.hpp"

// All tunables the pipeline exposes, plus the shared integration grid.
//
// The grid: n_steps uniform Euler steps over t in [1, 0], with grid times
// computed analytically as t_i = 1 - i/n.  Every integration in the pipeline
// — open-loop segments, branch horizons, completions — steps between
// consecutive grid times, so a closed-loop run with no interventions is
// bitwise identical to one open-loop integration.

namespace afs {

enum class CriticMode { kOracle, kRemote };

struct PipelineConfig {
  std::size_t n_steps = 50;
  // Decision points in flow time, strictly inside (0,1), decreasing.  Each
  // snaps to the nearest grid time (ties toward the earlier/larger-t grid
  // point); the snapped value is what stage logs record.
  std::vector<double> t_split = {0.8, 0.6, 0.4};
  std::size_t horizon = 5;  // branch simulation steps (on the global grid)
  std::size_t width = 3;    // W
  double eta = 16.0;        // steering step size (0 disables steering)
  double sigma = 0.1;       // explore noise scale
  double threshold = 7.5;   // tau, on the -10..+10 rubric scale
  int max_retries = 2;
  bool skip_search_when_clean = true;
  bool deep_scoring = false;  // score branches from completed states
  CriticMode critic_mode = CriticMode::kOracle;
  bool fallback_to_oracle = false;  // on remote transport failure
  bool remote_refine = false;       // ask the remote endpoint for refinements
  RubricConfig rubric;
  // Fault injection for the segmenter (tests + ablations only).
  MaskFault mask_fault = MaskFault::kNone;
  std::size_t dilate_dims = 2;

  // Throws InvalidArgument when any field or the decision-point geometry
  // (snapped indices strictly inside the grid, distinct, with horizon room
  // before t = 0) is infeasible.
  void validate() const;

  // t_i = 1 - i/n for i in [0, n].
  double grid_time(std::size_t index) const;

  // Nearest grid index for a flow time (ties -> smaller index = larger t).
  std::size_t snap_index(double t) const;

  // Snapped decision-point indices, ascending (t descending).  Validated.
  std::vector<std::size_t> decision_indices() const;
};

}  // namespace afs
