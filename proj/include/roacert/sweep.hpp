#pragma once

#include <functional>
#include <limits>
#include <mutex>
#include <vector>

#include "roacert/errors.hpp"
#include "roacert/sdp.hpp"
#include "roacert/simulate.hpp"

namespace roacert {

struct SweepRow {
  double delta_v = 0.0;
  SolveStatus status = SolveStatus::NumericalTrouble;
  bool feasible = false;
  double trace = std::numeric_limits<double>::quiet_NaN();
  double det_inv = std::numeric_limits<double>::quiet_NaN();  // det(P_x^{-1}), proportional to volume^2
};

struct SweepResult {
  std::vector<SweepRow> rows;
  int best_volume = -1;   // row index of the largest det(P_x^{-1})
  double largest_feasible = 0.0;

  bool any_feasible() const { return best_volume >= 0; }
};

/// Re-runs bounds, assembly and solve per grid point through `certify_at`.
/// Infeasible points are recorded, not fatal; errors at a point count as
/// numerical trouble.
inline SweepResult sweep_delta_v(const std::vector<double>& grid,
                                 const std::function<RoaCertificate(double)>& certify_at, int threads = 1) {
  if (grid.empty()) throw ParameterError("sweep: empty grid");
  SweepResult res;
  res.rows.resize(grid.size());
  detail::parallel_for(static_cast<int>(grid.size()), threads, [&](int i) {
    SweepRow row;
    row.delta_v = grid[i];
    try {
      const RoaCertificate c = certify_at(grid[i]);
      row.status = c.status;
      row.feasible = c.certified();
      if (row.feasible) {
        row.trace = c.P_x.trace();
        row.det_inv = 1.0 / c.P_x.determinant();
      }
    } catch (const Error&) {
      row.status = SolveStatus::NumericalTrouble;
    }
    res.rows[i] = row;
  });
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& r = res.rows[i];
    if (!r.feasible) continue;
    if (res.best_volume < 0 || r.det_inv > res.rows[res.best_volume].det_inv) res.best_volume = static_cast<int>(i);
    res.largest_feasible = std::max(res.largest_feasible, r.delta_v);
  }
  return res;
}

}  // namespace roacert
