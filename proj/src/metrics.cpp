#include "lmb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lmb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Potential-based shortest augmenting path assignment, O(n^2 m). Requires
// rows <= cols; indices are 1-based internally.
double solve_assignment(const CostMatrix& a) {
  const int n = a.rows;
  const int m = a.cols;
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(m) + 1, 0);  // row matched to column
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, kInf);
    std::vector<bool> used(static_cast<std::size_t>(m) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur =
            a.at(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  double total = 0.0;
  for (int j = 1; j <= m; ++j) {
    if (match[static_cast<std::size_t>(j)] != 0) {
      total += a.at(match[static_cast<std::size_t>(j)] - 1, j - 1);
    }
  }
  return total;
}

}  // namespace

double assignment_min(const CostMatrix& costs) {
  if (costs.rows == 0 || costs.cols == 0) return 0.0;
  for (double c : costs.cost) {
    if (!std::isfinite(c)) throw std::invalid_argument("assignment_min: costs must be finite");
  }
  if (costs.rows <= costs.cols) return solve_assignment(costs);
  CostMatrix t;
  t.rows = costs.cols;
  t.cols = costs.rows;
  t.cost.resize(costs.cost.size());
  for (int i = 0; i < costs.rows; ++i) {
    for (int j = 0; j < costs.cols; ++j) {
      t.at(j, i) = costs.at(i, j);
    }
  }
  return solve_assignment(t);
}

double ospa(const std::vector<TrackPoint>& x, const std::vector<TrackPoint>& y, double cutoff,
            double order) {
  if (!(cutoff > 0.0) || !(order >= 1.0)) {
    throw std::invalid_argument("ospa: cutoff must be positive and order >= 1");
  }
  const std::vector<TrackPoint>* small = &x;
  const std::vector<TrackPoint>* big = &y;
  if (small->size() > big->size()) std::swap(small, big);
  const int m = static_cast<int>(small->size());
  const int n = static_cast<int>(big->size());
  if (n == 0) return 0.0;

  CostMatrix costs;
  costs.rows = m;
  costs.cols = n;
  costs.cost.resize(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const double dx = (*small)[static_cast<std::size_t>(i)].x - (*big)[static_cast<std::size_t>(j)].x;
      const double dy = (*small)[static_cast<std::size_t>(i)].y - (*big)[static_cast<std::size_t>(j)].y;
      costs.at(i, j) = std::pow(std::min(cutoff, std::sqrt(dx * dx + dy * dy)), order);
    }
  }
  const double matched = assignment_min(costs);
  const double card_penalty = std::pow(cutoff, order) * (n - m);
  return std::pow((matched + card_penalty) / n, 1.0 / order);
}

double ospa2(const LabeledTrackSet& x, const LabeledTrackSet& y, const OspaParams& params, int t) {
  if (params.window <= 0) throw std::invalid_argument("ospa2: window must be positive");
  const int start = std::max(0, t - params.window + 1);
  const int len = t - start + 1;
  if (len <= 0) return 0.0;  // window lies entirely before the first step

  std::vector<double> weights(static_cast<std::size_t>(len));
  if (params.weight_power == 0.0) {
    std::fill(weights.begin(), weights.end(), 1.0 / len);
  } else {
    double sum = 0.0;
    for (int k = 0; k < len; ++k) {
      weights[static_cast<std::size_t>(k)] = std::pow(static_cast<double>(k + 1), params.weight_power);
      sum += weights[static_cast<std::size_t>(k)];
    }
    for (double& w : weights) w /= sum;
  }

  auto active = [&](const LabeledTrackSet& set) {
    std::vector<const std::map<int, TrackPoint>*> out;
    for (const auto& [id, points] : set.tracks) {
      auto it = points.lower_bound(start);
      if (it != points.end() && it->first <= t) out.push_back(&points);
    }
    return out;
  };
  std::vector<const std::map<int, TrackPoint>*> xa = active(x);
  std::vector<const std::map<int, TrackPoint>*> ya = active(y);
  if (xa.size() > ya.size()) std::swap(xa, ya);
  const int m = static_cast<int>(xa.size());
  const int n = static_cast<int>(ya.size());
  if (n == 0) return 0.0;

  CostMatrix base;
  base.rows = m;
  base.cols = n;
  base.cost.resize(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double d = 0.0;
      for (int k = 0; k < len; ++k) {
        const int step = start + k;
        auto ix = xa[static_cast<std::size_t>(i)]->find(step);
        auto iy = ya[static_cast<std::size_t>(j)]->find(step);
        const bool has_x = ix != xa[static_cast<std::size_t>(i)]->end();
        const bool has_y = iy != ya[static_cast<std::size_t>(j)]->end();
        double dk;
        if (!has_x && !has_y) {
          dk = 0.0;
        } else if (has_x != has_y) {
          dk = params.cutoff;
        } else {
          const double dx = ix->second.x - iy->second.x;
          const double dy = ix->second.y - iy->second.y;
          dk = std::min(params.cutoff, std::sqrt(dx * dx + dy * dy));
        }
        d += weights[static_cast<std::size_t>(k)] * dk;
      }
      base.at(i, j) = std::pow(d, params.order);
    }
  }
  const double matched = assignment_min(base);
  const double card_penalty = std::pow(params.cutoff, params.order) * (n - m);
  return std::pow((matched + card_penalty) / n, 1.0 / params.order);
}

}  // namespace lmb
