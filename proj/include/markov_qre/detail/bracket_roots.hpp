#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace markov_qre {

template <typename F>
std::vector<double> bracket_roots(F&& f, double lo, double hi, const RootSearch& search) {
  std::vector<double> roots;
  if (!(hi >= lo)) return roots;
  const auto steps = static_cast<long>(std::ceil((hi - lo) / search.grid_step - 1e-9));
  auto node = [&](long i) { return i >= steps ? hi : lo + static_cast<double>(i) * search.grid_step; };

  std::vector<std::optional<double>> values(static_cast<std::size_t>(steps) + 1);
  for (long i = 0; i <= steps; ++i) values[static_cast<std::size_t>(i)] = f(node(i));
  auto is_zero = [&](long i) {
    if (i < 0 || i > steps) return false;
    const auto& v = values[static_cast<std::size_t>(i)];
    return v && std::abs(*v) <= search.zero_tolerance;
  };

  for (long i = 0; i <= steps; ++i) {
    const auto& value = values[static_cast<std::size_t>(i)];
    if (is_zero(i)) {
      // A run of zero nodes is a flat stretch, not a root.
      if (!is_zero(i - 1) && !is_zero(i + 1)) roots.push_back(node(i));
      continue;
    }
    if (i == 0) continue;
    const auto& prev = values[static_cast<std::size_t>(i - 1)];
    if (!prev || !value || is_zero(i - 1) || std::signbit(*prev) == std::signbit(*value)) continue;

    double a = node(i - 1), b = node(i), fa = *prev;
    while (b - a > search.tolerance) {
      const double mid = 0.5 * (a + b);
      const std::optional<double> fm = f(mid);
      if (!fm) break;
      if (*fm == 0.0) {
        a = b = mid;
        break;
      }
      if (std::signbit(*fm) == std::signbit(fa)) {
        a = mid;
        fa = *fm;
      } else {
        b = mid;
      }
    }
    roots.push_back(0.5 * (a + b));
  }
  return roots;
}

}  // namespace markov_qre
