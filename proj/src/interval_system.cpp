#include "gsmp/interval_system.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gsmp {

void IntervalSystem::validate() const {
  if (!(b0 < a0)) throw std::invalid_argument("interval system: outer interval is empty");
  double prev = b0;
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    const auto& [lo, hi] = gaps[k];
    if (!(lo < hi))
      throw std::invalid_argument("interval system: gap " + std::to_string(k + 1) + " is empty");
    if (!(lo > prev))
      throw std::invalid_argument("interval system: gap " + std::to_string(k + 1) +
                                  " overlaps or touches its left neighbour");
    if (!(hi < a0))
      throw std::invalid_argument("interval system: gap " + std::to_string(k + 1) +
                                  " reaches the outer boundary");
    prev = hi;
  }
}

std::vector<std::array<double, 2>> IntervalSystem::bands() const {
  std::vector<std::array<double, 2>> out;
  out.reserve(gaps.size() + 1);
  double left = b0;
  for (const auto& [lo, hi] : gaps) {
    out.push_back({left, lo});
    left = hi;
  }
  out.push_back({left, a0});
  return out;
}

bool IntervalSystem::contains(double x) const {
  if (x < b0 || x > a0) return false;
  for (const auto& [lo, hi] : gaps)
    if (lo < x && x < hi) return false;
  return true;
}

double IntervalSystem::dist_to_set(double x) const {
  if (contains(x)) return 0.0;
  if (x < b0) return b0 - x;
  if (x > a0) return x - a0;
  for (const auto& [lo, hi] : gaps)
    if (lo < x && x < hi) return std::min(x - lo, hi - x);
  return 0.0;
}

double IntervalSystem::dist_to_complement(double x) const {
  if (!contains(x)) return 0.0;
  double d = std::min(x - b0, a0 - x);
  for (const auto& [lo, hi] : gaps) {
    // x lies outside the open gap; the nearest complement point in this gap
    // is whichever endpoint x sits beside.
    d = std::min(d, std::abs(x - lo));
    d = std::min(d, std::abs(x - hi));
  }
  return d;
}

IntervalSystem make_interval_system(double b0, double a0,
                                    std::vector<std::array<double, 2>> gaps) {
  std::sort(gaps.begin(), gaps.end(),
            [](const auto& u, const auto& v) { return u[0] < v[0]; });
  IntervalSystem E{b0, a0, std::move(gaps)};
  E.validate();
  return E;
}

}  // namespace gsmp
