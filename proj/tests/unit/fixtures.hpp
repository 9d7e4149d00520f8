#pragma once

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "vfplab/front.hpp"

namespace vfp::test {

inline ModelParams params_with(int nz, double beta = 1.25) {
  ModelParams p;
  p.nz = nz;
  p.beta = beta;
  return p;
}

/// Solved fronts are cached per resolution; tests only read them.
inline const FrontProfile& front_at(int nz) {
  static std::map<int, FrontProfile> cache;
  auto it = cache.find(nz);
  if (it == cache.end()) it = cache.emplace(nz, solve_front(params_with(nz))).first;
  return it->second;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace vfp::test
