#include "flm/random.hpp"

#include <algorithm>
#include <cmath>

#include "flm/errors.hpp"

namespace flm {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(trial_index + 0x632be59bd9b4e019ULL));
}

Index Rng::integer(Index lo, Index hi) {
  if (hi < lo) {
    throw ValidationError("empty integer range");
  }
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<Index>(engine_() % span);
}

Vector Rng::dirichlet(Index d) {
  Vector x(d);
  for (Index i = 0; i < d; ++i) {
    x(i) = -std::log1p(-uniform());
  }
  const double total = x.sum();
  if (total > 0.0) return x / total;
  return Vector::Constant(d, 1.0 / static_cast<double>(d));
}

Mdp random_mdp(Rng& rng, Index states, Index actions, double gamma) {
  MatrixFamily p;
  std::vector<Vector> r;
  for (Index a = 0; a < actions; ++a) {
    Matrix kernel(states, states);
    for (Index x = 0; x < states; ++x) {
      kernel.row(x) = rng.dirichlet(states).transpose();
      // Exact unit row sums keep the kernel inside the 1e-12 tolerance.
      kernel(x, states - 1) = std::max(0.0, 1.0 - kernel.row(x).head(states - 1).sum());
    }
    p.push_back(std::move(kernel));
    Vector reward(states);
    for (Index x = 0; x < states; ++x) reward(x) = rng.uniform(-1.0, 1.0);
    r.push_back(std::move(reward));
  }
  return Mdp(std::move(p), std::move(r), gamma, /*renormalize_rows=*/true);
}

RandomInstance random_instance(std::uint64_t seed, const InstanceRanges& ranges) {
  Rng rng(seed);
  const Index m = rng.integer(ranges.states_min, ranges.states_max);
  const Index k = rng.integer(ranges.actions_min, ranges.actions_max);
  const Index n = rng.integer(std::min(ranges.compressed_min, m), std::min(ranges.compressed_max, m));
  const double gamma = rng.uniform(ranges.gamma_min, ranges.gamma_max);
  Mdp mdp = random_mdp(rng, m, k, gamma);
  RandomModelOptions options;
  options.compressed_dim = n;
  options.perturbation = ranges.perturbation;
  options.soft = ranges.soft;
  FactoredLinearModel model = random_normalized(mdp, rng.next(), options);
  return {seed, std::move(mdp), std::move(model)};
}

}  // namespace flm
