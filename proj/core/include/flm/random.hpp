#pragma once

#include <cstdint>
#include <random>

#include "flm/factored_model.hpp"
#include "flm/linalg.hpp"
#include "flm/mdp.hpp"

namespace flm {

/// SplitMix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x);

/// Per-trial seed hash(master, index); trials are independent of execution order.
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index);

/// Seeded generator with platform-independent real and integer draws
/// (the standard distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  Index integer(Index lo, Index hi);
  /// Flat Dirichlet(1, ..., 1) sample.
  Vector dirichlet(Index d);

 private:
  std::mt19937_64 engine_;
};

/// Dirichlet(1) transition rows and uniform[-1, 1] rewards.
Mdp random_mdp(Rng& rng, Index states, Index actions, double gamma);

struct InstanceRanges {
  Index states_min = 2;
  Index states_max = 30;
  Index compressed_min = 1;
  Index compressed_max = 10;
  Index actions_min = 1;
  Index actions_max = 4;
  double gamma_min = 0.1;
  double gamma_max = 0.95;
  double perturbation = 0.3;
  bool soft = false;
};

struct RandomInstance {
  std::uint64_t seed = 0;
  Mdp mdp;
  FactoredLinearModel model;
};

/// Draws sizes and gamma from `ranges`, then an MDP and a random_normalized
/// model over it (compressed dimension capped at the state count).
RandomInstance random_instance(std::uint64_t seed, const InstanceRanges& ranges = {});

}  // namespace flm
