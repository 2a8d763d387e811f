#pragma once

#include "raceline/evolve.hpp"
#include "raceline/harness.hpp"

namespace raceline::fixture {

/// Small, fast training run shared by tests that need a policy that drives.
inline EvolutionConfig quick_evolution() {
  EvolutionConfig cfg;
  cfg.n_spawns = 30;
  cfg.m_survivors = 6;
  cfg.generations = 15;
  cfg.max_steps = 600;
  cfg.master_seed = 7;
  return cfg;
}

inline const MlpPolicy& quick_policy() {
  static const MlpPolicy policy = train(quick_evolution()).best;
  return policy;
}

}  // namespace raceline::fixture
