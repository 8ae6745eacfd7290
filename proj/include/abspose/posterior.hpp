// Copyright 2026 The abspose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <functional>
#include <iosfwd>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "abspose/energynet.hpp"
#include "abspose/geometry.hpp"
#include "abspose/mesh.hpp"
#include "abspose/observation.hpp"
#include "abspose/random.hpp"
#include "abspose/render.hpp"

namespace abspose {

/// Any pose energy; lower is better. +inf marks an impossible pose.
using EnergyFn = std::function<double(const Pose&)>;

/// Gibbs posterior p(H|x) ∝ exp(-E(H, x)) with the network energy. The
/// normalizer is never evaluated; only energy differences are used.
///
/// Non-owning: the observation, mesh and network must outlive the posterior.
class GibbsPosterior {
 public:
  GibbsPosterior(const ObservationSet& obs, const TriangleMesh& mesh, const EnergyNet& net)
      : obs_(&obs), mesh_(&mesh), net_(&net) {}

  /// Network input for pose H. Throws BehindCamera.
  ChannelStack stack(const Pose& H) const;

  /// f(x, r(H); theta). +inf when the object center is behind the camera.
  double energy(const Pose& H) const;
  double operator()(const Pose& H) const { return energy(H); }

  const ObservationSet& observation() const { return *obs_; }
  const TriangleMesh& mesh() const { return *mesh_; }
  const EnergyNet& net() const { return *net_; }

 private:
  const ObservationSet* obs_;
  const TriangleMesh* mesh_;
  const EnergyNet* net_;
};

struct ProposalConfig {
  double sigma_t = 5.0;  // mm, isotropic translation std
  double sigma_r = 0.1;  // rad, isotropic Euler-vector std

  /// sigma_t = 0.05 * diameter, sigma_r = 0.1 rad.
  static ProposalConfig for_diameter(double diameter) { return {0.05 * diameter, 0.1}; }
};

struct ChainConfig {
  int total_iterations = 130;
  int burn_in = 30;
};

/// min(1, exp(E_cur - E_prop)); 0 when the proposal is impossible.
inline double accept_probability(double e_prop, double e_cur) {
  if (std::isinf(e_prop) && e_prop > 0) return 0.0;
  if (std::isinf(e_cur) && e_cur > 0) return 1.0;
  return std::min(1.0, std::exp(e_cur - e_prop));
}

/// T' ~ N(T, sigma_t^2 I); R' = exp(e) R with e ~ N(0, sigma_r^2 I).
Pose propose(const Pose& H, const ProposalConfig& cfg, Rng& rng);

template <typename State>
struct ChainStep {
  State state;
  double energy;
  bool accepted;
};

template <typename State>
struct ChainResult {
  std::vector<ChainStep<State>> steps;  // one per iteration, burn-in included
  int burn_in = 0;

  std::span<const ChainStep<State>> samples() const {
    return std::span<const ChainStep<State>>(steps).subspan(static_cast<std::size_t>(burn_in));
  }
  double acceptance_rate() const {
    if (steps.empty()) return 0.0;
    std::size_t n = 0;
    for (const auto& s : steps) n += s.accepted ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(steps.size());
  }
};

/// Metropolis algorithm over any state space with a symmetric proposal.
/// A rejected step records the current state again.
template <typename State, typename Energy, typename Propose>
ChainResult<State> metropolis(Energy&& energy, Propose&& proposal, State init, const ChainConfig& cfg, Rng& rng) {
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.total_iterations) {
    throw ContractViolation("chain config requires 0 <= burn_in < total_iterations");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ChainResult<State> out;
  out.burn_in = cfg.burn_in;
  out.steps.reserve(static_cast<std::size_t>(cfg.total_iterations));

  State cur = std::move(init);
  double e_cur = energy(cur);
  for (int t = 0; t < cfg.total_iterations; ++t) {
    State cand = proposal(cur, rng);
    const double e_cand = energy(cand);
    const double a = accept_probability(e_cand, e_cur);
    const bool accepted = unit(rng) < a;
    if (accepted) {
      cur = std::move(cand);
      e_cur = e_cand;
    }
    out.steps.push_back({cur, e_cur, accepted});
  }
  return out;
}

using PoseChain = ChainResult<Pose>;

PoseChain run_chain(const EnergyFn& energy, const Pose& init, const ProposalConfig& pcfg,
                    const ChainConfig& ccfg, Rng& rng);

/// Diagnostics CSV: iter,accepted,energy,tx,ty,tz,r00..r22.
void write_chain_csv(std::ostream& out, const PoseChain& chain);

}  // namespace abspose
