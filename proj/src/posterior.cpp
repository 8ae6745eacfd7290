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

#include "abspose/posterior.hpp"

#include <ostream>

#include "abspose/keyvalue.hpp"

namespace abspose {

ChannelStack GibbsPosterior::stack(const Pose& H) const {
  const CameraIntrinsics& K = obs_->intrinsics;
  const Window w = compute_window(H, mesh_->diameter, K);
  const RenderedImages rend = render(*mesh_, H, K, w);
  return assemble_channels(*obs_, rend, H, mesh_->diameter, w);
}

double GibbsPosterior::energy(const Pose& H) const {
  if (!(H.translation.z() > 0.0)) return std::numeric_limits<double>::infinity();
  return net_->forward(stack(H));
}

Pose propose(const Pose& H, const ProposalConfig& cfg, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Pose out;
  for (int i = 0; i < 3; ++i) out.translation(i) = H.translation(i) + cfg.sigma_t * n(rng);
  Vec3 e;
  for (int i = 0; i < 3; ++i) e(i) = cfg.sigma_r * n(rng);
  out.rotation = exp_so3(e) * H.rotation;
  return out;
}

PoseChain run_chain(const EnergyFn& energy, const Pose& init, const ProposalConfig& pcfg,
                    const ChainConfig& ccfg, Rng& rng) {
  return metropolis(energy, [&](const Pose& H, Rng& r) { return propose(H, pcfg, r); }, init, ccfg, rng);
}

void write_chain_csv(std::ostream& out, const PoseChain& chain) {
  out << "iter,accepted,energy,tx,ty,tz,r00,r01,r02,r10,r11,r12,r20,r21,r22\n";
  for (std::size_t i = 0; i < chain.steps.size(); ++i) {
    const auto& s = chain.steps[i];
    out << i << ',' << (s.accepted ? 1 : 0) << ',' << format_exact(s.energy);
    for (int k = 0; k < 3; ++k) out << ',' << format_exact(s.state.translation(k));
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << ',' << format_exact(s.state.rotation(r, c));
    }
    out << '\n';
  }
}

}  // namespace abspose
