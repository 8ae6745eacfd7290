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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abspose/energynet.hpp"
#include "abspose/infer.hpp"
#include "abspose/posterior.hpp"

namespace abspose {

struct LogRecord;

struct TrainConfig {
  double gamma0 = 10.0;
  double lambda = 0.5;
  double lr_scale = 1.0;  // proportionality constant of the schedule
  int validate_every = 5;
  ChainConfig chain;
  /// Non-positive sigmas are replaced per sample by ProposalConfig::for_diameter.
  ProposalConfig proposal{0.0, 0.0};
  InferConfig infer;
  long max_steps = 100;
  std::uint64_t seed = 1;
  std::filesystem::path checkpoint_dir;  // empty = no checkpoints
  std::function<void(const LogRecord&)> progress;  // called for every log record

  void validate() const;
};

/// A labeled image (x_i, H_i).
struct TrainingSample {
  ObservationSet observation;
  Pose gt_pose;
  std::shared_ptr<const TriangleMesh> mesh;
  std::string id;
};

/// lr_scale * gamma0 / (1 + gamma0 * lambda * t). sgd_train passes t = number of
/// completed validation cycles, so the rate changes every `validate_every` steps.
double learning_rate(long t, const TrainConfig& cfg);

struct NllGradient {
  ParamGradient grad;  // d(-ln p(H_i|x_i))/d(theta)
  double data_energy = 0.0;
  double mean_sample_energy = 0.0;
  double acceptance = 0.0;
  int unique_samples = 0;
};

/// dE(H_i)/dtheta - (1/N) sum_k dE(H_k)/dtheta over the given samples.
/// Repeated consecutive poses (rejections) are differentiated once.
NllGradient nll_gradient_from_samples(const GibbsPosterior& post, const Pose& gt, std::span<const Pose> samples);

/// Runs one Metropolis chain from `init` and returns the gradient estimate.
NllGradient nll_gradient_from_chain(const GibbsPosterior& post, const Pose& gt, const Pose& init,
                                    const ProposalConfig& pcfg, const ChainConfig& ccfg, Rng& rng);

/// Full estimator: chain initialized by inference under the current parameters.
/// Returns nullopt (a skip) when inference cannot form a hypothesis.
std::optional<NllGradient> nll_gradient(const TrainingSample& sample, const EnergyNetParams& params,
                                        const TrainConfig& cfg, Rng& rng);

struct LogRecord {
  enum class Kind { Step, Validation } kind;
  long step = 0;
  std::string sample_id;
  bool skipped = false;
  double data_energy = 0.0;
  double mean_sample_energy = 0.0;
  double learning_rate = 0.0;
  double acceptance = 0.0;
  double validation_score = 0.0;  // percent correct
};

struct TrainResult {
  EnergyNetParams best;
  double best_score = 0.0;
  long best_step = 0;
  double initial_score = 0.0;
  std::vector<LogRecord> log;
};

/// Percentage of samples whose estimate is correct (10% diameter criterion).
double validation_score(std::span<const TrainingSample> set, const EnergyNetParams& params, const InferConfig& cfg,
                        std::uint64_t seed);

/// Stochastic gradient descent on the negative log-likelihood, batch size 1.
/// Validates every `validate_every` steps (and after the last step) and keeps
/// the parameters with the highest validation score; later snapshots win ties.
TrainResult sgd_train(std::span<const TrainingSample> train_set, std::span<const TrainingSample> validation_set,
                      const TrainConfig& cfg, std::optional<EnergyNetParams> initial = std::nullopt);

void write_training_log(std::ostream& out, const std::vector<LogRecord>& log);

}  // namespace abspose
