#pragma once

#include <memory>
#include <string>

#include "containerstress/mset.hpp"

namespace cstress {

/// Opaque trained state owned by a PrognosticAlgorithm.
class PrognosticModel {
 public:
  virtual ~PrognosticModel() = default;
};

/// The pluggable-estimator contract: the sweep harness talks to an
/// algorithm only through this (train, estimate) pair.
class PrognosticAlgorithm {
 public:
  virtual ~PrognosticAlgorithm() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<PrognosticModel> train(const SignalMatrix& training,
                                                 Index n_memory,
                                                 const KernelConfig& kernel,
                                                 const BackendId& backend) const = 0;
  virtual EstimationResult estimate(const PrognosticModel& model,
                                    const SignalMatrix& observations,
                                    const BackendId& backend) const = 0;
};

/// Kernel-regression estimator backed by this library's training and
/// estimation pipeline.
class MsetAlgorithm final : public PrognosticAlgorithm {
 public:
  std::string name() const override { return "mset2"; }
  std::unique_ptr<PrognosticModel> train(const SignalMatrix& training,
                                         Index n_memory,
                                         const KernelConfig& kernel,
                                         const BackendId& backend) const override;
  EstimationResult estimate(const PrognosticModel& model,
                            const SignalMatrix& observations,
                            const BackendId& backend) const override;
};

/// Trivial baseline: predicts the per-signal training mean everywhere.
class MeanPredictor final : public PrognosticAlgorithm {
 public:
  std::string name() const override { return "mean"; }
  std::unique_ptr<PrognosticModel> train(const SignalMatrix& training,
                                         Index n_memory,
                                         const KernelConfig& kernel,
                                         const BackendId& backend) const override;
  EstimationResult estimate(const PrognosticModel& model,
                            const SignalMatrix& observations,
                            const BackendId& backend) const override;
};

/// Registry lookup; throws ConfigError for unknown names.
const PrognosticAlgorithm& algorithm_by_name(const std::string& name);

}  // namespace cstress
