#include "containerstress/estimator.hpp"

#include "containerstress/errors.hpp"

namespace cstress {

namespace {

struct MsetModel final : PrognosticModel {
  TrainedModel model;
};

struct MeanModel final : PrognosticModel {
  Vector means;
};

template <typename Concrete>
const Concrete& as(const PrognosticModel& model, const char* algo) {
  const auto* concrete = dynamic_cast<const Concrete*>(&model);
  if (!concrete)
    throw ConfigError(std::string("model was not trained by algorithm ") + algo);
  return *concrete;
}

}  // namespace

std::unique_ptr<PrognosticModel> MsetAlgorithm::train(
    const SignalMatrix& training, Index n_memory, const KernelConfig& kernel,
    const BackendId& backend) const {
  auto out = std::make_unique<MsetModel>();
  out->model = cstress::train(training, n_memory, kernel, backend);
  return out;
}

EstimationResult MsetAlgorithm::estimate(const PrognosticModel& model,
                                         const SignalMatrix& observations,
                                         const BackendId& backend) const {
  return cstress::estimate(as<MsetModel>(model, "mset2").model, observations,
                           backend);
}

std::unique_ptr<PrognosticModel> MeanPredictor::train(
    const SignalMatrix& training, Index /*n_memory*/,
    const KernelConfig& /*kernel*/, const BackendId& /*backend*/) const {
  auto out = std::make_unique<MeanModel>();
  out->means = training.data.colwise().mean();
  return out;
}

EstimationResult MeanPredictor::estimate(const PrognosticModel& model,
                                         const SignalMatrix& observations,
                                         const BackendId& /*backend*/) const {
  const auto& means = as<MeanModel>(model, "mean").means;
  if (observations.n_signals() != means.size())
    throw ShapeError("mean predictor: signal count mismatch");
  EstimationResult result;
  result.estimates =
      means.transpose().replicate(observations.n_observations(), 1);
  result.residuals = observations.data - result.estimates;
  return result;
}

const PrognosticAlgorithm& algorithm_by_name(const std::string& name) {
  static const MsetAlgorithm mset;
  static const MeanPredictor mean;
  if (name == "mset2") return mset;
  if (name == "mean") return mean;
  throw ConfigError("unknown estimator: " + name);
}

}  // namespace cstress
