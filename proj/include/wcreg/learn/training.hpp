#pragma once

#include "wcreg/errors.hpp"
#include "wcreg/learn/network.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace wcreg::learn {

/// Rows are samples.
using Batch = std::vector<Vec>;

struct AdversarialLoss
{
  double loss = 0.0;
  /// mean R over the real batch
  double loss_real = 0.0;
  /// mean R over the noisy batch
  double loss_noisy = 0.0;
  /// mean (|grad_x R| - 1)_+^2 at the interpolated points
  double penalty = 0.0;
  AwcrParams grad;
};

/// mean R(real) - mean R(noisy) + lambda mean (|grad_x R(x_t)| - 1)_+^2 with
/// x_t = t real_i + (1-t) noisy_{pi(i)}, pi a random bijection and t uniform, both drawn
/// from `seed`. R includes the mu0 term. The weight gradient goes through the input
/// gradient norm.
AdversarialLoss adversarial_loss(const AwcrParams& p, const Batch& real, const Batch& noisy,
                                 double lambda_gp, std::uint64_t seed);

struct TrainSchedule
{
  std::size_t epochs_phase1 = 20;
  std::size_t epochs_phase2 = 80;
  double lambda_phase1 = 0.1;
  double lambda_phase2 = 10.0;
  double learning_rate = 5e-5;
  double decay = 0.99;
  double epsilon = 1e-8;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  /// pairs in the frozen validation batch
  std::size_t validation_size = 256;
};

struct EpochLog
{
  std::size_t epoch = 0;
  double loss_real = 0.0;
  double loss_noisy = 0.0;
  double penalty = 0.0;
  double lambda = 0.0;
  /// full loss on the frozen validation batch after the epoch, at this epoch's lambda
  double validation = 0.0;
};

struct TrainResult
{
  AwcrParams params;
  std::vector<EpochLog> log;
  /// validation loss of the initial parameters at the phase-1 lambda
  double initial_validation = 0.0;
};

/// Thrown on a non-finite loss; carries the parameters from the end of the last
/// completed epoch.
class TrainingDiverged : public Error
{
public:
  TrainingDiverged(const std::string& what, AwcrParams last)
    : Error(what), last_(std::move(last))
  {
  }
  const AwcrParams& last_checkpoint() const noexcept { return last_; }

private:
  AwcrParams last_;
};

/// RMSprop on the adversarial loss, projecting propagation weights onto >= 0 after
/// every step. An epoch is one pass over a shuffled copy of the larger dataset.
TrainResult train_awcr(const AwcrParams& init, const Batch& real, const Batch& noisy,
                       const TrainSchedule& schedule);

std::string training_log_csv(const std::vector<EpochLog>& log);

struct DemoBudget
{
  std::size_t epochs = 2000;
  double learning_rate = 3e-2;
  std::size_t train_points = 256;
  std::size_t test_points = 1001;
  std::uint64_t seed = 0;
  AwcrArch arch{1, {16, 16}, false, {16}, 0.2, 0.0};
};

struct DemoResult
{
  double sup_error = 0.0;
  double train_rmse = 0.0;
  AwcrParams params;
};

/// Least-squares regression of the network output (no mu0 term) onto `target` at
/// equispaced points of [-1, 1] with full-batch Adam (cosine-annealed rate); sup error
/// on a midpoint grid.
DemoResult universal_demo(const std::function<double(double)>& target, const DemoBudget& budget);

/// First line: JSON header (architecture, parameter count, `extra`); then the weights as
/// little-endian doubles in for_each_block order. Written to a temp file then renamed.
void save_checkpoint(const std::filesystem::path& path, const AwcrParams& p,
                     const nlohmann::json& extra = nlohmann::json::object());

struct Checkpoint
{
  AwcrParams params;
  nlohmann::json header;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace wcreg::learn
