#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>

namespace infobot::nn {

// Shapes and initialization of the neural models. The learning rates and batch
// size are recorded with a checkpoint for reference; training reads its own
// TrainConfig.
struct ModelConfig {
  std::size_t hidden_size = 50;
  double il_learning_rate = 0.005;
  double rl_learning_rate = 0.01;
  std::size_t batch_size = 128;
  double init_scale = 0.08;
  std::uint64_t init_seed = 0;

  void validate() const {
    if (hidden_size < 1) throw std::invalid_argument("ModelConfig: hidden_size must be >= 1");
    if (!(il_learning_rate > 0.0) || !(rl_learning_rate > 0.0))
      throw std::invalid_argument("ModelConfig: learning rates must be positive");
    if (batch_size < 1) throw std::invalid_argument("ModelConfig: batch_size must be >= 1");
    if (!(init_scale >= 0.0)) throw std::invalid_argument("ModelConfig: init_scale must be >= 0");
  }
};

}  // namespace infobot::nn
