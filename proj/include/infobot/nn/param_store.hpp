#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace infobot::nn {

using Vec = std::vector<double>;

struct ParamId {
  std::uint32_t index = 0;
  friend bool operator==(ParamId a, ParamId b) { return a.index == b.index; }
};

// Dense row-major array with a name.
struct Tensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Named trainable parameters.
class ParamStore {
 public:
  ParamId add(std::string name, std::size_t rows, std::size_t cols);
  ParamId id(std::string_view name) const;
  bool contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

  const Tensor& tensor(ParamId id) const { return tensors_.at(id.index); }
  Tensor& tensor(ParamId id) { return tensors_.at(id.index); }
  const Tensor& operator[](std::string_view name) const { return tensor(id(name)); }

  std::size_t size() const { return tensors_.size(); }
  std::size_t scalar_count() const;
  const std::vector<Tensor>& tensors() const { return tensors_; }

  // Uniform in [-scale, scale].
  void init_uniform(double scale, std::uint64_t seed);
  void fill(double value);

  nlohmann::json to_json() const;
  static ParamStore from_json(const nlohmann::json& j);

 private:
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Gradient buffers shaped like a ParamStore. Frozen parameters never receive
// gradient.
class Gradients {
 public:
  explicit Gradients(const ParamStore& params);

  Vec& operator[](ParamId id) { return grads_.at(id.index); }
  const Vec& operator[](ParamId id) const { return grads_.at(id.index); }

  // nullptr when frozen; marks the parameter as touched otherwise.
  Vec* accumulator(ParamId id);

  void zero();
  void freeze(ParamId id) { frozen_.at(id.index) = true; }
  void freeze_prefix(const ParamStore& params, std::string_view prefix);
  bool frozen(ParamId id) const { return frozen_.at(id.index); }
  void scale(double c);
  double max_abs() const;
  bool all_finite() const;

  // Parameters that no graph op accumulated into since the last zero().
  std::vector<std::string> untouched(const ParamStore& params) const;

  std::size_t size() const { return grads_.size(); }

 private:
  std::vector<Vec> grads_;
  std::vector<bool> frozen_;
  std::vector<bool> touched_;
};

}  // namespace infobot::nn
