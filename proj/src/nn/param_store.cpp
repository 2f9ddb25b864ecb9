#include "infobot/nn/param_store.hpp"

#include <cmath>
#include <stdexcept>

#include "infobot/rng.hpp"

namespace infobot::nn {

ParamId ParamStore::add(std::string name, std::size_t rows, std::size_t cols) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  if (rows == 0 || cols == 0) throw std::invalid_argument("parameter with empty shape: " + name);
  const auto idx = static_cast<std::uint32_t>(tensors_.size());
  index_.emplace(name, idx);
  tensors_.push_back(Tensor{std::move(name), rows, cols, Vec(rows * cols, 0.0)});
  return ParamId{idx};
}

ParamId ParamStore::id(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + std::string(name));
  return ParamId{it->second};
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.data.size();
  return n;
}

void ParamStore::init_uniform(double scale, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& t : tensors_)
    for (double& x : t.data) x = (2.0 * rng.uniform() - 1.0) * scale;
}

void ParamStore::fill(double value) {
  for (auto& t : tensors_) std::fill(t.data.begin(), t.data.end(), value);
}

nlohmann::json ParamStore::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& t : tensors_) {
    arr.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"data", t.data}});
  }
  return arr;
}

ParamStore ParamStore::from_json(const nlohmann::json& j) {
  ParamStore out;
  for (const auto& e : j) {
    const auto id = out.add(e.at("name").get<std::string>(), e.at("rows").get<std::size_t>(),
                            e.at("cols").get<std::size_t>());
    auto data = e.at("data").get<Vec>();
    auto& t = out.tensor(id);
    if (data.size() != t.data.size()) throw std::invalid_argument("parameter data has wrong size: " + t.name);
    t.data = std::move(data);
  }
  return out;
}

Gradients::Gradients(const ParamStore& params)
    : frozen_(params.size(), false), touched_(params.size(), false) {
  grads_.reserve(params.size());
  for (const auto& t : params.tensors()) grads_.emplace_back(t.data.size(), 0.0);
}

Vec* Gradients::accumulator(ParamId id) {
  if (frozen_.at(id.index)) return nullptr;
  touched_[id.index] = true;
  return &grads_[id.index];
}

void Gradients::zero() {
  for (auto& g : grads_) std::fill(g.begin(), g.end(), 0.0);
  std::fill(touched_.begin(), touched_.end(), false);
}

void Gradients::freeze_prefix(const ParamStore& params, std::string_view prefix) {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params.tensors()[i].name.starts_with(prefix)) frozen_[i] = true;
}

void Gradients::scale(double c) {
  for (auto& g : grads_)
    for (double& x : g) x *= c;
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (const auto& g : grads_)
    for (double x : g) m = std::max(m, std::abs(x));
  return m;
}

bool Gradients::all_finite() const {
  for (const auto& g : grads_)
    for (double x : g)
      if (!std::isfinite(x)) return false;
  return true;
}

std::vector<std::string> Gradients::untouched(const ParamStore& params) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < touched_.size(); ++i)
    if (!touched_[i] && !frozen_[i]) out.push_back(params.tensors()[i].name);
  return out;
}

}  // namespace infobot::nn
