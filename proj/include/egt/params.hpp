#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "egt/model_config.hpp"
#include "egt/tensor.hpp"
#include "json.hpp"

namespace egt {

enum class InitRule { glorot, zeros, ones, embedding };

struct ParamSpec {
  std::string name;
  Shape shape;
  InitRule init = InitRule::glorot;
};

// Every learnable tensor of a configuration, in a fixed order.
std::vector<ParamSpec> parameter_specs(const ModelConfig& cfg);

// Named tensors in insertion order.
class ParameterStore {
 public:
  void add(std::string name, Tensor value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  Tensor& at(std::size_t i) { return values_.at(i); }
  const Tensor& at(std::size_t i) const { return values_.at(i); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t scalar_count() const noexcept;

  bool operator==(const ParameterStore& other) const { return names_ == other.names_ && values_ == other.values_; }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::map<std::string, std::size_t> index_;
};

ParameterStore init_parameters(const ModelConfig& cfg, std::uint64_t seed);

// Throws unless `params` holds exactly the tensors of parameter_specs(cfg).
void check_parameters(const ModelConfig& cfg, const ParameterStore& params);

struct Checkpoint {
  ModelConfig config;
  nlohmann::json metadata = nlohmann::json::object();
  ParameterStore params;
};

// Binary container: magic, JSON header (config + metadata), then per tensor
// its name, shape and raw float64 values.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace egt
