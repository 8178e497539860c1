#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "acpkan/model.hpp"

namespace acpkan::testing {

// A parameter-free "network" whose output is a closed-form expression of the
// input jets. Lets exact solutions run through the same term evaluators as a
// trained model.
class ExactNetwork final : public Network {
 public:
  using Fn = std::function<Jet(std::span<const Jet>)>;
  ExactNetwork(int d_in, Fn f) : d_in_(d_in), f_(std::move(f)) {}
  std::string kind() const override { return "exact"; }
  int input_dim() const override { return d_in_; }
  int output_dim() const override { return 1; }
  std::vector<Jet> forward(Tape& tape, std::span<const Var>, std::span<const double> x, int order) const override {
    const auto in = seed_inputs(tape, x, order);
    return {f_(in)};
  }
  void initialize(Rng&) override {}
  std::unique_ptr<Network> clone() const override { return std::make_unique<ExactNetwork>(*this); }

 private:
  int d_in_;
  Fn f_;
};

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "acpkan_unit" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace acpkan::testing
