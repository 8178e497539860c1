#pragma once

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>

#include "acpkan/model.hpp"

namespace acpkan {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kCheckpointHeader = "ACPKAN v1";

/// Text checkpoint: the header line, then one line per tensor in registration
/// order: `name shape v0 v1 ...` where shape is written as `16x2` and values
/// carry 17 significant digits.
std::string checkpoint_to_string(const Network& model);
void checkpoint_save(const Network& model, const std::filesystem::path& path);

/// Rebuilds the architecture from the tensor names and shapes, then loads the
/// values. Throws CheckpointError on a malformed header, unknown layout or
/// shape mismatch.
std::unique_ptr<Network> checkpoint_from_string(const std::string& text);
std::unique_ptr<Network> checkpoint_load(const std::filesystem::path& path);

}  // namespace acpkan
