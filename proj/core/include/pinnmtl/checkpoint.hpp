#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>

#include "pinnmtl/nn.hpp"

namespace pinnmtl::nn {

/// Writes the parameter blocks to a JSON file. Doubles use shortest
/// round-trip formatting, so save followed by load restores every bit.
void save_checkpoint(const std::filesystem::path& path,
                     std::span<const ParamRef> params,
                     const std::map<std::string, std::string>& meta = {});

/// Loads blocks by name into the given references. Throws if a block is
/// missing or its shape differs. Returns the stored metadata.
std::map<std::string, std::string> load_checkpoint(
    const std::filesystem::path& path, std::span<const ParamRef> params);

}  // namespace pinnmtl::nn
