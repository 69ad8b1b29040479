#pragma once

#include <cstdint>
#include <filesystem>

#include "ngt/model.hpp"

namespace ngt {

// Checkpoint container: magic "NGT1", format version u16, a manifest (entry
// count; per entry id string, role tag, shape), then little-endian float32
// payloads in manifest order, then a trailing FNV-1a 64-bit checksum of the
// payload bytes. Loading validates magic, version, shapes and checksum.
void save_checkpoint(Model<float>& model, const std::filesystem::path& path);
void load_checkpoint(Model<float>& model, const std::filesystem::path& path);

std::uint64_t fnv1a64(const void* data, std::size_t bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Order-sensitive digest of all parameters; used by tests to assert that a
// network did not change.
std::uint64_t param_digest(Model<float>& model);

}  // namespace ngt
