#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "audformer/dataset.hpp"

namespace audformer {

// On-disk feature cache, the mandatory handoff between `extract` and the
// training commands.
//
//   <dir>/index.jsonl                       one line per subject
//   <dir>/<subject>/<modality>/<DOMAIN>.audt  one tensor per domain
//
// The index records labels, shapes and the feature-config hash so stale
// caches are rejected instead of silently mixed.

struct CachedDataset {
    std::vector<Instance> instances;
    std::vector<std::string> modality_names;
    std::uint64_t config_hash = 0;
};

void write_cache(const std::filesystem::path& dir,
                 const std::vector<Instance>& instances,
                 const std::vector<std::string>& modality_names,
                 std::uint64_t config_hash);

CachedDataset read_cache(const std::filesystem::path& dir);

}  // namespace audformer
