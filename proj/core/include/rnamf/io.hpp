#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rnamf/dataset.hpp"
#include "rnamf/design.hpp"
#include "rnamf/emulator.hpp"

namespace rnamf::io {

using Json = nlohmann::json;

// Throws ParseError with `what` naming the source.
Json parse_json(const std::string& text, const std::string& what);
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file, then renames over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

// Dataset file: {dim, levels, bounds?, costs, designs, outputs}; validated on load.
Json dataset_to_json(const MultiFidelityDataset& data);
MultiFidelityDataset dataset_from_json(const Json& j);
MultiFidelityDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const MultiFidelityDataset& data);

Json design_to_json(const NestedDesign& design);

// FNV-1a over the canonical dataset serialization, as 16 hex digits.
std::string fingerprint(const MultiFidelityDataset& data);
std::uint64_t fnv1a(const std::string& bytes);

// Emulator file: kernel, per-level hyperparameters and jitter, dataset fingerprint.
Json emulator_to_json(const RnaEmulator& emu);
// Throws StaleModelError when the dataset fingerprint differs.
RnaEmulator emulator_from_json(const Json& j, const MultiFidelityDataset& data);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace rnamf::io
