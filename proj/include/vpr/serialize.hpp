#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpr/encoding.hpp"
#include "vpr/mining.hpp"
#include "vpr/retrieval.hpp"

namespace vpr {

inline constexpr int kIndexFormatVersion = 1;

// Text forms. Parsing failures raise ParseError; doubles round-trip exactly.

std::string codebook_to_json(const Codebook& cb);
Codebook codebook_from_json(std::string_view text);

/// One line, no trailing newline.
std::string descriptor_to_json_line(const SceneDescriptor& d);
SceneDescriptor descriptor_from_json_line(std::string_view line);

std::string index_to_json(const InvertedFile& index);
InvertedFile index_from_json(std::string_view text);

std::string scene_to_json_line(const ParsedScene& scene);
ParsedScene scene_from_json_line(std::string_view line);

// Files. JSONL files hold one record per line in the given order.

void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

void save_descriptors(std::span<const SceneDescriptor> descriptors, const std::filesystem::path& path);
std::vector<SceneDescriptor> load_descriptors(const std::filesystem::path& path);

void save_index(const InvertedFile& index, const std::filesystem::path& path);
InvertedFile load_index(const std::filesystem::path& path);

void save_scenes(std::span<const ParsedScene> scenes, const std::filesystem::path& path);
std::vector<ParsedScene> load_scenes(const std::filesystem::path& path);

}  // namespace vpr
