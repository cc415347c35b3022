#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vpr/mining.hpp"

namespace vpr {

enum class OverlapMode { Iou, IntersectionArea };

std::string_view to_string(OverlapMode mode);
OverlapMode parse_overlap_mode(std::string_view text);

double bb_overlap(const BoundingBox& a, const BoundingBox& b, OverlapMode mode);

struct Posting {
  std::string db_id;
  BoundingBox bbox;

  friend bool operator==(const Posting&, const Posting&) = default;
};

/// One postings list per library image id, each sorted by database id.
class InvertedFile {
 public:
  InvertedFile() = default;
  InvertedFile(std::vector<std::string> library_ids, std::vector<std::vector<Posting>> postings,
               std::vector<std::string> database_ids);

  const std::vector<std::string>& library_ids() const noexcept { return library_ids_; }
  const std::vector<std::string>& database_ids() const noexcept { return database_ids_; }
  const std::vector<Posting>& postings(std::size_t library_index) const { return postings_[library_index]; }
  const std::vector<Posting>& postings(const std::string& library_id) const;
  std::size_t library_index(const std::string& library_id) const;
  std::size_t total_postings() const noexcept;

  friend bool operator==(const InvertedFile& a, const InvertedFile& b) {
    return a.library_ids_ == b.library_ids_ && a.postings_ == b.postings_ && a.database_ids_ == b.database_ids_;
  }

 private:
  std::vector<std::string> library_ids_;
  std::vector<std::vector<Posting>> postings_;
  std::vector<std::string> database_ids_;  // ascending
  std::unordered_map<std::string, std::size_t> index_of_;
};

InvertedFile build_inverted_file(std::span<const SceneDescriptor> descriptors, std::span<const std::string> library_ids);

struct ScoredImage {
  std::string db_id;
  int common_count = 0;
  double bb_score = 0.0;

  friend bool operator==(const ScoredImage&, const ScoredImage&) = default;
};

/// Database images by (common_count desc, bb_score desc, id asc). Images
/// that share no library id with the query follow with scores (0, 0).
struct RetrievalResult {
  std::vector<ScoredImage> ranked;
};

RetrievalResult query(const InvertedFile& index, const SceneDescriptor& q, bool use_bb, OverlapMode mode);

}  // namespace vpr
