#include "vpr/retrieval.hpp"

#include <algorithm>

namespace vpr {

std::string_view to_string(OverlapMode mode) {
  return mode == OverlapMode::Iou ? "iou" : "intersection";
}

OverlapMode parse_overlap_mode(std::string_view text) {
  if (text == "iou") return OverlapMode::Iou;
  if (text == "intersection" || text == "intersection_area") return OverlapMode::IntersectionArea;
  throw Error(ErrorCode::InvalidParams, "unknown overlap mode '" + std::string(text) + "'");
}

double bb_overlap(const BoundingBox& a, const BoundingBox& b, OverlapMode mode) {
  const double w = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double h = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = w * h;
  if (mode == OverlapMode::IntersectionArea) return inter;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

InvertedFile::InvertedFile(std::vector<std::string> library_ids, std::vector<std::vector<Posting>> postings,
                           std::vector<std::string> database_ids)
    : library_ids_(std::move(library_ids)), postings_(std::move(postings)), database_ids_(std::move(database_ids)) {
  if (postings_.size() != library_ids_.size()) {
    throw Error(ErrorCode::InvalidParams, "one postings list per library id required");
  }
  for (std::size_t i = 0; i < library_ids_.size(); ++i) {
    if (!index_of_.emplace(library_ids_[i], i).second) {
      throw Error(ErrorCode::InvalidParams, "duplicate library id " + library_ids_[i]);
    }
  }
  std::sort(database_ids_.begin(), database_ids_.end());
  for (auto& list : postings_) {
    std::stable_sort(list.begin(), list.end(), [](const Posting& a, const Posting& b) { return a.db_id < b.db_id; });
  }
}

std::size_t InvertedFile::library_index(const std::string& library_id) const {
  auto it = index_of_.find(library_id);
  if (it == index_of_.end()) throw Error(ErrorCode::UnknownLibraryId, library_id);
  return it->second;
}

const std::vector<Posting>& InvertedFile::postings(const std::string& library_id) const {
  return postings_[library_index(library_id)];
}

std::size_t InvertedFile::total_postings() const noexcept {
  std::size_t total = 0;
  for (const auto& list : postings_) total += list.size();
  return total;
}

InvertedFile build_inverted_file(std::span<const SceneDescriptor> descriptors, std::span<const std::string> library_ids) {
  std::vector<std::string> ids(library_ids.begin(), library_ids.end());
  std::unordered_map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < ids.size(); ++i) index_of.emplace(ids[i], i);

  std::vector<std::vector<Posting>> postings(ids.size());
  std::vector<std::string> database_ids;
  database_ids.reserve(descriptors.size());
  for (const SceneDescriptor& d : descriptors) {
    database_ids.push_back(d.image_id);
    for (const DescriptorEntry& e : d.entries) {
      auto it = index_of.find(e.library_id);
      if (it == index_of.end()) {
        throw Error(ErrorCode::UnknownLibraryId, e.library_id + " referenced by " + d.image_id);
      }
      postings[it->second].push_back({d.image_id, e.bbox});
    }
  }
  std::sort(database_ids.begin(), database_ids.end());
  if (std::adjacent_find(database_ids.begin(), database_ids.end()) != database_ids.end()) {
    throw Error(ErrorCode::InvalidParams, "duplicate database image id");
  }
  return InvertedFile(std::move(ids), std::move(postings), std::move(database_ids));
}

RetrievalResult query(const InvertedFile& index, const SceneDescriptor& q, bool use_bb, OverlapMode mode) {
  std::map<std::string, ScoredImage> candidates;
  for (const DescriptorEntry& e : q.entries) {
    for (const Posting& p : index.postings(e.library_id)) {
      ScoredImage& s = candidates[p.db_id];
      s.db_id = p.db_id;
      ++s.common_count;
      if (use_bb) s.bb_score += bb_overlap(e.bbox, p.bbox, mode);
    }
  }
  RetrievalResult result;
  result.ranked.reserve(index.database_ids().size());
  for (auto& [id, s] : candidates) result.ranked.push_back(std::move(s));
  std::sort(result.ranked.begin(), result.ranked.end(), [](const ScoredImage& a, const ScoredImage& b) {
    if (a.common_count != b.common_count) return a.common_count > b.common_count;
    if (a.bb_score != b.bb_score) return a.bb_score > b.bb_score;
    return a.db_id < b.db_id;
  });
  for (const std::string& id : index.database_ids()) {
    if (!candidates.contains(id)) result.ranked.push_back({id, 0, 0.0});
  }
  return result;
}

}  // namespace vpr
