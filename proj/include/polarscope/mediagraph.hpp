#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "polarscope/tweet.hpp"

namespace polarscope {

struct MediaInfo {
  std::string media_user_id;
  std::string name;
  std::string handle;
  std::string domain;
  std::string country;
  std::string bloc;  // e.g. "local" / "regional"
};

class MediaRegistry {
 public:
  void add(MediaInfo info);
  const MediaInfo* lookup(const std::string& media_user_id) const;
  const std::vector<MediaInfo>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  // rows whose country matches, plus regional-bloc outlets (cross-country media)
  MediaRegistry for_country(const std::string& country) const;

  static MediaRegistry load_csv(const std::string& path);
  void write_csv(const std::string& path, const std::string& provenance = "") const;

 private:
  std::vector<MediaInfo> entries_;  // sorted by media_user_id
  std::map<std::string, size_t> index_;
};

// Users as A-side, media as B-side; an edge means the user retweeted at least
// one relevant tweet authored by the media account. Incidence is 0/1.
struct BipartiteGraph {
  std::vector<std::string> users;  // sorted
  std::vector<std::string> media;  // sorted; only media with >= 1 edge appear
  std::vector<std::vector<uint32_t>> user_media;  // per user, sorted media indices
  size_t edge_count = 0;
};

BipartiteGraph build_bipartite(const TweetStore& store, const MediaRegistry& registry,
                               const std::function<bool(const Tweet&)>& relevant);

struct MediaProjection {
  std::vector<std::string> vertices;  // media ids, sorted
  struct Edge {
    uint32_t a = 0, b = 0;  // a < b
    double weight = 0.0;    // number of common users
  };
  std::vector<Edge> edges;
  std::vector<std::vector<std::pair<uint32_t, double>>> adj;
  double total_weight = 0.0;  // each edge counted once

  void rebuild_adjacency();
};

MediaProjection project_media(const BipartiteGraph& g, size_t min_shared = 1);

struct CommunityAssignment {
  std::vector<uint32_t> community;  // per projection vertex, ids 0..k-1
  double modularity = 0.0;
  size_t community_count = 0;
};

// Two-phase modularity maximization; vertex visit order is reshuffled by seed
// each sweep, and sweeps stop once a full sweep gains less than 1e-9.
CommunityAssignment louvain(const MediaProjection& p, double resolution = 1.0,
                            uint64_t seed = 0);

// Direct evaluation of Q for a given assignment.
double modularity(const MediaProjection& p, const std::vector<uint32_t>& community,
                  double resolution = 1.0);

struct ResponseNetwork {
  struct Edge {
    uint32_t src = 0, dst = 0;  // directed: responder -> target
    size_t replies = 0;
    size_t quotes = 0;
  };
  std::vector<std::string> users;    // sorted
  std::vector<std::string> stances;  // combined stance label per user, "" if unlabeled
  std::vector<Edge> edges;           // sorted by (src, dst)
};

// stance_of maps user -> combined stance label. consistent_only keeps only
// users with a consistent_* stance; ego_mode additionally keeps unlabeled users
// that respond to (or are answered by) a consistent one.
ResponseNetwork build_response_network(const TweetStore& store,
                                       const std::map<std::string, std::string>& stance_of,
                                       bool consistent_only, bool ego_mode = false);

// format: "csv" (edge list) or "gexf"
void export_graph(const MediaProjection& p, const std::string& format,
                  const std::string& path, const CommunityAssignment* communities = nullptr,
                  const std::string& provenance = "");
void export_graph(const ResponseNetwork& n, const std::string& format,
                  const std::string& path, const std::string& provenance = "");

MediaProjection import_projection_csv(const std::string& path);

}  // namespace polarscope
