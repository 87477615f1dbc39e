#include "polarscope/mediagraph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "polarscope/util.hpp"

namespace polarscope {

void MediaRegistry::add(MediaInfo info) {
  if (info.media_user_id.empty()) throw DataError("media row without user id");
  if (index_.count(info.media_user_id))
    throw DataError("duplicate media user id: " + info.media_user_id);
  entries_.push_back(std::move(info));
  std::sort(entries_.begin(), entries_.end(),
            [](const MediaInfo& a, const MediaInfo& b) {
              return a.media_user_id < b.media_user_id;
            });
  index_.clear();
  for (size_t i = 0; i < entries_.size(); ++i) index_[entries_[i].media_user_id] = i;
}

const MediaInfo* MediaRegistry::lookup(const std::string& media_user_id) const {
  auto it = index_.find(media_user_id);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

MediaRegistry MediaRegistry::for_country(const std::string& country) const {
  MediaRegistry out;
  for (const auto& e : entries_)
    if (e.country == country || e.bloc == "regional") out.add(e);
  return out;
}

MediaRegistry MediaRegistry::load_csv(const std::string& path) {
  MediaRegistry reg;
  bool first = true;
  for (const std::string& line : util::read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = util::csv_parse_row(line);
    if (first && !fields.empty() && fields[0] == "media_user_id") {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != 6) throw DataError("bad media row: " + line);
    reg.add({fields[0], fields[1], fields[2], fields[3], fields[4], fields[5]});
  }
  return reg;
}

void MediaRegistry::write_csv(const std::string& path, const std::string& provenance) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write media registry: " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "media_user_id,name,handle,domain,country,bloc\n";
  for (const auto& e : entries_)
    out << util::csv_row({e.media_user_id, e.name, e.handle, e.domain, e.country, e.bloc})
        << "\n";
}

BipartiteGraph build_bipartite(const TweetStore& store, const MediaRegistry& registry,
                               const std::function<bool(const Tweet&)>& relevant) {
  if (registry.size() == 0) throw DataError("empty media registry");

  std::set<std::pair<std::string, std::string>> edges;  // (user, media)
  for (const Tweet& t : store.tweets()) {
    if (!t.retweeted_user_id) continue;
    if (!registry.lookup(*t.retweeted_user_id)) continue;
    if (!relevant(t)) continue;
    edges.emplace(t.user_id, *t.retweeted_user_id);
  }

  BipartiteGraph g;
  std::set<std::string> users, media;
  for (const auto& [u, m] : edges) {
    users.insert(u);
    media.insert(m);
  }
  g.users.assign(users.begin(), users.end());
  g.media.assign(media.begin(), media.end());
  std::map<std::string, uint32_t> user_idx, media_idx;
  for (size_t i = 0; i < g.users.size(); ++i) user_idx[g.users[i]] = uint32_t(i);
  for (size_t i = 0; i < g.media.size(); ++i) media_idx[g.media[i]] = uint32_t(i);
  g.user_media.resize(g.users.size());
  for (const auto& [u, m] : edges) g.user_media[user_idx[u]].push_back(media_idx[m]);
  for (auto& v : g.user_media) std::sort(v.begin(), v.end());
  g.edge_count = edges.size();
  return g;
}

void MediaProjection::rebuild_adjacency() {
  adj.assign(vertices.size(), {});
  total_weight = 0.0;
  for (const Edge& e : edges) {
    adj[e.a].emplace_back(e.b, e.weight);
    adj[e.b].emplace_back(e.a, e.weight);
    total_weight += e.weight;
  }
  for (auto& v : adj) std::sort(v.begin(), v.end());
}

MediaProjection project_media(const BipartiteGraph& g, size_t min_shared) {
  std::map<std::pair<uint32_t, uint32_t>, double> shared;
  for (const auto& media_list : g.user_media)
    for (size_t i = 0; i < media_list.size(); ++i)
      for (size_t j = i + 1; j < media_list.size(); ++j)
        shared[{media_list[i], media_list[j]}] += 1.0;

  MediaProjection p;
  p.vertices = g.media;
  for (const auto& [pair, w] : shared)
    if (w >= double(min_shared)) p.edges.push_back({pair.first, pair.second, w});
  p.rebuild_adjacency();
  return p;
}

double modularity(const MediaProjection& p, const std::vector<uint32_t>& community,
                  double resolution) {
  if (community.size() != p.vertices.size())
    throw DataError("community assignment size mismatch");
  double m2 = 2.0 * p.total_weight;
  if (m2 <= 0.0) throw DataError("modularity undefined on a graph with zero weight");

  size_t k = 0;
  for (uint32_t c : community) k = std::max<size_t>(k, c + 1);
  std::vector<double> in(k, 0.0), tot(k, 0.0);
  std::vector<double> degree(p.vertices.size(), 0.0);
  for (const auto& e : p.edges) {
    degree[e.a] += e.weight;
    degree[e.b] += e.weight;
    if (community[e.a] == community[e.b]) in[community[e.a]] += 2.0 * e.weight;
  }
  for (size_t i = 0; i < p.vertices.size(); ++i) tot[community[i]] += degree[i];

  double q = 0.0;
  for (size_t c = 0; c < k; ++c)
    q += in[c] / m2 - resolution * (tot[c] / m2) * (tot[c] / m2);
  return q;
}

namespace {

// internal weighted graph for the coarsening passes; self_loop holds the
// ordered-pair weight of collapsed intra-community edges
struct WGraph {
  std::vector<std::vector<std::pair<uint32_t, double>>> adj;  // no self entries
  std::vector<double> self_loop;
  std::vector<double> degree;  // self_loop + adjacent weights
  double m2 = 0.0;             // sum of degrees

  size_t size() const { return adj.size(); }

  void finish() {
    degree.assign(size(), 0.0);
    m2 = 0.0;
    for (size_t i = 0; i < size(); ++i) {
      double d = self_loop[i];
      for (const auto& [j, w] : adj[i]) d += w;
      degree[i] = d;
      m2 += d;
    }
  }
};

constexpr double kMinGain = 1e-9;

// one sweep-until-stable pass; returns true if anything moved
bool one_level(WGraph& g, std::vector<uint32_t>& node2com, double resolution,
               std::mt19937_64& rng) {
  const size_t n = g.size();
  node2com.resize(n);
  std::iota(node2com.begin(), node2com.end(), 0);
  std::vector<double> tot(g.degree);  // community degree sums

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> com_weight(n, 0.0);  // scratch: community -> d_ic
  std::vector<uint32_t> touched;

  bool any_move = false;
  bool improved = true;
  while (improved) {
    improved = false;
    util::shuffle_vec(order, rng);
    for (size_t idx = 0; idx < n; ++idx) {
      uint32_t i = uint32_t(order[idx]);
      uint32_t c_old = node2com[i];

      touched.clear();
      for (const auto& [j, w] : g.adj[i]) {
        uint32_t c = node2com[j];
        if (com_weight[c] == 0.0) touched.push_back(c);
        com_weight[c] += w;
      }

      double d_old = com_weight[c_old];
      tot[c_old] -= g.degree[i];

      // staying put is the baseline
      double best_gain = d_old - resolution * tot[c_old] * g.degree[i] / g.m2;
      uint32_t best = c_old;
      for (uint32_t c : touched) {
        if (c == c_old) continue;
        double gain = com_weight[c] - resolution * tot[c] * g.degree[i] / g.m2;
        if (gain > best_gain + kMinGain) {
          best_gain = gain;
          best = c;
        }
      }

      tot[best] += g.degree[i];
      node2com[i] = best;
      if (best != c_old) {
        improved = true;
        any_move = true;
      }

      for (uint32_t c : touched) com_weight[c] = 0.0;
      com_weight[c_old] = 0.0;
    }
  }
  return any_move;
}

WGraph aggregate(const WGraph& g, const std::vector<uint32_t>& node2com,
                 std::vector<uint32_t>& renumber) {
  const size_t n = g.size();
  renumber.assign(n, 0);
  std::vector<int64_t> new_id(n, -1);
  uint32_t next = 0;
  for (size_t i = 0; i < n; ++i) {  // number communities by first appearance
    uint32_t c = node2com[i];
    if (new_id[c] < 0) new_id[c] = next++;
    renumber[i] = uint32_t(new_id[c]);
  }

  WGraph out;
  out.adj.resize(next);
  out.self_loop.assign(next, 0.0);
  std::map<std::pair<uint32_t, uint32_t>, double> between;
  for (size_t i = 0; i < n; ++i) {
    uint32_t ci = renumber[i];
    out.self_loop[ci] += g.self_loop[i];
    for (const auto& [j, w] : g.adj[i]) {
      if (j < i) continue;  // each undirected edge once
      uint32_t cj = renumber[j];
      if (ci == cj) out.self_loop[ci] += 2.0 * w;  // ordered-pair convention
      else between[{std::min(ci, cj), std::max(ci, cj)}] += w;
    }
  }
  for (const auto& [pair, w] : between) {
    out.adj[pair.first].emplace_back(pair.second, w);
    out.adj[pair.second].emplace_back(pair.first, w);
  }
  for (auto& v : out.adj) std::sort(v.begin(), v.end());
  out.finish();
  return out;
}

}  // namespace

CommunityAssignment louvain(const MediaProjection& p, double resolution, uint64_t seed) {
  if (p.vertices.empty()) throw DataError("cannot cluster an empty graph");

  CommunityAssignment result;
  if (p.vertices.size() == 1) {  // lone vertex: trivially one community
    result.community = {0};
    result.community_count = 1;
    result.modularity = 0.0;
    return result;
  }
  if (p.total_weight <= 0.0)
    throw DataError("cannot cluster a graph with zero total weight");

  WGraph g;
  g.adj.resize(p.vertices.size());
  g.self_loop.assign(p.vertices.size(), 0.0);
  for (const auto& e : p.edges) {
    g.adj[e.a].emplace_back(e.b, e.weight);
    g.adj[e.b].emplace_back(e.a, e.weight);
  }
  for (auto& v : g.adj) std::sort(v.begin(), v.end());
  g.finish();

  std::mt19937_64 rng(util::mix_seed(seed, 21));
  std::vector<uint32_t> assignment(p.vertices.size());
  std::iota(assignment.begin(), assignment.end(), 0);

  while (true) {
    std::vector<uint32_t> node2com;
    bool moved = one_level(g, node2com, resolution, rng);
    std::vector<uint32_t> renumber;
    WGraph coarse = aggregate(g, node2com, renumber);
    for (auto& a : assignment) a = renumber[a];
    if (!moved || coarse.size() == g.size()) break;
    g = std::move(coarse);
  }

  uint32_t max_c = 0;
  for (uint32_t c : assignment) max_c = std::max(max_c, c);
  result.community = std::move(assignment);
  result.community_count = max_c + 1;
  result.modularity = modularity(p, result.community, resolution);
  return result;
}

ResponseNetwork build_response_network(const TweetStore& store,
                                       const std::map<std::string, std::string>& stance_of,
                                       bool consistent_only, bool ego_mode) {
  auto consistent = [&](const std::string& user) {
    auto it = stance_of.find(user);
    if (it == stance_of.end()) return false;
    return it->second == "consistent_pro_government" ||
           it->second == "consistent_anti_government";
  };
  auto keep_pair = [&](const std::string& a, const std::string& b) {
    if (!consistent_only) return true;
    if (ego_mode) return consistent(a) || consistent(b);
    return consistent(a) && consistent(b);
  };

  std::map<std::pair<std::string, std::string>, std::pair<size_t, size_t>> counts;
  for (const Tweet& t : store.tweets()) {
    // replying to or quoting yourself is thread continuation, not interaction
    if (t.in_reply_to_user_id && *t.in_reply_to_user_id != t.user_id &&
        keep_pair(t.user_id, *t.in_reply_to_user_id))
      counts[{t.user_id, *t.in_reply_to_user_id}].first += 1;
    if (t.quoted_user_id && *t.quoted_user_id != t.user_id &&
        keep_pair(t.user_id, *t.quoted_user_id))
      counts[{t.user_id, *t.quoted_user_id}].second += 1;
  }

  ResponseNetwork net;
  std::set<std::string> users;
  for (const auto& [pair, c] : counts) {
    users.insert(pair.first);
    users.insert(pair.second);
  }
  net.users.assign(users.begin(), users.end());
  std::map<std::string, uint32_t> idx;
  for (size_t i = 0; i < net.users.size(); ++i) idx[net.users[i]] = uint32_t(i);
  net.stances.resize(net.users.size());
  for (size_t i = 0; i < net.users.size(); ++i) {
    auto it = stance_of.find(net.users[i]);
    net.stances[i] = it == stance_of.end() ? "" : it->second;
  }
  for (const auto& [pair, c] : counts)
    net.edges.push_back({idx[pair.first], idx[pair.second], c.first, c.second});
  return net;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void export_graph(const MediaProjection& p, const std::string& format,
                  const std::string& path, const CommunityAssignment* communities,
                  const std::string& provenance) {
  if (format == "csv") {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write graph file: " + path);
    if (!provenance.empty()) out << "# " << provenance << "\n";
    out << "source,target,weight\n";
    for (const auto& e : p.edges)
      out << util::csv_row({p.vertices[e.a], p.vertices[e.b],
                            util::format_double(e.weight, 6)})
          << "\n";
    return;
  }
  if (format == "gexf") {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write graph file: " + path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<gexf xmlns=\"http://gexf.net/1.2\" version=\"1.2\">\n";
    out << "  <graph defaultedgetype=\"undirected\">\n";
    out << "    <attributes class=\"node\">\n";
    out << "      <attribute id=\"0\" title=\"community\" type=\"integer\"/>\n";
    out << "    </attributes>\n";
    out << "    <nodes>\n";
    for (size_t i = 0; i < p.vertices.size(); ++i) {
      out << "      <node id=\"" << xml_escape(p.vertices[i]) << "\" label=\""
          << xml_escape(p.vertices[i]) << "\">";
      if (communities)
        out << "<attvalues><attvalue for=\"0\" value=\"" << communities->community[i]
            << "\"/></attvalues>";
      out << "</node>\n";
    }
    out << "    </nodes>\n    <edges>\n";
    for (size_t i = 0; i < p.edges.size(); ++i)
      out << "      <edge id=\"" << i << "\" source=\"" << xml_escape(p.vertices[p.edges[i].a])
          << "\" target=\"" << xml_escape(p.vertices[p.edges[i].b]) << "\" weight=\""
          << p.edges[i].weight << "\"/>\n";
    out << "    </edges>\n  </graph>\n</gexf>\n";
    return;
  }
  throw ConfigError("unknown graph export format: " + format);
}

void export_graph(const ResponseNetwork& n, const std::string& format,
                  const std::string& path, const std::string& provenance) {
  if (format == "csv") {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write graph file: " + path);
    if (!provenance.empty()) out << "# " << provenance << "\n";
    out << "source,target,replies,quotes\n";
    for (const auto& e : n.edges)
      out << util::csv_row({n.users[e.src], n.users[e.dst], std::to_string(e.replies),
                            std::to_string(e.quotes)})
          << "\n";
    return;
  }
  if (format == "gexf") {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write graph file: " + path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<gexf xmlns=\"http://gexf.net/1.2\" version=\"1.2\">\n";
    out << "  <graph defaultedgetype=\"directed\">\n";
    out << "    <attributes class=\"node\">\n";
    out << "      <attribute id=\"0\" title=\"stance\" type=\"string\"/>\n";
    out << "    </attributes>\n";
    out << "    <nodes>\n";
    for (size_t i = 0; i < n.users.size(); ++i) {
      out << "      <node id=\"" << xml_escape(n.users[i]) << "\" label=\""
          << xml_escape(n.users[i]) << "\"><attvalues><attvalue for=\"0\" value=\""
          << xml_escape(n.stances[i]) << "\"/></attvalues></node>\n";
    }
    out << "    </nodes>\n    <edges>\n";
    for (size_t i = 0; i < n.edges.size(); ++i) {
      const auto& e = n.edges[i];
      out << "      <edge id=\"" << i << "\" source=\"" << xml_escape(n.users[e.src])
          << "\" target=\"" << xml_escape(n.users[e.dst]) << "\" weight=\""
          << e.replies + e.quotes << "\"/>\n";
    }
    out << "    </edges>\n  </graph>\n</gexf>\n";
    return;
  }
  throw ConfigError("unknown graph export format: " + format);
}

MediaProjection import_projection_csv(const std::string& path) {
  MediaProjection p;
  std::map<std::string, uint32_t> idx;
  struct Row {
    std::string a, b;
    double w;
  };
  std::vector<Row> rows;
  bool header_seen = false;
  for (const std::string& line : util::read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto fields = util::csv_parse_row(line);
    if (fields.size() != 3) throw DataError("bad edge row: " + line);
    rows.push_back({fields[0], fields[1], std::stod(fields[2])});
  }
  std::set<std::string> names;
  for (const auto& r : rows) {
    names.insert(r.a);
    names.insert(r.b);
  }
  p.vertices.assign(names.begin(), names.end());
  for (size_t i = 0; i < p.vertices.size(); ++i) idx[p.vertices[i]] = uint32_t(i);
  for (const auto& r : rows) {
    if (r.a == r.b) throw DataError("self-loop edge in projection file: " + r.a);
    uint32_t a = idx[r.a], b = idx[r.b];
    p.edges.push_back({std::min(a, b), std::max(a, b), r.w});
  }
  std::sort(p.edges.begin(), p.edges.end(), [](const auto& x, const auto& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  p.rebuild_adjacency();
  return p;
}

}  // namespace polarscope
