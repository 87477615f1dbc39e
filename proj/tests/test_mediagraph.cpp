#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "polarscope/mediagraph.hpp"
#include "polarscope/util.hpp"
#include "polarscope/synth.hpp"
#include "polarscope/tweet.hpp"

using namespace polarscope;

namespace {

MediaInfo outlet(const std::string& id, const std::string& country,
                 const std::string& bloc) {
  MediaInfo m;
  m.media_user_id = id;
  m.name = "Outlet " + id;
  m.handle = "@" + id;
  m.domain = id + ".example";
  m.country = country;
  m.bloc = bloc;
  return m;
}

// clique graph: two tight groups joined by one weak edge
MediaProjection two_cliques() {
  MediaProjection p;
  p.vertices = {"m0", "m1", "m2", "m3", "m4", "m5"};
  auto add = [&](uint32_t a, uint32_t b, double w) {
    p.edges.push_back({a, b, w});
    p.total_weight += w;
  };
  add(0, 1, 5);
  add(0, 2, 5);
  add(1, 2, 5);
  add(2, 3, 1);  // bridge; edges stay (a,b)-sorted like projected graphs
  add(3, 4, 5);
  add(3, 5, 5);
  add(4, 5, 5);
  p.rebuild_adjacency();
  return p;
}

}  // namespace

TEST_CASE("media registry adds, indexes, and filters by country") {
  MediaRegistry reg;
  reg.add(outlet("m_cnn", "", "regional"));
  reg.add(outlet("m_bo1", "bolivia", "local"));
  reg.add(outlet("m_cl1", "chile", "local"));

  CHECK(reg.size() == 3);
  REQUIRE(reg.lookup("m_bo1") != nullptr);
  CHECK(reg.lookup("m_bo1")->country == "bolivia");
  CHECK(reg.lookup("nope") == nullptr);

  // entries kept sorted by id
  CHECK(reg.entries()[0].media_user_id == "m_bo1");
  CHECK(reg.entries()[2].media_user_id == "m_cnn");

  MediaRegistry bo = reg.for_country("bolivia");
  CHECK(bo.size() == 2);  // the local outlet plus the regional one
  CHECK(bo.lookup("m_bo1") != nullptr);
  CHECK(bo.lookup("m_cnn") != nullptr);
  CHECK(bo.lookup("m_cl1") == nullptr);

  CHECK_THROWS_AS(reg.add(outlet("m_bo1", "bolivia", "local")), DataError);
}

TEST_CASE("media registry csv round-trips") {
  fixtures::TempDir dir("media_rt");
  MediaRegistry reg;
  reg.add(outlet("m_a", "ecuador", "local"));
  reg.add(outlet("m_b", "", "regional"));
  reg.write_csv(dir.file("media.csv"), "fixture");

  MediaRegistry back = MediaRegistry::load_csv(dir.file("media.csv"));
  CHECK(back.size() == 2);
  CHECK(back.lookup("m_a")->country == "ecuador");
  CHECK(back.lookup("m_b")->bloc == "regional");

  CHECK_THROWS_AS(MediaRegistry::load_csv(dir.file("missing.csv")), DataError);
}

TEST_CASE("bipartite graph links users to media they relevantly retweeted") {
  MediaRegistry reg;
  reg.add(outlet("m1", "x", "local"));
  reg.add(outlet("m2", "x", "local"));
  reg.add(outlet("m3", "x", "local"));

  std::vector<Tweet> tweets = {
      fixtures::retweet("1", "ana", 10, "m1", "s1", "politica"),
      fixtures::retweet("2", "ana", 20, "m1", "s2", "politica"),   // repeat: same edge
      fixtures::retweet("3", "ana", 30, "m2", "s3", "futbol"),     // irrelevant
      fixtures::retweet("4", "beto", 40, "m2", "s4", "politica"),
      fixtures::retweet("5", "beto", 50, "qotra", "s5", "politica"),  // not media
      fixtures::tweet("6", "carla", 60, "politica sin retweet"),
      fixtures::retweet("7", "carla", 70, "m1", "s6", "politica"),
  };
  TweetStore store(std::move(tweets));
  auto relevant = [](const Tweet& t) { return t.text.find("politica") != std::string::npos; };

  BipartiteGraph g = build_bipartite(store, reg, relevant);
  CHECK(g.users == std::vector<std::string>{"ana", "beto", "carla"});
  CHECK(g.media == std::vector<std::string>{"m1", "m2"});  // m3 never retweeted
  CHECK(g.edge_count == 3);
  CHECK(g.user_media[0] == std::vector<uint32_t>{0});      // ana -> m1 (deduped)
  CHECK(g.user_media[1] == std::vector<uint32_t>{1});      // beto -> m2
  CHECK(g.user_media[2] == std::vector<uint32_t>{0});      // carla -> m1
}

TEST_CASE("projection weights count shared audiences") {
  BipartiteGraph g;
  g.users = {"u1", "u2", "u3", "u4"};
  g.media = {"a", "b", "c"};
  g.user_media = {
      {0, 1},     // u1 reads a and b
      {0, 1},     // u2 reads a and b
      {0, 1, 2},  // u3 reads all three
      {2},        // u4 reads only c
  };
  g.edge_count = 8;

  MediaProjection p = project_media(g);
  REQUIRE(p.vertices == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(p.edges.size() == 3);
  // a-b share u1,u2,u3; a-c and b-c share u3 only
  std::map<std::pair<uint32_t, uint32_t>, double> w;
  for (const auto& e : p.edges) w[{e.a, e.b}] = e.weight;
  CHECK(w[{0, 1}] == 3.0);
  CHECK(w[{0, 2}] == 1.0);
  CHECK(w[{1, 2}] == 1.0);
  CHECK(p.total_weight == 5.0);

  MediaProjection strict = project_media(g, 2);
  REQUIRE(strict.edges.size() == 1);  // only a-b clears min_shared
  CHECK(strict.edges[0].weight == 3.0);
  CHECK(strict.vertices.size() == 3);  // vertex set unchanged
}

TEST_CASE("modularity matches a brute-force evaluation") {
  MediaProjection p = two_cliques();
  std::vector<uint32_t> split = {0, 0, 0, 1, 1, 1};
  std::vector<uint32_t> lumped = {0, 0, 0, 0, 0, 0};
  std::vector<uint32_t> scattered = {0, 1, 0, 1, 0, 1};

  for (const auto& c : {split, lumped, scattered}) {
    double direct = modularity(p, c);
    double brute = oracle::brute_modularity(p, c);
    CHECK(direct == doctest::Approx(brute).epsilon(1e-12));
  }
  CHECK(modularity(p, split) > modularity(p, lumped));
  CHECK(modularity(p, split) > modularity(p, scattered));

  // resolution sweeps shift the balance but both evaluations must agree
  for (double gamma : {0.5, 2.0}) {
    CHECK(modularity(p, split, gamma) ==
          doctest::Approx(oracle::brute_modularity(p, split, gamma)).epsilon(1e-12));
  }

  std::vector<uint32_t> short_assignment = {0, 0, 1};
  CHECK_THROWS_AS(modularity(p, short_assignment), DataError);
}

TEST_CASE("louvain separates two cliques at any seed") {
  MediaProjection p = two_cliques();
  for (uint64_t seed : {0, 1, 2, 3, 4}) {
    CommunityAssignment c = louvain(p, 1.0, seed);
    CHECK(c.community_count == 2);
    CHECK(c.community[0] == c.community[1]);
    CHECK(c.community[1] == c.community[2]);
    CHECK(c.community[3] == c.community[4]);
    CHECK(c.community[4] == c.community[5]);
    CHECK(c.community[0] != c.community[3]);
    // reported score is the direct evaluation of the returned assignment
    CHECK(c.modularity == doctest::Approx(modularity(p, c.community)).epsilon(1e-12));
  }
}

TEST_CASE("louvain recovers planted communities from retweet events") {
  PlantedMediaSpec spec;
  spec.communities = 3;
  spec.media_per_community = 8;
  spec.users_per_community = 60;
  spec.intra = 0.5;
  spec.inter = 0.03;
  PlantedMedia planted = gen_planted_media(spec, 99);

  // assemble the bipartite graph straight from the events
  std::set<std::string> users_set, media_set;
  std::set<std::pair<std::string, std::string>> links;
  for (const auto& e : planted.events) {
    users_set.insert(e.user_id);
    media_set.insert(e.media_id);
    links.insert({e.user_id, e.media_id});
  }
  BipartiteGraph g;
  g.users.assign(users_set.begin(), users_set.end());
  g.media.assign(media_set.begin(), media_set.end());
  std::map<std::string, uint32_t> media_idx;
  for (uint32_t i = 0; i < g.media.size(); ++i) media_idx[g.media[i]] = i;
  g.user_media.resize(g.users.size());
  for (size_t u = 0; u < g.users.size(); ++u) {
    for (const auto& [user, media] : links)
      if (user == g.users[u]) g.user_media[u].push_back(media_idx[media]);
    std::sort(g.user_media[u].begin(), g.user_media[u].end());
    g.edge_count += g.user_media[u].size();
  }

  MediaProjection p = project_media(g, 2);
  CommunityAssignment c = louvain(p, 1.0, 7);

  std::vector<uint32_t> truth;
  for (const auto& m : p.vertices) truth.push_back(planted.media_community.at(m));
  CHECK(oracle::nmi(truth, c.community) == doctest::Approx(1.0));
  CHECK(c.modularity ==
        doctest::Approx(oracle::brute_modularity(p, c.community)).epsilon(1e-9));
}

TEST_CASE("louvain edge cases: empty, singleton, and weightless graphs") {
  MediaProjection empty;
  CHECK_THROWS_AS(louvain(empty), DataError);

  MediaProjection one;
  one.vertices = {"solo"};
  one.rebuild_adjacency();
  CommunityAssignment c = louvain(one);
  CHECK(c.community == std::vector<uint32_t>{0});
  CHECK(c.community_count == 1);
  CHECK(c.modularity == 0.0);

  MediaProjection disconnected;
  disconnected.vertices = {"a", "b"};
  disconnected.rebuild_adjacency();
  CHECK_THROWS_AS(louvain(disconnected), DataError);
}

TEST_CASE("response network counts replies and quotes per directed pair") {
  std::vector<Tweet> tweets;
  auto reply = [](const std::string& id, const std::string& from, const std::string& to) {
    Tweet t = fixtures::tweet(id, from, 0, "respuesta");
    t.in_reply_to_user_id = to;
    return t;
  };
  auto quote = [](const std::string& id, const std::string& from, const std::string& to) {
    Tweet t = fixtures::tweet(id, from, 0, "cita");
    t.quoted_user_id = to;
    return t;
  };
  tweets.push_back(reply("1", "ana", "beto"));
  tweets.push_back(reply("2", "ana", "beto"));
  tweets.push_back(quote("3", "ana", "beto"));
  tweets.push_back(quote("4", "beto", "ana"));
  tweets.push_back(reply("5", "carla", "ana"));   // carla is unlabeled
  tweets.push_back(reply("6", "dani", "edu"));    // both unlabeled
  tweets.push_back(reply("7", "ana", "ana"));     // self-reply ignored
  TweetStore store(std::move(tweets));

  std::map<std::string, std::string> stance = {
      {"ana", "consistent_anti_government"},
      {"beto", "consistent_pro_government"},
      {"edu", "other"},
  };

  ResponseNetwork full = build_response_network(store, stance, false);
  CHECK(full.users == std::vector<std::string>{"ana", "beto", "carla", "dani", "edu"});
  REQUIRE(full.edges.size() == 4);

  ResponseNetwork strict = build_response_network(store, stance, true);
  CHECK(strict.users == std::vector<std::string>{"ana", "beto"});
  REQUIRE(strict.edges.size() == 2);
  // ana->beto has two replies and one quote
  CHECK(strict.edges[0].replies == 2);
  CHECK(strict.edges[0].quotes == 1);
  CHECK(strict.edges[1].replies == 0);
  CHECK(strict.edges[1].quotes == 1);
  CHECK(strict.stances[0] == "consistent_anti_government");

  ResponseNetwork ego = build_response_network(store, stance, true, true);
  // carla kept: she replies to consistent ana; dani/edu dropped (edu is "other")
  CHECK(ego.users == std::vector<std::string>{"ana", "beto", "carla"});
  REQUIRE(ego.edges.size() == 3);
}

TEST_CASE("projection graphs export to csv and import back") {
  fixtures::TempDir dir("proj_rt");
  MediaProjection p = two_cliques();
  export_graph(p, "csv", dir.file("p.csv"), nullptr, "fixture run");

  MediaProjection back = import_projection_csv(dir.file("p.csv"));
  CHECK(back.vertices == p.vertices);
  REQUIRE(back.edges.size() == p.edges.size());
  CHECK(back.total_weight == doctest::Approx(p.total_weight));
  for (size_t i = 0; i < p.edges.size(); ++i) {
    CHECK(back.edges[i].a == p.edges[i].a);
    CHECK(back.edges[i].b == p.edges[i].b);
    CHECK(back.edges[i].weight == doctest::Approx(p.edges[i].weight));
  }

  // self-loop rows are data corruption, not tolerated quietly
  {
    std::ofstream out(dir.file("loop.csv"));
    out << "source,target,weight\n";
    out << "a,a,2\n";
  }
  CHECK_THROWS_AS(import_projection_csv(dir.file("loop.csv")), DataError);

  CHECK_THROWS_AS(export_graph(p, "dot", dir.file("p.dot")), ConfigError);
}

TEST_CASE("gexf export carries community attributes and well-formed xml") {
  fixtures::TempDir dir("gexf");
  MediaProjection p = two_cliques();
  p.vertices[0] = "medio <raro> & \"tal\"";  // must be escaped
  CommunityAssignment c = louvain(p, 1.0, 0);
  export_graph(p, "gexf", dir.file("p.gexf"), &c, "fixture");

  std::ifstream in(dir.file("p.gexf"));
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(content.find("<gexf") != std::string::npos);
  CHECK(content.find("medio &lt;raro&gt; &amp; &quot;tal&quot;") != std::string::npos);
  CHECK(content.find("<raro>") == std::string::npos);
  CHECK(content.find("community") != std::string::npos);
}
