#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "polarscope/flow.hpp"
#include "polarscope/mediagraph.hpp"
#include "polarscope/stance.hpp"
#include "polarscope/util.hpp"

using namespace polarscope;

namespace {

RetweetEvent ev(const std::string& user, const std::string& media, int64_t ts,
                CombinedStance s, const std::string& tweet_id = "") {
  RetweetEvent e;
  e.user_id = user;
  e.media_id = media;
  e.tweet_id = tweet_id.empty() ? user + "_" + std::to_string(ts) : tweet_id;
  e.timestamp = ts;
  e.user_stance = s;
  return e;
}

const CombinedStance kPro = CombinedStance::consistent_pro_government;
const CombinedStance kAnti = CombinedStance::consistent_anti_government;

}  // namespace

TEST_CASE("retweet events keep registered, relevant retweets with user stances") {
  MediaRegistry reg;
  MediaInfo m;
  m.media_user_id = "m1";
  m.country = "x";
  m.bloc = "local";
  reg.add(m);

  std::vector<Tweet> tweets = {
      fixtures::retweet("1", "ana", 10, "m1", "s1", "politica hoy"),
      fixtures::retweet("2", "ana", 20, "m1", "s2", "futbol"),       // irrelevant
      fixtures::retweet("3", "beto", 30, "alguien", "s3", "politica"),  // not media
      fixtures::retweet("4", "zoe", 40, "m1", "s4", "politica"),     // unlabeled user
      fixtures::tweet("5", "ana", 50, "politica original"),          // not a retweet
  };
  TweetStore store(std::move(tweets));
  std::map<std::string, CombinedStance> stance = {{"ana", kAnti}};
  auto relevant = [](const Tweet& t) { return t.text.find("politica") != std::string::npos; };

  auto events = collect_retweet_events(store, reg, stance, relevant);
  REQUIRE(events.size() == 2);
  CHECK(events[0].user_id == "ana");
  CHECK(events[0].media_id == "m1");
  CHECK(events[0].tweet_id == "1");
  CHECK(events[0].timestamp == 10);
  CHECK(events[0].user_stance == kAnti);
  CHECK(events[1].user_id == "zoe");
  CHECK(events[1].user_stance == CombinedStance::other);  // default for unlabeled
}

TEST_CASE("audience ratios count labeled retweets per outlet") {
  std::vector<RetweetEvent> events;
  for (int i = 0; i < 8; ++i) events.push_back(ev("p" + std::to_string(i), "m1", i, kPro));
  for (int i = 0; i < 2; ++i) events.push_back(ev("a" + std::to_string(i), "m1", 10 + i, kAnti));
  events.push_back(ev("x", "m1", 20, CombinedStance::other));  // ignored
  events.push_back(ev("solo", "m2", 0, kAnti));
  events.push_back(ev("mudo", "m3", 0, CombinedStance::inconsistent));  // only unlabeled

  auto prof = retweet_ratio("m1", events);
  REQUIRE(prof.has_value());
  CHECK(prof->n_pro == 8);
  CHECK(prof->n_anti == 2);
  CHECK(prof->p_pro == doctest::Approx(0.8));

  auto pure = retweet_ratio("m2", events);
  REQUIRE(pure.has_value());
  CHECK(pure->p_pro == doctest::Approx(0.0));

  CHECK(!retweet_ratio("m3", events).has_value());
  CHECK(!retweet_ratio("nunca", events).has_value());

  ProfileSet set = consumption_profiles(events);
  REQUIRE(set.profiles.size() == 2);
  CHECK(set.profiles[0].media_id == "m1");  // sorted by media id
  CHECK(set.profiles[1].media_id == "m2");
  CHECK(set.excluded_media == 1);
}

TEST_CASE("the baseline is the pro share of distinct labeled users") {
  std::vector<RetweetEvent> events;
  // three pro users (one of them retweets twice), one anti user
  events.push_back(ev("p0", "m1", 0, kPro));
  events.push_back(ev("p0", "m2", 1, kPro));
  events.push_back(ev("p1", "m1", 2, kPro));
  events.push_back(ev("p2", "m1", 3, kPro));
  events.push_back(ev("a0", "m2", 4, kAnti));
  events.push_back(ev("x0", "m1", 5, CombinedStance::other));

  CHECK(baseline_share(events) == doctest::Approx(0.75));

  std::vector<RetweetEvent> one_sided = {ev("p0", "m1", 0, kPro)};
  CHECK_THROWS_AS(baseline_share(one_sided), DataError);
  std::vector<RetweetEvent> unlabeled = {ev("x", "m1", 0, CombinedStance::other)};
  CHECK_THROWS_AS(baseline_share(unlabeled), DataError);
}

TEST_CASE("relative entropy matches an independent divergence computation") {
  // H(p, g) is minus the KL divergence between the Bernoulli distributions
  CHECK(relative_entropy(0.9, 0.5) ==
        doctest::Approx(-oracle::kl_bernoulli(0.9, 0.5)).epsilon(1e-12));
  CHECK(relative_entropy(0.9, 0.5) == doctest::Approx(-0.3681).epsilon(1e-3));
  CHECK(relative_entropy(1.0, 0.5) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  CHECK(relative_entropy(0.0, 0.5) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

  for (double p : {0.0, 0.1, 0.37, 0.5, 0.72, 1.0})
    for (double g : {0.1, 0.4, 0.5, 0.77}) {
      double h = relative_entropy(p, g);
      CHECK(h <= 0.0);
      CHECK(h == doctest::Approx(-oracle::kl_bernoulli(p, g)).epsilon(1e-12));
    }

  // equality means zero exactly, round-off clamped away
  for (double p : {0.25, 0.5, 0.9}) CHECK(relative_entropy(p, p) == 0.0);

  CHECK_THROWS_AS(relative_entropy(0.5, 0.0), DataError);
  CHECK_THROWS_AS(relative_entropy(0.5, 1.0), DataError);
  CHECK_THROWS_AS(relative_entropy(-0.1, 0.5), DataError);
  CHECK_THROWS_AS(relative_entropy(1.1, 0.5), DataError);
}

TEST_CASE("transitions count consecutive retweets within each user") {
  std::map<std::string, uint32_t> cluster = {{"m0", 0}, {"m1", 1}};
  std::vector<std::string> labels = {"local", "regional"};

  // ana's chain: m0 m0 m1 m1 m0  ->  00, 01, 11, 10 once each
  std::vector<RetweetEvent> events = {
      ev("ana", "m0", 1, kAnti), ev("ana", "m0", 2, kAnti), ev("ana", "m1", 3, kAnti),
      ev("ana", "m1", 4, kAnti), ev("ana", "m0", 5, kAnti),
  };
  TransitionModel m = build_transitions(events, cluster, labels);
  CHECK(m.n_states() == 2);
  CHECK(m.counts[0][0] == 1.0);
  CHECK(m.counts[0][1] == 1.0);
  CHECK(m.counts[1][1] == 1.0);
  CHECK(m.counts[1][0] == 1.0);
  CHECK(m.p[0][0] == doctest::Approx(0.5));
  CHECK(m.p[1][0] == doctest::Approx(0.5));
  CHECK(m.row_defined[0]);
  CHECK(m.row_defined[1]);

  // total pair count is total events minus one per active user
  double total = 0.0;
  for (const auto& row : m.counts)
    for (double c : row) total += c;
  CHECK(total == 4.0);
}

TEST_CASE("chains never cross users and order by timestamp then id") {
  std::map<std::string, uint32_t> cluster = {{"m0", 0}, {"m1", 1}};
  std::vector<std::string> labels = {"a", "b"};

  // interleaved in time: ana m0@1 beto m1@2 ana m0@3 beto m1@4
  std::vector<RetweetEvent> events = {
      ev("ana", "m0", 1, kPro), ev("beto", "m1", 2, kPro),
      ev("ana", "m0", 3, kPro), ev("beto", "m1", 4, kPro),
  };
  TransitionModel m = build_transitions(events, cluster, labels);
  // each user contributes one within-state pair; no cross-user 0->1 pair
  CHECK(m.counts[0][0] == 1.0);
  CHECK(m.counts[1][1] == 1.0);
  CHECK(m.counts[0][1] == 0.0);
  CHECK(m.counts[1][0] == 0.0);

  // same timestamp: the tweet id breaks the tie deterministically
  std::vector<RetweetEvent> tied = {
      ev("c", "m1", 7, kPro, "t2"), ev("c", "m0", 7, kPro, "t1")};
  TransitionModel tm = build_transitions(tied, cluster, labels);
  CHECK(tm.counts[0][1] == 1.0);  // t1 (m0) comes first
  CHECK(tm.counts[1][0] == 0.0);

  // a state that is never a source has an undefined row
  std::vector<RetweetEvent> one_way = {ev("d", "m0", 1, kPro), ev("d", "m0", 2, kPro)};
  TransitionModel om = build_transitions(one_way, cluster, labels);
  CHECK(om.row_defined[0]);
  CHECK(!om.row_defined[1]);

  // single events per user yield no pairs at all
  std::vector<RetweetEvent> singles = {ev("e", "m0", 1, kPro), ev("f", "m1", 1, kPro)};
  CHECK_THROWS_AS(build_transitions(singles, cluster, labels), DataError);

  // unclustered media never enter a chain; with nothing left, that's an error
  std::vector<RetweetEvent> stray = {ev("g", "m9", 1, kPro), ev("g", "m9", 2, kPro)};
  CHECK_THROWS_AS(build_transitions(stray, cluster, labels), DataError);

  // cluster states must fit the label set
  std::map<std::string, uint32_t> overflow = {{"m0", 0}, {"m1", 5}};
  CHECK_THROWS_AS(build_transitions(events, overflow, labels), DataError);
}

TEST_CASE("mobility indices average the matrix triangles") {
  TransitionModel m = TransitionModel::from_matrix(
      {{0.9415, 0.0585}, {0.0279, 0.9721}}, {"local", "regional"});
  MobilityIndices idx = mobility_indices(m);
  CHECK(idx.immobility == doctest::Approx(0.9568).epsilon(1e-4));
  CHECK(idx.moving_left == doctest::Approx(0.02925).epsilon(1e-4));
  CHECK(idx.moving_right == doctest::Approx(0.01395).epsilon(1e-4));
  CHECK(idx.immobility + idx.moving_left + idx.moving_right == doctest::Approx(1.0));

  TransitionModel id3 = TransitionModel::from_matrix(
      {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
  MobilityIndices frozen = mobility_indices(id3);
  CHECK(frozen.immobility == doctest::Approx(1.0));
  CHECK(frozen.moving_left == doctest::Approx(0.0));
  CHECK(frozen.moving_right == doctest::Approx(0.0));

  // an undefined row poisons the average and must be refused
  std::map<std::string, uint32_t> cluster = {{"m0", 0}, {"m1", 1}};
  std::vector<RetweetEvent> one_way = {ev("d", "m0", 1, kPro), ev("d", "m0", 2, kPro)};
  TransitionModel om = build_transitions(one_way, cluster, {"a", "b"});
  CHECK_THROWS_AS(mobility_indices(om), DataError);
}

TEST_CASE("transition matrices are validated on entry") {
  CHECK_THROWS_AS(TransitionModel::from_matrix({}), DataError);
  CHECK_THROWS_AS(TransitionModel::from_matrix({{0.5, 0.5}, {1.0}}), DataError);
  CHECK_THROWS_AS(TransitionModel::from_matrix({{0.7, 0.2}, {0.5, 0.5}}), DataError);
  CHECK_THROWS_AS(TransitionModel::from_matrix({{1.2, -0.2}, {0.5, 0.5}}), DataError);
  CHECK_THROWS_AS(
      TransitionModel::from_matrix({{0.5, 0.5}, {0.5, 0.5}}, {"only_one"}),
      DataError);

  TransitionModel ok = TransitionModel::from_matrix({{0.5, 0.5}, {0.1, 0.9}});
  CHECK(ok.state_labels == std::vector<std::string>{"state0", "state1"});
  CHECK(ok.row_defined == std::vector<bool>{true, true});
}

TEST_CASE("ratio histogram uses half-open bins with an inclusive top") {
  ProfileSet set;
  auto add = [&](const std::string& id, double p) {
    ConsumptionProfile prof;
    prof.media_id = id;
    prof.n_pro = 1;
    prof.p_pro = p;
    set.profiles.push_back(prof);
  };
  add("m1", 0.0);
  add("m2", 0.49);
  add("m3", 0.5);   // lands in the upper half exactly
  add("m4", 0.99);
  add("m5", 1.0);   // the top edge belongs to the last bin

  auto bins = ratio_histogram(set, 2);
  REQUIRE(bins.size() == 2);
  CHECK(bins[0].left == doctest::Approx(0.0));
  CHECK(bins[0].right == doctest::Approx(0.5));
  CHECK(bins[0].count == 2);
  CHECK(bins[1].count == 3);

  auto ten = ratio_histogram(set, 10);
  REQUIRE(ten.size() == 10);
  size_t total = 0;
  for (const auto& b : ten) total += b.count;
  CHECK(total == set.profiles.size());
  CHECK(ten[9].count == 2);  // 0.99 and 1.0

  CHECK_THROWS_AS(ratio_histogram(set, 0), ConfigError);
}

TEST_CASE("flow writers produce commented, parseable files") {
  fixtures::TempDir dir("flow_files");

  ProfileSet set;
  ConsumptionProfile prof;
  prof.media_id = "m1";
  prof.n_pro = 3;
  prof.n_anti = 1;
  prof.p_pro = 0.75;
  set.profiles.push_back(prof);
  EntropyReport rep = entropy_report(set, 0.5);
  write_entropy_csv(dir.file("e.csv"), set, rep, "fixture");
  auto lines = util::read_lines(dir.file("e.csv"));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0][0] == '#');
  CHECK(lines[1] == "media,n_pro,n_anti,p_pro,entropy");
  CHECK(lines[2].substr(0, 9) == "m1,3,1,0.");

  std::map<std::string, uint32_t> cluster = {{"m0", 0}, {"m1", 1}};
  std::vector<RetweetEvent> one_way = {ev("d", "m0", 1, kPro), ev("d", "m0", 2, kPro)};
  TransitionModel om = build_transitions(one_way, cluster, {"a", "b"});
  write_transition_csv(dir.file("t.csv"), om, "fixture");
  auto tlines = util::read_lines(dir.file("t.csv"));
  REQUIRE(tlines.size() == 6);  // comment, header, four cells
  CHECK(tlines[1] == "from_state,to_state,count,probability");
  // undefined source rows leave the probability column empty
  bool saw_empty_prob = false;
  for (const auto& l : tlines)
    if (l.rfind("b,", 0) == 0 && l.back() == ',') saw_empty_prob = true;
  CHECK(saw_empty_prob);

  MobilityIndices idx = mobility_indices(TransitionModel::from_matrix(
      {{0.9, 0.1}, {0.2, 0.8}}));
  write_mobility_summary(dir.file("mob.txt"), idx, 2, "fixture");
  auto mlines = util::read_lines(dir.file("mob.txt"));
  REQUIRE(mlines.size() == 5);
  CHECK(mlines[1] == "states 2");
  CHECK(mlines[2].rfind("immobility_ratio ", 0) == 0);

  write_histogram_csv(dir.file("h.csv"), ratio_histogram(set, 2), "fixture");
  auto hlines = util::read_lines(dir.file("h.csv"));
  REQUIRE(hlines.size() == 4);
  CHECK(hlines[1] == "bin_left,bin_right,count");
}
