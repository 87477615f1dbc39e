#include "polarscope/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "polarscope/util.hpp"

namespace polarscope {

std::vector<RetweetEvent> collect_retweet_events(
    const TweetStore& store, const MediaRegistry& registry,
    const std::map<std::string, CombinedStance>& stance_of,
    const std::function<bool(const Tweet&)>& relevant) {
  std::vector<RetweetEvent> events;
  for (const Tweet& t : store.tweets()) {
    if (!t.retweeted_user_id) continue;
    if (!registry.lookup(*t.retweeted_user_id)) continue;
    if (!relevant(t)) continue;
    auto it = stance_of.find(t.user_id);
    CombinedStance s = it == stance_of.end() ? CombinedStance::other : it->second;
    events.push_back({t.user_id, *t.retweeted_user_id, t.id, t.timestamp, s});
  }
  return events;
}

namespace {

bool is_consistent(CombinedStance s) {
  return s == CombinedStance::consistent_pro_government ||
         s == CombinedStance::consistent_anti_government;
}

}  // namespace

std::optional<ConsumptionProfile> retweet_ratio(const std::string& media_id,
                                                const std::vector<RetweetEvent>& events) {
  ConsumptionProfile prof;
  prof.media_id = media_id;
  for (const auto& e : events) {
    if (e.media_id != media_id) continue;
    if (e.user_stance == CombinedStance::consistent_pro_government) prof.n_pro++;
    else if (e.user_stance == CombinedStance::consistent_anti_government) prof.n_anti++;
  }
  if (prof.n_pro + prof.n_anti == 0) return std::nullopt;
  prof.p_pro = double(prof.n_pro) / double(prof.n_pro + prof.n_anti);
  return prof;
}

ProfileSet consumption_profiles(const std::vector<RetweetEvent>& events) {
  std::set<std::string> media;
  for (const auto& e : events) media.insert(e.media_id);

  ProfileSet out;
  for (const std::string& m : media) {
    auto prof = retweet_ratio(m, events);
    if (prof) out.profiles.push_back(*prof);
    else out.excluded_media++;
  }
  return out;
}

double baseline_share(const std::vector<RetweetEvent>& events) {
  std::set<std::string> pro, anti;
  for (const auto& e : events) {
    if (e.user_stance == CombinedStance::consistent_pro_government) pro.insert(e.user_id);
    else if (e.user_stance == CombinedStance::consistent_anti_government)
      anti.insert(e.user_id);
  }
  size_t denom = pro.size() + anti.size();
  if (denom == 0) throw DataError("no consistently labeled users among retweet events");
  double g = double(pro.size()) / double(denom);
  if (g <= 0.0 || g >= 1.0)
    throw DataError("degenerate baseline: every labeled user on one side");
  return g;
}

double relative_entropy(double p_pro, double g_pro) {
  if (!(p_pro >= 0.0 && p_pro <= 1.0))
    throw DataError("p_pro outside [0,1]: " + util::format_double(p_pro, 6));
  if (!(g_pro > 0.0 && g_pro < 1.0))
    throw DataError("degenerate baseline g_pro: " + util::format_double(g_pro, 6));
  double h = 0.0;
  if (p_pro > 0.0) h -= p_pro * std::log(p_pro / g_pro);
  if (p_pro < 1.0) h -= (1.0 - p_pro) * std::log((1.0 - p_pro) / (1.0 - g_pro));
  return std::min(h, 0.0);  // kill the +epsilon round-off at p == g
}

EntropyReport entropy_report(const ProfileSet& profiles, double g_pro) {
  EntropyReport rep;
  rep.g_pro = g_pro;
  for (const auto& prof : profiles.profiles) {
    rep.media.push_back(prof.media_id);
    rep.h.push_back(relative_entropy(prof.p_pro, g_pro));
  }
  return rep;
}

TransitionModel TransitionModel::from_matrix(std::vector<std::vector<double>> p,
                                             std::vector<std::string> labels) {
  if (p.empty()) throw DataError("empty transition matrix");
  size_t n = p.size();
  TransitionModel m;
  if (labels.empty())
    for (size_t i = 0; i < n; ++i) labels.push_back("state" + std::to_string(i));
  if (labels.size() != n) throw DataError("state label count mismatch");
  for (const auto& row : p) {
    if (row.size() != n) throw DataError("transition matrix is not square");
    double sum = 0.0;
    for (double v : row) {
      if (v < 0.0) throw DataError("negative transition probability");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw DataError("transition row does not sum to 1: " + util::format_double(sum, 12));
  }
  m.state_labels = std::move(labels);
  m.p = std::move(p);
  m.counts.assign(n, std::vector<double>(n, 0.0));
  m.row_defined.assign(n, true);
  return m;
}

TransitionModel build_transitions(const std::vector<RetweetEvent>& events,
                                  const std::map<std::string, uint32_t>& cluster_of,
                                  const std::vector<std::string>& state_labels) {
  if (state_labels.empty()) throw DataError("no transition states");
  size_t n = state_labels.size();
  for (const auto& [media, state] : cluster_of)
    if (state >= n) throw DataError("cluster state out of range for media " + media);

  // per-user clustered sequences ordered by (timestamp, tweet id)
  std::map<std::string, std::vector<std::pair<std::pair<int64_t, std::string>, uint32_t>>>
      seqs;
  for (const auto& e : events) {
    auto it = cluster_of.find(e.media_id);
    if (it == cluster_of.end()) continue;
    seqs[e.user_id].push_back({{e.timestamp, e.tweet_id}, it->second});
  }

  TransitionModel m;
  m.state_labels = state_labels;
  m.counts.assign(n, std::vector<double>(n, 0.0));
  bool any_pair = false;
  for (auto& [user, seq] : seqs) {
    std::sort(seq.begin(), seq.end());
    for (size_t i = 0; i + 1 < seq.size(); ++i) {
      m.counts[seq[i].second][seq[i + 1].second] += 1.0;
      any_pair = true;
    }
  }
  if (!any_pair) throw DataError("no user has two or more clustered retweets");

  m.p.assign(n, std::vector<double>(n, 0.0));
  m.row_defined.assign(n, false);
  for (size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (double c : m.counts[i]) total += c;
    if (total > 0.0) {
      m.row_defined[i] = true;
      for (size_t j = 0; j < n; ++j) m.p[i][j] = m.counts[i][j] / total;
    }
  }
  return m;
}

MobilityIndices mobility_indices(const TransitionModel& model) {
  size_t n = model.n_states();
  if (n == 0) throw DataError("empty transition model");
  for (size_t i = 0; i < n; ++i)
    if (!model.row_defined[i])
      throw DataError("transition row undefined for state " + model.state_labels[i]);

  MobilityIndices idx;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      if (i == j) idx.immobility += model.p[i][j];
      else if (i < j) idx.moving_left += model.p[i][j];
      else idx.moving_right += model.p[i][j];
    }
  idx.immobility /= double(n);
  idx.moving_left /= double(n);
  idx.moving_right /= double(n);
  return idx;
}

std::vector<HistogramBin> ratio_histogram(const ProfileSet& profiles, size_t bins) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  std::vector<HistogramBin> out(bins);
  for (size_t b = 0; b < bins; ++b) {
    out[b].left = double(b) / double(bins);
    out[b].right = double(b + 1) / double(bins);
  }
  for (const auto& prof : profiles.profiles) {
    size_t b = std::min(bins - 1, size_t(prof.p_pro * double(bins)));
    out[b].count++;
  }
  return out;
}

void write_entropy_csv(const std::string& path, const ProfileSet& profiles,
                       const EntropyReport& report, const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write entropy report: " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "media,n_pro,n_anti,p_pro,entropy\n";
  for (size_t i = 0; i < profiles.profiles.size(); ++i) {
    const auto& prof = profiles.profiles[i];
    out << util::csv_row({prof.media_id, std::to_string(prof.n_pro),
                          std::to_string(prof.n_anti), util::format_double(prof.p_pro, 6),
                          util::format_double(report.h[i], 6)})
        << "\n";
  }
}

void write_transition_csv(const std::string& path, const TransitionModel& model,
                          const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write transition matrix: " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "from_state,to_state,count,probability\n";
  size_t n = model.n_states();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      out << util::csv_row(
                 {model.state_labels[i], model.state_labels[j],
                  util::format_double(model.counts[i][j], 0),
                  model.row_defined[i] ? util::format_double(model.p[i][j], 6) : ""})
          << "\n";
}

void write_mobility_summary(const std::string& path, const MobilityIndices& indices,
                            size_t n_states, const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write mobility summary: " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "states " << n_states << "\n";
  out << "immobility_ratio " << util::format_double(indices.immobility, 6) << "\n";
  out << "moving_left " << util::format_double(indices.moving_left, 6) << "\n";
  out << "moving_right " << util::format_double(indices.moving_right, 6) << "\n";
}

void write_histogram_csv(const std::string& path, const std::vector<HistogramBin>& bins,
                         const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write histogram: " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "bin_left,bin_right,count\n";
  for (const auto& b : bins)
    out << util::csv_row({util::format_double(b.left, 6), util::format_double(b.right, 6),
                          std::to_string(b.count)})
        << "\n";
}

}  // namespace polarscope
