#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polarscope/mediagraph.hpp"
#include "polarscope/stance.hpp"
#include "polarscope/tweet.hpp"

namespace polarscope {

// one stance-labeled retweet of a registered outlet
struct RetweetEvent {
  std::string user_id;
  std::string media_id;
  std::string tweet_id;
  int64_t timestamp = 0;
  CombinedStance user_stance = CombinedStance::other;
};

std::vector<RetweetEvent> collect_retweet_events(
    const TweetStore& store, const MediaRegistry& registry,
    const std::map<std::string, CombinedStance>& stance_of,
    const std::function<bool(const Tweet&)>& relevant);

// per-outlet audience composition among consistently labeled users
struct ConsumptionProfile {
  std::string media_id;
  size_t n_pro = 0;
  size_t n_anti = 0;
  double p_pro = 0.0;  // n_pro / (n_pro + n_anti)
};

// nullopt when the outlet has no retweets from consistently labeled users
std::optional<ConsumptionProfile> retweet_ratio(const std::string& media_id,
                                                const std::vector<RetweetEvent>& events);

struct ProfileSet {
  std::vector<ConsumptionProfile> profiles;  // sorted by media id
  size_t excluded_media = 0;                 // outlets with zero labeled retweets
};

ProfileSet consumption_profiles(const std::vector<RetweetEvent>& events);

// audience-scoped baseline: pro share of distinct consistent users in the events
double baseline_share(const std::vector<RetweetEvent>& events);

// H(p,g) = -p ln(p/g) - (1-p) ln((1-p)/(1-g)), in nats; always <= 0
double relative_entropy(double p_pro, double g_pro);

struct EntropyReport {
  double g_pro = 0.0;
  std::vector<std::string> media;  // parallel to h
  std::vector<double> h;
};

EntropyReport entropy_report(const ProfileSet& profiles, double g_pro);

struct TransitionModel {
  std::vector<std::string> state_labels;
  std::vector<std::vector<double>> counts;  // n x n
  std::vector<std::vector<double>> p;       // row-stochastic where defined
  std::vector<bool> row_defined;

  size_t n_states() const { return state_labels.size(); }
  static TransitionModel from_matrix(std::vector<std::vector<double>> p,
                                     std::vector<std::string> labels = {});
};

TransitionModel build_transitions(const std::vector<RetweetEvent>& events,
                                  const std::map<std::string, uint32_t>& cluster_of,
                                  const std::vector<std::string>& state_labels);

struct MobilityIndices {
  double immobility = 0.0;     // mean diagonal mass
  double moving_left = 0.0;    // mean upper-triangle mass (toward higher states)
  double moving_right = 0.0;   // mean lower-triangle mass
};

MobilityIndices mobility_indices(const TransitionModel& model);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  size_t count = 0;
};

// equal-width bins over [0,1]; half-open except the last, which includes 1.0
std::vector<HistogramBin> ratio_histogram(const ProfileSet& profiles, size_t bins);

void write_entropy_csv(const std::string& path, const ProfileSet& profiles,
                       const EntropyReport& report, const std::string& provenance = "");
void write_transition_csv(const std::string& path, const TransitionModel& model,
                          const std::string& provenance = "");
void write_mobility_summary(const std::string& path, const MobilityIndices& indices,
                            size_t n_states, const std::string& provenance = "");
void write_histogram_csv(const std::string& path, const std::vector<HistogramBin>& bins,
                         const std::string& provenance = "");

}  // namespace polarscope
