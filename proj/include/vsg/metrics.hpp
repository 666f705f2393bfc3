#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "vsg/check.hpp"

namespace vsg {

// Per-object discovery events of one finished episode.
struct EpisodeLog {
  int n_objects = 0;
  int max_steps = 3000;
  int episode_length = 0;
  bool terminated = false;              // reached done (scored-out or step cap)
  std::vector<int> first_visit_step;    // -1 when never visited
  std::vector<int> scored_step;         // -1 when never scored
  uint64_t seed = 0;
  int episode_index = 0;
};

struct EpisodeStats {
  double first_visit_time = 0;  // mean over objects; cap for unvisited ones
  int episode_length = 0;
  double pct_not_visited = 0;
  double pct_visited_not_scored = 0;  // denominator: visited objects
  int score = 0;
};

inline EpisodeStats compute_stats(const EpisodeLog& log) {
  VSG_CHECK(log.terminated, "compute_stats: truncated episode log");
  VSG_CHECK(static_cast<int>(log.first_visit_step.size()) == log.n_objects &&
                static_cast<int>(log.scored_step.size()) == log.n_objects,
            "compute_stats: per-object arrays do not match n_objects");
  EpisodeStats s;
  s.episode_length = log.episode_length;
  int visited = 0, scored = 0, visited_not_scored = 0;
  double visit_acc = 0;
  for (int i = 0; i < log.n_objects; ++i) {
    const bool v = log.first_visit_step[i] >= 0;
    const bool sc = log.scored_step[i] >= 0;
    visit_acc += v ? log.first_visit_step[i] : log.max_steps;
    visited += v;
    scored += sc;
    visited_not_scored += v && !sc;
  }
  s.first_visit_time = log.n_objects ? visit_acc / log.n_objects : 0;
  s.pct_not_visited = log.n_objects
                          ? 100.0 * (log.n_objects - visited) / log.n_objects
                          : 0;
  s.pct_visited_not_scored = visited ? 100.0 * visited_not_scored / visited : 0.0;
  s.score = scored;
  return s;
}

struct StatsSummary {
  double mean = 0, stddev = 0;
};

inline StatsSummary summarize(const std::vector<double>& xs) {
  StatsSummary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

// One JSON line per episode.
inline void write_metrics_jsonl(std::ostream& os, const EpisodeLog& log,
                                const EpisodeStats& s) {
  os << "{\"seed\":" << log.seed << ",\"episode\":" << log.episode_index
     << ",\"score\":" << s.score << ",\"first_visit_time\":" << s.first_visit_time
     << ",\"episode_length\":" << s.episode_length
     << ",\"pct_not_visited\":" << s.pct_not_visited
     << ",\"pct_visited_not_scored\":" << s.pct_visited_not_scored << "}\n";
}

inline void write_metrics_csv_header(std::ostream& os) {
  os << "seed,episode,score,first_visit_time,episode_length,pct_not_visited,"
        "pct_visited_not_scored\n";
}

inline void write_metrics_csv_row(std::ostream& os, const EpisodeLog& log,
                                  const EpisodeStats& s) {
  os << log.seed << "," << log.episode_index << "," << s.score << ","
     << s.first_visit_time << "," << s.episode_length << "," << s.pct_not_visited << ","
     << s.pct_visited_not_scored << "\n";
}

}  // namespace vsg
