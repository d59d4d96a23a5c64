#pragma once

#include <vector>

#include "embeff/episode.hpp"
#include "embeff/rng.hpp"

namespace embeff::testutil {

// Random but valid episode for property tests. with_qdot controls whether
// explicit velocity records are attached.
inline EpisodeLog random_episode(SplitMix64& rng, std::size_t T, std::size_t d,
                                 std::size_t k, bool with_qdot) {
  EpisodeLog ep;
  ep.f = 1.0 + 30.0 * rng.next_unit();
  ep.success = rng.next_u64() % 2 == 0;
  ep.task_id = "t";
  ep.suite_id = "s";
  ep.run_tag = "r";
  for (std::size_t t = 1; t <= T; ++t) {
    StepRecord s;
    s.t = static_cast<std::int64_t>(t);
    for (auto& x : s.p) x = 2.0 * rng.next_unit() - 1.0;
    s.q.resize(d);
    for (auto& x : s.q) x = 4.0 * rng.next_unit() - 2.0;
    s.a.resize(k);
    for (auto& x : s.a) x = 2.0 * rng.next_unit() - 1.0;
    if (with_qdot) {
      std::vector<double> v(d);
      for (auto& x : v) x = 2.0 * rng.next_unit() - 1.0;
      s.qdot = std::move(v);
    }
    ep.steps.push_back(std::move(s));
  }
  return ep;
}

inline EpisodeLog reverse_steps(const EpisodeLog& ep) {
  EpisodeLog out = ep;
  std::reverse(out.steps.begin(), out.steps.end());
  for (std::size_t i = 0; i < out.steps.size(); ++i)
    out.steps[i].t = static_cast<std::int64_t>(i) + 1;
  return out;
}

}  // namespace embeff::testutil
