// Copyright 2026 The vfdebug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "vfdebug/influence.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "vfdebug/error.h"

namespace vfdebug {

const char* InfluenceSourceName(InfluenceSource s) {
  switch (s) {
    case InfluenceSource::kFedRain:
      return "fedrain";
    case InfluenceSource::kFrog:
      return "frog";
    case InfluenceSource::kRainOracle:
      return "rain_oracle";
    case InfluenceSource::kLossBaseline:
      return "loss";
  }
  return "?";
}

InfluenceSource InfluenceSourceFromName(const std::string& name) {
  for (InfluenceSource s :
       {InfluenceSource::kFedRain, InfluenceSource::kFrog,
        InfluenceSource::kRainOracle, InfluenceSource::kLossBaseline}) {
    if (name == InfluenceSourceName(s)) return s;
  }
  throw InvalidArgumentError("unknown influence source '" + name + "'");
}

std::vector<int64_t> RankIds(const std::vector<int64_t>& ids,
                             const Eigen::VectorXd& scores) {
  if (static_cast<Eigen::Index>(ids.size()) != scores.size()) {
    throw InvalidArgumentError("ranking: ids and scores differ in length");
  }
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw NumericError("ranking: NaN score");
  }
  std::vector<size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  std::vector<int64_t> out;
  out.reserve(ids.size());
  for (size_t i : order) out.push_back(ids[i]);
  return out;
}

InfluenceReport InfluenceReport::Make(std::vector<int64_t> ids,
                                      Eigen::VectorXd scores,
                                      InfluenceSource source,
                                      bool r_factor_applied) {
  InfluenceReport r;
  r.ranking = RankIds(ids, scores);
  r.ids = std::move(ids);
  r.scores = std::move(scores);
  r.produced_by = source;
  r.r_factor_applied = r_factor_applied;
  return r;
}

double InfluenceReport::ScoreOf(int64_t id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) {
    throw InvalidArgumentError("id " + std::to_string(id) + " not scored");
  }
  return scores[it - ids.begin()];
}

std::vector<int64_t> InfluenceReport::Top(size_t k) const {
  k = std::min(k, ranking.size());
  return {ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(k)};
}

double SpearmanRho(const std::vector<int64_t>& ranking_a,
                   const std::vector<int64_t>& ranking_b) {
  if (ranking_a.size() != ranking_b.size()) {
    throw InvalidArgumentError("Spearman: rankings differ in length");
  }
  const size_t n = ranking_a.size();
  if (n < 2) return 1.0;
  std::unordered_map<int64_t, size_t> pos;
  for (size_t i = 0; i < n; ++i) pos[ranking_b[i]] = i;
  double d2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    auto it = pos.find(ranking_a[i]);
    if (it == pos.end()) {
      throw InvalidArgumentError("Spearman: rankings cover different ids");
    }
    double d = static_cast<double>(i) - static_cast<double>(it->second);
    d2 += d * d;
  }
  const double nn = static_cast<double>(n);
  return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

}  // namespace vfdebug
