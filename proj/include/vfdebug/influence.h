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


#ifndef VFDEBUG_INFLUENCE_H_
#define VFDEBUG_INFLUENCE_H_

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace vfdebug {

enum class InfluenceSource { kFedRain, kFrog, kRainOracle, kLossBaseline };

const char* InfluenceSourceName(InfluenceSource s);
InfluenceSource InfluenceSourceFromName(const std::string& name);

// Per-record scores over the current training ids. Larger score means
// deleting the record helps the complaint more.
struct InfluenceReport {
  std::vector<int64_t> ids;
  Eigen::VectorXd scores;
  // Ids by descending score; equal scores by ascending id.
  std::vector<int64_t> ranking;
  InfluenceSource produced_by = InfluenceSource::kRainOracle;
  bool r_factor_applied = false;

  static InfluenceReport Make(std::vector<int64_t> ids,
                              Eigen::VectorXd scores, InfluenceSource source,
                              bool r_factor_applied = false);
  double ScoreOf(int64_t id) const;
  std::vector<int64_t> Top(size_t k) const;
};

// Sort order used for every ranking.
std::vector<int64_t> RankIds(const std::vector<int64_t>& ids,
                             const Eigen::VectorXd& scores);

// Spearman rank correlation of two rankings over the same id set.
double SpearmanRho(const std::vector<int64_t>& ranking_a,
                   const std::vector<int64_t>& ranking_b);

}  // namespace vfdebug

#endif  // VFDEBUG_INFLUENCE_H_
