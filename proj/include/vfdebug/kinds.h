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


#ifndef VFDEBUG_KINDS_H_
#define VFDEBUG_KINDS_H_

#include <string>
#include <vector>

#include "vfdebug/transcript.h"

namespace vfdebug {

enum class Protocol : uint8_t { kFedRain, kFrog };

const char* ProtocolName(Protocol p);
Protocol ProtocolFromName(const std::string& name);

// Message kinds exchanged by the protocol drivers.
namespace kind {

inline constexpr char kDeleteIds[] = "debug.delete_ids";

inline constexpr char kFrTrainScore[] = "fedrain.train.partial_score";
inline constexpr char kFrTrainEncResidual[] = "fedrain.train.enc_residual";
inline constexpr char kFrTrainEncMaskedGrad[] = "fedrain.train.enc_masked_grad";
inline constexpr char kFrTrainMaskedGrad[] = "fedrain.train.masked_grad";
inline constexpr char kFrInferScore[] = "fedrain.infer.partial_score";
inline constexpr char kFrQueryScore[] = "fedrain.query.partial_score";
inline constexpr char kFrQueryStatus[] = "fedrain.query.status";
inline constexpr char kFrQueryEncWeights[] = "fedrain.query.enc_weights";
inline constexpr char kFrQueryEncMaskedGrad[] = "fedrain.query.enc_masked_grad";
inline constexpr char kFrQueryMaskedGrad[] = "fedrain.query.masked_grad";
inline constexpr char kFrDebugTrainScore[] = "fedrain.debug.train_score";
inline constexpr char kFrHvpEncR[] = "fedrain.hvp.enc_r";
inline constexpr char kFrHvpEncRxv[] = "fedrain.hvp.enc_rxv";
inline constexpr char kFrHvpEncMaskedHvb[] = "fedrain.hvp.enc_masked_hvb";
inline constexpr char kFrHvpEncXbv[] = "fedrain.hvp.enc_xbv";
inline constexpr char kFrHvpEncMaskedHva[] = "fedrain.hvp.enc_masked_hva";
inline constexpr char kFrHvpMaskedHvb[] = "fedrain.hvp.masked_hvb";
inline constexpr char kFrHvpMaskedHva[] = "fedrain.hvp.masked_hva";
inline constexpr char kFrCgDot[] = "fedrain.cg.dot_b";
inline constexpr char kFrCgStart[] = "fedrain.cg.start";
inline constexpr char kFrCgAlpha[] = "fedrain.cg.alpha";
inline constexpr char kFrCgBeta[] = "fedrain.cg.beta";
inline constexpr char kFrInfTrainScore[] = "fedrain.influence.train_score";
inline constexpr char kFrInfEncResidual[] = "fedrain.influence.enc_residual";
inline constexpr char kFrInfEncPartial[] = "fedrain.influence.enc_partial";

inline constexpr char kFgTrainScoreA[] = "frog.train.score_a";
inline constexpr char kFgTrainScoreB[] = "frog.train.score_b";
inline constexpr char kFgTrainStop[] = "frog.train.gd_stop";
inline constexpr char kFgInferScore[] = "frog.infer.score_b";
inline constexpr char kFgQueryScore[] = "frog.query.score_b";
inline constexpr char kFgQueryEncGradB[] = "frog.query.enc_grad_b";
inline constexpr char kFgQueryStatus[] = "frog.query.status";
inline constexpr char kFgQueryEncGrad[] = "frog.query.enc_grad";
inline constexpr char kFgQhinvEncMaskedGrads[] = "frog.qhinv.enc_masked_grads";
inline constexpr char kFgQhinvEncHab[] = "frog.qhinv.enc_hab";
inline constexpr char kFgQhinvSumGradA[] = "frog.qhinv.sum_grad_a";
inline constexpr char kFgQhinvHaa[] = "frog.qhinv.haa";
inline constexpr char kFgInfZa[] = "frog.influence.z_a";
inline constexpr char kFgInfScoreA[] = "frog.influence.score_a";
inline constexpr char kFgInfScoreB[] = "frog.influence.score_b";

}  // namespace kind

struct KindRule {
  std::string kind;
  Party sender;
  PayloadType type;
};

// Every message a protocol's scripts may emit.
const std::vector<KindRule>& ProtocolScript(Protocol p);

}  // namespace vfdebug

#endif  // VFDEBUG_KINDS_H_
