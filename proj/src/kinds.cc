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


#include "vfdebug/kinds.h"

#include "vfdebug/error.h"

namespace vfdebug {

const char* ProtocolName(Protocol p) {
  return p == Protocol::kFedRain ? "fedrain" : "frog";
}

Protocol ProtocolFromName(const std::string& name) {
  if (name == "fedrain") return Protocol::kFedRain;
  if (name == "frog") return Protocol::kFrog;
  throw InvalidArgumentError("unknown protocol '" + name + "'");
}

const std::vector<KindRule>& ProtocolScript(Protocol p) {
  using PT = PayloadType;
  constexpr Party A = Party::kA;
  constexpr Party B = Party::kB;
  static const std::vector<KindRule> fedrain = {
      {kind::kDeleteIds, A, PT::kIds},
      {kind::kFrTrainScore, B, PT::kVector},
      {kind::kFrTrainEncResidual, A, PT::kCiphertexts},
      {kind::kFrTrainEncMaskedGrad, B, PT::kCiphertexts},
      {kind::kFrTrainMaskedGrad, A, PT::kVector},
      {kind::kFrInferScore, B, PT::kVector},
      {kind::kFrQueryScore, B, PT::kVector},
      {kind::kFrQueryStatus, A, PT::kFlag},
      {kind::kFrQueryEncWeights, A, PT::kCiphertexts},
      {kind::kFrQueryEncMaskedGrad, B, PT::kCiphertexts},
      {kind::kFrQueryMaskedGrad, A, PT::kVector},
      {kind::kFrDebugTrainScore, B, PT::kVector},
      {kind::kFrHvpEncR, A, PT::kCiphertexts},
      {kind::kFrHvpEncRxv, A, PT::kCiphertexts},
      {kind::kFrHvpEncMaskedHvb, B, PT::kCiphertexts},
      {kind::kFrHvpEncXbv, B, PT::kCiphertexts},
      {kind::kFrHvpEncMaskedHva, A, PT::kCiphertexts},
      {kind::kFrHvpMaskedHvb, A, PT::kVector},
      {kind::kFrHvpMaskedHva, B, PT::kVector},
      {kind::kFrCgDot, B, PT::kScalar},
      {kind::kFrCgStart, A, PT::kVector},
      {kind::kFrCgAlpha, A, PT::kVector},
      {kind::kFrCgBeta, A, PT::kVector},
      {kind::kFrInfTrainScore, B, PT::kVector},
      {kind::kFrInfEncResidual, A, PT::kCiphertexts},
      {kind::kFrInfEncPartial, B, PT::kCiphertexts},
  };
  static const std::vector<KindRule> frog = {
      {kind::kDeleteIds, A, PT::kIds},
      {kind::kFgTrainScoreA, A, PT::kVector},
      {kind::kFgTrainScoreB, B, PT::kVector},
      {kind::kFgTrainStop, A, PT::kFlag},
      {kind::kFgInferScore, B, PT::kVector},
      {kind::kFgQueryScore, B, PT::kVector},
      {kind::kFgQueryEncGradB, B, PT::kCiphertexts},
      {kind::kFgQueryStatus, A, PT::kFlag},
      {kind::kFgQueryEncGrad, A, PT::kCiphertexts},
      {kind::kFgQhinvEncMaskedGrads, B, PT::kCiphertexts},
      {kind::kFgQhinvEncHab, A, PT::kCiphertexts},
      {kind::kFgQhinvSumGradA, A, PT::kVector},
      {kind::kFgQhinvHaa, A, PT::kMatrix},
      {kind::kFgInfZa, B, PT::kVector},
      {kind::kFgInfScoreA, A, PT::kVector},
      {kind::kFgInfScoreB, B, PT::kVector},
  };
  return p == Protocol::kFedRain ? fedrain : frog;
}

}  // namespace vfdebug
