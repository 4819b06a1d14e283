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


#ifndef VFDEBUG_FROG_H_
#define VFDEBUG_FROG_H_

#include "vfdebug/influence.h"
#include "vfdebug/linalg.h"
#include "vfdebug/party.h"

namespace vfdebug::protocol {

struct FrogSolveResult {
  linalg::CgResult cg;
  // B's assembled Hessian over [θA, c1, θB, c2].
  Matrix hessian;
  // Damping CG actually used; above the requested value only when the
  // Hessian is indefinite or nearly singular.
  double damping = 0.0;
};

// Linearly separable masked model: f = c1 σ(θAᵀxA) + c2 σ(θBᵀxB).
class FrogFederation : public Federation {
 public:
  FrogFederation(const FederationInput& input, const SessionConfig& config);

  // Gradient descent with the A-owned stop signal. Returns the number of
  // parameter updates.
  int Train(const model::GdOptions& options);

  query::PredictionTable Infer(
      InferenceSet which = InferenceSet::kQuery) override;

  // Evaluates the complaint at A; when unsatisfied B ends up holding
  // r1 * Q' for a fresh positive r1 drawn by A.
  QueryStatus QueryGrad(const query::QuerySpec& spec,
                        const query::Complaint& complaint);

  // B assembles H and solves (H + damping I) z = r1 Q' locally, raising the
  // damping as linalg::DefiniteDamping prescribes.
  FrogSolveResult Solve(const linalg::CgOptions& options = {});

  // Both parties learn the scores, which equal r1 times the centralized
  // influence scores.
  InfluenceReport Influence();

  // Total parameter count including the masks and A's bias.
  int64_t parameter_count() const { return ma() + mb() + 2; }
  // The randomizer A drew for the last query gradient.
  double last_randomizer() const { return party(Party::kA).randomizer; }
  const Vector& last_part_a() const { return last_part_a_; }
  const Vector& last_part_b() const { return last_part_b_; }
  // B's stored randomized gradient.
  const Vector& randomized_query_gradient() const {
    return party(Party::kB).query_grad;
  }

 private:
  Vector last_part_a_;
  Vector last_part_b_;
};

}  // namespace vfdebug::protocol

#endif  // VFDEBUG_FROG_H_
