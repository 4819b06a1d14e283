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


#ifndef VFDEBUG_FEDRAIN_H_
#define VFDEBUG_FEDRAIN_H_

#include <functional>
#include <vector>

#include "vfdebug/influence.h"
#include "vfdebug/linalg.h"
#include "vfdebug/party.h"

namespace vfdebug::protocol {

// One party's side of a Hessian-vector product: takes its slice of v and
// returns its slice of Hv, exchanging messages as needed.
using PartyHvp = std::function<Vector(Endpoint&, const Vector&)>;

struct CgPartyResult {
  Vector z;
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  std::vector<Vector> iterates;
};

// Two-party CG. Inner products go through the separated dot: B sends its
// partial sums, A computes the step sizes and control flags and sends them
// to B; both update their slices of z, r and p locally.
void CgPartyA(Endpoint& ep, const PartyHvp& hvp, const Vector& rhs,
              const linalg::CgOptions& options, int max_iter,
              CgPartyResult* out);
void CgPartyB(Endpoint& ep, const PartyHvp& hvp, const Vector& rhs,
              const linalg::CgOptions& options, int max_iter,
              CgPartyResult* out);

// Exact logistic regression over Paillier.
class FedRainFederation : public Federation {
 public:
  FedRainFederation(const FederationInput& input, const SessionConfig& config);

  // Gradient descent rounds; refused beyond the training bound unless the
  // session carries the unsafe override.
  void Train(int rounds, double learning_rate);

  query::PredictionTable Infer(
      InferenceSet which = InferenceSet::kQuery) override;

  // Evaluates the complaint at A and, when unsatisfied, leaves each party
  // holding its slice of Q'. Consumes one debugging iteration.
  QueryStatus QueryGrad(const query::QuerySpec& spec,
                        const query::Complaint& complaint);

  // Slices of H v at the current parameters.
  linalg::SeparatedVector Hvp(const linalg::SeparatedVector& v);

  // Solves (H + damping I) z = Q' with the stored Q' slices.
  FederatedCgResult Solve(const linalg::CgOptions& options = {});
  // Same with an explicit right-hand side (each party receives its slice).
  FederatedCgResult Solve(const linalg::SeparatedVector& rhs,
                          const linalg::CgOptions& options = {});

  // Per-record scores from the stored z. Throws StaleStateError if the
  // model or the training rows changed since z was computed.
  InfluenceReport Influence();

  // Parts of the last influence computation, as held at A.
  const Vector& last_part_a() const { return last_part_a_; }
  const Vector& last_part_b() const { return last_part_b_; }

  // Slices of the stored Q' (joined view for tests and reports).
  linalg::SeparatedVector query_gradient() const;

 private:
  Vector TrainingProbabilities(const Vector& partial_b) const;

  Vector last_part_a_;
  Vector last_part_b_;
};

}  // namespace vfdebug::protocol

#endif  // VFDEBUG_FEDRAIN_H_
