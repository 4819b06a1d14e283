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


#include "vfdebug/fedrain.h"

#include <cmath>
#include <string>

#include "vfdebug/error.h"

namespace vfdebug::protocol {

namespace {

std::vector<double> ToStd(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector FromStd(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> Column(const Matrix& x, Eigen::Index j) {
  return ToStd(x.col(j));
}

Vector Sigmoids(const Vector& z) {
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = model::Sigmoid(z[i]);
  return out;
}

void RequireLength(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw ProtocolError(std::string(what) + ": expected " + std::to_string(n) +
                        " values, got " + std::to_string(v.size()));
  }
}

enum CgStatus { kCgContinue = 0, kCgDone = 1, kCgBreakdown = 2, kCgNonFinite = 3 };

[[noreturn]] void ThrowCgStatus(int status, int k, double php) {
  if (status == kCgBreakdown) {
    throw CgBreakdownError("CG breakdown at iteration " + std::to_string(k) +
                           ": pᵀHp = " + std::to_string(php));
  }
  throw NumericError("CG produced non-finite values at iteration " +
                     std::to_string(k));
}

// Party A's half of the encrypted Hessian-vector product. R is the diagonal
// h(1-h) over the training rows.
Vector HvpPartyA(Endpoint& ep, PartyState& a, const Vector& r_diag,
                 const Vector& v) {
  PartySession& s = a.session;
  const Matrix& x = a.train.x;
  RequireLength(v, x.cols(), "Hv slice at A");
  const Vector rxv = r_diag.cwiseProduct(x * v);
  ep.Send(kind::kFrHvpEncR, Payload::Ciphertexts(s.own().EncryptVector(ToStd(r_diag))));
  ep.Send(kind::kFrHvpEncRxv, Payload::Ciphertexts(s.own().EncryptVector(ToStd(rxv))));

  auto enc_hvb = ep.Recv(kind::kFrHvpEncMaskedHvb).AsCiphertexts();
  auto enc_xbv = ep.Recv(kind::kFrHvpEncXbv).AsCiphertexts();
  if (static_cast<Eigen::Index>(enc_xbv.size()) != x.rows()) {
    throw ProtocolError("Hv: B's product has the wrong length");
  }
  // Own block in plaintext, cross block under B's key, masked with εA.
  const Vector haa_v = x.transpose() * rxv;
  const Vector eps = s.NoiseVector(x.cols());
  std::vector<he::Ciphertext> enc_hva;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Vector w = x.col(j).cwiseProduct(r_diag);
    he::Ciphertext c = s.peer().Dot(ToStd(w), enc_xbv);
    enc_hva.push_back(s.peer().AddPlain(c, haa_v[j] + eps[j]));
  }
  ep.Send(kind::kFrHvpEncMaskedHva, Payload::Ciphertexts(std::move(enc_hva)));
  ep.Send(kind::kFrHvpMaskedHvb,
          Payload::Vector(FromStd(s.decryptor().DecryptVector(enc_hvb))));
  Vector masked = ep.Recv(kind::kFrHvpMaskedHva).AsVector();
  RequireLength(masked, x.cols(), "masked Hv at A");
  return masked - eps;
}

Vector HvpPartyB(Endpoint& ep, PartyState& b, const Vector& v) {
  PartySession& s = b.session;
  const Matrix& x = b.train.x;
  RequireLength(v, x.cols(), "Hv slice at B");
  auto enc_r = ep.Recv(kind::kFrHvpEncR).AsCiphertexts();
  auto enc_rxv = ep.Recv(kind::kFrHvpEncRxv).AsCiphertexts();
  if (static_cast<Eigen::Index>(enc_r.size()) != x.rows() ||
      enc_rxv.size() != enc_r.size()) {
    throw ProtocolError("Hv: A's vectors have the wrong length");
  }
  const Vector u = x * v;
  const Vector eps = s.NoiseVector(x.cols());
  std::vector<he::Ciphertext> enc_hvb;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    he::Ciphertext cross = s.peer().Dot(Column(x, j), enc_rxv);
    he::Ciphertext own = s.peer().Dot(ToStd(x.col(j).cwiseProduct(u)), enc_r);
    enc_hvb.push_back(s.peer().AddPlain(s.peer().Add(cross, own), eps[j]));
  }
  ep.Send(kind::kFrHvpEncMaskedHvb, Payload::Ciphertexts(std::move(enc_hvb)));
  ep.Send(kind::kFrHvpEncXbv, Payload::Ciphertexts(s.own().EncryptVector(ToStd(u))));
  auto enc_hva = ep.Recv(kind::kFrHvpEncMaskedHva).AsCiphertexts();
  ep.Send(kind::kFrHvpMaskedHva,
          Payload::Vector(FromStd(s.decryptor().DecryptVector(enc_hva))));
  Vector masked = ep.Recv(kind::kFrHvpMaskedHvb).AsVector();
  RequireLength(masked, x.cols(), "masked Hv at B");
  return masked - eps;
}

}  // namespace

void CgPartyA(Endpoint& ep, const PartyHvp& hvp, const Vector& rhs,
              const linalg::CgOptions& options, int max_iter,
              CgPartyResult* out) {
  if (!rhs.allFinite()) throw NumericError("CG right-hand side not finite");
  Vector z = Vector::Zero(rhs.size());
  Vector r = rhs;
  Vector p = r;
  double rr = r.squaredNorm() + ep.Recv(kind::kFrCgDot).AsScalar();
  const double target = options.tol * std::max(1.0, std::sqrt(rr));
  out->z = z;
  out->residual_norm = std::sqrt(rr);
  out->iterations = 0;
  out->converged = out->residual_norm <= target;
  ep.Send(kind::kFrCgStart,
          Payload::Vector(Vector::Constant(1, out->converged ? kCgDone : kCgContinue)));
  if (out->converged) return;
  double best = out->residual_norm;
  for (int k = 0; k < max_iter; ++k) {
    Vector hp = hvp(ep, p);
    if (options.damping != 0.0) hp += options.damping * p;
    const double php = p.dot(hp) + ep.Recv(kind::kFrCgDot).AsScalar();
    int status = kCgContinue;
    if (!std::isfinite(php)) {
      status = kCgNonFinite;
    } else if (php <= options.breakdown_threshold) {
      status = kCgBreakdown;
    }
    const double alpha = status == kCgContinue ? rr / php : 0.0;
    Vector msg(2);
    msg << status, alpha;
    ep.Send(kind::kFrCgAlpha, Payload::Vector(msg));
    if (status != kCgContinue) ThrowCgStatus(status, k, php);
    z += alpha * p;
    r -= alpha * hp;
    const double rr_next = r.squaredNorm() + ep.Recv(kind::kFrCgDot).AsScalar();
    const double beta = rr_next / rr;
    p = r + beta * p;
    rr = rr_next;
    out->iterations = k + 1;
    if (options.record_iterates) out->iterates.push_back(z);
    const double norm = std::sqrt(rr);
    const bool finite = std::isfinite(norm);
    const bool is_best = finite && norm < best;
    const bool done = finite && norm <= target;
    Vector ctl(3);
    ctl << (finite ? (done ? kCgDone : kCgContinue) : kCgNonFinite), beta,
        is_best ? 1.0 : 0.0;
    ep.Send(kind::kFrCgBeta, Payload::Vector(ctl));
    if (!finite) ThrowCgStatus(kCgNonFinite, k, 0.0);
    if (is_best) {
      best = norm;
      out->z = z;
      out->residual_norm = norm;
    }
    if (done) {
      out->converged = true;
      break;
    }
  }
}

void CgPartyB(Endpoint& ep, const PartyHvp& hvp, const Vector& rhs,
              const linalg::CgOptions& options, int max_iter,
              CgPartyResult* out) {
  if (!rhs.allFinite()) throw NumericError("CG right-hand side not finite");
  Vector z = Vector::Zero(rhs.size());
  Vector r = rhs;
  Vector p = r;
  ep.Send(kind::kFrCgDot, Payload::Scalar(r.squaredNorm()));
  out->z = z;
  out->iterations = 0;
  out->converged =
      static_cast<int>(ep.Recv(kind::kFrCgStart).AsVector()[0]) == kCgDone;
  if (out->converged) return;
  for (int k = 0; k < max_iter; ++k) {
    Vector hp = hvp(ep, p);
    if (options.damping != 0.0) hp += options.damping * p;
    ep.Send(kind::kFrCgDot, Payload::Scalar(p.dot(hp)));
    Vector step = ep.Recv(kind::kFrCgAlpha).AsVector();
    if (step.size() != 2) throw ProtocolError("malformed CG step message");
    const int status = static_cast<int>(step[0]);
    if (status != kCgContinue) ThrowCgStatus(status, k, 0.0);
    const double alpha = step[1];
    z += alpha * p;
    r -= alpha * hp;
    ep.Send(kind::kFrCgDot, Payload::Scalar(r.squaredNorm()));
    Vector ctl = ep.Recv(kind::kFrCgBeta).AsVector();
    if (ctl.size() != 3) throw ProtocolError("malformed CG control message");
    const int st = static_cast<int>(ctl[0]);
    if (st == kCgNonFinite) ThrowCgStatus(st, k, 0.0);
    p = r + ctl[1] * p;
    out->iterations = k + 1;
    if (options.record_iterates) out->iterates.push_back(z);
    if (ctl[2] != 0.0) out->z = z;
    if (st == kCgDone) {
      out->converged = true;
      break;
    }
  }
}

FedRainFederation::FedRainFederation(const FederationInput& input,
                                     const SessionConfig& config)
    : Federation(Protocol::kFedRain, input, config) {}

Vector FedRainFederation::TrainingProbabilities(const Vector& partial_b) const {
  const PartyState& a = party(Party::kA);
  RequireLength(partial_b, a.train.rows(), "B's training scores");
  return Sigmoids(a.train.x * a.theta + partial_b);
}

void FedRainFederation::Train(int rounds, double learning_rate) {
  if (rounds < 0) throw InvalidArgumentError("negative round count");
  if (n_train() == 0) throw InvalidArgumentError("training set is empty");
  budget_.AuthorizeFedRainTraining(rounds, n_train(), mb());
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  const double n = static_cast<double>(n_train());
  RunPhase(
      "fedrain.train",
      [&](Endpoint& ep) {
        for (int k = 0; k < rounds; ++k) {
          Vector sb = ep.Recv(kind::kFrTrainScore).AsVector();
          Vector res = a.y - TrainingProbabilities(sb);
          ep.Send(kind::kFrTrainEncResidual,
                  Payload::Ciphertexts(a.session.own().EncryptVector(ToStd(res))));
          a.theta -= learning_rate * (a.train.x.transpose() * (-res) / n);
          auto masked = ep.Recv(kind::kFrTrainEncMaskedGrad).AsCiphertexts();
          ep.Send(kind::kFrTrainMaskedGrad,
                  Payload::Vector(FromStd(a.session.decryptor().DecryptVector(masked))));
        }
        if (rounds > 0) a.Touch();
      },
      [&](Endpoint& ep) {
        PartySession& s = b.session;
        const Matrix& x = b.train.x;
        for (int k = 0; k < rounds; ++k) {
          ep.Send(kind::kFrTrainScore, Payload::Vector(x * b.theta));
          auto res = ep.Recv(kind::kFrTrainEncResidual).AsCiphertexts();
          if (static_cast<Eigen::Index>(res.size()) != x.rows()) {
            throw ProtocolError("residual vector has the wrong length");
          }
          const Vector eps = s.NoiseVector(x.cols());
          std::vector<he::Ciphertext> grad;
          for (Eigen::Index j = 0; j < x.cols(); ++j) {
            Vector w = -x.col(j) / n;
            grad.push_back(s.peer().AddPlain(s.peer().Dot(ToStd(w), res), eps[j]));
          }
          ep.Send(kind::kFrTrainEncMaskedGrad, Payload::Ciphertexts(std::move(grad)));
          Vector masked = ep.Recv(kind::kFrTrainMaskedGrad).AsVector();
          RequireLength(masked, x.cols(), "masked gradient");
          b.theta -= learning_rate * (masked - eps);
        }
        if (rounds > 0) b.Touch();
      });
}

query::PredictionTable FedRainFederation::Infer(InferenceSet which) {
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  query::PredictionTable table;
  RunPhase(
      which == InferenceSet::kQuery ? "fedrain.infer" : "fedrain.infer.holdout",
      [&](Endpoint& ep) {
        const LocalRows& rows = Rows(a, which);
        Vector sb = ep.Recv(kind::kFrInferScore).AsVector();
        if (sb.size() != rows.rows()) {
          throw ProtocolError("inference rows misaligned between parties");
        }
        table = query::PredictionTable::FromProbabilities(
            rows.ids, Sigmoids(rows.x * a.theta + sb));
      },
      [&](Endpoint& ep) {
        const LocalRows& rows = Rows(b, which);
        ep.Send(kind::kFrInferScore, Payload::Vector(rows.x * b.theta));
      });
  return table;
}

QueryStatus FedRainFederation::QueryGrad(const query::QuerySpec& spec,
                                         const query::Complaint& complaint) {
  spec.Validate();
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  budget_.AuthorizeFedRainDebug(n_train(),
                                static_cast<int64_t>(a.infer.ids.size()), mb());
  QueryStatus status;
  RunPhase(
      "fedrain.query_grad",
      [&](Endpoint& ep) {
        PartySession& s = a.session;
        const Matrix& x = a.infer.x;
        Vector sb = ep.Recv(kind::kFrQueryScore).AsVector();
        if (sb.size() != x.rows()) {
          throw ProtocolError("inference rows misaligned between parties");
        }
        const Vector h = Sigmoids(x * a.theta + sb);
        auto table = query::PredictionTable::FromProbabilities(a.infer.ids, h);
        status.value =
            query::SelectTarget(spec, query::ExecuteQuery(spec, table, a.table));
        status.direction = complaint.Direction(status.value);
        status.active = status.direction != 0;
        query::RelaxedQuery relaxed = query::RelaxQuery(spec, table, a.table);
        status.relaxed_value = relaxed.value;
        ep.Send(kind::kFrQueryStatus, Payload::Flag(status.active));
        if (!status.active) return;
        const Vector weights = query::ComplaintWeights(relaxed, status.direction);
        const Vector w =
            weights.array() * h.array() * (1.0 - h.array());
        a.query_grad = x.transpose() * w;
        a.query_grad_version = a.version;
        ep.Send(kind::kFrQueryEncWeights,
                Payload::Ciphertexts(s.own().EncryptVector(ToStd(w))));
        auto masked = ep.Recv(kind::kFrQueryEncMaskedGrad).AsCiphertexts();
        ep.Send(kind::kFrQueryMaskedGrad,
                Payload::Vector(FromStd(s.decryptor().DecryptVector(masked))));
      },
      [&](Endpoint& ep) {
        PartySession& s = b.session;
        const Matrix& x = b.infer.x;
        ep.Send(kind::kFrQueryScore, Payload::Vector(x * b.theta));
        if (!ep.Recv(kind::kFrQueryStatus).AsFlag()) return;
        auto w = ep.Recv(kind::kFrQueryEncWeights).AsCiphertexts();
        if (static_cast<Eigen::Index>(w.size()) != x.rows()) {
          throw ProtocolError("query weights have the wrong length");
        }
        const Vector eps = s.NoiseVector(x.cols());
        std::vector<he::Ciphertext> grad;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
          grad.push_back(s.peer().AddPlain(s.peer().Dot(Column(x, j), w), eps[j]));
        }
        ep.Send(kind::kFrQueryEncMaskedGrad, Payload::Ciphertexts(std::move(grad)));
        Vector masked = ep.Recv(kind::kFrQueryMaskedGrad).AsVector();
        RequireLength(masked, x.cols(), "masked query gradient");
        b.query_grad = masked - eps;
        b.query_grad_version = b.version;
      });
  return status;
}

linalg::SeparatedVector FedRainFederation::query_gradient() const {
  return {party(Party::kA).query_grad, party(Party::kB).query_grad};
}

linalg::SeparatedVector FedRainFederation::Hvp(
    const linalg::SeparatedVector& v) {
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  linalg::SeparatedVector out;
  RunPhase(
      "fedrain.hvp",
      [&](Endpoint& ep) {
        Vector h = TrainingProbabilities(ep.Recv(kind::kFrDebugTrainScore).AsVector());
        Vector r_diag = h.array() * (1.0 - h.array());
        out.a = HvpPartyA(ep, a, r_diag, v.a);
      },
      [&](Endpoint& ep) {
        ep.Send(kind::kFrDebugTrainScore, Payload::Vector(b.train.x * b.theta));
        out.b = HvpPartyB(ep, b, v.b);
      });
  return out;
}

FederatedCgResult FedRainFederation::Solve(const linalg::CgOptions& options) {
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  if (a.query_grad_version != a.version || b.query_grad_version != b.version) {
    throw StaleStateError("query gradient is missing or predates the model");
  }
  const int max_iter = options.max_iter > 0
                           ? options.max_iter
                           : linalg::DefaultCgMaxIter(ma() + mb());
  CgPartyResult ra, rb;
  RunPhase(
      "fedrain.qhinv",
      [&](Endpoint& ep) {
        Vector h = TrainingProbabilities(ep.Recv(kind::kFrDebugTrainScore).AsVector());
        Vector r_diag = h.array() * (1.0 - h.array());
        PartyHvp hvp = [&](Endpoint& e, const Vector& v) {
          return HvpPartyA(e, a, r_diag, v);
        };
        CgPartyA(ep, hvp, a.query_grad, options, max_iter, &ra);
        a.z = ra.z;
        a.z_version = a.version;
      },
      [&](Endpoint& ep) {
        ep.Send(kind::kFrDebugTrainScore, Payload::Vector(b.train.x * b.theta));
        PartyHvp hvp = [&](Endpoint& e, const Vector& v) {
          return HvpPartyB(e, b, v);
        };
        CgPartyB(ep, hvp, b.query_grad, options, max_iter, &rb);
        b.z = rb.z;
        b.z_version = b.version;
      });
  FederatedCgResult out;
  out.z = {ra.z, rb.z};
  out.iterations = ra.iterations;
  out.residual_norm = ra.residual_norm;
  out.converged = ra.converged;
  for (size_t k = 0; k < ra.iterates.size() && k < rb.iterates.size(); ++k) {
    out.iterates.push_back(linalg::SeparatedVector{ra.iterates[k], rb.iterates[k]}.Joined());
  }
  return out;
}

FederatedCgResult FedRainFederation::Solve(const linalg::SeparatedVector& rhs,
                                           const linalg::CgOptions& options) {
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  RequireLength(rhs.a, ma(), "right-hand side at A");
  RequireLength(rhs.b, mb(), "right-hand side at B");
  a.query_grad = rhs.a;
  a.query_grad_version = a.version;
  b.query_grad = rhs.b;
  b.query_grad_version = b.version;
  return Solve(options);
}

InfluenceReport FedRainFederation::Influence() {
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  Vector part_a, part_b;
  RunPhase(
      "fedrain.influence",
      [&](Endpoint& ep) {
        if (a.z_version != a.version) {
          throw StaleStateError("z predates the current model at A");
        }
        Vector h = TrainingProbabilities(ep.Recv(kind::kFrInfTrainScore).AsVector());
        Vector res = a.y - h;
        ep.Send(kind::kFrInfEncResidual,
                Payload::Ciphertexts(a.session.own().EncryptVector(ToStd(res))));
        part_a = res.cwiseProduct(RowDots(a.train.x, a.z));
        auto enc = ep.Recv(kind::kFrInfEncPartial).AsCiphertexts();
        part_b = FromStd(a.session.decryptor().DecryptVector(enc));
        RequireLength(part_b, part_a.size(), "B's partial scores");
      },
      [&](Endpoint& ep) {
        if (b.z_version != b.version) {
          throw StaleStateError("z predates the current model at B");
        }
        ep.Send(kind::kFrInfTrainScore, Payload::Vector(b.train.x * b.theta));
        auto res = ep.Recv(kind::kFrInfEncResidual).AsCiphertexts();
        const Vector t = RowDots(b.train.x, b.z);
        if (static_cast<Eigen::Index>(res.size()) != t.size()) {
          throw ProtocolError("residual vector has the wrong length");
        }
        std::vector<he::Ciphertext> out;
        out.reserve(res.size());
        for (size_t i = 0; i < res.size(); ++i) {
          out.push_back(b.session.peer().Mul(t[static_cast<Eigen::Index>(i)], res[i]));
        }
        ep.Send(kind::kFrInfEncPartial, Payload::Ciphertexts(std::move(out)));
      });
  last_part_a_ = part_a;
  last_part_b_ = part_b;
  return InfluenceReport::Make(a.train.ids, part_a + part_b,
                               InfluenceSource::kFedRain);
}

}  // namespace vfdebug::protocol
