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


#include "vfdebug/frog.h"

#include <cmath>
#include <string>

#include "vfdebug/error.h"

namespace vfdebug::protocol {

namespace {

std::vector<double> ToStd(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void RequireLength(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw ProtocolError(std::string(what) + ": expected " + std::to_string(n) +
                        " values, got " + std::to_string(v.size()));
  }
}

model::ModelState LocalState(const PartyState& s) {
  model::ModelState m;
  m.kind = model::ModelKind::kFrog;
  if (s.id == Party::kA) {
    m.theta_a = s.theta;
    m.c1 = s.mask;
  } else {
    m.theta_b = s.theta;
    m.c2 = s.mask;
  }
  return m;
}

// Rows of ∂(c f)/∂[θ, c] for one party.
Matrix ScoreGrad(const PartyState& s, const Matrix& x, const Vector& f) {
  return s.id == Party::kA ? model::FrogScoreGradA(LocalState(s), x, f)
                           : model::FrogScoreGradB(LocalState(s), x, f);
}

void RequireResidual(const PartyState& s) {
  if (s.residual_version != s.version) {
    throw StaleStateError(std::string("party ") + PartyName(s.id) +
                          " has no training exchange at the current model");
  }
}

constexpr double kSymmetryTolerance = 1e-8;

}  // namespace

FrogFederation::FrogFederation(const FederationInput& input,
                               const SessionConfig& config)
    : Federation(Protocol::kFrog, input, config) {}

int FrogFederation::Train(const model::GdOptions& options) {
  if (options.rounds < 0) throw InvalidArgumentError("negative round count");
  if (n_train() == 0) throw InvalidArgumentError("training set is empty");
  budget_.RecordFrogTraining(options.rounds);
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  const double n = static_cast<double>(n_train());
  const double lr = options.learning_rate;
  int updates = 0;
  RunPhase(
      "frog.train",
      [&](Endpoint& ep) {
        const Matrix& x = a.train.x;
        double prev_loss = 0.0;
        int applied = 0;
        Vector r;
        for (int k = 0;; ++k) {
          Vector f1 = model::LogisticProbabilities(a.theta, x);
          Vector sa = a.mask * f1 - a.y;
          ep.Send(kind::kFgTrainScoreA, Payload::Vector(sa));
          Vector sb = ep.Recv(kind::kFgTrainScoreB).AsVector();
          RequireLength(sb, x.rows(), "B's training scores");
          r = sa + sb;
          const double loss = 0.5 * r.squaredNorm() / n;
          const bool stop = k >= options.rounds ||
                            (k > 0 && prev_loss - loss < options.min_improvement);
          ep.Send(kind::kFgTrainStop, Payload::Flag(stop));
          if (stop) break;
          prev_loss = loss;
          Vector w = r.array() * a.mask * f1.array() * (1.0 - f1.array());
          Vector grad = x.transpose() * w / n;
          double grad_c = r.dot(f1) / n;
          a.theta -= lr * grad;
          a.mask -= lr * grad_c;
          ++applied;
        }
        if (applied > 0) a.Touch();
        a.residual = r;
        a.residual_version = a.version;
        updates = applied;
      },
      [&](Endpoint& ep) {
        const Matrix& x = b.train.x;
        int applied = 0;
        Vector r;
        for (;;) {
          Vector f2 = model::LogisticProbabilities(b.theta, x);
          Vector sb = b.mask * f2;
          ep.Send(kind::kFgTrainScoreB, Payload::Vector(sb));
          Vector sa = ep.Recv(kind::kFgTrainScoreA).AsVector();
          RequireLength(sa, x.rows(), "A's training scores");
          r = sa + sb;
          if (ep.Recv(kind::kFgTrainStop).AsFlag()) break;
          Vector w = r.array() * b.mask * f2.array() * (1.0 - f2.array());
          Vector grad = x.transpose() * w / n;
          double grad_c = r.dot(f2) / n;
          b.theta -= lr * grad;
          b.mask -= lr * grad_c;
          ++applied;
        }
        if (applied > 0) b.Touch();
        b.residual = r;
        b.residual_version = b.version;
      });
  return updates;
}

query::PredictionTable FrogFederation::Infer(InferenceSet which) {
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  query::PredictionTable table;
  RunPhase(
      which == InferenceSet::kQuery ? "frog.infer" : "frog.infer.holdout",
      [&](Endpoint& ep) {
        const LocalRows& rows = Rows(a, which);
        Vector sb = ep.Recv(kind::kFgInferScore).AsVector();
        if (sb.size() != rows.rows()) {
          throw ProtocolError("inference rows misaligned between parties");
        }
        Vector f = a.mask * model::LogisticProbabilities(a.theta, rows.x) + sb;
        table = query::PredictionTable::FromScores(rows.ids, f);
      },
      [&](Endpoint& ep) {
        const LocalRows& rows = Rows(b, which);
        ep.Send(kind::kFgInferScore,
                Payload::Vector(b.mask * model::LogisticProbabilities(b.theta, rows.x)));
      });
  return table;
}

QueryStatus FrogFederation::QueryGrad(const query::QuerySpec& spec,
                                      const query::Complaint& complaint) {
  spec.Validate();
  budget_.AuthorizeFrogDebug(n_train(), parameter_count());
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  QueryStatus status;
  RunPhase(
      "frog.query_grad",
      [&](Endpoint& ep) {
        PartySession& s = a.session;
        const Matrix& x = a.infer.x;
        Vector sb = ep.Recv(kind::kFgQueryScore).AsVector();
        if (sb.size() != x.rows()) {
          throw ProtocolError("inference rows misaligned between parties");
        }
        auto enc_gb = ep.Recv(kind::kFgQueryEncGradB).AsCiphertexts();
        const Vector f1 = model::LogisticProbabilities(a.theta, x);
        auto table = query::PredictionTable::FromScores(a.infer.ids,
                                                        a.mask * f1 + sb);
        status.value =
            query::SelectTarget(spec, query::ExecuteQuery(spec, table, a.table));
        status.direction = complaint.Direction(status.value);
        status.active = status.direction != 0;
        query::RelaxedQuery relaxed = query::RelaxQuery(spec, table, a.table);
        status.relaxed_value = relaxed.value;
        ep.Send(kind::kFgQueryStatus, Payload::Flag(status.active));
        if (!status.active) return;
        const Eigen::Index rows = x.rows();
        if (rows > 0 && enc_gb.size() % static_cast<size_t>(rows) != 0) {
          throw ProtocolError("B's gradient rows have the wrong shape");
        }
        const Eigen::Index cols_b =
            rows > 0 ? static_cast<Eigen::Index>(enc_gb.size()) / rows : 0;
        const Vector weights = query::ComplaintWeights(relaxed, status.direction);
        a.randomizer = s.Randomizer();
        const Vector scaled = a.randomizer * weights;
        const Vector grad_a = ScoreGrad(a, x, f1).transpose() * scaled;
        std::vector<he::Ciphertext> out;
        for (Eigen::Index j = 0; j < grad_a.size(); ++j) {
          out.push_back(s.peer().Encrypt(grad_a[j]));
        }
        for (Eigen::Index k = 0; k < cols_b; ++k) {
          std::vector<he::Ciphertext> col;
          for (Eigen::Index i = 0; i < rows; ++i) {
            col.push_back(enc_gb[static_cast<size_t>(i * cols_b + k)]);
          }
          out.push_back(s.peer().Dot(ToStd(scaled), col));
        }
        ep.Send(kind::kFgQueryEncGrad, Payload::Ciphertexts(std::move(out)));
      },
      [&](Endpoint& ep) {
        PartySession& s = b.session;
        const Matrix& x = b.infer.x;
        const Vector f2 = model::LogisticProbabilities(b.theta, x);
        ep.Send(kind::kFgQueryScore, Payload::Vector(b.mask * f2));
        const Matrix g = ScoreGrad(b, x, f2);
        std::vector<he::Ciphertext> enc;
        enc.reserve(static_cast<size_t>(g.size()));
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          for (Eigen::Index k = 0; k < g.cols(); ++k) {
            enc.push_back(s.own().Encrypt(g(i, k)));
          }
        }
        ep.Send(kind::kFgQueryEncGradB,
                Payload::CipherMatrix(std::move(enc), g.rows(), g.cols()));
        if (!ep.Recv(kind::kFgQueryStatus).AsFlag()) return;
        auto q = ep.Recv(kind::kFgQueryEncGrad).AsCiphertexts();
        std::vector<double> plain = s.decryptor().DecryptVector(q);
        b.query_grad = Eigen::Map<Vector>(plain.data(),
                                          static_cast<Eigen::Index>(plain.size()));
        b.query_grad_version = b.version;
      });
  return status;
}

FrogSolveResult FrogFederation::Solve(const linalg::CgOptions& options) {
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  FrogSolveResult result;
  RunPhase(
      "frog.qhinv",
      [&](Endpoint& ep) {
        RequireResidual(a);
        PartySession& s = a.session;
        const Matrix& x = a.train.x;
        const Vector f1 = model::LogisticProbabilities(a.theta, x);
        const Matrix g = ScoreGrad(a, x, f1);
        auto masked = ep.Recv(kind::kFgQhinvEncMaskedGrads).AsCiphertexts();
        const Eigen::Index n = x.rows();
        if (n == 0 || masked.size() % static_cast<size_t>(n) != 0) {
          throw ProtocolError("B's masked gradients have the wrong shape");
        }
        const Eigen::Index cols_b = static_cast<Eigen::Index>(masked.size()) / n;
        std::vector<he::Ciphertext> hab;
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
          const std::vector<double> gj = ToStd(g.col(j));
          for (Eigen::Index k = 0; k < cols_b; ++k) {
            std::vector<he::Ciphertext> col;
            col.reserve(static_cast<size_t>(n));
            for (Eigen::Index i = 0; i < n; ++i) {
              col.push_back(masked[static_cast<size_t>(i * cols_b + k)]);
            }
            hab.push_back(s.peer().Dot(gj, col));
          }
        }
        // Sum of the encoded factors, so B's correction matches the
        // homomorphic products exactly.
        const he::FixedPointCodec& codec = s.peer().codec();
        Vector sums(g.cols());
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
          he::BigInt acc = 0;
          for (Eigen::Index i = 0; i < n; ++i) acc += codec.EncodeSigned(g(i, j), 1);
          sums[j] = codec.DecodeSigned(acc, 1);
        }
        const Matrix haa = model::FrogLocalHessian(g, x, f1, a.mask, a.residual);
        ep.Send(kind::kFgQhinvEncHab,
                Payload::CipherMatrix(std::move(hab), g.cols(), cols_b));
        ep.Send(kind::kFgQhinvSumGradA, Payload::Vector(sums));
        ep.Send(kind::kFgQhinvHaa, Payload::Matrix(haa));
      },
      [&](Endpoint& ep) {
        RequireResidual(b);
        if (b.query_grad_version != b.version) {
          throw StaleStateError("randomized query gradient predates the model");
        }
        PartySession& s = b.session;
        const Matrix& x = b.train.x;
        const Vector f2 = model::LogisticProbabilities(b.theta, x);
        const Matrix g = ScoreGrad(b, x, f2);
        std::vector<int64_t> grid;
        const Vector eps = s.NoiseVector(g.cols(), &grid);
        std::vector<he::Ciphertext> enc;
        enc.reserve(static_cast<size_t>(g.size()));
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          for (Eigen::Index k = 0; k < g.cols(); ++k) {
            enc.push_back(s.own().AddPlain(s.own().Encrypt(g(i, k)), eps[k]));
          }
        }
        ep.Send(kind::kFgQhinvEncMaskedGrads,
                Payload::CipherMatrix(std::move(enc), g.rows(), g.cols()));
        auto hab_enc = ep.Recv(kind::kFgQhinvEncHab).AsCiphertexts();
        const Vector sums = ep.Recv(kind::kFgQhinvSumGradA).AsVector();
        const Matrix haa = ep.Recv(kind::kFgQhinvHaa).AsMatrix();
        const Eigen::Index ma1 = haa.rows();
        if (haa.cols() != ma1 || sums.size() != ma1 ||
            static_cast<Eigen::Index>(hab_enc.size()) != ma1 * g.cols()) {
          throw ProtocolError("A's Hessian pieces have inconsistent shapes");
        }
        const double asym = (haa - haa.transpose()).cwiseAbs().maxCoeff();
        if (asym > kSymmetryTolerance * std::max(1.0, haa.cwiseAbs().maxCoeff())) {
          throw NumericError("Hessian assembly is not symmetric (max asymmetry " +
                             std::to_string(asym) + ")");
        }
        const he::FixedPointCodec& codec = s.decryptor().codec();
        Matrix hab(ma1, g.cols());
        for (Eigen::Index j = 0; j < ma1; ++j) {
          const he::BigInt sj = codec.EncodeSigned(sums[j], 1);
          for (Eigen::Index k = 0; k < g.cols(); ++k) {
            const he::Ciphertext& c = hab_enc[static_cast<size_t>(j * g.cols() + k)];
            he::BigInt v = s.decryptor().DecryptSigned(c);
            v -= sj * he::BigInt(static_cast<long>(grid[static_cast<size_t>(k)]));
            hab(j, k) = codec.DecodeSigned(v, c.scale_exp);
          }
        }
        const Matrix hbb = model::FrogLocalHessian(g, x, f2, b.mask, b.residual);
        model::HessianBlocks blocks{haa, hab, hbb};
        result.hessian = blocks.Assemble();
        RequireLength(b.query_grad, result.hessian.rows(), "randomized gradient");
        linalg::CgOptions opts = options;
        opts.damping = linalg::DefiniteDamping(result.hessian, options.damping);
        result.damping = opts.damping;
        result.cg = linalg::CgSolve(linalg::DenseOracle(result.hessian),
                                    b.query_grad, opts);
        b.z = result.cg.z;
        b.z_version = b.version;
      });
  return result;
}

InfluenceReport FrogFederation::Influence() {
  PartyState& a = party(Party::kA);
  PartyState& b = party(Party::kB);
  Vector part_a, part_b;
  RunPhase(
      "frog.influence",
      [&](Endpoint& ep) {
        RequireResidual(a);
        const Matrix& x = a.train.x;
        const Vector za = ep.Recv(kind::kFgInfZa).AsVector();
        RequireLength(za, x.cols() + 1, "z slice for A");
        const Vector f1 = model::LogisticProbabilities(a.theta, x);
        part_a = -a.residual.cwiseProduct(RowDots(ScoreGrad(a, x, f1), za));
        ep.Send(kind::kFgInfScoreA, Payload::Vector(part_a));
        part_b = ep.Recv(kind::kFgInfScoreB).AsVector();
        RequireLength(part_b, part_a.size(), "B's partial scores");
      },
      [&](Endpoint& ep) {
        RequireResidual(b);
        if (b.z_version != b.version) {
          throw StaleStateError("z predates the current model at B");
        }
        const Matrix& x = b.train.x;
        const Eigen::Index mb1 = x.cols() + 1;
        const Eigen::Index ma1 = b.z.size() - mb1;
        ep.Send(kind::kFgInfZa, Payload::Vector(b.z.head(ma1)));
        const Vector f2 = model::LogisticProbabilities(b.theta, x);
        Vector own = -b.residual.cwiseProduct(RowDots(ScoreGrad(b, x, f2), b.z.tail(mb1)));
        Vector theirs = ep.Recv(kind::kFgInfScoreA).AsVector();
        RequireLength(theirs, own.size(), "A's partial scores");
        ep.Send(kind::kFgInfScoreB, Payload::Vector(own));
      });
  last_part_a_ = part_a;
  last_part_b_ = part_b;
  return InfluenceReport::Make(a.train.ids, part_a + part_b,
                               InfluenceSource::kFrog,
                               !config_.noise.unit_randomizer);
}

}  // namespace vfdebug::protocol
