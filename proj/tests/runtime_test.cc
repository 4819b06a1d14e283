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

#include "vfdebug/runtime.h"

#include <gtest/gtest.h>

#include <sstream>

#include "vfdebug/error.h"

namespace vfdebug {
namespace {

// A short scripted exchange: A sends a vector, B answers with its sum, A
// sends a flag.
void PingA(Endpoint& ep) {
  Eigen::VectorXd v(3);
  v << 1, 2, 3;
  ep.Send("test.vec", Payload::Vector(v));
  double s = ep.Recv("test.sum").AsScalar();
  ep.Send("test.done", Payload::Flag(s == 6.0));
}

void PingB(Endpoint& ep) {
  Eigen::VectorXd v = ep.Recv("test.vec").AsVector();
  ep.Send("test.sum", Payload::Scalar(v.sum()));
  EXPECT_TRUE(ep.Recv("test.done").AsFlag());
}

class RuntimeTest : public ::testing::TestWithParam<ExecutionMode> {};

TEST_P(RuntimeTest, PingPong) {
  Transcript t;
  Runtime rt(GetParam(), &t);
  RunStats stats = rt.Run("ping", PingA, PingB);
  ASSERT_EQ(t.size(), 3u);
  std::vector<TranscriptRecord> r = t.records();
  EXPECT_EQ(r[0].kind, "test.vec");
  EXPECT_EQ(r[0].round, 1u);
  EXPECT_EQ(r[1].sender, Party::kB);
  EXPECT_EQ(r[1].round, 1u);
  EXPECT_EQ(r[2].round, 2u);
  EXPECT_EQ(r[0].phase, "ping");
  EXPECT_EQ(r[0].count, 3u);
  EXPECT_EQ(stats.party[0].messages_sent, 2u);
  EXPECT_EQ(stats.party[0].bytes_sent, t.BytesSent(Party::kA));
}

TEST_P(RuntimeTest, RootCauseIsRethrown) {
  Transcript t;
  Runtime rt(GetParam(), &t);
  auto a = [](Endpoint& ep) {
    ep.Send("x", Payload::Scalar(1));
    throw NumericError("boom");
  };
  auto b = [](Endpoint& ep) {
    ep.Recv("x");
    ep.Recv("never");
  };
  EXPECT_THROW(rt.Run("fail", a, b), NumericError);
}

TEST_P(RuntimeTest, KindMismatch) {
  Transcript t;
  Runtime rt(GetParam(), &t);
  auto a = [](Endpoint& ep) { ep.Send("x", Payload::Scalar(1)); };
  auto b = [](Endpoint& ep) { ep.Recv("y"); };
  EXPECT_THROW(rt.Run("mismatch", a, b), ProtocolError);
}

TEST_P(RuntimeTest, DeadlockDetected) {
  Transcript t;
  Runtime rt(GetParam(), &t);
  auto waits = [](Endpoint& ep) { ep.Recv("x"); };
  EXPECT_THROW(rt.Run("deadlock", waits, waits), ProtocolError);
}

TEST_P(RuntimeTest, UnreadMessagesRejected) {
  Transcript t;
  Runtime rt(GetParam(), &t);
  auto a = [](Endpoint& ep) { ep.Send("x", Payload::Scalar(1)); };
  auto b = [](Endpoint&) {};
  EXPECT_THROW(rt.Run("unread", a, b), ProtocolError);
}

TEST_P(RuntimeTest, ReusableAcrossRuns) {
  Transcript t;
  Runtime rt(GetParam(), &t);
  rt.Run("one", PingA, PingB);
  rt.Run("two", PingA, PingB);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.records()[5].round, 4u);
  EXPECT_EQ(rt.history().size(), 2u);
}

INSTANTIATE_TEST_SUITE_P(Modes, RuntimeTest,
                         ::testing::Values(ExecutionMode::kConcurrent,
                                           ExecutionMode::kDeterministic));

TEST(Runtime, DigestIndependentOfMode) {
  Transcript t1;
  Transcript t2;
  Runtime(ExecutionMode::kConcurrent, &t1).Run("p", PingA, PingB);
  Runtime(ExecutionMode::kDeterministic, &t2).Run("p", PingA, PingB);
  EXPECT_EQ(t1.Digest(), t2.Digest());
}

TEST(Runtime, DeterministicOrderIsStable) {
  // Both parties send before receiving; the baton keeps A's send first.
  auto a = [](Endpoint& ep) {
    ep.Send("a1", Payload::Scalar(1));
    ep.Send("a2", Payload::Scalar(2));
    ep.Recv("b1");
  };
  auto b = [](Endpoint& ep) {
    ep.Send("b1", Payload::Scalar(3));
    ep.Recv("a1");
    ep.Recv("a2");
  };
  for (int rep = 0; rep < 20; ++rep) {
    Transcript t;
    Runtime(ExecutionMode::kDeterministic, &t).Run("p", a, b);
    std::vector<TranscriptRecord> r = t.records();
    EXPECT_EQ(r[0].kind, "a1");
    EXPECT_EQ(r[1].kind, "a2");
    EXPECT_EQ(r[2].kind, "b1");
  }
}

TEST(Message, RoundtripAllPayloads) {
  he::KeyPair kp = he::GenerateKeyPair(256, he::KeyMode::kTest, 1);
  he::Encryptor enc(kp.pub, nullptr, 2);
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  std::vector<Payload> payloads = {
      Payload::Flag(true), Payload::Scalar(-2.5),
      Payload::Vector(Eigen::VectorXd::LinSpaced(4, 0, 1)),
      Payload::Matrix(m), Payload::Ids({5, -7, 9}),
      Payload::CipherMatrix({enc.Encrypt(1), enc.Encrypt(2)}, 1, 2)};
  for (const Payload& p : payloads) {
    Message msg{Party::kB, "k", "ph", p};
    Message back = DeserializeMessage(SerializeMessage(msg));
    EXPECT_EQ(back.sender, Party::kB);
    EXPECT_EQ(back.kind, "k");
    EXPECT_EQ(back.payload.type, p.type);
    EXPECT_EQ(back.payload.count(), p.count());
    EXPECT_EQ(back.payload.reals, p.reals);
    EXPECT_EQ(back.payload.ints, p.ints);
    EXPECT_EQ(back.payload.rows, p.rows);
  }
  EXPECT_EQ(Payload::Matrix(m).AsMatrix(), m);
  EXPECT_THROW(Payload::Scalar(1).AsVector(), ProtocolError);
  std::vector<uint8_t> bytes = SerializeMessage({Party::kA, "k", "", payloads[2]});
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(DeserializeMessage(bytes), ProtocolError);
}

TEST(TranscriptExport, RoundtripAndTruncation) {
  Transcript t;
  Runtime(ExecutionMode::kDeterministic, &t).Run("p", PingA, PingB);
  t.Close();
  std::stringstream out;
  ExportTranscriptJsonl(t, "test", out);
  std::string text = out.str();
  std::istringstream in(text);
  LoadedTranscript loaded = ImportTranscriptJsonl(in);
  EXPECT_TRUE(loaded.complete);
  EXPECT_EQ(loaded.protocol, "test");
  EXPECT_EQ(loaded.records.size(), 3u);
  EXPECT_EQ(loaded.digest, t.Digest());
  // Dropping the trailer leaves an incomplete transcript.
  std::string cut = text.substr(0, text.find_last_of('\n', text.size() - 2) + 1);
  std::istringstream in2(cut);
  EXPECT_FALSE(ImportTranscriptJsonl(in2).complete);
}

}  // namespace
}  // namespace vfdebug
