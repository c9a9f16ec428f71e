#include <gtest/gtest.h>

#include "calkin/json_io.hpp"
#include "calkin/random.hpp"

using namespace calkin;
using calkin::json::Json;

namespace {

Rational q(long n, long d = 1) { return make_rational(n, d); }

}  // namespace

TEST(Json, RationalsAreStrings) {
  EXPECT_EQ(json::rational(q(3, 6)).get<std::string>(), "1/2");
  EXPECT_EQ(json::rational(q(4)).get<std::string>(), "4/1");
  EXPECT_EQ(json::to_rational(Json("-7/14")), q(-1, 2));
  EXPECT_EQ(json::to_rational(Json(5)), 5);
  EXPECT_EQ(json::to_rational(Json(0.25)), q(1, 4));
  EXPECT_EQ(json::to_rational(Json("0.125")), q(1, 8));
  EXPECT_THROW(json::to_rational(Json(true)), Error);
}

TEST(Json, FloatsKeepSeventeenDigits) {
  const double v = 0.1 + 0.2;
  EXPECT_EQ(json::real(v).get<double>(), v);
  EXPECT_EQ(json::real(HUGE_VAL).get<std::string>(), "inf");
}

TEST(Json, SequencesRoundTrip) {
  Rng g(91);
  for (int t = 0; t < 100; ++t) {
    DyadicSequence x = random_sequence(g);
    Json j = json::to_json(x);
    EXPECT_EQ(json::sequence_from(Json::parse(j.dump())), x);
  }
}

TEST(Json, SequenceInputShorthands) {
  Json j = Json::parse(R"({"lo": 0, "values": ["3", 1, "2/1"], "right": {"kind": "const", "c": "1/2"}})");
  DyadicSequence x = json::sequence_from(j);
  EXPECT_EQ(x.at(0), 3);
  EXPECT_EQ(x.at(100), q(1, 2));
  EXPECT_THROW(json::sequence_from(Json::parse(R"({"lo": 0, "hi": 4, "values": ["1"]})")), Error);
  EXPECT_THROW(json::sequence_from(Json::parse(R"({"values": ["1"]})")), Error);
}

TEST(Json, StepFunctionsRoundTrip) {
  Rng g(92);
  StepOptions o;
  o.constant_tail = true;
  for (int t = 0; t < 100; ++t) {
    StepFunction f = random_step(g, o);
    EXPECT_EQ(json::step_from(Json::parse(json::to_json(f).dump())), f);
  }
  StepFunction tails(ZeroTail{q(1), q(2), 0}, {q(1), q(2)}, {q(3)}, InfinityTail::Geometric(q(1), q(1, 2), 0));
  EXPECT_EQ(json::step_from(json::to_json(tails)), tails);
}

TEST(Json, OperatorsRoundTrip) {
  Rng g(93);
  for (int t = 0; t < 50; ++t) {
    Operator x = random_block_operator(g);
    Operator y = json::operator_from(Json::parse(json::to_json(x).dump()));
    EXPECT_EQ(json::to_json(y), json::to_json(x));
    EXPECT_EQ(trace(y).re, trace(x).re);
  }
}

TEST(Json, DiagonalShorthandAndErrors) {
  Operator x = json::operator_from(Json::parse(R"({"kind": "block", "blocks": [{"d": 4, "diag": [8, 4, 2, 1]}]})"));
  EXPECT_EQ(trace(x).re, Extended(q(15)));
  try {
    json::operator_from(Json::parse(R"({"kind": "block", "blocks": [{"d": 2, "diag": [1]}]})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
  EXPECT_THROW(json::operator_from(Json::parse(R"({"kind": "sparse"})")), Error);
}

TEST(Json, RepresentationsRoundTripAndValidate) {
  Rng g(94);
  BlockOptions o;
  o.diagonal = true;
  for (int t = 0; t < 40; ++t) {
    DyadicRep rep = decompose(random_block_operator(g, o));
    DyadicRep back = json::rep_from(Json::parse(json::to_json(rep).dump()));
    EXPECT_EQ(back.coefficients, rep.coefficients);
    EXPECT_EQ(back.residuals, rep.residuals);
    EXPECT_TRUE(validate(back).ok());
  }
}

TEST(Json, TamperedRepresentationFailsValidation) {
  Operator x = json::operator_from(Json::parse(R"({"kind": "block", "blocks": [{"d": 4, "diag": [8, 4, 2, 1]}]})"));
  Json j = json::to_json(decompose(x));
  j["residuals"]["values"][1] = "1/1";
  EXPECT_FALSE(validate(json::rep_from(j)).ok());
}

TEST(Json, Results) {
  EXPECT_EQ(json::to_json(EvalResult::exact_value(q(15))).dump(), R"({"defined":true,"value":"15/1","exact":true})");
  Json e = json::error_json(Error(ErrorCode::ParseError, "bad"));
  EXPECT_EQ(e["error"], "ParseError");
}
