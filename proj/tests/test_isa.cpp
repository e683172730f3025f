#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sqed/isa.hpp"

using namespace sqed;

TEST_CASE("parse two-line program") {
  Program p = parse_program("MOVI R1, 5\nHALT");
  REQUIRE(p.size() == 2);
  CHECK(p.code[0] == movi(1, 5));
  CHECK(p.code[1] == halt());
}

TEST_CASE("self-loop label resolves to index 0") {
  Program p = parse_program("loop: B loop");
  REQUIRE(p.size() == 1);
  CHECK(p.code[0].op == Op::B);
  CHECK(p.code[0].target == 0);
}

TEST_CASE("three-operand ALU parse") {
  Program p = parse_program("ADD R4, R5, R6");
  REQUIRE(p.size() == 1);
  CHECK(p.code[0] == alu(Op::Add, 4, 5, 6));
}

TEST_CASE("labels on own line and inline") {
  Program p = parse_program("start:\n  MOVI R2, -1\nend: HALT\n B end");
  CHECK(p.labels.at("start") == 0);
  CHECK(p.labels.at("end") == 1);
  CHECK(p.code[2].target == 1);
}

TEST_CASE("comments ignored") {
  Program p = parse_program("; whole line\nMOVI R1, 3 ; trailing\n");
  CHECK(p.size() == 1);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_program("MOVI R1\n"), doctest::Contains("line 1"), Error);
  CHECK_THROWS_WITH_AS(parse_program("NOP\nBOGUS R1, R2\n"), doctest::Contains("line 2"), Error);
  CHECK_THROWS_AS(parse_program("B nowhere\n"), Error);
  CHECK_THROWS_AS(parse_program("MOVI R32, 1\n"), Error);
  CHECK_THROWS_AS(parse_program("LD R1, [64]\n"), Error);
  CHECK_THROWS_AS(parse_program("HALTERR WAT\n"), Error);
  CHECK_THROWS_AS(parse_program("x: NOP\nx: NOP\n"), Error);
}

TEST_CASE("dup_map on ALU and memory ops") {
  IsaSpec spec;
  CHECK(dup_map(alu(Op::Add, 4, 5, 6), spec) == alu(Op::Add, 20, 21, 22));
  CHECK(dup_map(load(1, 7), spec) == load(17, 7 + spec.half_mem()));
  CHECK(dup_map(nop(), spec) == nop());
  CHECK(dup_map(store(3, 2), spec) == store(3 + spec.half_mem(), 18));
  CHECK(dup_map(movi(0, -9), spec) == movi(16, -9));
}

TEST_CASE("dup_map rejects control flow and dup-half operands") {
  IsaSpec spec;
  CHECK_THROWS_AS(dup_map(branch_always(0), spec), Error);
  CHECK_THROWS_AS(dup_map(halt(), spec), Error);
  CHECK_THROWS_AS(dup_map(alu(Op::Add, 20, 1, 2), spec), Error);
  CHECK_THROWS_AS(dup_map(load(1, 40), spec), Error);
}

TEST_CASE("is_control_flow") {
  CHECK(is_control_flow(branch_always(0)));
  CHECK(is_control_flow(halt()));
  CHECK(is_control_flow(halt_error(CheckClass::Plc)));
  CHECK_FALSE(is_control_flow(nop()));
  CHECK_FALSE(is_control_flow(store(1, 2)));
  CHECK_FALSE(is_control_flow(load(1, 2)));
}

TEST_CASE("dup_map injective over the non-control-flow domain") {
  IsaSpec spec;
  // Enumerate a representative operand grid and check distinct inputs map to
  // distinct outputs with all operands in the duplicate halves.
  std::vector<Instruction> domain;
  for (int rd = 0; rd < 16; rd += 5)
    for (int rs = 0; rs < 16; rs += 7)
      for (int rt = 0; rt < 16; rt += 3)
        domain.push_back(alu(Op::Sub, rd, rs, rt));
  for (int rd = 0; rd < 16; rd += 3)
    for (int a = 0; a < spec.half_mem(); a += 5) {
      domain.push_back(load(rd, a));
      domain.push_back(store(a, rd));
    }
  std::vector<Instruction> images;
  for (const auto& i : domain) {
    Instruction d = dup_map(i, spec);
    for (const auto& prev : images) CHECK_FALSE(prev == d);
    images.push_back(d);
    if (d.op == Op::Load || d.op == Op::Store) CHECK(spec.dup_addr(d.addr));
    if (is_alu(d)) {
      CHECK(spec.dup_reg(d.rd));
      CHECK(spec.dup_reg(d.rs));
      CHECK(spec.dup_reg(d.rt));
    }
  }
}

namespace {

Program random_program(std::mt19937_64& rng, int len) {
  Program p;
  auto pick = [&](int n) { return static_cast<int>(rng() % n); };
  for (int k = 0; k < len; ++k) {
    switch (pick(7)) {
      case 0: p.code.push_back(nop()); break;
      case 1: p.code.push_back(movi(pick(16), pick(100) - 50)); break;
      case 2: p.code.push_back(alu(static_cast<Op>(2 + pick(5)), pick(16), pick(16), pick(16))); break;
      case 3: p.code.push_back(load(pick(16), pick(32))); break;
      case 4: p.code.push_back(store(pick(32), pick(16))); break;
      case 5: p.code.push_back(branch_cmp(pick(2) ? Op::Beq : Op::Bne, pick(16), pick(16), pick(len)));
        break;
      default: p.code.push_back(branch_always(pick(len))); break;
    }
  }
  p.code.push_back(halt());
  return p;
}

}  // namespace

TEST_CASE("render/parse round trip") {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    Program p = random_program(rng, 1 + static_cast<int>(rng() % 30));
    Program q = parse_program(render_program(p));
    CHECK(p == q);
  }
}
