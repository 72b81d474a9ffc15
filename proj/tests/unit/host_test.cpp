#include <doctest.h>

#include <deque>

#include "qnsim/host/vm.hpp"

using namespace qnsim;
using namespace qnsim::host;

namespace {

struct FakeCtx : HostContext {
    std::map<int, std::deque<i32>> inboxes;
    std::vector<std::pair<int, std::vector<i32>>> sent;

    void send_message(int socket, const std::vector<i32>& payload) override {
        sent.push_back({socket, payload});
    }
    std::optional<i32> try_recv(int socket) override {
        auto& q = inboxes[socket];
        if (q.empty()) return std::nullopt;
        i32 v = q.front();
        q.pop_front();
        return v;
    }
};

lang::Block parse_block(const std::string& body, lang::BlockType type = lang::BlockType::CL) {
    std::string text = "META_START\nname: t\ncsockets: 0 -> peer\nMETA_END\n^b {type = " +
                       std::string(lang::block_type_name(type)) + "}:\n" + body +
                       "^next {type = CL}:\n  x = assign() : 0\n";
    lang::Program p = lang::parse_program(text, "test");
    return p.blocks[0];
}

} // namespace

TEST_CASE("host arithmetic: typing, wrapping, division") {
    lang::Block blk = parse_block(R"(
  a = assign() : 2147483647
  one = assign() : 1
  w = add(a, one)
  f = assign() : 0.5
  g = mul(f, a)
  q = div(a, one)
  neg = assign() : -7
  two = assign() : 2
  t = div(neg, two)
)");
    HostState st;
    FakeCtx ctx;
    exec_block(st, blk, ctx);
    CHECK(std::get<i32>(st.get("w")) == INT32_MIN);        // int wrapping
    CHECK(std::holds_alternative<float>(st.get("g")));     // float contaminates
    CHECK(std::get<i32>(st.get("t")) == -3);               // C-style truncation

    lang::Block bad = parse_block("  z = assign() : 0\n  o = assign() : 1\n  d = div(o, z)\n");
    HostState st2;
    CHECK_THROWS_AS(exec_block(st2, bad, ctx), ExecError);
}

TEST_CASE("host vectors: construction, indexing, unpack") {
    lang::Block blk = parse_block(R"(
  a = assign() : 5
  v<> = vector(a, 7, 9)
  e = index(v, 2)
  tuple<x, y, z> = unpack(v)
)");
    HostState st;
    FakeCtx ctx;
    exec_block(st, blk, ctx);
    CHECK(std::get<std::vector<i32>>(st.get("v")) == std::vector<i32>{5, 7, 9});
    CHECK(std::get<i32>(st.get("e")) == 9);
    CHECK(std::get<i32>(st.get("x")) == 5);
    CHECK(std::get<i32>(st.get("z")) == 9);

    lang::Block oob = parse_block("  v<> = vector(1, 2)\n  e = index(v, 5)\n");
    HostState st2;
    CHECK_THROWS_AS(exec_block(st2, oob, ctx), ExecError);

    lang::Block mism = parse_block("  v<> = vector(1, 2)\n  tuple<a, b, c> = unpack(v)\n");
    HostState st3;
    CHECK_THROWS_AS(exec_block(st3, mism, ctx), ExecError);
}

TEST_CASE("messages: scalar sends, vector trains, blocking receives") {
    lang::Block send_blk = parse_block(R"(
  m = assign() : 42
  send_cmsg(0, m)
  v<> = vector(7, 8)
  send_cmsg(0, v)
)");
    HostState st;
    FakeCtx ctx;
    exec_block(st, send_blk, ctx);
    REQUIRE(ctx.sent.size() == 2);
    CHECK(ctx.sent[0] == std::make_pair(0, std::vector<i32>{42}));
    CHECK(ctx.sent[1] == std::make_pair(0, std::vector<i32>{2, 7, 8})); // length-prefixed

    lang::Block recv_blk = parse_block("  m = recv_cmsg(0)\n", lang::BlockType::CC);
    HostState st2;
    FakeCtx ctx2;
    auto out = exec_instr(st2, recv_blk, 0, ctx2);
    CHECK(out.kind == InstrOutcome::Kind::Blocked);
    CHECK(out.socket == 0);
    ctx2.inboxes[0].push_back(19);
    out = exec_instr(st2, recv_blk, 0, ctx2);
    CHECK(out.kind == InstrOutcome::Kind::Advance);
    CHECK(std::get<i32>(st2.get("m")) == 19);
}

TEST_CASE("branches and returns") {
    lang::Block blk = parse_block(R"(
  a = assign() : 3
  b = assign() : 3
  beq(a, b, elsewhere)
  x = assign() : 1
)");
    HostState st;
    FakeCtx ctx;
    auto out = exec_block(st, blk, ctx);
    CHECK(out.kind == InstrOutcome::Kind::Jump);
    CHECK(out.target == "elsewhere");
    CHECK_FALSE(st.vars.count("x")); // skipped by the taken branch

    lang::Block not_taken = parse_block(R"(
  a = assign() : 3
  b = assign() : 4
  beq(a, b, elsewhere)
  x = assign() : 1
)");
    HostState st2;
    out = exec_block(st2, not_taken, ctx);
    CHECK(out.kind == InstrOutcome::Kind::Advance);
    CHECK(st2.vars.count("x"));

    lang::Block ret = parse_block(R"(
  m = assign() : 5
  v<> = vector(8, 9)
  return_result(m, v)
)");
    HostState st3;
    out = exec_block(st3, ret, ctx);
    CHECK(out.kind == InstrOutcome::Kind::Return);
    CHECK(st3.returned);
    CHECK(st3.results == std::vector<i32>{5, 8, 9}); // vectors flatten

    // teleport-style correction decoding: m = 2*m1 + m2
    lang::Block decode = parse_block(R"(
  m = assign() : 3
  two = assign() : 2
  m1 = div(m, two)
  tmp = mul(m1, two)
  m2 = sub(m, tmp)
  return_result(m1, m2)
)");
    HostState st4;
    exec_block(st4, decode, ctx);
    CHECK(st4.results == std::vector<i32>{1, 1});
}

TEST_CASE("undefined variables and stray quantum calls") {
    lang::Block blk = parse_block("  x = add(nope, 1)\n");
    HostState st;
    FakeCtx ctx;
    CHECK_THROWS_AS(exec_block(st, blk, ctx), ExecError);

    lang::Block ql = parse_block("  run_routine() : r\n", lang::BlockType::QL);
    HostState st2;
    CHECK_THROWS_AS(exec_instr(st2, ql, 0, ctx), InternalError);
}
