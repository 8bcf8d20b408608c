#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "lobfeat/book.hpp"
#include "lobfeat/error.hpp"
#include "lobfeat/message_io.hpp"

using namespace lobfeat;

namespace {

std::vector<MessageEvent> parse(const std::string& text, ColumnSchema schema = {}) {
  std::istringstream in(text);
  return parse_messages(in, schema);
}

}  // namespace

TEST_CASE("parses a message row") {
  const auto evs = parse(
      "timestamp,id,price,quantity,event,side\n"
      "1275386347944, 6505727, 126200, 400, Cancellation, Ask\n");
  REQUIRE(evs.size() == 1);
  CHECK(evs[0] == MessageEvent{1275386347944, 6505727, 126200, 400, EventKind::Cancellation,
                               Side::Ask});
}

TEST_CASE("empty input gives no events") {
  CHECK(parse("").empty());
  CHECK(parse("", {',', false}).empty());
}

TEST_CASE("negative quantity names the line") {
  try {
    parse("timestamp,id,price,quantity,event,side\n1,1,100,5,Submission,Bid\n2,1,100,-5,Execution,Bid\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("schema violations") {
  CHECK_THROWS_AS(parse("ts,id,price,qty,event,side\n"), ParseError);
  CHECK_THROWS_AS(parse("timestamp,id,price,quantity,event,side\n1,2,3\n"), ParseError);
  CHECK_THROWS_AS(parse("timestamp,id,price,quantity,event,side\n1,2,3,4,Modify,Ask\n"), ParseError);
  CHECK_THROWS_AS(parse("timestamp,id,price,quantity,event,side\n1,2,3,4,Submission,Both\n"), ParseError);
  try {
    parse("timestamp,id,price,quantity,event,side\n5,1,100,1,Submission,Ask\n4,2,100,1,Submission,Ask\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("other delimiters and headerless files") {
  const auto evs = parse("7;1;50;2;execution;bid\n", {';', false});
  REQUIRE(evs.size() == 1);
  CHECK(evs[0].kind == EventKind::Execution);
  CHECK(evs[0].side == Side::Bid);
}

TEST_CASE("write then parse round-trips") {
  const std::vector<MessageEvent> evs = {
      {1, 10, 100, 5, EventKind::Submission, Side::Ask},
      {1, 11, 99, 7, EventKind::Submission, Side::Bid},
      {3, 10, 100, 5, EventKind::Execution, Side::Ask},
  };
  std::ostringstream out;
  write_messages(out, evs);
  CHECK(parse(out.str()) == evs);

  const auto path = std::filesystem::temp_directory_path() / "lobfeat_msg_roundtrip.csv";
  write_message_file(path, evs);
  CHECK(parse_message_file(path) == evs);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(parse_message_file(path), Error);
}

TEST_CASE("snapshot binary round-trip and csv layout") {
  const std::vector<MessageEvent> evs = {
      {1, 1, 101, 5, EventKind::Submission, Side::Ask},
      {2, 2, 99, 7, EventKind::Submission, Side::Bid},
      {3, 3, 102, 1, EventKind::Submission, Side::Ask},
  };
  const auto snaps = build_book(evs);
  std::stringstream bin;
  write_snapshots_binary(bin, snaps);
  CHECK(read_snapshots_binary(bin) == snaps);

  std::ostringstream csv;
  write_snapshots_csv(csv, snaps, 2);
  std::istringstream lines(csv.str());
  std::string header, first, second;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  CHECK(header == "timestamp,mid_price,spread,ask_price_1,ask_qty_1,bid_price_1,bid_qty_1,"
                  "ask_price_2,ask_qty_2,bid_price_2,bid_qty_2");
  CHECK(first == "1,,,101,5,,,,,,");
  CHECK(second == "2,100,2,101,5,99,7,,,,");

  std::stringstream junk("not a snapshot file");
  CHECK_THROWS_AS(read_snapshots_binary(junk), ParseError);
}
