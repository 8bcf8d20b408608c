#include <doctest.h>

#include <map>
#include <random>

#include "lobfeat/book.hpp"
#include "lobfeat/error.hpp"

using namespace lobfeat;

namespace {

MessageEvent ev(std::int64_t ts, std::int64_t id, std::int64_t px, std::int64_t q, EventKind k,
                Side s) {
  return MessageEvent{ts, id, px, q, k, s};
}

BookSnapshot two_sided(std::int64_t ask, std::int64_t bid) {
  BookSnapshot s;
  s.ask_levels[0] = {ask, 1};
  s.bid_levels[0] = {bid, 1};
  s.ask_count = s.bid_count = 1;
  return s;
}

}  // namespace

TEST_CASE("single ask into an empty book is one-sided") {
  OrderBook book;
  book.apply(ev(1, 1, 100, 50, EventKind::Submission, Side::Ask));
  const auto snap = book.snapshot(1);
  REQUIRE(snap.asks().size() == 1);
  CHECK(snap.asks()[0] == PriceLevel{100, 50});
  CHECK(snap.bids().empty());
  CHECK((snap.flags & kOneSided) != 0);
  CHECK_FALSE(snap.mid_price.has_value());
  CHECK_THROWS_AS(mid_price(snap), DomainError);
}

TEST_CASE("submit then cancel restores the previous book") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> px(90, 110), q(1, 500);
  OrderBook book;
  for (int i = 0; i < 50; ++i) {
    const auto p = px(rng);
    book.apply(ev(i, i, p, q(rng), EventKind::Submission, p >= 100 ? Side::Ask : Side::Bid));
  }
  const auto before = book.snapshot(0);
  for (int i = 0; i < 200; ++i) {
    const auto p = px(rng);
    const auto side = p >= 100 ? Side::Ask : Side::Bid;
    const auto qty = q(rng);
    book.apply(ev(0, 1000 + i, p, qty, EventKind::Submission, side));
    book.apply(ev(0, 1000 + i, p, qty, EventKind::Cancellation, side));
    REQUIRE(book.snapshot(0) == before);
  }
  CHECK(book.diagnostics().clamped == 0);
}

TEST_CASE("replay matches a per-level brute-force book") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::int64_t> px(1, 40), q(1, 30);
  std::uniform_int_distribution<int> kind(0, 2);
  std::vector<MessageEvent> events;
  std::map<std::int64_t, std::int64_t> ask_ref, bid_ref;
  std::vector<std::map<std::int64_t, std::int64_t>> asks_at, bids_at;
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> live;  // (id, price) -> qty
  for (int i = 0; i < 3000; ++i) {
    const bool ask = rng() & 1;
    auto& ref = ask ? ask_ref : bid_ref;
    const std::int64_t price = ask ? 100 + px(rng) : 100 - px(rng);
    const int k = live.empty() ? 0 : kind(rng);
    if (k == 0) {
      const auto qty = q(rng);
      events.push_back(ev(i, i, price, qty, EventKind::Submission, ask ? Side::Ask : Side::Bid));
      ref[price] += qty;
      live[{i, price}] = qty;
    } else {
      auto it = live.begin();
      std::advance(it, static_cast<long>(rng() % live.size()));
      const auto [id, p] = it->first;
      const bool is_ask = p > 100;
      std::uniform_int_distribution<std::int64_t> part(1, it->second);
      const auto qty = part(rng);
      events.push_back(ev(i, id, p, qty, k == 1 ? EventKind::Cancellation : EventKind::Execution,
                          is_ask ? Side::Ask : Side::Bid));
      auto& r = is_ask ? ask_ref : bid_ref;
      if ((r[p] -= qty) == 0) r.erase(p);
      if ((it->second -= qty) == 0) live.erase(it);
    }
    asks_at.push_back(ask_ref);
    bids_at.push_back(bid_ref);
  }
  ReplayDiagnostics diag;
  const auto snaps = build_book(events, kMaxDepth, OverflowPolicy::Strict, &diag);
  REQUIRE(snaps.size() == events.size());
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const auto& s = snaps[i];
    auto a = asks_at[i].begin();
    for (const auto& lvl : s.asks()) {
      REQUIRE(lvl == PriceLevel{a->first, a->second});
      ++a;
    }
    CHECK(s.asks().size() == std::min<std::size_t>(kMaxDepth, asks_at[i].size()));
    auto b = bids_at[i].rbegin();
    for (const auto& lvl : s.bids()) {
      REQUIRE(lvl == PriceLevel{b->first, b->second});
      ++b;
    }
    if (!asks_at[i].empty() && !bids_at[i].empty()) {
      const auto best_a = asks_at[i].begin()->first, best_b = bids_at[i].rbegin()->first;
      REQUIRE(s.mid_price == Rational(best_a + best_b, 2));
      REQUIRE(s.spread == best_a - best_b);
    }
  }
  CHECK(diag.clamped == 0);
}

TEST_CASE("message rows 1-3 reproduce the book rows on a seeded book") {
  OrderBook book;
  book.seed(Side::Ask, 126200, 400, 6505727);
  book.seed(Side::Ask, 126300, 300);
  book.seed(Side::Ask, 126600, 300, 6511469);
  book.seed(Side::Bid, 126100, 17, 6511439);
  book.seed(Side::Bid, 126000, 2800);
  const std::vector<MessageEvent> msgs = {
      ev(1275386347944, 6505727, 126200, 400, EventKind::Cancellation, Side::Ask),
      ev(1275386347981, 6505741, 126500, 300, EventKind::Submission, Side::Ask),
      ev(1275386347981, 6505741, 126500, 300, EventKind::Cancellation, Side::Ask),
  };
  const auto snaps = build_book(book, msgs);
  for (const auto& s : snaps) {
    CHECK(s.mid_price == Rational(126200));
    CHECK(s.spread == 200);
    CHECK(s.asks()[0] == PriceLevel{126300, 300});
    CHECK(s.bids()[0] == PriceLevel{126100, 17});
  }
}

TEST_CASE("overflow policies") {
  SUBCASE("clamp records a warning") {
    OrderBook book;
    book.apply(ev(0, 1, 100, 10, EventKind::Submission, Side::Ask));
    book.apply(ev(1, 1, 100, 25, EventKind::Execution, Side::Ask));
    CHECK(book.total_quantity(Side::Ask) == 0);
    CHECK(book.diagnostics().clamped == 1);
    CHECK_FALSE(book.diagnostics().warnings.empty());
  }
  SUBCASE("strict throws") {
    OrderBook book(OverflowPolicy::Strict);
    book.apply(ev(0, 1, 100, 10, EventKind::Submission, Side::Ask));
    CHECK_THROWS_AS(book.apply(ev(1, 1, 100, 25, EventKind::Execution, Side::Ask)), ReplayError);
    CHECK_THROWS_AS(book.apply(ev(1, 9, 200, 5, EventKind::Cancellation, Side::Bid)), ReplayError);
  }
  SUBCASE("unknown id falls back to the level") {
    OrderBook book;
    book.seed(Side::Bid, 99, 40);
    book.apply(ev(1, 77, 99, 15, EventKind::Cancellation, Side::Bid));
    CHECK(book.total_quantity(Side::Bid) == 25);
    CHECK(book.diagnostics().unknown_orders == 1);
  }
}

TEST_CASE("crossed books carry no mid") {
  OrderBook book;
  book.seed(Side::Ask, 100, 1);
  book.seed(Side::Bid, 101, 1);
  const auto s = book.snapshot(0);
  CHECK((s.flags & kCrossed) != 0);
  CHECK_FALSE(s.spread.has_value());
}

TEST_CASE("mid_price examples") {
  CHECK(mid_price(two_sided(126300, 126100)) == Rational(126200));
  CHECK(mid_price(two_sided(126100, 126000)) == Rational(126050));
  CHECK(mid_price(two_sided(102, 100)) == Rational(101));
}

TEST_CASE("deep_mid_price") {
  OrderBook book;
  for (int l = 0; l < 10; ++l) {
    book.seed(Side::Ask, 101 + 3 * l, 5);
    book.seed(Side::Bid, 99 - 2 * l, 5);
  }
  const auto s = book.snapshot(0);
  CHECK(deep_mid_price(s, 2) == Rational(104 + 97, 2));
  CHECK(deep_mid_price(s, 10) == Rational(101 + 27 + 99 - 18, 2));
  CHECK_THROWS_AS(deep_mid_price(s, 1), DomainError);

  BookSnapshot shallow = two_sided(102, 98);
  CHECK_THROWS_AS(deep_mid_price(shallow, 2), DomainError);
  shallow.ask_levels[1] = {104, 1};
  shallow.bid_levels[1] = {96, 1};
  shallow.ask_count = shallow.bid_count = 2;
  CHECK(deep_mid_price(shallow, 2) == Rational(100));
}

TEST_CASE("replay is deterministic and depth-truncated") {
  std::vector<MessageEvent> events;
  for (int i = 0; i < 30; ++i)
    events.push_back(ev(i, i, 100 + i, 1 + i, EventKind::Submission, Side::Ask));
  const auto a = build_book(events, 5), b = build_book(events, 5);
  CHECK(a == b);
  CHECK(a.back().asks().size() == 5);
  CHECK(a.back().asks()[4].price == 104);
  CHECK_THROWS_AS(build_book(events, 11), DomainError);
}
