#include "lobfeat/book.hpp"

#include <algorithm>

#include "lobfeat/error.hpp"

namespace lobfeat {

std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::Submission: return "Submission";
    case EventKind::Cancellation: return "Cancellation";
    case EventKind::Execution: return "Execution";
  }
  return "?";
}

std::string_view to_string(Side s) noexcept {
  return s == Side::Ask ? "Ask" : "Bid";
}

TickSize::TickSize(std::int64_t value) : value_(value) {
  if (value < 1) throw DomainError("tick size must be >= 1");
}

Rational mid_price(const BookSnapshot& snap) {
  if (!snap.two_sided())
    throw DomainError("mid-price undefined: book is one-sided or crossed");
  return Rational(snap.ask_levels[0].price + snap.bid_levels[0].price, 2);
}

Rational deep_mid_price(const BookSnapshot& snap, int level) {
  if (level < 2 || level > static_cast<int>(kMaxDepth))
    throw DomainError("deep mid-price level must be in 2..=10 (use mid_price for level 1)");
  const auto l = static_cast<std::size_t>(level);
  if (snap.ask_count < l || snap.bid_count < l)
    throw DomainError("deep mid-price: book has fewer than " +
                      std::to_string(level) + " levels on a side");
  return Rational(snap.ask_levels[l - 1].price + snap.bid_levels[l - 1].price, 2);
}

void ReplayDiagnostics::warn(std::string msg) {
  if (warnings.size() < kMaxWarnings) warnings.push_back(std::move(msg));
}

namespace {

std::string describe(const MessageEvent& ev) {
  return std::string(to_string(ev.kind)) + " " + std::string(to_string(ev.side)) +
         " id=" + std::to_string(ev.order_id) + " px=" + std::to_string(ev.price) +
         " qty=" + std::to_string(ev.quantity) + " ts=" + std::to_string(ev.timestamp);
}

}  // namespace

void OrderBook::seed(Side side, std::int64_t price, std::int64_t quantity,
                     std::optional<std::int64_t> order_id) {
  if (price <= 0 || quantity <= 0)
    throw DomainError("seed: price and quantity must be positive");
  add_level(side, price, quantity);
  if (order_id) orders_[OrderKey{*order_id, side, price}] += quantity;
}

void OrderBook::add_level(Side side, std::int64_t price, std::int64_t qty) {
  if (side == Side::Ask)
    asks_[price] += qty;
  else
    bids_[price] += qty;
}

std::int64_t OrderBook::remove_level(Side side, std::int64_t price, std::int64_t qty) {
  auto drop = [&](auto& levels) -> std::int64_t {
    auto it = levels.find(price);
    if (it == levels.end()) return 0;
    const std::int64_t take = std::min(qty, it->second);
    it->second -= take;
    if (it->second == 0) levels.erase(it);
    return take;
  };
  return side == Side::Ask ? drop(asks_) : drop(bids_);
}

void OrderBook::overflow(const MessageEvent& ev, std::int64_t resting) {
  const std::string msg = describe(ev) + " exceeds resting quantity " +
                          std::to_string(resting);
  if (policy_ == OverflowPolicy::Strict) throw ReplayError(msg);
  ++diag_.clamped;
  diag_.warn("clamped: " + msg);
}

void OrderBook::remove(const MessageEvent& ev) {
  const OrderKey key{ev.order_id, ev.side, ev.price};
  if (auto it = orders_.find(key); it != orders_.end()) {
    std::int64_t take = ev.quantity;
    if (take > it->second) {
      overflow(ev, it->second);
      take = it->second;
    }
    it->second -= take;
    if (it->second == 0) orders_.erase(it);
    remove_level(ev.side, ev.price, take);
    return;
  }

  auto resting_at = [&]() -> std::int64_t {
    if (ev.side == Side::Ask) {
      auto it = asks_.find(ev.price);
      return it == asks_.end() ? 0 : it->second;
    }
    auto it = bids_.find(ev.price);
    return it == bids_.end() ? 0 : it->second;
  };
  const std::int64_t resting = resting_at();
  if (resting == 0) {
    const std::string msg = describe(ev) + " references no resting quantity";
    if (policy_ == OverflowPolicy::Strict) throw ReplayError(msg);
    ++diag_.missing_levels;
    diag_.warn("ignored: " + msg);
    return;
  }
  ++diag_.unknown_orders;
  diag_.warn("unknown order, level fallback: " + describe(ev));
  if (ev.quantity > resting) overflow(ev, resting);
  remove_level(ev.side, ev.price, ev.quantity);
}

void OrderBook::apply(const MessageEvent& ev) {
  if (ev.quantity < 0) throw DomainError("negative quantity: " + describe(ev));
  if (ev.quantity == 0) return;
  switch (ev.kind) {
    case EventKind::Submission:
      add_level(ev.side, ev.price, ev.quantity);
      orders_[OrderKey{ev.order_id, ev.side, ev.price}] += ev.quantity;
      break;
    case EventKind::Cancellation:
    case EventKind::Execution:
      remove(ev);
      break;
  }
}

BookSnapshot OrderBook::snapshot(std::int64_t timestamp, std::size_t depth) const {
  if (depth == 0 || depth > kMaxDepth)
    throw DomainError("depth must be in 1..=10");
  BookSnapshot s;
  s.timestamp = timestamp;
  for (auto it = asks_.begin(); it != asks_.end() && s.ask_count < depth; ++it)
    s.ask_levels[s.ask_count++] = {it->first, it->second};
  for (auto it = bids_.begin(); it != bids_.end() && s.bid_count < depth; ++it)
    s.bid_levels[s.bid_count++] = {it->first, it->second};
  if (s.ask_count == 0 || s.bid_count == 0) {
    s.flags |= kOneSided;
  } else if (s.ask_levels[0].price <= s.bid_levels[0].price) {
    s.flags |= kCrossed;
  } else {
    s.mid_price = Rational(s.ask_levels[0].price + s.bid_levels[0].price, 2);
    s.spread = s.ask_levels[0].price - s.bid_levels[0].price;
  }
  return s;
}

std::int64_t OrderBook::total_quantity(Side side) const {
  std::int64_t total = 0;
  if (side == Side::Ask)
    for (const auto& [px, q] : asks_) total += q;
  else
    for (const auto& [px, q] : bids_) total += q;
  return total;
}

std::vector<BookSnapshot> build_book(OrderBook book,
                                     std::span<const MessageEvent> events,
                                     std::size_t depth,
                                     ReplayDiagnostics* diagnostics) {
  std::vector<BookSnapshot> out;
  out.reserve(events.size());
  std::size_t crossed = 0;
  for (const auto& ev : events) {
    book.apply(ev);
    out.push_back(book.snapshot(ev.timestamp, depth));
    if (out.back().flags & kCrossed) ++crossed;
  }
  if (diagnostics) {
    *diagnostics = book.diagnostics();
    diagnostics->crossed = crossed;
  }
  return out;
}

std::vector<BookSnapshot> build_book(std::span<const MessageEvent> events,
                                     std::size_t depth, OverflowPolicy policy,
                                     ReplayDiagnostics* diagnostics) {
  return build_book(OrderBook(policy), events, depth, diagnostics);
}

}  // namespace lobfeat
