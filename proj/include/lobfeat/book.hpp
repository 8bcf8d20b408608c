#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lobfeat/rational.hpp"

namespace lobfeat {

enum class EventKind : std::uint8_t { Submission, Cancellation, Execution };
enum class Side : std::uint8_t { Ask, Bid };

std::string_view to_string(EventKind k) noexcept;
std::string_view to_string(Side s) noexcept;

/// One row of a message book. Prices are integers in minimum-increment
/// units; timestamps are milliseconds since the epoch.
struct MessageEvent {
  std::int64_t timestamp = 0;
  std::int64_t order_id = 0;
  std::int64_t price = 0;
  std::int64_t quantity = 0;
  EventKind kind = EventKind::Submission;
  Side side = Side::Ask;

  friend bool operator==(const MessageEvent&, const MessageEvent&) = default;
};

/// Price units per tick; always >= 1.
class TickSize {
 public:
  explicit TickSize(std::int64_t value);
  std::int64_t value() const noexcept { return value_; }

 private:
  std::int64_t value_;
};

inline constexpr std::size_t kMaxDepth = 10;

struct PriceLevel {
  std::int64_t price = 0;
  std::int64_t quantity = 0;
  friend bool operator==(const PriceLevel&, const PriceLevel&) = default;
};

enum SnapshotFlag : std::uint8_t {
  kOneSided = 1u << 0,  // at least one side empty: mid and spread absent
  kCrossed = 1u << 1,   // best ask <= best bid: mid and spread absent
};

/// Book state after one event, truncated to `depth` levels per side.
/// Empty levels are absent (never stored with zero quantity).
struct BookSnapshot {
  std::int64_t timestamp = 0;
  std::array<PriceLevel, kMaxDepth> ask_levels{};
  std::array<PriceLevel, kMaxDepth> bid_levels{};
  std::uint8_t ask_count = 0;
  std::uint8_t bid_count = 0;
  std::uint8_t flags = 0;
  std::optional<Rational> mid_price;
  std::optional<std::int64_t> spread;

  std::span<const PriceLevel> asks() const { return {ask_levels.data(), ask_count}; }
  std::span<const PriceLevel> bids() const { return {bid_levels.data(), bid_count}; }
  bool two_sided() const noexcept { return flags == 0; }

  friend bool operator==(const BookSnapshot&, const BookSnapshot&) = default;
};

/// (best ask + best bid) / 2. Throws DomainError on a one-sided or crossed book.
Rational mid_price(const BookSnapshot& snap);

/// (ask_l + bid_l) / 2 for l in 2..=10. Level 1 is rejected: use mid_price.
Rational deep_mid_price(const BookSnapshot& snap, int level);

enum class OverflowPolicy {
  Clamp,   // clamp the removal to what rests, record a warning
  Strict,  // throw ReplayError
};

struct ReplayDiagnostics {
  std::size_t clamped = 0;         // removals larger than the resting quantity
  std::size_t unknown_orders = 0;  // id not tracked, fell back to the level
  std::size_t missing_levels = 0;  // no resting quantity at the price at all
  std::size_t crossed = 0;         // snapshots flagged kCrossed
  std::vector<std::string> warnings;  // first kMaxWarnings messages

  static constexpr std::size_t kMaxWarnings = 64;
  void warn(std::string msg);
};

/// Aggregated two-sided book with per-order tracking keyed by
/// (order_id, side, price). Cancellations and executions decrement the
/// tracked order; an untracked id falls back to decrementing the price
/// level on the event's side.
class OrderBook {
 public:
  explicit OrderBook(OverflowPolicy policy = OverflowPolicy::Clamp)
      : policy_(policy) {}

  /// Adds resting liquidity without an event, e.g. a start-of-day image.
  void seed(Side side, std::int64_t price, std::int64_t quantity,
            std::optional<std::int64_t> order_id = std::nullopt);

  void apply(const MessageEvent& ev);

  BookSnapshot snapshot(std::int64_t timestamp, std::size_t depth = kMaxDepth) const;

  std::int64_t total_quantity(Side side) const;
  const ReplayDiagnostics& diagnostics() const noexcept { return diag_; }

 private:
  struct OrderKey {
    std::int64_t id;
    Side side;
    std::int64_t price;
    auto operator<=>(const OrderKey&) const = default;
  };

  void add_level(Side side, std::int64_t price, std::int64_t qty);
  std::int64_t remove_level(Side side, std::int64_t price, std::int64_t qty);
  void remove(const MessageEvent& ev);
  void overflow(const MessageEvent& ev, std::int64_t resting);

  OverflowPolicy policy_;
  std::map<std::int64_t, std::int64_t> asks_;
  std::map<std::int64_t, std::int64_t, std::greater<>> bids_;
  std::map<OrderKey, std::int64_t> orders_;
  ReplayDiagnostics diag_;
};

/// Replays `events` and returns one snapshot per event.
std::vector<BookSnapshot> build_book(std::span<const MessageEvent> events,
                                     std::size_t depth = kMaxDepth,
                                     OverflowPolicy policy = OverflowPolicy::Clamp,
                                     ReplayDiagnostics* diagnostics = nullptr);

/// Same, starting from a pre-seeded book (which is consumed).
std::vector<BookSnapshot> build_book(OrderBook book,
                                     std::span<const MessageEvent> events,
                                     std::size_t depth = kMaxDepth,
                                     ReplayDiagnostics* diagnostics = nullptr);

}  // namespace lobfeat
