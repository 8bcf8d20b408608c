#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lobfeat/book.hpp"

namespace lobfeat {

/// Column layout of a message-book file. Columns are always
/// (timestamp, id, price, quantity, event, side) in that order.
struct ColumnSchema {
  char delimiter = ',';
  bool header = true;  // first non-empty line must name the six columns
};

inline constexpr const char* kMessageHeader = "timestamp,id,price,quantity,event,side";

/// Parses a message book. Every malformed row is reported (up to 20) in one
/// ParseError whose line() is the first offending line. Rows must have
/// price > 0, quantity >= 0 and non-decreasing timestamps.
std::vector<MessageEvent> parse_messages(std::istream& in, const ColumnSchema& schema = {});
std::vector<MessageEvent> parse_message_file(const std::filesystem::path& path,
                                             const ColumnSchema& schema = {});

void write_messages(std::ostream& out, std::span<const MessageEvent> events);
void write_message_file(const std::filesystem::path& path,
                        std::span<const MessageEvent> events);

// Snapshot text format: one header row then
//   timestamp,mid_price,spread,ask_price_1,ask_qty_1,bid_price_1,bid_qty_1,...
// for levels 1..depth. Absent values (one-sided book, missing level) are
// empty fields. Mid-prices print as exact decimals ("126050", "100.5").
void write_snapshots_csv(std::ostream& out, std::span<const BookSnapshot> snaps,
                         std::size_t depth = kMaxDepth);

// Snapshot binary format, all integers little-endian:
//   header  : "LOBSNAP\0" | u16 version (=1) | u16 depth | u32 reserved (=0) | u64 count
//   record  : i64 timestamp | i64 2*mid (0 if absent) | i64 spread (0 if absent)
//             | u8 flags | u8 ask_count | u8 bid_count | 5 zero bytes
//             | depth x (i64 price, i64 qty) asks | depth x (i64 price, i64 qty) bids
// Unused level slots are zero. Record size is 32 + 32*depth bytes.
inline constexpr std::uint16_t kSnapshotBinaryVersion = 1;

void write_snapshots_binary(std::ostream& out, std::span<const BookSnapshot> snaps,
                            std::size_t depth = kMaxDepth);
std::vector<BookSnapshot> read_snapshots_binary(std::istream& in);

}  // namespace lobfeat
