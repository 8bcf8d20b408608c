#include "lobfeat/message_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lobfeat/error.hpp"

namespace lobfeat {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool to_int(std::string_view s, std::int64_t& v) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

std::vector<MessageEvent> parse_messages(std::istream& in, const ColumnSchema& schema) {
  static constexpr std::array<std::string_view, 6> kColumns = {
      "timestamp", "id", "price", "quantity", "event", "side"};
  std::vector<MessageEvent> events;
  std::vector<std::string> problems;
  std::size_t first_bad = 0;
  auto report = [&](std::size_t line, const std::string& what) {
    if (first_bad == 0) first_bad = line;
    if (problems.size() < 20)
      problems.push_back("line " + std::to_string(line) + ": " + what);
  };

  std::string raw;
  std::size_t lineno = 0;
  bool header_seen = !schema.header;
  std::int64_t last_ts = INT64_MIN;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const auto fields = split(line, schema.delimiter);
    if (!header_seen) {
      bool ok = fields.size() == kColumns.size();
      for (std::size_t i = 0; ok && i < kColumns.size(); ++i) ok = iequals(fields[i], kColumns[i]);
      if (!ok)
        throw ParseError("line " + std::to_string(lineno) +
                             ": header does not match schema '" + kMessageHeader + "'",
                         lineno);
      header_seen = true;
      continue;
    }
    if (fields.size() != kColumns.size()) {
      report(lineno, "expected 6 fields, got " + std::to_string(fields.size()));
      continue;
    }
    MessageEvent ev;
    if (!to_int(fields[0], ev.timestamp)) { report(lineno, "bad timestamp"); continue; }
    if (!to_int(fields[1], ev.order_id)) { report(lineno, "bad id"); continue; }
    if (!to_int(fields[2], ev.price) || ev.price <= 0) {
      report(lineno, "price must be a positive integer");
      continue;
    }
    if (!to_int(fields[3], ev.quantity) || ev.quantity < 0) {
      report(lineno, "quantity must be a non-negative integer");
      continue;
    }
    if (iequals(fields[4], "Submission")) ev.kind = EventKind::Submission;
    else if (iequals(fields[4], "Cancellation")) ev.kind = EventKind::Cancellation;
    else if (iequals(fields[4], "Execution")) ev.kind = EventKind::Execution;
    else { report(lineno, "unknown event '" + std::string(fields[4]) + "'"); continue; }
    if (iequals(fields[5], "Ask")) ev.side = Side::Ask;
    else if (iequals(fields[5], "Bid")) ev.side = Side::Bid;
    else { report(lineno, "unknown side '" + std::string(fields[5]) + "'"); continue; }
    if (ev.timestamp < last_ts) {
      report(lineno, "timestamp " + std::to_string(ev.timestamp) +
                         " precedes previous " + std::to_string(last_ts));
      continue;
    }
    last_ts = ev.timestamp;
    events.push_back(ev);
  }
  if (in.bad()) throw Error("I/O failure while reading message book");
  if (!problems.empty()) {
    std::string msg = "malformed message book:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ParseError(msg, first_bad);
  }
  return events;
}

std::vector<MessageEvent> parse_message_file(const std::filesystem::path& path,
                                             const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open message file " + path.string());
  try {
    return parse_messages(in, schema);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void write_messages(std::ostream& out, std::span<const MessageEvent> events) {
  out << kMessageHeader << '\n';
  for (const auto& ev : events)
    out << ev.timestamp << ',' << ev.order_id << ',' << ev.price << ','
        << ev.quantity << ',' << to_string(ev.kind) << ',' << to_string(ev.side) << '\n';
}

void write_message_file(const std::filesystem::path& path,
                        std::span<const MessageEvent> events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_messages(out, events);
}

void write_snapshots_csv(std::ostream& out, std::span<const BookSnapshot> snaps,
                         std::size_t depth) {
  out << "timestamp,mid_price,spread";
  for (std::size_t l = 1; l <= depth; ++l)
    out << ",ask_price_" << l << ",ask_qty_" << l << ",bid_price_" << l << ",bid_qty_" << l;
  out << '\n';
  for (const auto& s : snaps) {
    out << s.timestamp << ',';
    if (s.mid_price) out << s.mid_price->str();
    out << ',';
    if (s.spread) out << *s.spread;
    for (std::size_t l = 0; l < depth; ++l) {
      for (const auto& [levels, count] :
           {std::pair{&s.ask_levels, s.ask_count}, std::pair{&s.bid_levels, s.bid_count}}) {
        if (l < count)
          out << ',' << (*levels)[l].price << ',' << (*levels)[l].quantity;
        else
          out << ",,";
      }
    }
    out << '\n';
  }
}

namespace {

void put_u(std::ostream& out, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, bytes);
}

std::uint64_t get_u(std::istream& in, int bytes) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), bytes))
    throw ParseError("snapshot binary: truncated input", 0);
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t(buf[i]) << (8 * i);
  return v;
}

constexpr char kMagic[8] = {'L', 'O', 'B', 'S', 'N', 'A', 'P', '\0'};

}  // namespace

void write_snapshots_binary(std::ostream& out, std::span<const BookSnapshot> snaps,
                            std::size_t depth) {
  if (depth == 0 || depth > kMaxDepth) throw DomainError("depth must be in 1..=10");
  out.write(kMagic, sizeof kMagic);
  put_u(out, kSnapshotBinaryVersion, 2);
  put_u(out, depth, 2);
  put_u(out, 0, 4);
  put_u(out, snaps.size(), 8);
  for (const auto& s : snaps) {
    put_u(out, static_cast<std::uint64_t>(s.timestamp), 8);
    const std::int64_t twice_mid =
        s.mid_price ? s.ask_levels[0].price + s.bid_levels[0].price : 0;
    put_u(out, static_cast<std::uint64_t>(twice_mid), 8);
    put_u(out, static_cast<std::uint64_t>(s.spread.value_or(0)), 8);
    put_u(out, s.flags, 1);
    put_u(out, std::min<std::size_t>(s.ask_count, depth), 1);
    put_u(out, std::min<std::size_t>(s.bid_count, depth), 1);
    put_u(out, 0, 5);
    for (const auto* levels : {&s.ask_levels, &s.bid_levels})
      for (std::size_t l = 0; l < depth; ++l) {
        put_u(out, static_cast<std::uint64_t>((*levels)[l].price), 8);
        put_u(out, static_cast<std::uint64_t>((*levels)[l].quantity), 8);
      }
  }
}

std::vector<BookSnapshot> read_snapshots_binary(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kMagic))
    throw ParseError("snapshot binary: bad magic", 0);
  const auto version = get_u(in, 2);
  if (version != kSnapshotBinaryVersion)
    throw ParseError("snapshot binary: unsupported version " + std::to_string(version), 0);
  const auto depth = static_cast<std::size_t>(get_u(in, 2));
  if (depth == 0 || depth > kMaxDepth) throw ParseError("snapshot binary: bad depth", 0);
  get_u(in, 4);
  const auto count = get_u(in, 8);
  std::vector<BookSnapshot> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) {
    BookSnapshot s;
    s.timestamp = static_cast<std::int64_t>(get_u(in, 8));
    const auto twice_mid = static_cast<std::int64_t>(get_u(in, 8));
    const auto spread = static_cast<std::int64_t>(get_u(in, 8));
    s.flags = static_cast<std::uint8_t>(get_u(in, 1));
    s.ask_count = static_cast<std::uint8_t>(get_u(in, 1));
    s.bid_count = static_cast<std::uint8_t>(get_u(in, 1));
    get_u(in, 5);
    if (s.ask_count > depth || s.bid_count > depth)
      throw ParseError("snapshot binary: level count exceeds depth", 0);
    for (auto* levels : {&s.ask_levels, &s.bid_levels})
      for (std::size_t l = 0; l < depth; ++l) {
        (*levels)[l].price = static_cast<std::int64_t>(get_u(in, 8));
        (*levels)[l].quantity = static_cast<std::int64_t>(get_u(in, 8));
      }
    if (s.flags == 0) {
      s.mid_price = Rational(twice_mid, 2);
      s.spread = spread;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace lobfeat
