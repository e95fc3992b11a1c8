#pragma once

// Trade logs, order-book snapshots, fee schedules and reference prices.
//
// Trades CSV columns: id,exchange,symbol,date,price,amount,sell
// Snapshot CSV columns: symbol,date,type,price,amount  (type is bid or ask)
// Columns are located by header name, so extra columns and any order are fine.

#include "arblens/model.hpp"
#include "arblens/universe.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace arblens {

struct Trade {
    std::int64_t id = 0;
    std::string exchange;
    std::size_t pair = 0;  // index into the universe
    TimestampMs date = 0;
    Decimal price;
    Decimal amount;  // base-asset units
    bool sell = false;  // the aggressor sold the base asset

    friend bool operator==(const Trade&, const Trade&) = default;
};

/// Row-at-a-time trade reader; memory use is independent of file size.
class TradeReader {
public:
    TradeReader(std::istream& in, const Universe& universe);
    /// False at end of input. Throws Errc::Parse (with line number) or Errc::UnknownSymbol.
    bool next(Trade& out);
    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::istream* in_;
    const Universe* universe_;
    std::size_t line_ = 0;
    std::string buf_;
    std::vector<std::size_t> columns_;  // field position of id,exchange,symbol,date,price,amount,sell
    std::size_t width_ = 0;
};

/// Trades ordered by id with a per-pair (date, id) index. The universe must
/// outlive the stream.
class TradeStream {
public:
    TradeStream() = default;
    /// Sorts by id. Throws Errc::DuplicateId on repeated ids.
    TradeStream(const Universe& universe, std::vector<Trade> trades);

    [[nodiscard]] const Universe& universe() const { return *universe_; }
    [[nodiscard]] const std::vector<Trade>& trades() const { return trades_; }
    [[nodiscard]] std::size_t size() const { return trades_.size(); }
    [[nodiscard]] bool empty() const { return trades_.empty(); }
    [[nodiscard]] const Trade& operator[](std::size_t i) const { return trades_[i]; }

    /// Positions (into trades()) of every trade on `pair`, ordered by (date, id).
    [[nodiscard]] std::span<const std::size_t> on_pair(std::size_t pair) const;
    /// Trades on `pair` with from <= date < to.
    [[nodiscard]] std::span<const std::size_t> on_pair(std::size_t pair, TimestampMs from, TimestampMs to) const;
    /// Position of the trade with this id.
    [[nodiscard]] std::optional<std::size_t> position_of(std::int64_t id) const;

private:
    const Universe* universe_ = nullptr;
    std::vector<Trade> trades_;
    std::vector<std::vector<std::size_t>> by_pair_;
};

[[nodiscard]] TradeStream load_trades(std::istream& in, const Universe& universe);
[[nodiscard]] TradeStream load_trades(const std::filesystem::path& path, const Universe& universe);
void write_trades_header(std::ostream& out);
void write_trade(std::ostream& out, const Trade& t, const Universe& universe);
void write_trades(std::ostream& out, const TradeStream& stream);

struct BookSnapshot {
    std::size_t pair = 0;
    BookLevels levels;  // levels.timestamp is the snapshot date
};

/// Snapshots sorted by (pair, date). Crossed snapshots are kept and reported
/// in warnings().
class BookStream {
public:
    BookStream() = default;
    BookStream(std::vector<BookSnapshot> snapshots, std::vector<std::string> warnings);

    [[nodiscard]] const std::vector<BookSnapshot>& snapshots() const { return snapshots_; }
    [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }
    [[nodiscard]] std::size_t size() const { return snapshots_.size(); }
    [[nodiscard]] bool empty() const { return snapshots_.empty(); }

    /// Most recent snapshot of `pair` dated within [t - tolerance, t].
    [[nodiscard]] const BookSnapshot* latest(std::size_t pair, TimestampMs t, TimestampMs tolerance) const;

private:
    std::vector<BookSnapshot> snapshots_;
    std::vector<std::string> warnings_;
};

[[nodiscard]] BookStream load_books(std::istream& in, const Universe& universe);
[[nodiscard]] BookStream load_books(const std::filesystem::path& path, const Universe& universe);
void write_books_header(std::ostream& out);
void write_snapshot(std::ostream& out, const BookSnapshot& s, const Universe& universe);

enum class PriceSource { BookTop, Vwap, Unavailable };
[[nodiscard]] std::string_view price_source_name(PriceSource s);

struct ReferencePrice {
    std::size_t pair = 0;
    TimestampMs timestamp = 0;
    Decimal price;  // mid for BOOK_TOP, VWAP otherwise; zero when unavailable
    PriceSource source = PriceSource::Unavailable;
    std::optional<Decimal> bid;  // set for BOOK_TOP
    std::optional<Decimal> ask;

    [[nodiscard]] bool available() const { return source != PriceSource::Unavailable; }
    /// Proceeds of one unit of `dir.from` at this reference: the bid or the
    /// reciprocal ask from a snapshot, the VWAP (or its reciprocal) otherwise.
    [[nodiscard]] std::optional<Decimal> ratio(const Direction& dir) const;
};

inline constexpr TimestampMs kDefaultBookTolerance = 100;
inline constexpr TimestampMs kDefaultVwapWindow = 50;

/// Book top when a snapshot lies within `tolerance` before t, else the VWAP of
/// trades in [t - window, t) rounded to 8 places, else unavailable.
/// Throws Errc::InvalidArgument when window <= 0.
[[nodiscard]] ReferencePrice reference_price(std::size_t pair, TimestampMs t, TimestampMs window,
                                             const TradeStream& trades, const BookStream& books,
                                             TimestampMs tolerance = kDefaultBookTolerance);

struct FeeEntry {
    TimestampMs effective_from = 0;
    Decimal maker_bps;
    Decimal taker_bps;
    Decimal f;
};

/// Piecewise-constant fee levels over half-open intervals [from_i, from_{i+1}).
class FeeSchedule {
public:
    FeeSchedule() = default;
    /// Throws Errc::InvalidSchedule for empty, duplicate-start or negative entries.
    explicit FeeSchedule(std::vector<FeeEntry> entries);
    /// A single level starting at the epoch with the default rates.
    [[nodiscard]] static FeeSchedule constant(const FeeModel& model);

    [[nodiscard]] static FeeSchedule from_json(const nlohmann::json& doc);
    [[nodiscard]] static FeeSchedule load(const std::filesystem::path& path);
    [[nodiscard]] nlohmann::json to_json() const;

    [[nodiscard]] const std::vector<FeeEntry>& entries() const { return entries_; }
    /// Throws Errc::OutOfRange before the first entry.
    [[nodiscard]] FeeModel at(TimestampMs t) const;

private:
    std::vector<FeeEntry> entries_;
};

[[nodiscard]] inline FeeModel fee_at(TimestampMs t, const FeeSchedule& schedule) { return schedule.at(t); }

}  // namespace arblens
