#include "arblens/ingest.hpp"

#include "arblens/error.hpp"
#include "arblens/json_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace arblens {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

bool read_line(std::istream& in, std::string& buf, std::size_t& line) {
    while (std::getline(in, buf)) {
        ++line;
        if (!buf.empty() && buf.back() == '\r') buf.pop_back();
        if (!buf.empty()) return true;
    }
    return false;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
    throw Error(Errc::Parse, "line " + std::to_string(line) + ": " + what);
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::int64_t parse_int(std::string_view s, std::size_t line, const char* field) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        parse_error(line, std::string("bad ") + field + " '" + std::string(s) + "'");
    }
    return v;
}

Decimal parse_positive(std::string_view s, std::size_t line, const char* field) {
    auto d = Decimal::try_parse(s);
    if (!d) parse_error(line, std::string("bad ") + field + " '" + std::string(s) + "'");
    if (!d->is_positive()) parse_error(line, std::string(field) + " must be > 0");
    return *d;
}

bool parse_flag(std::string_view s, std::size_t line) {
    const std::string v = lower(s);
    if (v == "true" || v == "1" || v == "t") return true;
    if (v == "false" || v == "0" || v == "f") return false;
    parse_error(line, "bad sell flag '" + std::string(s) + "'");
}

// Maps the required column names to their position in the header row.
template <std::size_t N>
std::vector<std::size_t> locate_columns(const std::string& header, const std::array<const char*, N>& names,
                                        std::size_t line, std::size_t& width) {
    auto fields = split_csv(header);
    width = fields.size();
    std::vector<std::size_t> pos;
    for (const char* name : names) {
        auto it = std::find_if(fields.begin(), fields.end(), [&](std::string_view f) { return lower(f) == name; });
        if (it == fields.end()) parse_error(line, std::string("missing column '") + name + "'");
        pos.push_back(static_cast<std::size_t>(it - fields.begin()));
    }
    return pos;
}

constexpr std::array<const char*, 7> kTradeColumns{"id", "exchange", "symbol", "date", "price", "amount", "sell"};
constexpr std::array<const char*, 5> kBookColumns{"symbol", "date", "type", "price", "amount"};

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    return in;
}

}  // namespace

TradeReader::TradeReader(std::istream& in, const Universe& universe) : in_(&in), universe_(&universe) {
    if (read_line(*in_, buf_, line_)) columns_ = locate_columns(buf_, kTradeColumns, line_, width_);
}

bool TradeReader::next(Trade& out) {
    if (columns_.empty() || !read_line(*in_, buf_, line_)) return false;
    auto f = split_csv(buf_);
    if (f.size() != width_) {
        parse_error(line_, "expected " + std::to_string(width_) + " fields, got " + std::to_string(f.size()));
    }
    out.id = parse_int(f[columns_[0]], line_, "id");
    out.exchange = std::string(f[columns_[1]]);
    auto pair = universe_->index_of(f[columns_[2]]);
    if (!pair) {
        throw Error(Errc::UnknownSymbol, "line " + std::to_string(line_) + ": unknown symbol '" +
                                             std::string(f[columns_[2]]) + "'");
    }
    out.pair = *pair;
    out.date = parse_int(f[columns_[3]], line_, "date");
    out.price = parse_positive(f[columns_[4]], line_, "price");
    out.amount = parse_positive(f[columns_[5]], line_, "amount");
    out.sell = parse_flag(f[columns_[6]], line_);
    return true;
}

TradeStream::TradeStream(const Universe& universe, std::vector<Trade> trades)
    : universe_(&universe), trades_(std::move(trades)), by_pair_(universe.size()) {
    std::sort(trades_.begin(), trades_.end(), [](const Trade& a, const Trade& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < trades_.size(); ++i) {
        if (i > 0 && trades_[i].id == trades_[i - 1].id) {
            throw Error(Errc::DuplicateId, "duplicate trade id " + std::to_string(trades_[i].id));
        }
        if (trades_[i].pair >= universe.size()) throw Error(Errc::UnknownSymbol, "trade on unknown pair index");
        by_pair_[trades_[i].pair].push_back(i);
    }
    for (auto& idx : by_pair_) {
        std::stable_sort(idx.begin(), idx.end(),
                         [this](std::size_t a, std::size_t b) { return trades_[a].date < trades_[b].date; });
    }
}

std::span<const std::size_t> TradeStream::on_pair(std::size_t pair) const {
    if (pair >= by_pair_.size()) return {};
    return by_pair_[pair];
}

std::span<const std::size_t> TradeStream::on_pair(std::size_t pair, TimestampMs from, TimestampMs to) const {
    auto all = on_pair(pair);
    auto lo = std::partition_point(all.begin(), all.end(), [&](std::size_t i) { return trades_[i].date < from; });
    auto hi = std::partition_point(lo, all.end(), [&](std::size_t i) { return trades_[i].date < to; });
    return {lo, hi};
}

std::optional<std::size_t> TradeStream::position_of(std::int64_t id) const {
    auto it = std::lower_bound(trades_.begin(), trades_.end(), id,
                               [](const Trade& t, std::int64_t v) { return t.id < v; });
    if (it == trades_.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - trades_.begin());
}

TradeStream load_trades(std::istream& in, const Universe& universe) {
    TradeReader reader(in, universe);
    std::vector<Trade> trades;
    Trade t;
    while (reader.next(t)) trades.push_back(t);
    return TradeStream(universe, std::move(trades));
}

TradeStream load_trades(const std::filesystem::path& path, const Universe& universe) {
    auto in = open_input(path);
    return load_trades(in, universe);
}

void write_trades_header(std::ostream& out) { out << "id,exchange,symbol,date,price,amount,sell\n"; }

void write_trade(std::ostream& out, const Trade& t, const Universe& universe) {
    out << t.id << ',' << t.exchange << ',' << universe.listing(t.pair).symbol << ',' << t.date << ','
        << t.price.to_string() << ',' << t.amount.to_string() << ',' << (t.sell ? "TRUE" : "FALSE") << '\n';
}

void write_trades(std::ostream& out, const TradeStream& stream) {
    write_trades_header(out);
    for (const auto& t : stream.trades()) write_trade(out, t, stream.universe());
}

BookStream::BookStream(std::vector<BookSnapshot> snapshots, std::vector<std::string> warnings)
    : snapshots_(std::move(snapshots)), warnings_(std::move(warnings)) {
    std::stable_sort(snapshots_.begin(), snapshots_.end(), [](const BookSnapshot& a, const BookSnapshot& b) {
        return std::tie(a.pair, a.levels.timestamp) < std::tie(b.pair, b.levels.timestamp);
    });
}

const BookSnapshot* BookStream::latest(std::size_t pair, TimestampMs t, TimestampMs tolerance) const {
    auto it = std::upper_bound(snapshots_.begin(), snapshots_.end(), std::make_pair(pair, t),
                               [](const std::pair<std::size_t, TimestampMs>& key, const BookSnapshot& s) {
                                   return key < std::make_pair(s.pair, s.levels.timestamp);
                               });
    if (it == snapshots_.begin()) return nullptr;
    --it;
    if (it->pair != pair || it->levels.timestamp < t - tolerance) return nullptr;
    return &*it;
}

BookStream load_books(std::istream& in, const Universe& universe) {
    std::string buf;
    std::size_t line = 0;
    if (!read_line(in, buf, line)) return {};
    std::size_t width = 0;
    const auto cols = locate_columns(buf, kBookColumns, line, width);

    struct Sides {
        std::map<Decimal, Decimal, std::greater<>> bids;
        std::map<Decimal, Decimal> asks;
    };
    std::map<std::pair<std::size_t, TimestampMs>, Sides> grouped;
    while (read_line(in, buf, line)) {
        auto f = split_csv(buf);
        if (f.size() != width) {
            parse_error(line, "expected " + std::to_string(width) + " fields, got " + std::to_string(f.size()));
        }
        auto pair = universe.index_of(f[cols[0]]);
        if (!pair) {
            throw Error(Errc::UnknownSymbol,
                        "line " + std::to_string(line) + ": unknown symbol '" + std::string(f[cols[0]]) + "'");
        }
        const TimestampMs date = parse_int(f[cols[1]], line, "date");
        const std::string type = lower(f[cols[2]]);
        const Decimal price = parse_positive(f[cols[3]], line, "price");
        auto amount = Decimal::try_parse(f[cols[4]]);
        if (!amount || amount->is_negative()) parse_error(line, "bad amount '" + std::string(f[cols[4]]) + "'");
        auto& sides = grouped[{*pair, date}];
        if (type == "bid" || type == "b") {
            sides.bids[price] += *amount;
        } else if (type == "ask" || type == "a") {
            sides.asks[price] += *amount;
        } else {
            parse_error(line, "bad type '" + std::string(f[cols[2]]) + "'");
        }
    }

    std::vector<BookSnapshot> snapshots;
    std::vector<std::string> warnings;
    for (auto& [key, sides] : grouped) {
        BookSnapshot s;
        s.pair = key.first;
        s.levels.timestamp = key.second;
        for (auto& [p, q] : sides.bids) {
            if (q.is_positive()) s.levels.bids.push_back({p, q});
        }
        for (auto& [p, q] : sides.asks) {
            if (q.is_positive()) s.levels.asks.push_back({p, q});
        }
        if (s.levels.crossed()) {
            warnings.push_back("crossed book: " + universe.listing(s.pair).symbol + " at " +
                               std::to_string(s.levels.timestamp));
        }
        snapshots.push_back(std::move(s));
    }
    return BookStream(std::move(snapshots), std::move(warnings));
}

BookStream load_books(const std::filesystem::path& path, const Universe& universe) {
    auto in = open_input(path);
    return load_books(in, universe);
}

void write_books_header(std::ostream& out) { out << "symbol,date,type,price,amount\n"; }

void write_snapshot(std::ostream& out, const BookSnapshot& s, const Universe& universe) {
    const auto& symbol = universe.listing(s.pair).symbol;
    for (const auto& l : s.levels.bids) {
        out << symbol << ',' << s.levels.timestamp << ",bid," << l.price.to_string() << ',' << l.qty.to_string()
            << '\n';
    }
    for (const auto& l : s.levels.asks) {
        out << symbol << ',' << s.levels.timestamp << ",ask," << l.price.to_string() << ',' << l.qty.to_string()
            << '\n';
    }
}

std::string_view price_source_name(PriceSource s) {
    switch (s) {
        case PriceSource::BookTop: return "BOOK_TOP";
        case PriceSource::Vwap: return "VWAP";
        case PriceSource::Unavailable: return "UNAVAILABLE";
    }
    return "UNAVAILABLE";
}

std::optional<Decimal> ReferencePrice::ratio(const Direction& dir) const {
    const bool buy_base = dir.orientation == Orientation::FromIsQuote;
    switch (source) {
        case PriceSource::BookTop:
            if (buy_base) {
                if (!ask) return std::nullopt;
                return Decimal(1) / *ask;
            }
            return bid;
        case PriceSource::Vwap: return buy_base ? Decimal(1) / price : price;
        case PriceSource::Unavailable: return std::nullopt;
    }
    return std::nullopt;
}

ReferencePrice reference_price(std::size_t pair, TimestampMs t, TimestampMs window, const TradeStream& trades,
                               const BookStream& books, TimestampMs tolerance) {
    if (window <= 0) throw Error(Errc::InvalidArgument, "VWAP window must be > 0");
    ReferencePrice ref;
    ref.pair = pair;
    ref.timestamp = t;

    if (const auto* snap = books.latest(pair, t, tolerance)) {
        const BookTop top = snap->levels.top();
        if (top.bid || top.ask) {
            ref.source = PriceSource::BookTop;
            if (top.bid) ref.bid = top.bid->price;
            if (top.ask) ref.ask = top.ask->price;
            ref.price = top.bid && top.ask ? Decimal::div(top.bid->price + top.ask->price, Decimal(2), Rounding::HalfEven)
                                           : (top.bid ? top.bid->price : top.ask->price);
            return ref;
        }
    }

    Decimal notional;
    Decimal volume;
    for (std::size_t i : trades.on_pair(pair, t - window, t)) {
        notional += trades[i].price * trades[i].amount;
        volume += trades[i].amount;
    }
    if (volume.is_positive()) {
        ref.source = PriceSource::Vwap;
        ref.price = Decimal::div(notional, volume, Rounding::HalfEven).round_to(8, Rounding::HalfEven);
    }
    return ref;
}

FeeSchedule::FeeSchedule(std::vector<FeeEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw Error(Errc::InvalidSchedule, "fee schedule is empty");
    std::sort(entries_.begin(), entries_.end(),
              [](const FeeEntry& a, const FeeEntry& b) { return a.effective_from < b.effective_from; });
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (i > 0 && e.effective_from == entries_[i - 1].effective_from) {
            throw Error(Errc::InvalidSchedule, "two fee levels start at " + std::to_string(e.effective_from));
        }
        if (e.maker_bps.is_negative() || e.taker_bps.is_negative() || e.f.is_negative()) {
            throw Error(Errc::InvalidSchedule, "negative fee rate from " + std::to_string(e.effective_from));
        }
    }
}

FeeSchedule FeeSchedule::constant(const FeeModel& model) {
    return FeeSchedule({FeeEntry{0, model.maker_bps, model.taker_bps, model.bnb_flat}});
}

FeeSchedule FeeSchedule::from_json(const nlohmann::json& doc) {
    const nlohmann::json* list = &doc;
    if (doc.is_object() && doc.contains("entries")) list = &doc.at("entries");
    if (!list->is_array()) throw Error(Errc::Parse, "fee schedule must be an array");
    std::vector<FeeEntry> entries;
    for (std::size_t i = 0; i < list->size(); ++i) {
        const auto& e = (*list)[i];
        const std::string ctx = "fee entry " + std::to_string(i);
        if (!e.is_object()) throw Error(Errc::Parse, ctx + ": not an object");
        FeeEntry entry;
        try {
            entry.effective_from = e.at("effective_from").get<TimestampMs>();
        } catch (const nlohmann::json::exception&) {
            throw Error(Errc::Parse, ctx + ": bad or missing effective_from");
        }
        entry.maker_bps = json_decimal(e, "maker_bps", ctx);
        entry.taker_bps = json_decimal(e, "taker_bps", ctx);
        entry.f = e.contains("f") ? json_decimal(e, "f", ctx) : FeeModel{}.bnb_flat;
        entries.push_back(entry);
    }
    return FeeSchedule(std::move(entries));
}

FeeSchedule FeeSchedule::load(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::Parse, path.string() + ": " + e.what());
    }
}

nlohmann::json FeeSchedule::to_json() const {
    auto out = nlohmann::json::array();
    for (const auto& e : entries_) {
        out.push_back({{"effective_from", e.effective_from},
                       {"maker_bps", e.maker_bps.to_string()},
                       {"taker_bps", e.taker_bps.to_string()},
                       {"f", e.f.to_string()}});
    }
    return out;
}

FeeModel FeeSchedule::at(TimestampMs t) const {
    auto it = std::upper_bound(entries_.begin(), entries_.end(), t,
                               [](TimestampMs v, const FeeEntry& e) { return v < e.effective_from; });
    if (it == entries_.begin()) {
        throw Error(Errc::OutOfRange, "no fee level in force at " + std::to_string(t));
    }
    --it;
    FeeModel m;
    m.maker_bps = it->maker_bps;
    m.taker_bps = it->taker_bps;
    m.bnb_flat = it->f;
    return m;
}

}  // namespace arblens
