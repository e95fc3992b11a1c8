#include "arblens/model.hpp"

#include "arblens/error.hpp"

#include <set>

namespace arblens {

std::string_view anchor_class_name(AnchorClass c) {
    switch (c) {
        case AnchorClass::Btc: return "BTC";
        case AnchorClass::Bnb: return "BNB";
        case AnchorClass::Alts: return "ALTS";
        case AnchorClass::Stable: return "STABLE";
        case AnchorClass::None: return "NONE";
    }
    return "NONE";
}

AnchorClass default_anchor_class(std::string_view s) {
    if (s == "BTC") return AnchorClass::Btc;
    if (s == "BNB") return AnchorClass::Bnb;
    if (s == "ETH" || s == "XRP" || s == "TRX") return AnchorClass::Alts;
    if (s == "USDT" || s == "USDC" || s == "TUSD" || s == "PAX" || s == "BUSD" || s == "USDS") {
        return AnchorClass::Stable;
    }
    return AnchorClass::None;
}

std::optional<AnchorClass> parse_anchor_class(std::string_view name) {
    for (auto c : {AnchorClass::None, AnchorClass::Btc, AnchorClass::Bnb, AnchorClass::Alts, AnchorClass::Stable}) {
        if (anchor_class_name(c) == name) return c;
    }
    return std::nullopt;
}

void PairListing::validate() const {
    auto fail = [&](const std::string& why) { throw Error(Errc::InvalidArgument, symbol + ": " + why); };
    if (base.symbol.empty() || quote.symbol.empty()) fail("missing base/quote");
    if (base == quote) fail("base equals quote");
    if (!qty_increment.is_positive()) fail("qty_increment must be > 0");
    if (!price_increment.is_positive()) fail("price_increment must be > 0");
    if (min_qty.is_negative()) fail("min_qty must be >= 0");
    if (max_qty < min_qty) fail("min_qty > max_qty");
    if (max_price < min_price) fail("min_price > max_price");
    if (min_qty.is_positive() && !min_qty.is_multiple_of(qty_increment)) fail("min_qty not a multiple of qty_increment");
}

Direction Direction::make(const PairListing& listing, const Coin& from) {
    if (from == listing.base) return Direction{listing.base, listing.quote, listing, Orientation::FromIsBase};
    if (from == listing.quote) return Direction{listing.quote, listing.base, listing, Orientation::FromIsQuote};
    throw Error(Errc::InvalidArgument, from.symbol + " is not part of " + listing.symbol);
}

BookTop BookLevels::top() const { return level(0); }

BookTop BookLevels::level(std::size_t h) const {
    BookTop t;
    t.timestamp = timestamp;
    if (h < bids.size()) t.bid = bids[h];
    if (h < asks.size()) t.ask = asks[h];
    return t;
}

bool BookLevels::crossed() const {
    return !bids.empty() && !asks.empty() && bids.front().price >= asks.front().price;
}

Decimal FeeModel::rate(Role role) const {
    static const Decimal kBpsPerUnit(10'000);
    return (role == Role::Maker ? maker_bps : taker_bps) / kBpsPerUnit;
}

void FeeModel::validate() const {
    if (maker_bps.is_negative() || taker_bps.is_negative() || bnb_flat.is_negative()) {
        throw Error(Errc::InvalidArgument, "fee rates must be >= 0");
    }
    if (taker_bps < maker_bps) throw Error(Errc::InvalidArgument, "maker fee exceeds taker fee");
}

void BnbRates::set_listed_price(const std::string& coin, Decimal price, bool bnb_is_base) {
    if (!price.is_positive()) throw Error(Errc::InvalidPrice, "BNB rate for " + coin + " must be > 0");
    quotes_[coin] = Quote{price, bnb_is_base};
}

const BnbRates::Quote* BnbRates::find(const std::string& coin) const {
    auto it = quotes_.find(coin);
    return it == quotes_.end() ? nullptr : &it->second;
}

namespace {

void check_chain(const std::vector<Direction>& legs, const char* what) {
    if (legs.empty()) throw Error(Errc::InvalidArgument, std::string(what) + " has no legs");
    for (std::size_t i = 0; i + 1 < legs.size(); ++i) {
        if (!(legs[i].to == legs[i + 1].from)) {
            throw Error(Errc::InvalidArgument, std::string(what) + " legs do not chain at " + legs[i].to.symbol);
        }
    }
}

}  // namespace

void Cycle::validate() const {
    check_chain(legs, "cycle");
    if (!(legs.back().to == legs.front().from)) throw Error(Errc::InvalidArgument, "cycle does not close on its base");
    std::set<std::string> seen;
    for (const auto& leg : legs) {
        if (!seen.insert(leg.from.symbol).second) {
            throw Error(Errc::InvalidArgument, "cycle revisits " + leg.from.symbol);
        }
    }
}

void ConversionPath::validate() const {
    check_chain(legs, "conversion");
    std::set<std::string> seen{legs.front().from.symbol};
    for (const auto& leg : legs) {
        if (!seen.insert(leg.to.symbol).second) {
            throw Error(Errc::InvalidArgument, "conversion revisits " + leg.to.symbol);
        }
    }
}

}  // namespace arblens
