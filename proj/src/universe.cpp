#include "arblens/universe.hpp"

#include "arblens/error.hpp"
#include "arblens/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace arblens {

namespace {

std::string coin_key(std::string_view base, std::string_view quote) {
    std::string k(base);
    k += '/';
    k += quote;
    return k;
}

}  // namespace

Universe::Universe(std::vector<PairListing> listings) : listings_(std::move(listings)) {
    std::map<std::string, Coin> coins;
    for (std::size_t i = 0; i < listings_.size(); ++i) {
        const auto& l = listings_[i];
        l.validate();
        if (!by_symbol_.emplace(l.symbol, i).second) {
            throw Error(Errc::DuplicateId, "pair listed twice: " + l.symbol);
        }
        if (by_coins_.count(coin_key(l.quote.symbol, l.base.symbol)) ||
            !by_coins_.emplace(coin_key(l.base.symbol, l.quote.symbol), i).second) {
            throw Error(Errc::DuplicateId, "coins listed twice: " + l.symbol);
        }
        for (const Coin* c : {&l.base, &l.quote}) {
            auto [it, inserted] = coins.emplace(c->symbol, *c);
            if (!inserted && it->second.anchor_class != c->anchor_class) {
                throw Error(Errc::InvalidArgument, "conflicting anchor class for " + c->symbol);
            }
        }
    }
    for (auto& [_, c] : coins) coins_.push_back(c);
}

Universe Universe::from_json(const nlohmann::json& doc) {
    const nlohmann::json* pairs = &doc;
    std::map<std::string, AnchorClass> anchors;
    if (doc.is_object()) {
        if (!doc.contains("pairs")) throw Error(Errc::Parse, "universe object needs a 'pairs' array");
        pairs = &doc.at("pairs");
        if (auto it = doc.find("anchors"); it != doc.end()) {
            for (auto& [coin, cls] : it->items()) {
                auto parsed = parse_anchor_class(cls.get<std::string>());
                if (!parsed) throw Error(Errc::Parse, "unknown anchor class for " + coin);
                anchors[coin] = *parsed;
            }
        }
    }
    if (!pairs->is_array()) throw Error(Errc::Parse, "universe pairs must be an array");
    auto make_coin = [&](const std::string& s) {
        auto it = anchors.find(s);
        return Coin{s, it != anchors.end() ? it->second : default_anchor_class(s)};
    };
    std::vector<PairListing> listings;
    std::size_t n = 0;
    for (const auto& p : *pairs) {
        std::string ctx = "pair #" + std::to_string(n++);
        if (!p.is_object()) throw Error(Errc::Parse, ctx + " is not an object");
        PairListing l;
        try {
            l.base = make_coin(p.at("base").get<std::string>());
            l.quote = make_coin(p.at("quote").get<std::string>());
            l.symbol = p.contains("symbol") ? p.at("symbol").get<std::string>() : l.base.symbol + l.quote.symbol;
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::Parse, ctx + ": " + e.what());
        }
        l.qty_increment = json_decimal(p, "qty_increment", ctx);
        l.min_qty = json_decimal(p, "min_qty", ctx);
        l.max_qty = json_decimal(p, "max_qty", ctx);
        l.price_increment = json_decimal(p, "price_increment", ctx);
        l.min_price = json_decimal(p, "min_price", ctx);
        l.max_price = json_decimal(p, "max_price", ctx);
        listings.push_back(std::move(l));
    }
    return Universe(std::move(listings));
}

Universe Universe::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::Parse, path.string() + ": " + e.what());
    }
    return from_json(doc);
}

nlohmann::json Universe::to_json() const {
    nlohmann::json anchors = nlohmann::json::object();
    for (const auto& c : coins_) anchors[c.symbol] = std::string(anchor_class_name(c.anchor_class));
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& l : listings_) {
        pairs.push_back({{"symbol", l.symbol},
                         {"base", l.base.symbol},
                         {"quote", l.quote.symbol},
                         {"qty_increment", l.qty_increment.to_string()},
                         {"min_qty", l.min_qty.to_string()},
                         {"max_qty", l.max_qty.to_string()},
                         {"price_increment", l.price_increment.to_string()},
                         {"min_price", l.min_price.to_string()},
                         {"max_price", l.max_price.to_string()}});
    }
    return {{"anchors", anchors}, {"pairs", pairs}};
}

std::optional<std::size_t> Universe::index_of(std::string_view symbol) const {
    auto it = by_symbol_.find(std::string(symbol));
    if (it == by_symbol_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Universe::pair_between(std::string_view a, std::string_view b) const {
    if (auto it = by_coins_.find(coin_key(a, b)); it != by_coins_.end()) return it->second;
    if (auto it = by_coins_.find(coin_key(b, a)); it != by_coins_.end()) return it->second;
    return std::nullopt;
}

std::optional<Direction> Universe::direction(std::string_view from, std::string_view to) const {
    auto idx = pair_between(from, to);
    if (!idx) return std::nullopt;
    const auto& l = listings_[*idx];
    return Direction::make(l, l.base.symbol == from ? l.base : l.quote);
}

Direction Universe::require_direction(std::string_view from, std::string_view to) const {
    auto d = direction(from, to);
    if (!d) throw Error(Errc::UnknownSymbol, "no pair links " + std::string(from) + " and " + std::string(to));
    return *d;
}

const Coin* Universe::coin(std::string_view symbol) const {
    auto it = std::lower_bound(coins_.begin(), coins_.end(), symbol,
                               [](const Coin& c, std::string_view s) { return c.symbol < s; });
    return it != coins_.end() && it->symbol == symbol ? &*it : nullptr;
}

const BookTop* Market::top(const std::string& symbol) const {
    auto it = tops_.find(symbol);
    return it == tops_.end() ? nullptr : &it->second;
}

const BookTop& Market::require_top(const std::string& symbol) const {
    const BookTop* t = top(symbol);
    if (!t) throw Error(Errc::NoLiquidity, "no book for " + symbol);
    return *t;
}

Decimal Market::ratio(const Coin& from, const Coin& to) const {
    if (from == to) return Decimal(1);
    auto dir = universe_->direction(from.symbol, to.symbol);
    if (!dir) throw Error(Errc::MissingRate, "no pair links " + from.symbol + " and " + to.symbol);
    const BookTop* t = top(dir->listing.symbol);
    if (!t) throw Error(Errc::MissingRate, "no book for " + dir->listing.symbol);
    if (dir->orientation == Orientation::FromIsBase) {
        if (!t->bid) throw Error(Errc::MissingRate, "no bid on " + dir->listing.symbol);
        return t->bid->price;
    }
    if (!t->ask || !t->ask->price.is_positive()) throw Error(Errc::MissingRate, "no ask on " + dir->listing.symbol);
    return Decimal(1) / t->ask->price;
}

}  // namespace arblens
