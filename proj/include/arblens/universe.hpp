#pragma once

#include "arblens/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace arblens {

/// The set of listed pairs, indexed by symbol and by coin pair.
class Universe {
public:
    Universe() = default;
    explicit Universe(std::vector<PairListing> listings);

    /// Accepts either a bare array of listings or
    /// `{"anchors": {"COIN": "BTC|BNB|ALTS|STABLE|NONE"}, "pairs": [...]}`.
    [[nodiscard]] static Universe from_json(const nlohmann::json& doc);
    [[nodiscard]] static Universe load(const std::filesystem::path& path);
    [[nodiscard]] nlohmann::json to_json() const;

    [[nodiscard]] const std::vector<PairListing>& listings() const { return listings_; }
    [[nodiscard]] std::size_t size() const { return listings_.size(); }
    [[nodiscard]] const PairListing& listing(std::size_t index) const { return listings_.at(index); }

    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view symbol) const;
    /// Index of whichever of a/b or b/a is listed.
    [[nodiscard]] std::optional<std::size_t> pair_between(std::string_view a, std::string_view b) const;
    [[nodiscard]] std::optional<Direction> direction(std::string_view from, std::string_view to) const;
    /// Throws Errc::UnknownSymbol when no pair links the two coins.
    [[nodiscard]] Direction require_direction(std::string_view from, std::string_view to) const;

    [[nodiscard]] const Coin* coin(std::string_view symbol) const;
    /// Sorted by symbol.
    [[nodiscard]] const std::vector<Coin>& coins() const { return coins_; }

private:
    std::vector<PairListing> listings_;
    std::vector<Coin> coins_;
    std::unordered_map<std::string, std::size_t> by_symbol_;
    std::unordered_map<std::string, std::size_t> by_coins_;  // "BASE/QUOTE"
};

/// Book tops keyed by listing symbol, resolved against a universe.
class Market {
public:
    explicit Market(const Universe& universe) : universe_(&universe) {}

    void set_top(const std::string& symbol, BookTop top) { tops_[symbol] = std::move(top); }
    [[nodiscard]] const BookTop* top(const std::string& symbol) const;
    /// Throws Errc::NoLiquidity when no book is known for the pair.
    [[nodiscard]] const BookTop& require_top(const std::string& symbol) const;

    /// psi(from -> to); 1 when the coins coincide. Throws Errc::MissingRate when
    /// the pair or the relevant book side is unavailable.
    [[nodiscard]] Decimal ratio(const Coin& from, const Coin& to) const;

    [[nodiscard]] const Universe& universe() const { return *universe_; }

private:
    const Universe* universe_;
    std::unordered_map<std::string, BookTop> tops_;
};

}  // namespace arblens
