#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace cooking::kb {

enum class CategoryId { BeefLambVealDuck, PorkVeal, Poultry, Fish };

inline constexpr std::array<CategoryId, 4> kAllCategories{
    CategoryId::BeefLambVealDuck, CategoryId::PorkVeal, CategoryId::Poultry, CategoryId::Fish};

/// Wire name of a category ("beef_lamb_veal_duck", ...).
std::string_view to_string(CategoryId id);

/// Parses a wire name; throws NotFoundError for unknown names.
CategoryId category_from_string(std::string_view name);

struct FoodCategory {
    CategoryId id;
    std::string display_name;
    double usda_minimum_f = 0;
    std::string usda_note;

    friend bool operator==(const FoodCategory&, const FoodCategory&) = default;
};

/// One row of the doneness table. Bounds form the half-open interval
/// [lower_f, upper_f); an absent bound is open (-inf or +inf).
struct DonenessEntry {
    CategoryId category;
    std::string name;
    std::optional<double> lower_f;
    std::optional<double> upper_f;
    std::string description;

    bool contains(double temp_f) const {
        return (!lower_f || temp_f >= *lower_f) && (!upper_f || temp_f < *upper_f);
    }

    friend bool operator==(const DonenessEntry&, const DonenessEntry&) = default;
};

/// Temperature sits below every range of the category.
struct BelowRange {
    double lowest_f;
    friend bool operator==(const BelowRange&, const BelowRange&) = default;
};

using Classification = std::variant<DonenessEntry, BelowRange>;

using TempRange = std::pair<std::optional<double>, std::optional<double>>;

/// Immutable doneness knowledge: categories in enum order, entries grouped by
/// category and sorted by lower bound. Safe for concurrent reads.
class DonenessTable {
public:
    DonenessTable() = default;

    const std::vector<FoodCategory>& categories() const { return categories_; }
    const std::vector<DonenessEntry>& entries() const { return entries_; }

    const FoodCategory& category(CategoryId id) const;
    std::vector<DonenessEntry> entries_for(CategoryId id) const;

    Classification classify(CategoryId id, double temp_f) const;
    TempRange target_range(CategoryId id, std::string_view doneness_name) const;
    double usda_minimum(CategoryId id) const;

    friend bool operator==(const DonenessTable&, const DonenessTable&) = default;

private:
    friend DonenessTable load_table(std::string_view document);

    std::vector<FoodCategory> categories_;
    std::vector<DonenessEntry> entries_;
};

/// Parses and validates a knowledge file. Throws ParseError (with line
/// number) on syntax problems and ValidationError on overlapping, gapped
/// or otherwise inconsistent ranges.
DonenessTable load_table(std::string_view document);

/// Reads and parses a knowledge file from disk.
DonenessTable load_table_file(const std::string& path);

/// Writes the table back in knowledge-file syntax; load_table(serialize(t)) == t.
std::string serialize(const DonenessTable& table);

/// Lowercases and collapses internal whitespace; used for name matching.
std::string fold_name(std::string_view name);

}  // namespace cooking::kb
