#include "cooking/doneness.hpp"

#include "cooking/error.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace cooking::kb {

namespace {

constexpr std::array<std::string_view, 4> kCategoryNames{
    "beef_lamb_veal_duck", "pork_veal", "poultry", "fish"};

std::optional<double> parse_bound(std::string_view field, int line) {
    auto text = detail::trim(field);
    if (text == "-") return std::nullopt;
    auto value = detail::parse_double(text);
    if (!value) throw ParseError("bad temperature '" + std::string(text) + "'", line);
    return value;
}

std::string describe(const DonenessEntry& e) {
    return std::string(to_string(e.category)) + "/" + e.name;
}

// Entries with an open lower bound sort first.
bool lower_less(const DonenessEntry& a, const DonenessEntry& b) {
    if (a.category != b.category) return a.category < b.category;
    if (!a.lower_f) return b.lower_f.has_value();
    if (!b.lower_f) return false;
    return *a.lower_f < *b.lower_f;
}

void validate(const std::vector<FoodCategory>& categories, const std::vector<DonenessEntry>& entries) {
    for (CategoryId id : kAllCategories) {
        bool declared = std::any_of(categories.begin(), categories.end(),
                                    [id](const FoodCategory& c) { return c.id == id; });
        if (!declared) throw ValidationError("missing category " + std::string(to_string(id)));
    }
    for (const auto& e : entries) {
        if (e.lower_f && e.upper_f && !(*e.lower_f < *e.upper_f))
            throw ValidationError("empty range for " + describe(e));
    }
    for (CategoryId id : kAllCategories) {
        std::vector<const DonenessEntry*> group;
        for (const auto& e : entries)
            if (e.category == id) group.push_back(&e);
        if (group.empty()) throw ValidationError("category " + std::string(to_string(id)) + " has no entries");

        for (std::size_t i = 0; i < group.size(); ++i) {
            for (std::size_t j = i + 1; j < group.size(); ++j) {
                if (fold_name(group[i]->name) == fold_name(group[j]->name))
                    throw ValidationError("duplicate doneness " + describe(*group[j]));
            }
        }
        for (std::size_t i = 0; i + 1 < group.size(); ++i) {
            const auto& cur = *group[i];
            const auto& next = *group[i + 1];
            if (!cur.upper_f || !next.lower_f || *cur.upper_f > *next.lower_f)
                throw ValidationError("overlapping ranges: " + describe(cur) + " and " + describe(next));
            if (*cur.upper_f < *next.lower_f)
                throw ValidationError("gap between " + describe(cur) + " and " + describe(next));
        }
        if (group.back()->upper_f)
            throw ValidationError("highest range of " + std::string(to_string(id)) + " must be open above");
    }
}

}  // namespace

std::string_view to_string(CategoryId id) { return kCategoryNames[static_cast<std::size_t>(id)]; }

CategoryId category_from_string(std::string_view name) {
    auto folded = fold_name(name);
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
        if (folded == kCategoryNames[i]) return kAllCategories[i];
    }
    std::string valid;
    for (auto n : kCategoryNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
    throw NotFoundError("unknown food category '" + std::string(name) + "' (valid: " + valid + ")");
}

std::string fold_name(std::string_view name) {
    std::string out;
    bool pending_space = false;
    for (char c : name) {
        if (detail::is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(detail::to_lower(c));
    }
    return out;
}

const FoodCategory& DonenessTable::category(CategoryId id) const {
    for (const auto& c : categories_)
        if (c.id == id) return c;
    throw NotFoundError("unknown food category " + std::string(to_string(id)));
}

std::vector<DonenessEntry> DonenessTable::entries_for(CategoryId id) const {
    std::vector<DonenessEntry> out;
    std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
                 [id](const DonenessEntry& e) { return e.category == id; });
    return out;
}

Classification DonenessTable::classify(CategoryId id, double temp_f) const {
    category(id);
    std::optional<double> lowest;
    for (const auto& e : entries_) {
        if (e.category != id) continue;
        if (e.contains(temp_f)) return e;
        if (!lowest && e.lower_f) lowest = e.lower_f;
    }
    // Partition is gapless, so missing means below the first bound.
    return BelowRange{lowest.value_or(temp_f)};
}

TempRange DonenessTable::target_range(CategoryId id, std::string_view doneness_name) const {
    category(id);
    auto wanted = fold_name(doneness_name);
    std::string valid;
    for (const auto& e : entries_) {
        if (e.category != id) continue;
        if (fold_name(e.name) == wanted) return {e.lower_f, e.upper_f};
        if (!valid.empty()) valid += ", ";
        valid += e.name;
    }
    throw NotFoundError("no doneness '" + std::string(doneness_name) + "' for " + std::string(to_string(id)) +
                        "; valid names: " + valid);
}

double DonenessTable::usda_minimum(CategoryId id) const { return category(id).usda_minimum_f; }

DonenessTable load_table(std::string_view document) {
    std::vector<FoodCategory> categories;
    std::vector<DonenessEntry> entries;

    int line_no = 0;
    for (auto raw : detail::split_lines(document)) {
        ++line_no;
        auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto fields = detail::split(line, '|');
        auto kind = detail::trim(fields[0]);

        if (kind == "category") {
            if (fields.size() != 5) throw ParseError("category record needs 5 fields", line_no);
            FoodCategory c;
            try {
                c.id = category_from_string(detail::trim(fields[1]));
            } catch (const NotFoundError& e) {
                throw ParseError(e.what(), line_no);
            }
            if (std::any_of(categories.begin(), categories.end(), [&](const auto& o) { return o.id == c.id; }))
                throw ParseError("duplicate category " + std::string(to_string(c.id)), line_no);
            c.display_name = std::string(detail::trim(fields[2]));
            auto minimum = parse_bound(fields[3], line_no);
            if (!minimum) throw ParseError("category minimum is required", line_no);
            c.usda_minimum_f = *minimum;
            c.usda_note = std::string(detail::trim(fields[4]));
            categories.push_back(std::move(c));
        } else if (kind == "entry") {
            if (fields.size() != 6) throw ParseError("entry record needs 6 fields", line_no);
            DonenessEntry e;
            try {
                e.category = category_from_string(detail::trim(fields[1]));
            } catch (const NotFoundError& err) {
                throw ParseError(err.what(), line_no);
            }
            e.name = std::string(detail::trim(fields[2]));
            if (e.name.empty()) throw ParseError("entry name is empty", line_no);
            e.lower_f = parse_bound(fields[3], line_no);
            e.upper_f = parse_bound(fields[4], line_no);
            e.description = std::string(detail::trim(fields[5]));
            entries.push_back(std::move(e));
        } else {
            throw ParseError("unknown record type '" + std::string(kind) + "'", line_no);
        }
    }

    std::sort(categories.begin(), categories.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::stable_sort(entries.begin(), entries.end(), lower_less);
    validate(categories, entries);

    DonenessTable table;
    table.categories_ = std::move(categories);
    table.entries_ = std::move(entries);
    return table;
}

DonenessTable load_table_file(const std::string& path) {
    return load_table(detail::read_file(path));
}

std::string serialize(const DonenessTable& table) {
    std::ostringstream out;
    auto bound = [](const std::optional<double>& b) { return b ? detail::format_number(*b) : std::string("-"); };
    for (const auto& c : table.categories()) {
        out << "category|" << to_string(c.id) << '|' << c.display_name << '|' << detail::format_number(c.usda_minimum_f)
            << '|' << c.usda_note << '\n';
    }
    for (const auto& e : table.entries()) {
        out << "entry|" << to_string(e.category) << '|' << e.name << '|' << bound(e.lower_f) << '|'
            << bound(e.upper_f) << '|' << e.description << '\n';
    }
    return out.str();
}

}  // namespace cooking::kb
