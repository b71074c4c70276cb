#include "cooking/intent.hpp"

#include "cooking/error.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <json.hpp>
#include <set>
#include <tuple>

namespace cooking::intent {

namespace {

constexpr std::string_view kRightQuote = "\xE2\x80\x99";

bool is_word_char(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

bool is_digits(std::string_view s) {
    return !s.empty() && s.size() <= 9 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int word_value(std::string_view w, std::string_view const* table, int count) {
    for (int i = 0; i < count; ++i)
        if (table[i] == w) return i;
    return -1;
}

constexpr std::string_view kUnits[] = {"zero", "one", "two",   "three", "four",
                                       "five", "six", "seven", "eight", "nine"};
constexpr std::string_view kTeens[] = {"ten",     "eleven",  "twelve",    "thirteen", "fourteen",
                                       "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
constexpr std::string_view kTens[] = {"", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};

// Parses 1..99 from the whole span (no "zero").
std::optional<int> parse_below_hundred(std::span<const std::string> t) {
    if (t.size() == 1) {
        if (int u = word_value(t[0], kUnits, 10); u > 0) return u;
        if (int teen = word_value(t[0], kTeens, 10); teen >= 0) return 10 + teen;
        if (int tens = word_value(t[0], kTens, 10); tens >= 2) return tens * 10;
        return std::nullopt;
    }
    if (t.size() == 2) {
        int tens = word_value(t[0], kTens, 10);
        int unit = word_value(t[1], kUnits, 10);
        if (tens >= 2 && unit > 0) return tens * 10 + unit;
    }
    return std::nullopt;
}

std::optional<int> parse_words(std::span<const std::string> t) {
    if (t.empty()) return std::nullopt;
    if (t.size() == 1 && t[0] == "zero") return 0;

    auto hundred = std::find(t.begin(), t.end(), std::string("hundred"));
    if (hundred == t.end()) return parse_below_hundred(t);

    if (hundred - t.begin() != 1) return std::nullopt;
    int lead = word_value(t[0], kUnits, 10);
    if (lead <= 0) return std::nullopt;
    auto rest = t.subspan(2);
    if (rest.empty()) return lead * 100;
    if (rest.front() == "and") rest = rest.subspan(1);
    auto tail = parse_below_hundred(rest);
    if (!tail) return std::nullopt;
    return lead * 100 + *tail;
}

// Adjacent slots are allowed only when every token run splits between them
// in exactly one way. A numeric slot never qualifies.
bool ambiguous_split(const SlotType& left, const SlotType& right) {
    if (left.numeric || right.numeric) return true;
    std::set<Tokens> joined;
    for (const auto& a : left.phrases) {
        for (const auto& b : right.phrases) {
            Tokens both = a;
            both.insert(both.end(), b.begin(), b.end());
            if (!joined.insert(std::move(both)).second) return true;
        }
    }
    return false;
}

// Splits a template into literal tokens and {slot} references.
UtteranceTemplate compile_template(const std::string& source, const std::map<std::string, std::string>& slot_bindings,
                                   const std::map<std::string, SlotType>& slot_types, const std::string& intent) {
    UtteranceTemplate tpl;
    tpl.source = source;
    std::size_t pos = 0;
    auto add_literals = [&](std::string_view text) {
        for (auto& tok : normalize(text)) tpl.parts.push_back({TemplatePart::Kind::Literal, std::move(tok), {}});
    };
    while (pos < source.size()) {
        auto open = source.find('{', pos);
        if (open == std::string::npos) {
            add_literals(std::string_view(source).substr(pos));
            break;
        }
        add_literals(std::string_view(source).substr(pos, open - pos));
        auto close = source.find('}', open);
        if (close == std::string::npos)
            throw ValidationError("unterminated slot in template '" + source + "' of " + intent);
        std::string slot(detail::trim(std::string_view(source).substr(open + 1, close - open - 1)));
        if (slot.empty()) throw ValidationError("empty slot name in template '" + source + "' of " + intent);

        std::string type_name = slot;
        if (auto it = slot_bindings.find(slot); it != slot_bindings.end()) type_name = it->second;
        if (!slot_types.count(type_name))
            throw ValidationError("template '" + source + "' of " + intent + " references slot {" + slot +
                                  "} with unknown slot type '" + type_name + "'");
        if (!tpl.parts.empty() && tpl.parts.back().kind == TemplatePart::Kind::Slot &&
            ambiguous_split(slot_types.at(tpl.parts.back().slot_type), slot_types.at(type_name)))
            throw ValidationError("template '" + source + "' of " + intent + " has adjacent slots {" +
                                  tpl.parts.back().text + "} {" + slot + "}");
        tpl.parts.push_back({TemplatePart::Kind::Slot, slot, type_name});
        pos = close + 1;
    }
    if (tpl.parts.empty()) throw ValidationError("empty sample in intent " + intent);
    return tpl;
}

std::string join(std::span<const std::string> tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

class TemplateMatcher {
public:
    TemplateMatcher(const InteractionModel& model, const UtteranceTemplate& tpl, const Tokens& tokens)
        : model_(model), tpl_(tpl), tokens_(tokens) {}

    std::optional<std::map<std::string, SlotValue>> run() {
        if (step(0, 0)) return bindings_;
        return std::nullopt;
    }

private:
    bool step(std::size_t part, std::size_t pos) {
        if (part == tpl_.parts.size()) return pos == tokens_.size();
        const auto& p = tpl_.parts[part];
        if (p.kind == TemplatePart::Kind::Literal) {
            return pos < tokens_.size() && tokens_[pos] == p.text && step(part + 1, pos + 1);
        }
        const auto& type = model_.slot_type(p.slot_type);
        const std::size_t remaining = tokens_.size() - pos;
        if (type.numeric) {
            std::span<const std::string> all(tokens_);
            for (std::size_t len = std::min<std::size_t>(remaining, 6); len >= 1; --len) {
                if (auto value = parse_number(all.subspan(pos, len))) {
                    bindings_[p.text] = *value;
                    if (step(part + 1, pos + len)) return true;
                }
            }
        } else {
            // Phrases are stored longest first.
            for (const auto& phrase : type.phrases) {
                if (phrase.size() > remaining) continue;
                if (!std::equal(phrase.begin(), phrase.end(), tokens_.begin() + static_cast<std::ptrdiff_t>(pos)))
                    continue;
                bindings_[p.text] = join(phrase);
                if (step(part + 1, pos + phrase.size())) return true;
            }
        }
        bindings_.erase(p.text);
        return false;
    }

    const InteractionModel& model_;
    const UtteranceTemplate& tpl_;
    const Tokens& tokens_;
    std::map<std::string, SlotValue> bindings_;
};

}  // namespace

Tokens normalize(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (c == '\'') continue;
        if (is_word_char(c)) {
            cleaned.push_back(detail::to_lower(ch));
            if (cleaned.size() >= kRightQuote.size() &&
                std::string_view(cleaned).substr(cleaned.size() - kRightQuote.size()) == kRightQuote)
                cleaned.resize(cleaned.size() - kRightQuote.size());
        } else {
            cleaned.push_back(' ');
        }
    }
    Tokens tokens;
    for (auto piece : detail::split(cleaned, ' '))
        if (!piece.empty()) tokens.emplace_back(piece);
    return tokens;
}

std::optional<std::int64_t> parse_number(std::span<const std::string> tokens) {
    if (tokens.size() == 1 && is_digits(tokens[0])) return std::stoll(tokens[0]);
    if (auto v = parse_words(tokens)) return *v;
    return std::nullopt;
}

std::size_t UtteranceTemplate::literal_count() const {
    return static_cast<std::size_t>(std::count_if(
        parts.begin(), parts.end(), [](const TemplatePart& p) { return p.kind == TemplatePart::Kind::Literal; }));
}

std::size_t UtteranceTemplate::slot_count() const { return parts.size() - literal_count(); }

const SlotType& InteractionModel::slot_type(const std::string& name) const {
    auto it = slot_types_.find(name);
    if (it == slot_types_.end()) throw NotFoundError("unknown slot type '" + name + "'");
    return it->second;
}

InteractionModel load_model(std::string_view document) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("interaction model: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("interaction model must be a JSON object");

    InteractionModel model;
    try {
        if (auto it = doc.find("slot_types"); it != doc.end()) {
            for (const auto& [name, value] : it->items()) {
                SlotType type;
                type.name = name;
                if (value.is_string()) {
                    if (value.get<std::string>() != "number")
                        throw ValidationError("slot type '" + name + "' must be a phrase list or \"number\"");
                    type.numeric = true;
                } else {
                    for (const auto& phrase : value) {
                        auto tokens = normalize(phrase.get<std::string>());
                        if (tokens.empty()) throw ValidationError("empty phrase in slot type '" + name + "'");
                        type.phrases.push_back(std::move(tokens));
                    }
                    std::stable_sort(type.phrases.begin(), type.phrases.end(),
                                     [](const Tokens& a, const Tokens& b) { return a.size() > b.size(); });
                }
                model.slot_types_.emplace(name, std::move(type));
            }
        }

        std::set<std::string> names;
        for (const auto& intent : doc.value("intents", nlohmann::json::array())) {
            IntentDef def;
            def.name = std::string(detail::trim(intent.at("name").get<std::string>()));
            if (def.name.empty()) throw ValidationError("intent with empty name");
            if (!names.insert(def.name).second) throw ValidationError("duplicate intent name '" + def.name + "'");

            std::map<std::string, std::string> bindings;
            if (auto slots = intent.find("slots"); slots != intent.end())
                for (const auto& [slot, type] : slots->items()) bindings[slot] = type.get<std::string>();

            for (const auto& sample : intent.at("samples"))
                def.samples.push_back(compile_template(sample.get<std::string>(), bindings, model.slot_types_, def.name));
            if (def.samples.empty()) throw ValidationError("intent '" + def.name + "' has no samples");
            model.intents_.push_back(std::move(def));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("interaction model: ") + e.what());
    }
    return model;
}

InteractionModel load_model_file(const std::string& path) { return load_model(detail::read_file(path)); }

std::optional<IntentMatch> match_tokens(const InteractionModel& model, const Tokens& tokens) {
    std::optional<IntentMatch> best;
    // Rank: more literals, fewer slots, smaller name. Earlier templates win ties.
    auto rank = [](const IntentMatch& m) {
        return std::make_tuple(-static_cast<long>(m.matched.literal_count()), static_cast<long>(m.matched.slot_count()));
    };
    for (const auto& intent : model.intents()) {
        for (const auto& tpl : intent.samples) {
            auto bindings = TemplateMatcher(model, tpl, tokens).run();
            if (!bindings) continue;
            IntentMatch candidate{intent.name, std::move(*bindings), tpl};
            if (!best || rank(candidate) < rank(*best) ||
                (rank(candidate) == rank(*best) && candidate.intent_name < best->intent_name))
                best = std::move(candidate);
        }
    }
    return best;
}

std::optional<IntentMatch> match_utterance(const InteractionModel& model, std::string_view text) {
    auto tokens = normalize(text);
    if (tokens.empty()) return std::nullopt;
    return match_tokens(model, tokens);
}

}  // namespace cooking::intent
