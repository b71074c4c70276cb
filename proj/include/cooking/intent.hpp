#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cooking::intent {

using Tokens = std::vector<std::string>;

/// Lowercases, deletes apostrophes, turns other punctuation into spaces and
/// splits on whitespace.
Tokens normalize(std::string_view text);

/// Accepts a single digit token ("165") or English number words from zero
/// to nine hundred ninety nine ("one hundred and sixty five"). The whole
/// span must be consumed.
std::optional<std::int64_t> parse_number(std::span<const std::string> tokens);

struct SlotType {
    std::string name;
    bool numeric = false;
    std::vector<Tokens> phrases;  // enumerated types only; longest first
};

struct TemplatePart {
    enum class Kind { Literal, Slot };
    Kind kind = Kind::Literal;
    std::string text;       // literal token, or slot name
    std::string slot_type;  // slots only

    friend bool operator==(const TemplatePart&, const TemplatePart&) = default;
};

struct UtteranceTemplate {
    std::string source;
    std::vector<TemplatePart> parts;

    std::size_t literal_count() const;
    std::size_t slot_count() const;

    friend bool operator==(const UtteranceTemplate&, const UtteranceTemplate&) = default;
};

struct IntentDef {
    std::string name;
    std::vector<UtteranceTemplate> samples;
};

class InteractionModel {
public:
    const std::vector<IntentDef>& intents() const { return intents_; }
    const std::map<std::string, SlotType>& slot_types() const { return slot_types_; }
    const SlotType& slot_type(const std::string& name) const;

private:
    friend InteractionModel load_model(std::string_view document);

    std::vector<IntentDef> intents_;
    std::map<std::string, SlotType> slot_types_;
};

/// Parses the interaction-model JSON document. Throws ParseError for
/// malformed JSON and ValidationError for duplicate intent names, unknown
/// slot types, empty sample lists or adjacent slots whose split is ambiguous.
InteractionModel load_model(std::string_view document);
InteractionModel load_model_file(const std::string& path);

using SlotValue = std::variant<std::string, std::int64_t>;

struct IntentMatch {
    std::string intent_name;
    std::map<std::string, SlotValue> slots;
    UtteranceTemplate matched;
};

/// Matches the utterance against every template. Among full matches the
/// winner has the most literal tokens, then the fewest slots, then the
/// smallest intent name, then the earliest template.
std::optional<IntentMatch> match_utterance(const InteractionModel& model, std::string_view text);

/// Same as match_utterance, over already-normalized tokens.
std::optional<IntentMatch> match_tokens(const InteractionModel& model, const Tokens& tokens);

}  // namespace cooking::intent
