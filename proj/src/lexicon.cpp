#include "covnli/lexicon.hpp"

#include <stdexcept>

#include <json.hpp>

namespace covnli {

// Defined in the generated lexicon_data.cpp.
extern const char* const kBuiltinLexiconJson;

namespace {

std::vector<Concept> read_concepts(const nlohmann::json& arr) {
    std::vector<Concept> out;
    for (const auto& c : arr) {
        Concept k;
        k.id = c.at("id").get<std::string>();
        k.words = c.at("words").get<std::vector<std::string>>();
        k.held_out = c.value("held_out", false);
        k.antonym = c.value("antonym", std::string{});
        if (c.contains("attributes")) k.attributes = c.at("attributes").get<std::vector<std::string>>();
        if (k.words.size() < 2) throw std::invalid_argument("lexicon: concept '" + k.id + "' needs at least two synonyms");
        out.push_back(std::move(k));
    }
    return out;
}

}  // namespace

Lexicon Lexicon::parse(std::string_view json_text) {
    const auto j = nlohmann::json::parse(json_text);
    Lexicon lex;
    lex.version_ = j.at("version").get<std::string>();
    lex.function_words_ = j.at("function_words").get<std::vector<std::string>>();
    lex.agents_ = read_concepts(j.at("agents"));
    lex.verbs_ = read_concepts(j.at("verbs"));
    lex.attributes_ = read_concepts(j.at("attributes"));
    lex.objects_ = read_concepts(j.at("objects"));
    lex.index_and_validate();
    return lex;
}

std::string_view Lexicon::builtin_source() noexcept { return kBuiltinLexiconJson; }

const Lexicon& Lexicon::builtin() {
    static const Lexicon lex = parse(kBuiltinLexiconJson);
    return lex;
}

const std::vector<Concept>& Lexicon::concepts(Category c) const {
    switch (c) {
        case Category::agent: return agents_;
        case Category::verb: return verbs_;
        case Category::attribute: return attributes_;
        case Category::object: return objects_;
        default: throw std::invalid_argument("function words have no concepts");
    }
}

void Lexicon::index_and_validate() {
    auto add = [this](const std::string& w, WordInfo info) {
        if (!words_.emplace(w, info).second) throw std::invalid_argument("lexicon: word '" + w + "' listed twice");
    };
    for (const auto& w : function_words_) add(w, {Category::function, 0});
    const std::pair<Category, const std::vector<Concept>*> groups[] = {
        {Category::agent, &agents_}, {Category::verb, &verbs_}, {Category::attribute, &attributes_},
        {Category::object, &objects_}};
    for (const auto& [cat, list] : groups)
        for (std::size_t i = 0; i < list->size(); ++i)
            for (const auto& w : (*list)[i].words) add(w, {cat, i});

    for (std::size_t i = 0; i < verbs_.size(); ++i) {
        const auto it = words_.find(verbs_[i].antonym);
        if (it == words_.end() || it->second.category != Category::verb || it->second.concept_index == i)
            throw std::invalid_argument("lexicon: antonym of verb '" + verbs_[i].id + "' must be a word of another verb concept");
    }
    for (const auto& o : objects_) {
        if (o.attributes.empty()) throw std::invalid_argument("lexicon: object '" + o.id + "' lists no attributes");
        for (const auto& a : o.attributes) attribute_index(a);
    }
}

std::optional<WordInfo> Lexicon::lookup(std::string_view word) const {
    const auto it = words_.find(std::string(word));
    if (it == words_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> Lexicon::all_words() const {
    std::vector<std::string> out = function_words_;
    for (const auto* list : {&agents_, &verbs_, &attributes_, &objects_})
        for (const auto& c : *list) out.insert(out.end(), c.words.begin(), c.words.end());
    return out;
}

std::size_t Lexicon::attribute_index(std::string_view id) const {
    for (std::size_t i = 0; i < attributes_.size(); ++i)
        if (attributes_[i].id == id) return i;
    throw std::invalid_argument("lexicon: unknown attribute '" + std::string(id) + "'");
}

std::size_t Lexicon::verb_of_word(std::string_view word) const {
    const auto info = lookup(word);
    if (!info || info->category != Category::verb) throw std::invalid_argument("not a verb: '" + std::string(word) + "'");
    return info->concept_index;
}

Vocabulary::Vocabulary(const Lexicon& lexicon) {
    words_.emplace_back(unk_token);
    for (auto& w : lexicon.all_words()) words_.push_back(std::move(w));
    for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
}

std::size_t Vocabulary::id(std::string_view word) const {
    const auto it = index_.find(std::string(word));
    return it == index_.end() ? unk : it->second;
}

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
}

}  // namespace covnli
