#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace covnli {

enum class Category { function, agent, verb, attribute, object };

struct Concept {
    std::string id;
    std::vector<std::string> words;
    bool held_out = false;
    std::string antonym;                  // verbs only: a surface word of another verb concept
    std::vector<std::string> attributes;  // objects only: compatible attribute concept ids
};

struct WordInfo {
    Category category;
    std::size_t concept_index;  // index into the category's concept list (0 for function words)
};

/// Word lists for the synthetic grammar. Loaded from the versioned data file
/// shipped in data/ (compiled into the library as builtin()).
class Lexicon {
public:
    static Lexicon parse(std::string_view json_text);
    static const Lexicon& builtin();
    /// JSON text of the built-in lexicon, as shipped.
    static std::string_view builtin_source() noexcept;

    const std::string& version() const noexcept { return version_; }
    const std::vector<std::string>& function_words() const noexcept { return function_words_; }
    const std::vector<Concept>& agents() const noexcept { return agents_; }
    const std::vector<Concept>& verbs() const noexcept { return verbs_; }
    const std::vector<Concept>& attributes() const noexcept { return attributes_; }
    const std::vector<Concept>& objects() const noexcept { return objects_; }
    const std::vector<Concept>& concepts(Category c) const;

    std::optional<WordInfo> lookup(std::string_view word) const;
    /// Every surface word, function words first, then categories in file order.
    std::vector<std::string> all_words() const;

    std::size_t attribute_index(std::string_view id) const;
    std::size_t verb_of_word(std::string_view word) const;

private:
    void index_and_validate();

    std::string version_;
    std::vector<std::string> function_words_;
    std::vector<Concept> agents_, verbs_, attributes_, objects_;
    std::unordered_map<std::string, WordInfo> words_;
};

/// Token <-> id map. Id 0 is the reserved unknown-token row.
class Vocabulary {
public:
    static constexpr std::size_t unk = 0;
    static constexpr std::string_view unk_token = "<unk>";

    explicit Vocabulary(const Lexicon& lexicon);

    std::size_t size() const noexcept { return words_.size(); }
    std::size_t id(std::string_view word) const;
    bool contains(std::string_view word) const { return index_.count(std::string(word)) != 0; }
    const std::string& word(std::size_t id) const { return words_.at(id); }
    std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace covnli
