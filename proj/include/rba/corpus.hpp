#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rba {

enum class BiasType { brevity, literal, position, repetition };

const char* to_string(BiasType b);
BiasType bias_type_from_string(const std::string& s);
inline constexpr BiasType kAllBiasTypes[] = {
    BiasType::brevity, BiasType::literal, BiasType::position,
    BiasType::repetition};

// One query with a treatment document D1 (bias-amplified) and a control D2.
struct BiasPair {
    std::string id;
    BiasType bias_type = BiasType::brevity;
    std::string query;
    std::string doc_treatment;  // D1
    std::string doc_control;    // D2
    std::string answer_text;
    std::optional<size_t> answer_offset_treatment;
    std::optional<size_t> answer_offset_control;

    bool operator==(const BiasPair&) const = default;
};

// Adversarial pair: doc_foil piles up bias-inducing features but lacks the
// answer; doc_evidence holds the answer inside unrelated context.
struct FoilPair {
    std::string id;
    std::string query;
    std::string doc_foil;
    std::string doc_evidence;
    std::string answer_text;

    bool operator==(const FoilPair&) const = default;
};

struct Dataset {
    std::string name;
    std::vector<BiasPair> pairs;
    std::vector<FoilPair> foils;

    bool operator==(const Dataset&) const = default;
};

struct Rejection {
    size_t line = 0;  // 1-based line number in the source file
    std::string id;   // when the record carried one
    std::string reason;
};

struct LoadResult {
    Dataset dataset;
    std::vector<Rejection> rejections;
};

// Validates one pair against the schema invariants. Returns an empty string
// when valid, otherwise the reason.
std::string validate_pair(const BiasPair& p);
std::string validate_foil(const FoilPair& f);

// First exact occurrence of answer in doc, falling back to a case-insensitive
// (ASCII/Latin-1) search. npos when absent. Used both for validation and as
// the effective offset when a record does not annotate one.
size_t find_answer(const std::string& doc, const std::string& answer);

// Stored offset when present, first occurrence otherwise.
size_t effective_offset(const std::string& doc, const std::string& answer,
                        const std::optional<size_t>& stored);

// Line-delimited records, one JSON object per line; FoilPair records are the
// ones carrying "doc_foil". Invalid records land in the rejection list, they
// never abort the load.
LoadResult load_dataset(const std::string& path);
LoadResult parse_dataset(const std::string& content, const std::string& name);

// Inverse of parse_dataset: pairs first, then foils, one object per line.
std::string serialize_dataset(const Dataset& ds);

// Input document for the synthetic generator.
struct SeedDoc {
    std::string id;
    std::string query;
    std::string text;  // >= 3 sentences
    std::string answer_text;
    size_t answer_offset = 0;
    std::string head_entity;            // surface form used by literal/repetition
    std::optional<std::string> variant;  // replacement surface, literal only
};

// Line-delimited seed records; unlike dataset loading, any bad record is
// fatal because seeds are authored, not scraped.
std::vector<SeedDoc> load_seed_docs(const std::string& path);

// Crude sentence segmentation: split on '.', '!' or '?' followed by
// whitespace. Returned segments include their terminator, not the gap.
std::vector<std::string> split_sentences(const std::string& text);

// Deterministic treatment/control construction per bias type:
//   brevity    D1 = answer-bearing sentence, D2 = full text
//   literal    D1 = text as-is, D2 = head entity replaced by the variant
//   position   D1 = answer sentence moved to the front, D2 = moved to the end
//   repetition D1 = one extra head-entity mention per non-answer sentence,
//              D2 = text as-is
// Output offsets are recomputed by string search on the generated documents.
std::vector<BiasPair> synth_pairs(const std::vector<SeedDoc>& seeds,
                                  BiasType bias_type, uint64_t rng_seed);

}  // namespace rba
