#pragma once

// Vocabulary diversity of a token-id corpus: distinct tokens that also
// appear in a reference vocabulary, token frequency histograms, and the
// saturation curve of distinct tokens against the number of documents.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace adatailr {

using TokenId = std::int64_t;

struct Corpus {
    std::vector<std::vector<TokenId>> documents;
    std::string tokenizer_tag;
};

using ReferenceVocab = std::set<TokenId>;
using Histogram = std::map<TokenId, std::int64_t>;

struct SaturationPoint {
    std::size_t sample_size;
    std::size_t unique_count;
};

struct DiversityReport {
    std::size_t unique_in_reference = 0;
    std::size_t unique_total = 0;
    std::size_t total_tokens = 0;
    std::size_t documents = 0;
    Histogram histogram;
    std::vector<SaturationPoint> saturation;
};

std::size_t diversity(const Corpus& corpus, const ReferenceVocab& reference);
Histogram token_histogram(const Corpus& corpus);

/// Counts over nested prefixes of one seeded shuffle of the document order,
/// so the curve is non-decreasing. `sample_sizes` must be ascending.
std::vector<SaturationPoint> saturation_curve(const Corpus& corpus, const std::vector<std::size_t>& sample_sizes,
                                              const ReferenceVocab& reference, std::uint64_t seed);

/// `count` sizes spaced evenly in log space from 1 to `documents`, deduplicated.
std::vector<std::size_t> log_spaced_sizes(std::size_t documents, std::size_t count = 10);

DiversityReport diversity_report(const Corpus& corpus, const ReferenceVocab& reference,
                                 const std::vector<std::size_t>& sample_sizes, std::uint64_t seed);

/// Fraction of consecutive point triples whose secant slope does not
/// increase. 1 when there are fewer than three points.
double concave_fraction(const std::vector<SaturationPoint>& curve);

/// Documents of `doc_length` tokens drawn i.i.d. from a Zipf law with the
/// given exponent over ids 0..vocab-1.
Corpus zipf_corpus(std::size_t documents, std::size_t doc_length, std::size_t vocab, double exponent,
                   std::uint64_t seed);

nlohmann::ordered_json to_json(const DiversityReport& report);
nlohmann::ordered_json histogram_to_json(const Histogram& histogram);
Histogram histogram_from_json(const nlohmann::json& j);

/// Maps whitespace-separated words to dense ids in order of first appearance.
class WhitespaceTokenizer {
public:
    std::vector<TokenId> encode(const std::string& line);
    /// Id of `word` without assigning a new one; -1 when unseen.
    TokenId lookup(const std::string& word) const;
    const std::vector<std::string>& words() const noexcept { return words_; }

private:
    std::unordered_map<std::string, TokenId> ids_;
    std::vector<std::string> words_;
};

/// One document per line. Lines starting with '{' are read as
/// {"tokens": [ids]}; other lines go through `tokenizer`.
Corpus read_corpus(std::istream& is, WhitespaceTokenizer& tokenizer);

/// One entry per line: an integer id when the corpus carried ids (the
/// tokenizer is empty), otherwise a word resolved through `tokenizer`
/// (words the corpus never produced are skipped; they cannot match).
ReferenceVocab read_reference(std::istream& is, const WhitespaceTokenizer& tokenizer);

}  // namespace adatailr
