#include "adatailr/corpus_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "adatailr/error.hpp"

namespace adatailr {

std::size_t diversity(const Corpus& corpus, const ReferenceVocab& reference) {
    std::unordered_set<TokenId> seen;
    for (const auto& doc : corpus.documents) {
        for (TokenId t : doc) {
            if (reference.contains(t)) seen.insert(t);
        }
    }
    return seen.size();
}

Histogram token_histogram(const Corpus& corpus) {
    Histogram h;
    for (const auto& doc : corpus.documents) {
        for (TokenId t : doc) ++h[t];
    }
    return h;
}

std::vector<SaturationPoint> saturation_curve(const Corpus& corpus, const std::vector<std::size_t>& sample_sizes,
                                              const ReferenceVocab& reference, std::uint64_t seed) {
    if (!std::is_sorted(sample_sizes.begin(), sample_sizes.end())) {
        throw Error(Errc::invalid_argument, "sample sizes must be ascending");
    }
    const std::size_t n = corpus.documents.size();
    for (std::size_t s : sample_sizes) {
        if (s > n) {
            throw Error(Errc::size_exceeds_corpus, std::to_string(s) + " > " + std::to_string(n) + " documents");
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<SaturationPoint> curve;
    std::unordered_set<TokenId> seen;
    std::size_t consumed = 0;
    for (std::size_t size : sample_sizes) {
        for (; consumed < size; ++consumed) {
            for (TokenId t : corpus.documents[order[consumed]]) {
                if (reference.contains(t)) seen.insert(t);
            }
        }
        curve.push_back({size, seen.size()});
    }
    return curve;
}

std::vector<std::size_t> log_spaced_sizes(std::size_t documents, std::size_t count) {
    std::vector<std::size_t> sizes;
    if (documents == 0 || count == 0) return sizes;
    if (count == 1) return {documents};
    const double top = std::log(static_cast<double>(documents));
    for (std::size_t k = 0; k < count; ++k) {
        const double x = top * static_cast<double>(k) / static_cast<double>(count - 1);
        auto s = static_cast<std::size_t>(std::llround(std::exp(x)));
        s = std::clamp<std::size_t>(s, 1, documents);
        if (sizes.empty() || sizes.back() != s) sizes.push_back(s);
    }
    sizes.back() = documents;
    return sizes;
}

DiversityReport diversity_report(const Corpus& corpus, const ReferenceVocab& reference,
                                 const std::vector<std::size_t>& sample_sizes, std::uint64_t seed) {
    DiversityReport r;
    r.histogram = token_histogram(corpus);
    r.unique_total = r.histogram.size();
    r.unique_in_reference = diversity(corpus, reference);
    r.documents = corpus.documents.size();
    for (const auto& [tok, count] : r.histogram) r.total_tokens += static_cast<std::size_t>(count);
    r.saturation = saturation_curve(corpus, sample_sizes, reference, seed);
    return r;
}

double concave_fraction(const std::vector<SaturationPoint>& curve) {
    if (curve.size() < 3) return 1.0;
    auto slope = [&](std::size_t i) {
        const double dx = static_cast<double>(curve[i + 1].sample_size) - static_cast<double>(curve[i].sample_size);
        const double dy = static_cast<double>(curve[i + 1].unique_count) - static_cast<double>(curve[i].unique_count);
        return dy / dx;
    };
    std::size_t ok = 0;
    for (std::size_t i = 0; i + 2 < curve.size(); ++i) ok += slope(i + 1) <= slope(i) ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(curve.size() - 2);
}

Corpus zipf_corpus(std::size_t documents, std::size_t doc_length, std::size_t vocab, double exponent,
                   std::uint64_t seed) {
    if (vocab == 0) throw Error(Errc::invalid_argument, "vocab must be >= 1");
    std::vector<double> mass(vocab);
    for (std::size_t k = 0; k < vocab; ++k) mass[k] = std::pow(static_cast<double>(k + 1), -exponent);
    std::discrete_distribution<TokenId> draw(mass.begin(), mass.end());
    std::mt19937_64 rng(seed);
    Corpus corpus;
    corpus.tokenizer_tag = "zipf";
    corpus.documents.resize(documents);
    for (auto& doc : corpus.documents) {
        doc.resize(doc_length);
        for (auto& t : doc) t = draw(rng);
    }
    return corpus;
}

nlohmann::ordered_json histogram_to_json(const Histogram& histogram) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [tok, count] : histogram) j[std::to_string(tok)] = count;
    return j;
}

Histogram histogram_from_json(const nlohmann::json& j) {
    Histogram h;
    try {
        for (const auto& [key, value] : j.items()) h[std::stoll(key)] = value.get<std::int64_t>();
    } catch (const std::exception& e) {
        throw Error(Errc::parse_error, e.what());
    }
    return h;
}

nlohmann::ordered_json to_json(const DiversityReport& r) {
    nlohmann::ordered_json curve = nlohmann::ordered_json::array();
    for (const auto& p : r.saturation) curve.push_back({{"sample_size", p.sample_size}, {"unique", p.unique_count}});
    return {{"unique_in_reference", r.unique_in_reference},
            {"unique_total", r.unique_total},
            {"total_tokens", r.total_tokens},
            {"documents", r.documents},
            {"saturation", curve},
            {"histogram", histogram_to_json(r.histogram)}};
}

std::vector<TokenId> WhitespaceTokenizer::encode(const std::string& line) {
    std::vector<TokenId> out;
    std::istringstream ss(line);
    std::string word;
    while (ss >> word) {
        auto [it, inserted] = ids_.try_emplace(word, static_cast<TokenId>(words_.size()));
        if (inserted) words_.push_back(word);
        out.push_back(it->second);
    }
    return out;
}

TokenId WhitespaceTokenizer::lookup(const std::string& word) const {
    const auto it = ids_.find(word);
    return it == ids_.end() ? -1 : it->second;
}

Corpus read_corpus(std::istream& is, WhitespaceTokenizer& tokenizer) {
    Corpus corpus;
    std::string line;
    std::size_t lineno = 0;
    bool any_json = false, any_text = false;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first != std::string::npos && line[first] == '{') {
            any_json = true;
            try {
                const auto j = nlohmann::json::parse(line);
                auto tokens = j.at("tokens").get<std::vector<TokenId>>();
                for (TokenId t : tokens) {
                    if (t < 0) throw Error(Errc::parse_error, "negative token id on line " + std::to_string(lineno));
                }
                corpus.documents.push_back(std::move(tokens));
            } catch (const nlohmann::json::exception& e) {
                throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": " + e.what());
            }
        } else {
            any_text = true;
            corpus.documents.push_back(tokenizer.encode(line));
        }
    }
    if (any_json && any_text) throw Error(Errc::parse_error, "corpus mixes JSONL and plain-text lines");
    corpus.tokenizer_tag = any_json ? "external-ids" : "whitespace";
    return corpus;
}

ReferenceVocab read_reference(std::istream& is, const WhitespaceTokenizer& tokenizer) {
    ReferenceVocab vocab;
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ss(line);
        std::string entry;
        if (!(ss >> entry)) continue;
        const bool numeric = std::all_of(entry.begin(), entry.end(), [](char c) { return c >= '0' && c <= '9'; });
        if (numeric && tokenizer.words().empty()) {
            vocab.insert(std::stoll(entry));
        } else if (const TokenId id = tokenizer.lookup(entry); id >= 0) {
            vocab.insert(id);
        }
    }
    return vocab;
}

}  // namespace adatailr
