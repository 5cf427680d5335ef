#include "scattermesh/vectorizer.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>

#include "scattermesh/error.hpp"

namespace scattermesh {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool all_digits(const std::string& s) {
    for (unsigned char c : s) {
        if (!std::isdigit(c)) return false;
    }
    return true;
}

}  // namespace

Tokens tokenize(std::string_view text, const StopwordSet& stopwords) {
    Tokens out;
    std::string cur;
    auto flush = [&] {
        if (cur.size() >= 2 && !all_digits(cur) && !stopwords.count(cur)) out.push_back(cur);
        cur.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_word_byte(c)) {
            cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
        } else if (c == '-' && !cur.empty() && i + 1 < text.size() &&
                   is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
            cur.push_back('-');
        } else {
            flush();
        }
    }
    flush();
    return out;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read stopword file '" + path.string() + "'");
    StopwordSet words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        words.insert(line);
    }
    return words;
}

Vocabulary::Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> df,
                       std::size_t n_docs)
    : terms_(std::move(terms)), df_(std::move(df)), n_docs_(n_docs) {
    if (terms_.size() != df_.size()) throw DataError("vocabulary terms and df differ in length");
    index_.reserve(terms_.size());
    for (std::size_t j = 0; j < terms_.size(); ++j) {
        if (!index_.emplace(terms_[j], j).second) {
            throw DataError("duplicate vocabulary term '" + terms_[j] + "'");
        }
        if (df_[j] > n_docs_) throw DataError("df of '" + terms_[j] + "' exceeds document count");
    }
}

long Vocabulary::index_of(const std::string& term) const {
    auto it = index_.find(term);
    return it == index_.end() ? -1 : static_cast<long>(it->second);
}

Vocabulary Vocabulary::restricted(const std::vector<std::size_t>& columns) const {
    std::vector<std::string> terms;
    std::vector<std::size_t> df;
    terms.reserve(columns.size());
    df.reserve(columns.size());
    for (auto j : columns) {
        terms.push_back(terms_.at(j));
        df.push_back(df_.at(j));
    }
    return Vocabulary(std::move(terms), std::move(df), n_docs_);
}

Vocabulary build_vocabulary(const std::vector<Tokens>& token_lists) {
    if (token_lists.size() < 2) throw DataError("vocabulary needs at least 2 documents");

    std::vector<std::string> order;
    std::unordered_map<std::string, std::size_t> df;
    std::unordered_map<std::string, std::size_t> last_doc;
    for (std::size_t d = 0; d < token_lists.size(); ++d) {
        for (const auto& tok : token_lists[d]) {
            auto [it, inserted] = last_doc.try_emplace(tok, d);
            if (inserted) {
                order.push_back(tok);
                df[tok] = 1;
            } else if (it->second != d) {
                it->second = d;
                ++df[tok];
            }
        }
    }

    std::vector<std::string> terms;
    std::vector<std::size_t> counts;
    for (auto& t : order) {
        const auto c = df[t];
        if (c < 2) continue;
        counts.push_back(c);
        terms.push_back(std::move(t));
    }
    if (terms.empty()) throw DataError("vocabulary is empty: no term occurs in two or more documents");
    return Vocabulary(std::move(terms), std::move(counts), token_lists.size());
}

std::string_view to_string(WeightScheme scheme) {
    switch (scheme) {
        case WeightScheme::PaperLiteral: return "paper_literal";
        case WeightScheme::LogInside: return "log_inside";
        case WeightScheme::Standard: return "standard";
    }
    return "paper_literal";
}

WeightScheme parse_weight_scheme(std::string_view name) {
    if (name == "paper_literal") return WeightScheme::PaperLiteral;
    if (name == "log_inside") return WeightScheme::LogInside;
    if (name == "standard") return WeightScheme::Standard;
    throw DataError("unknown weight scheme '" + std::string(name) + "'");
}

double term_weight(WeightScheme scheme, std::size_t tf, std::size_t n_docs, std::size_t df) {
    if (tf == 0 || df == 0) return 0.0;
    const double t = static_cast<double>(tf);
    const double ratio = static_cast<double>(n_docs) / static_cast<double>(df);
    switch (scheme) {
        case WeightScheme::PaperLiteral: return std::log(t) * ratio;
        case WeightScheme::LogInside: return std::log(t * ratio);
        case WeightScheme::Standard: return (1.0 + std::log(t)) * std::log(ratio);
    }
    return 0.0;
}

TermDocMatrix weight_matrix(const std::vector<Tokens>& token_lists,
                            std::shared_ptr<const Vocabulary> vocab, WeightScheme scheme,
                            std::vector<std::string> doc_ids) {
    if (!vocab) throw DataError("weight_matrix requires a vocabulary");
    if (token_lists.size() != vocab->n_docs()) {
        throw DataError("token lists do not match the vocabulary's document count");
    }
    if (doc_ids.empty()) {
        for (std::size_t i = 0; i < token_lists.size(); ++i) doc_ids.push_back(std::to_string(i));
    }
    if (doc_ids.size() != token_lists.size()) throw DataError("doc_ids length mismatch");

    using Triplet = Eigen::Triplet<double, Eigen::Index>;
    std::vector<Triplet> entries;
    std::map<std::size_t, std::size_t> tf;
    for (std::size_t d = 0; d < token_lists.size(); ++d) {
        tf.clear();
        for (const auto& tok : token_lists[d]) {
            const long j = vocab->index_of(tok);
            if (j >= 0) ++tf[static_cast<std::size_t>(j)];
        }
        for (const auto& [j, count] : tf) {
            const double w = term_weight(scheme, count, vocab->n_docs(), vocab->df()[j]);
            if (w > 0.0 && std::isfinite(w)) {
                entries.emplace_back(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(j), w);
            }
        }
    }

    TermDocMatrix m;
    m.weights.resize(static_cast<Eigen::Index>(token_lists.size()),
                     static_cast<Eigen::Index>(vocab->size()));
    m.weights.setFromTriplets(entries.begin(), entries.end());
    m.weights.makeCompressed();
    m.scheme = scheme;
    m.vocab = std::move(vocab);
    m.doc_ids = std::move(doc_ids);
    return m;
}

void write_matrix_market(const TermDocMatrix& matrix, std::ostream& out) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << "% rows: documents, columns: terms, scheme: " << to_string(matrix.scheme) << '\n';
    out << matrix.weights.rows() << ' ' << matrix.weights.cols() << ' ' << matrix.weights.nonZeros()
        << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index i = 0; i < matrix.weights.outerSize(); ++i) {
        for (SparseRows::InnerIterator it(matrix.weights, i); it; ++it) {
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
        }
    }
}

}  // namespace scattermesh
