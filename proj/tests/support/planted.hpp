#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scattermesh/corpus.hpp"

namespace planted {

// Synthetic corpus with `topics` disjoint topic vocabularies plus a shared
// background vocabulary. Each field draws a word from the document's topic
// with the field's signal probability, otherwise from the background.
struct Options {
    std::size_t docs = 400;
    std::size_t topics = 4;
    std::size_t topic_words = 25;
    std::size_t background_words = 300;
    std::size_t title_length = 8;
    std::size_t abstract_length = 60;
    std::size_t body_length = 200;
    double title_signal = 0.25;
    double abstract_signal = 0.3;
    double body_signal = 0.3;
    std::uint64_t seed = 7;
};

// Word j of topic t, e.g. "topic2w07".
std::string topic_word(std::size_t topic, std::size_t j);

// Labels are "topic0".."topicN"; documents are interleaved across topics.
scattermesh::LabeledDataset make(const Options& options = {});

// The same corpus with mesh_major labels kept, for dataset-building tests.
scattermesh::Corpus make_labeled_corpus(const Options& options = {});

}  // namespace planted
