#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "oral/corpus.hpp"
#include "oral/normalize.hpp"

// Small synthetic corpora for tests, the acceptance suite and the bundled
// data/toy files.

namespace oral {

// DET NOUN VERB [DET NOUN]: det <- noun <- verb <- root, optional object.
std::vector<DepTree> toy_grammar_trees(std::size_t n, std::uint64_t seed);

// Raw diarization turns (capitalised, punctuated) whose normalised text is a
// toy grammar sentence; a few turns are empty or repeated.
std::vector<DiarizationTurn> toy_turns(std::size_t n, std::uint64_t seed);

// Hotel-booking requests over five concepts.
std::vector<std::string> toy_slu_concepts();
std::vector<SluSample> toy_slu_samples(std::size_t n, std::uint64_t seed);
nlohmann::json toy_value_rules();

// Three categories with mostly disjoint topical vocabularies.
std::vector<LabeledDocument> toy_documents(std::size_t n, std::uint64_t seed);

}  // namespace oral
