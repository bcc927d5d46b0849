// Writes the bundled toy corpora into a directory.
#include <iostream>

#include <CLI11.hpp>

#include "oral/corpus.hpp"
#include "oral/toy.hpp"
#include "oral/util.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate the toy corpora"};
  std::string dir = "data/toy";
  std::uint64_t seed = 7;
  app.add_option("--dir", dir)->capture_default_str();
  app.add_option("--seed", seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path d(dir);
    oral::write_conllu(d / "grammar.conllu", oral::toy_grammar_trees(200, seed));

    {
      auto out = oral::open_out(d / "turns.jsonl");
      for (const auto& t : oral::toy_turns(60, seed + 1))
        out << nlohmann::ordered_json{{"recording_id", t.recording_id}, {"speaker", t.speaker_id},
                                      {"start", t.start}, {"end", t.end}, {"text", t.raw_text}}
                   .dump()
            << '\n';
    }

    const auto slu = oral::toy_slu_samples(500, seed + 2);
    const std::span<const oral::SluSample> all(slu);
    oral::write_slu_tsv(d / "slu.train.tsv", all.subspan(0, 400));
    oral::write_slu_tsv(d / "slu.dev.tsv", all.subspan(400, 50));
    oral::write_slu_tsv(d / "slu.test.tsv", all.subspan(450, 50));
    {
      auto out = oral::open_out(d / "slu.rules.json");
      out << oral::toy_value_rules().dump(2) << '\n';
    }

    oral::write_documents(d / "documents.jsonl", oral::toy_documents(600, seed + 3));

    auto out = oral::open_out(d / "names.txt");
    for (const char* n : {"marie", "pierre", "sophie", "julien", "claire", "antoine"}) out << n << '\n';
  } catch (const oral::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
