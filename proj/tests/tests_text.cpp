#include <doctest.h>

#include <string>
#include <utility>
#include <vector>

#include "icf/porter.hpp"
#include "icf/text.hpp"

TEST_CASE("tokenize_words lowercases and splits on non-alphanumerics") {
  using V = std::vector<std::string>;
  CHECK(icf::tokenize_words("Pt. gets up") == V{"pt", "gets", "up"});
  CHECK(icf::tokenize_words("  Wheel-chair to BED!! ") == V{"wheel", "chair", "to", "bed"});
  CHECK(icf::tokenize_words("walked 10m x2") == V{"walked", "10m", "x2"});
  CHECK(icf::tokenize_words("") == V{});
  CHECK(icf::tokenize_words("...") == V{});
}

TEST_CASE("stopword list is the fixed 179-entry english list") {
  const auto& sw = icf::english_stopwords();
  CHECK(sw.size() == 179);
  CHECK(std::string(icf::kStopwordsVersion) == "english-179-v1");
  for (const char* w : {"the", "a", "an", "and", "is", "on", "of", "to", "in"})
    CHECK(sw.count(w) == 1);
  for (const char* w : {"walk", "patient", "bed", "moving", "foot"})
    CHECK(sw.count(w) == 0);
}

TEST_CASE("porter stemmer reproduces the reference algorithm") {
  // Pairs frozen from an independent reimplementation of the official
  // algorithm, cross-checked against its published examples.
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"caresses", "caress"}, {"ponies", "poni"},       {"ties", "ti"},
      {"caress", "caress"},   {"cats", "cat"},          {"feed", "feed"},
      {"agreed", "agre"},     {"plastered", "plaster"}, {"bled", "bled"},
      {"motoring", "motor"},  {"sing", "sing"},         {"conflated", "conflat"},
      {"troubled", "troubl"}, {"sized", "size"},        {"hopping", "hop"},
      {"tanned", "tan"},      {"falling", "fall"},      {"hissing", "hiss"},
      {"fizzed", "fizz"},     {"failing", "fail"},      {"filing", "file"},
      {"happy", "happi"},     {"sky", "sky"},           {"relational", "relat"},
      {"conditional", "condit"}, {"rational", "ration"}, {"valency", "valenc"},
      {"hesitancy", "hesit"}, {"digitizer", "digit"},   {"conformably", "conform"},
      {"radically", "radic"}, {"differently", "differ"}, {"vilely", "vile"},
      {"analogously", "analog"}, {"vietnamization", "vietnam"},
      {"predication", "predic"}, {"operator", "oper"},  {"feudalism", "feudal"},
      {"decisiveness", "decis"}, {"hopefulness", "hope"}, {"callousness", "callous"},
      {"formality", "formal"}, {"sensitivity", "sensit"}, {"sensibility", "sensibl"},
      {"triplicate", "triplic"}, {"formative", "form"}, {"formalize", "formal"},
      {"electricity", "electr"}, {"electrical", "electr"}, {"hopeful", "hope"},
      {"goodness", "good"},   {"revival", "reviv"},     {"allowance", "allow"},
      {"inference", "infer"}, {"airliner", "airlin"},   {"gyroscopic", "gyroscop"},
      {"adjustable", "adjust"}, {"defensible", "defens"}, {"irritant", "irrit"},
      {"replacement", "replac"}, {"adjustment", "adjust"}, {"dependent", "depend"},
      {"adoption", "adopt"},  {"communism", "commun"},  {"activate", "activ"},
      {"angularity", "angular"}, {"homologous", "homolog"}, {"effective", "effect"},
      {"bowdlerize", "bowdler"}, {"probate", "probat"}, {"rate", "rate"},
      {"cease", "ceas"},      {"controlling", "control"}, {"rolled", "roll"},
      {"generalizations", "gener"}, {"oscillators", "oscil"},
      // Domain vocabulary used throughout the corpus and definitions.
      {"walking", "walk"},    {"moving", "move"},       {"along", "along"},
      {"surface", "surfac"},  {"foot", "foot"},         {"getting", "get"},
      {"gets", "get"},        {"work", "work"},         {"worked", "work"},
      {"transferred", "transfer"}, {"transfers", "transfer"},
      {"ambulated", "ambul"}, {"ambulation", "ambul"},  {"assistance", "assist"},
      {"wheelchair", "wheelchair"}, {"standing", "stand"}, {"kneeling", "kneel"},
      {"squatting", "squat"}, {"carrying", "carri"},    {"lifting", "lift"},
      {"propelling", "propel"}, {"stairs", "stair"},    {"climbing", "climb"},
  };
  for (const auto& [word, want] : pairs) {
    CAPTURE(word);
    CHECK(icf::porter_stem(word) == want);
  }
}

TEST_CASE("porter stemmer leaves words of length <= 2 unchanged") {
  CHECK(icf::porter_stem("is") == "is");
  CHECK(icf::porter_stem("a") == "a");
  CHECK(icf::porter_stem("up") == "up");
  CHECK(icf::porter_stem("") == "");
}
