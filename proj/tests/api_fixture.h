#ifndef RNNLENS_TESTS_API_FIXTURE_H_
#define RNNLENS_TESTS_API_FIXTURE_H_

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rnnlens/server.h"

namespace rnnlens::testing {

// Two small seeded models over a toy-corpus vocabulary.
struct ApiFixture {
  Vocabulary vocabulary;
  std::vector<TokenSequence> sequences;
  ModelCheckpoint lstm;
  ModelCheckpoint gru;
};

const ApiFixture& GetApiFixture();

// Service with "lstm" and "gru" registered; `cache` empty disables disk caching.
std::unique_ptr<ExplorerService> MakeService(const std::filesystem::path& cache = {});

ApiRequest Get(const std::string& path, std::map<std::string, std::string> query = {});
ApiRequest Post(const std::string& path, const std::string& body);

struct GoldenCase {
  std::string name;
  ApiRequest request;
};

std::vector<GoldenCase> GoldenCases();

// "status\nbody\n".
std::string Serialize(const ApiResponse& response);

std::filesystem::path GoldenPath(const std::string& name);

}  // namespace rnnlens::testing

#endif  // RNNLENS_TESTS_API_FIXTURE_H_
