// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "smog/smog.hpp"

namespace fixture {

inline std::filesystem::path data_dir() { return SMOG_TEST_DATA_DIR; }
inline std::filesystem::path golden_dir() { return SMOG_GOLDEN_DIR; }
inline std::filesystem::path source_dir() { return SMOG_SOURCE_DIR; }

inline const smog::LocalStore& store()
{
    static const smog::LocalStore kg =
        smog::LocalStore::load(data_dir() / "kg_triples.tsv", data_dir() / "kg_labels.tsv");
    return kg;
}

inline std::shared_ptr<smog::Oracle> mock_oracle(smog::MockPolicy policy = {})
{
    return std::make_shared<smog::Oracle>(std::make_shared<smog::MockChatModel>(std::move(policy)));
}

inline const smog::HashedNgramEmbedding& embedding()
{
    static const smog::HashedNgramEmbedding e;
    return e;
}

inline std::vector<smog::AttributePair> pairs()
{
    return smog::load_pairs(data_dir() / "pairs.csv");
}

/// The 50 TEE fixture attributes (side, table, attribute, description).
inline std::vector<smog::AttributeSpec> attributes()
{
    std::ifstream in(data_dir() / "attributes.csv");
    auto records = smog::read_csv(in);
    std::vector<smog::AttributeSpec> out;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& f = records[i].fields;
        out.push_back({f[0] == "target" ? smog::SchemaSide::Target : smog::SchemaSide::Source, f[1], f[2], f[3]});
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Compares `actual` with a committed golden file. SMOG_UPDATE_GOLDEN=1
/// rewrites the file instead.
inline bool matches_golden(const std::string& name, const std::string& actual)
{
    const auto path = golden_dir() / name;
    if (const char* u = std::getenv("SMOG_UPDATE_GOLDEN"); u && std::string(u) == "1") {
        std::filesystem::create_directories(path.parent_path());
        std::ofstream(path, std::ios::binary) << actual;
        return true;
    }
    return std::filesystem::exists(path) && read_file(path) == actual;
}

/// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir()
    {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("smog_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

}  // namespace fixture
