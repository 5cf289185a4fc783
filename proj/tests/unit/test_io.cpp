#include <cstdio>
#include <cstring>
#include <fstream>

#include "doctest.h"
#include "uvae/csv.hpp"
#include "uvae/errors.hpp"
#include "uvae/rng.hpp"
#include "uvae/sha256.hpp"

using namespace uvae;

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex(std::string("")) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex(std::string("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex(std::string("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")) ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("sha256 of a file matches the in-memory digest") {
    std::string payload(100000, 'x');
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(i % 251);
    {
        std::ofstream os("digest.bin", std::ios::binary);
        os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    }
    CHECK(sha256_file("digest.bin") == sha256_hex(payload));
    std::remove("digest.bin");
}

TEST_CASE("csv round-trips full-precision doubles bitwise") {
    Rng rng(1);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 20; ++i) {
        rows.push_back({rng.normal() * 1e-7, rng.normal() * 1e9, rng.uniform01()});
    }
    rows.push_back({0.1 + 0.2, -0.0, 1e-300});
    write_csv("roundtrip.csv", {"a", "b", "c"}, rows);
    CsvTable table = read_csv("roundtrip.csv");
    REQUIRE(table.header.size() == 3);
    CHECK(table.column("b") == 1);
    CHECK_THROWS_AS(table.column("missing"), ContractError);
    REQUIRE(table.rows.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::memcmp(&table.rows[i][j], &rows[i][j], sizeof(double)) == 0);
        }
    }
    std::remove("roundtrip.csv");
}

TEST_CASE("csv rejects malformed rows") {
    {
        std::ofstream os("bad.csv");
        os << "a,b\n1.0\n";
    }
    CHECK_THROWS_AS(read_csv("bad.csv"), ParseError);
    {
        std::ofstream os("bad.csv");
        os << "a,b\n1.0,zzz\n";
    }
    CHECK_THROWS_AS(read_csv("bad.csv"), ParseError);
    std::remove("bad.csv");
}
