#include <cstring>
#include <filesystem>

#include "covnli/io.hpp"
#include "helpers.hpp"

using namespace covnli;

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("base64 known vectors and round trip") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
    CHECK(base64_decode("Zm9vYmE=") == "fooba");
    std::string bytes;
    for (int i = 0; i < 256; ++i) bytes.push_back(static_cast<char>(i));
    CHECK(base64_decode(base64_encode(bytes)) == bytes);
    CHECK_THROWS(base64_decode("Zm9v!"));
}

TEST_CASE("atomic write replaces the file and read returns it") {
    const auto dir = std::filesystem::temp_directory_path() / "covnli_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "x.txt";
    write_file_atomic(path, "first");
    write_file_atomic(path, "second\n");
    CHECK(read_file(path) == "second\n");
    CHECK_THROWS(read_file(dir / "missing.txt"));
    std::filesystem::remove_all(dir);
}
