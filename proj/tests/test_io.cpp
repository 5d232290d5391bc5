#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "tversky/exp/mnist.hpp"
#include "tversky/io/checkpoint.hpp"
#include "tversky/io/config.hpp"
#include "tversky/io/csv.hpp"
#include "tversky/io/idx.hpp"
#include "tversky/io/pgm.hpp"

using namespace tversky;

namespace {

std::string temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "tversky_io_test";
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("idx round-trip and validation errors") {
    std::string dir = temp_dir();
    auto ds = make_synthetic_digits(50, 3, "train");
    std::string imgs = dir + "/im.idx", lbls = dir + "/lb.idx";
    save_idx(ds, imgs, lbls);

    auto loaded = load_idx(imgs, lbls, "train");
    CHECK(loaded.size() == 50);
    CHECK(loaded.images.shape == std::vector<int64_t>{50, 1, 28, 28});
    for (float v : loaded.images.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    for (int64_t l : loaded.labels) {
        CHECK(l >= 0);
        CHECK(l <= 9);
    }

    // bad magic
    {
        std::ofstream f(dir + "/bad.idx", std::ios::binary);
        const char junk[8] = {0, 0, 1, 1, 0, 0, 0, 1};
        f.write(junk, 8);
    }
    CHECK_THROWS_WITH_AS(load_idx(dir + "/bad.idx", lbls), doctest::Contains("bad image magic"),
                         std::runtime_error);

    // truncated image payload: the error names a byte offset
    {
        std::ifstream in(imgs, std::ios::binary);
        std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        buf.resize(buf.size() / 2);
        std::ofstream out(dir + "/trunc.idx", std::ios::binary);
        out << buf;
    }
    CHECK_THROWS_WITH_AS(load_idx(dir + "/trunc.idx", lbls), doctest::Contains("at byte"),
                         std::runtime_error);

    // count mismatch
    auto small = make_synthetic_digits(20, 4, "x");
    save_idx(small, dir + "/im20.idx", dir + "/lb20.idx");
    CHECK_THROWS_WITH_AS(load_idx(imgs, dir + "/lb20.idx"), doctest::Contains("count mismatch"),
                         std::runtime_error);
}

TEST_CASE("csv: stable order, 9-digit floats, independent-parser round-trip") {
    CsvWriter w({"name", "value", "note"});
    w.row({"pi", format_float(3.14159265358979), "irrational"});
    w.row({"quoted", "1.0", "contains, comma and \"quotes\""});
    w.row({"tiny", format_float(1.25e-30), ""});
    std::string text = w.text();

    auto rows = parse_csv(text);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"name", "value", "note"});
    CHECK(rows[1][1] == "3.14159265");
    CHECK(rows[2][2] == "contains, comma and \"quotes\"");
    CHECK(rows[3][1] == "1.25e-30");

    // float32 survives a 9-significant-digit round trip
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        float v = static_cast<float>(rng.normal(0, 10));
        CHECK(static_cast<float>(std::stod(format_float(v))) == v);
    }

    CHECK_THROWS(w.row({"too", "few"}));
}

TEST_CASE("atomic write leaves no partial file at the target") {
    std::string dir = temp_dir();
    std::string path = dir + "/atomic.txt";
    write_file_atomic(path, "first");
    write_file_atomic(path, "second");
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "second");
    CHECK(!std::filesystem::exists(path + ".tmp"));

    // unwritable target directory
    CHECK_THROWS(write_file_atomic(dir + "/no/such/dir/file.txt", "x"));
}

TEST_CASE("config merge: defaults, nesting, unknown keys rejected") {
    nlohmann::json defaults = {
        {"epochs", 1000},
        {"optimizer", {{"lr", 0.01}, {"weight_decay", 0.0}}},
        {"out", "out"},
    };
    nlohmann::json file = {{"epochs", 50}, {"optimizer", {{"lr", 0.002}}}};
    auto merged = merge_config(defaults, file);
    CHECK(merged["epochs"] == 50);
    CHECK(merged["optimizer"]["lr"] == 0.002);
    CHECK(merged["optimizer"]["weight_decay"] == 0.0);
    CHECK(merged["out"] == "out");

    nlohmann::json typo = {{"epochz", 50}};
    CHECK_THROWS_WITH_AS(merge_config(defaults, typo), doctest::Contains("epochz"),
                         std::invalid_argument);
    nlohmann::json nested_typo = {{"optimizer", {{"lr2", 1}}}};
    CHECK_THROWS_WITH_AS(merge_config(defaults, nested_typo), doctest::Contains("optimizer.lr2"),
                         std::invalid_argument);
}

TEST_CASE("checkpoint: round-trip, byte-identical resave, corruption errors") {
    std::string dir = temp_dir();
    std::string path = dir + "/model.tvck";

    MnistNet net(MnistVariant::Tversky, 77);
    nlohmann::json meta = {{"model", "tversky"}, {"epoch", 3}};
    std::vector<std::pair<std::string, const Tensor<float>*>> tensors;
    auto params = net.parameters();
    auto names = net.parameter_names();
    for (size_t i = 0; i < params.size(); ++i) tensors.emplace_back(names[i], params[i]);
    save_checkpoint(path, meta, tensors);

    auto ck = load_checkpoint(path);
    CHECK(ck.meta["model"] == "tversky");
    CHECK(ck.meta["epoch"] == 3);
    REQUIRE(ck.tensors.size() == params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& t = ck.tensors.at(names[i]);
        CHECK(t.shape == params[i]->shape);
        CHECK(t.data == params[i]->data);
    }

    // byte-identical resave
    std::ifstream f1(path, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    save_checkpoint(path, meta, tensors);
    std::ifstream f2(path, std::ios::binary);
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    // corrupt magic
    {
        std::string junk = b1;
        junk[0] = 'X';
        write_file_atomic(dir + "/corrupt.tvck", junk);
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(dir + "/corrupt.tvck"), doctest::Contains("bad magic"),
                         std::runtime_error);
    // truncation
    write_file_atomic(dir + "/short.tvck", b1.substr(0, b1.size() / 3));
    CHECK_THROWS_WITH_AS(load_checkpoint(dir + "/short.tvck"), doctest::Contains("truncated"),
                         std::runtime_error);
}

TEST_CASE("pgm read/write round-trip") {
    std::string dir = temp_dir();
    std::vector<uint8_t> px{0, 64, 128, 255, 10, 20};
    write_pgm(dir + "/t.pgm", 2, 3, px);
    auto img = read_pgm(dir + "/t.pgm");
    CHECK(img.height == 2);
    CHECK(img.width == 3);
    CHECK(img.pixels == px);
}

TEST_SUITE_END();
