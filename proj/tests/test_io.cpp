#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "pmode/error.hpp"
#include "pmode/io.hpp"
#include "support.hpp"

using namespace pmode;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pmode_io_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name, std::ios::binary) << text;
    return path / name;
  }
};

std::string cifar_record(unsigned char label, unsigned char fill) {
  std::string rec(kCifarRecordBytes, static_cast<char>(fill));
  rec[0] = static_cast<char>(label);
  return rec;
}

template <class F>
std::string error_text(F&& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.what();
  }
  return {};
}

} // namespace

TEST_CASE("csv loading") {
  TempDir dir;
  const auto plain = load_csv(dir.write("a.csv", "1,2\n3,4\n5,6"));
  CHECK(plain.size() == 3);
  CHECK(plain.dim() == 2);
  CHECK(plain(2, 1) == 6.0);

  const auto header = load_csv(dir.write("b.csv", "x,y\n1,2\n3,4\n"));
  CHECK(header.size() == 2);
  CHECK(header.dim() == 2);

  const auto labelled = load_csv(dir.write("c.csv", "a,b,label\n0.5,1.5,2\n-1e-3, +4 ,0\r\n"), {true});
  CHECK(labelled.dim() == 2);
  CHECK(labelled.labels() == std::vector<int>{2, 0});
  CHECK(labelled(1, 1) == 4.0);

  CHECK(error_text([&] { load_csv(dir.write("d.csv", "1,2\nnan,3\n")); }).find("line 2") != std::string::npos);
  CHECK(error_text([&] { load_csv(dir.write("e.csv", "1,2\n3\n")); }).find("line 2") != std::string::npos);
  CHECK(error_text([&] { load_csv(dir.write("f.csv", "x,y\n1,2\n3,oops\n")); }).find("line 3") !=
        std::string::npos);
  CHECK_THROWS_AS(load_csv(dir.write("g.csv", "1,inf\n")), FormatError);
  CHECK_THROWS_AS(load_csv(dir.write("h.csv", "x,y\n")), FormatError);
  CHECK_THROWS_AS(load_csv(dir.write("i.csv", "1,2.5\n"), {true}), FormatError);
  CHECK_THROWS_AS(load_csv(dir.path / "missing.csv"), InvalidConfig);
}

TEST_CASE("bundled datasets load") {
  const auto iris = load_csv(PMODE_DATA_DIR "/iris.csv", {true});
  CHECK(iris.size() == 150);
  CHECK(iris.dim() == 4);
  const auto diabetes = load_csv(PMODE_DATA_DIR "/diabetes.csv");
  CHECK(diabetes.size() == 442);
  CHECK(diabetes.dim() == 10);
}

TEST_CASE("cifar batches") {
  TempDir dir;
  SUBCASE("two records split by class") {
    dir.write("data_batch_1.bin", cifar_record(0, 255) + cifar_record(1, 0));
    dir.write("test_batch.bin", cifar_record(0, 51) + cifar_record(3, 0) + cifar_record(9, 0));
    const auto split = load_cifar10(dir.path, 0);
    CHECK(split.train.size() == 1);
    CHECK(split.train.dim() == 3072);
    CHECK(split.train(0, 100) == 1.0);
    CHECK(split.test_nominal.size() == 1);
    CHECK(split.test_nominal(0, 0) == doctest::Approx(0.2));
    CHECK(split.test_anomalous.size() == 2);
  }
  SUBCASE("truncated file") {
    const auto p = dir.write("bad.bin", cifar_record(0, 1).substr(0, 3000));
    CHECK_THROWS_AS(read_cifar_batch(p), FormatError);
  }
  SUBCASE("label out of range") {
    const auto p = dir.write("bad.bin", cifar_record(10, 1));
    CHECK_THROWS_AS(read_cifar_batch(p), FormatError);
  }
  SUBCASE("missing files and bad class") {
    CHECK_THROWS_AS(load_cifar10(dir.path, 0), InvalidConfig);
    dir.write("data_batch_1.bin", cifar_record(0, 1));
    CHECK_THROWS_AS(load_cifar10(dir.path, 0), InvalidConfig);
    CHECK_THROWS_AS(load_cifar10(dir.path, 10), InvalidConfig);
  }
}

TEST_CASE("mixture json round trip") {
  const auto data = test::random_dataset(12, 2, 3);
  const auto kde = fit_product_kde(data.subset(std::vector<std::size_t>{0, 1, 2, 3}));
  const auto g = fit_gaussian(data);
  const MixtureDensity mix({0.25, 0.0, 0.75},
                           {std::make_shared<const Density>(kde), nullptr, std::make_shared<const Density>(g)});
  const auto j = mixture_to_json(mix);
  const auto back = mixture_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.k() == 3);
  CHECK(back.component(1) == nullptr);
  for (std::size_t i = 0; i < data.size(); ++i)
    CHECK(mixture_log_pdf(back, data.row(i)) == mixture_log_pdf(mix, data.row(i)));
  CHECK_THROWS_AS(mixture_from_json(nlohmann::json::parse(R"({"weights":[1]})")), FormatError);
  CHECK_THROWS_AS(mixture_from_json(nlohmann::json::parse(R"({"weights":[1],"components":[{"type":"x"}]})")),
                  FormatError);
}
