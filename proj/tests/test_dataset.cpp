// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "support/fixtures.hpp"
#include "surveykit/dataset.hpp"

using namespace surveykit;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("surveykit_dataset_" + name);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("load_csv encodes labels against the schema") {
  const auto spec_path = temp_file("basic.vars");
  write_file(spec_path,
             "variable color\nkind nominal\ncategory Red\ncategory Blue\n\n"
             "variable answer\nkind binary\ncategory Yes\ncategory No\n");
  const auto csv_path = temp_file("basic.csv");
  write_file(csv_path,
             "color,answer,WEIGHT\nRed,Yes,1.5\nBlue,No,2\nRed,No,0.5\n");

  const auto data = load_csv(csv_path, spec_path);
  REQUIRE(data.n_rows() == 3);
  REQUIRE(data.n_vars() == 2);
  CHECK(data.at(0, 0) == 0);
  CHECK(data.at(1, 0) == 1);
  CHECK(data.at(2, 1) == 1);
  CHECK(data.weights == std::vector<double>{1.5, 2.0, 0.5});
}

TEST_CASE("load_csv rejects undeclared categories") {
  const auto spec_path = temp_file("yesno.vars");
  write_file(spec_path, "variable answer\nkind binary\ncategory Yes\ncategory No\n");
  const auto csv_path = temp_file("maybe.csv");
  write_file(csv_path, "answer\nYes\nMaybe\n");
  try {
    load_csv(csv_path, spec_path);
    FAIL("expected UnknownCategory");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_category);
    CHECK(std::string(e.what()).find("Maybe") != std::string::npos);
  }
}

TEST_CASE("load_csv error taxonomy") {
  const auto spec_path = temp_file("err.vars");
  write_file(spec_path, "variable answer\nkind binary\ncategory Yes\ncategory No\n");

  SECTION("missing cell") {
    const auto csv = temp_file("missing.csv");
    write_file(csv, "answer,WEIGHT\n,1\n");
    CHECK_THROWS_MATCHES(load_csv(csv, spec_path), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::missing_cell;
                         }));
  }
  SECTION("negative weight") {
    const auto csv = temp_file("negw.csv");
    write_file(csv, "answer,WEIGHT\nYes,-1\n");
    CHECK_THROWS_MATCHES(load_csv(csv, spec_path), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::negative_weight;
                         }));
  }
  SECTION("schema mismatch: unexpected column") {
    const auto csv = temp_file("extra.csv");
    write_file(csv, "answer,bogus\nYes,1\n");
    CHECK_THROWS_MATCHES(load_csv(csv, spec_path), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::schema_mismatch;
                         }));
  }
  SECTION("schema mismatch: missing column") {
    const auto csv = temp_file("none.csv");
    write_file(csv, "WEIGHT\n1\n");
    CHECK_THROWS_MATCHES(load_csv(csv, spec_path), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::schema_mismatch;
                         }));
  }
}

TEST_CASE("csv round-trip preserves the dataset") {
  auto m = fixtures::liguria_marginals();
  auto data = generate_fixture(m, 200, 99);
  data.weights[3] = 2.5;
  data.weights[7] = 0.75;

  const auto csv = temp_file("roundtrip.csv");
  save_csv(csv, data);
  const auto back = load_csv(csv, data.specs);
  CHECK(back == data);
}

TEST_CASE("fixture of published size re-serializes byte-identically") {
  const auto m = fixtures::liguria_marginals();
  const auto data = generate_fixture(m, 1925, 20240901);
  REQUIRE(data.n_rows() == 1925);
  REQUIRE(data.n_vars() == 19);

  const auto first = temp_file("fixture1.csv");
  const auto second = temp_file("fixture2.csv");
  save_csv(first, data);
  const auto reloaded = load_csv(first, m.specs);
  CHECK(reloaded == data);
  save_csv(second, reloaded);
  CHECK(read_file(first) == read_file(second));
}

TEST_CASE("quoted labels with commas survive the round trip") {
  CategoricalDataset data;
  data.specs = {{"stay", {"Yes", "No, only for a period"}, VariableKind::nominal}};
  data.cells = {0, 1, 1};
  data.weights = {1, 1, 1};
  const auto csv = temp_file("quoted.csv");
  save_csv(csv, data);
  CHECK(load_csv(csv, data.specs) == data);
}

TEST_CASE("normalize_weights") {
  CategoricalDataset d;
  d.specs = fixtures::generic_specs(1, 2);
  d.cells = {0, 0, 0};

  SECTION("proportionality") {
    d.weights = {2, 2, 4};
    const auto w = normalize_weights(d);
    CHECK(w[0] == Catch::Approx(0.25));
    CHECK(w[1] == Catch::Approx(0.25));
    CHECK(w[2] == Catch::Approx(0.5));
  }
  SECTION("uniform") {
    d.weights = {1, 1, 1};
    const auto w = normalize_weights(d);
    CHECK(w[0] == Catch::Approx(1.0 / 3));
  }
  SECTION("all zero") {
    d.weights = {0, 0, 0};
    CHECK_THROWS_MATCHES(normalize_weights(d), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::all_zero_weights;
                         }));
  }
  SECTION("scale invariance") {
    d.weights = {0.3, 1.7, 2.1};
    const auto w1 = normalize_weights(d);
    for (auto& w : d.weights) w *= 37.5;
    const auto w2 = normalize_weights(d);
    for (std::size_t i = 0; i < 3; ++i) CHECK(w1[i] == Catch::Approx(w2[i]).margin(1e-15));
  }
}

TEST_CASE("generate_fixture marginals and determinism") {
  SECTION("single category is degenerate") {
    Marginals m;
    m.specs = {{"a", {"A", "B"}, VariableKind::nominal}};
    m.frequencies = {{1.0, 0.0}};
    const auto d = generate_fixture(m, 5, 1);
    for (std::size_t i = 0; i < 5; ++i) CHECK(d.at(i, 0) == 0);
  }
  SECTION("same seed gives identical datasets") {
    const auto m = fixtures::liguria_marginals();
    CHECK(generate_fixture(m, 100, 7) == generate_fixture(m, 100, 7));
    CHECK_FALSE(generate_fixture(m, 100, 7) == generate_fixture(m, 100, 8));
  }
  SECTION("empirical frequency approaches the marginal") {
    Marginals m;
    m.specs = {{"Italian citizenship", {"Yes", "No"}, VariableKind::binary}};
    m.frequencies = {{0.954, 0.047}};  // rounded published values, renormalized on use
    double total = m.frequencies[0][0] + m.frequencies[0][1];
    for (auto& f : m.frequencies[0]) f /= total;
    const auto d = generate_fixture(m, 10000, 123);
    double yes = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) yes += d.at(i, 0) == 0;
    CHECK(std::abs(yes / 10000.0 - 0.954) < 0.01);
  }
  SECTION("marginals converge at binomial rate, 3 sigma") {
    Marginals m;
    m.specs = {{"v", {"a", "b", "c"}, VariableKind::nominal}};
    m.frequencies = {{0.62, 0.3, 0.08}};
    const std::size_t n = 100000;
    const auto d = generate_fixture(m, n, 4242);
    std::vector<double> counts(3, 0.0);
    for (std::size_t i = 0; i < n; ++i) counts[static_cast<std::size_t>(d.at(i, 0))] += 1.0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double p = m.frequencies[0][k];
      const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
      CHECK(std::abs(counts[k] / static_cast<double>(n) - p) <= 3.0 * se);
    }
  }
}

TEST_CASE("marginals validation") {
  const auto path = temp_file("bad.marginals");
  SECTION("sum far from one") {
    write_file(path, "variable v\ncategory a 0.5\ncategory b 0.3\n");
    CHECK_THROWS_MATCHES(load_marginals(path), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::invalid_marginal;
                         }));
  }
  SECTION("rounded sums are renormalized") {
    write_file(path, "variable v\ncategory a 0.954\ncategory b 0.047\n");
    const auto m = load_marginals(path);
    CHECK(m.frequencies[0][0] + m.frequencies[0][1] == Catch::Approx(1.0).margin(1e-12));
  }
}
