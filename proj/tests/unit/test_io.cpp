#include <doctest.h>

#include <cstring>
#include <random>

#include "owdisc/errors.hpp"
#include "owdisc/io.hpp"
#include "support.hpp"

using namespace owdisc;

namespace {

std::vector<std::byte> cef_bytes(std::uint32_t n, std::uint32_t d, const std::vector<float>& values,
                                 const std::vector<std::uint32_t>& labels = {}) {
  std::vector<std::byte> out(kCefHeaderBytes + values.size() * 4 + labels.size() * 4);
  std::memcpy(out.data(), "CEF1", 4);
  std::memcpy(out.data() + 4, &n, 4);
  std::memcpy(out.data() + 8, &d, 4);
  out[12] = std::byte{static_cast<unsigned char>(labels.empty() ? 0 : 1)};
  std::memcpy(out.data() + kCefHeaderBytes, values.data(), values.size() * 4);
  std::memcpy(out.data() + kCefHeaderBytes + values.size() * 4, labels.data(), labels.size() * 4);
  return out;
}

}  // namespace

TEST_CASE("CEF decode of a two-row identity set") {
  const EmbeddingSet set = decode_cef(cef_bytes(2, 2, {1, 0, 0, 1}));
  CHECK(set.count() == 2);
  CHECK(set.dim() == 2);
  CHECK_FALSE(set.has_labels());
  CHECK(set.vectors() == test::rows({{1, 0}, {0, 1}}));
}

TEST_CASE("CEF rows are renormalized on load") {
  const EmbeddingSet set = decode_cef(cef_bytes(1, 2, {3, 4}));
  CHECK(set.row(0)(0) == doctest::Approx(0.6f));
  CHECK(set.row(0)(1) == doctest::Approx(0.8f));
}

TEST_CASE("CEF rejects bad magic, truncation, trailing bytes and zero rows") {
  auto bytes = cef_bytes(1, 2, {1, 0});
  auto bad = bytes;
  std::memcpy(bad.data(), "XXXX", 4);
  CHECK_THROWS_WITH_AS(decode_cef(bad), doctest::Contains("bad magic"), FormatError);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_WITH_AS(decode_cef(truncated), doctest::Contains("truncated"), FormatError);
  CHECK_THROWS_AS(decode_cef(std::span(bytes).first(7)), FormatError);

  auto trailing = bytes;
  trailing.push_back(std::byte{0});
  CHECK_THROWS_AS(decode_cef(trailing), FormatError);

  CHECK_THROWS_WITH_AS(decode_cef(cef_bytes(2, 2, {1, 0, 0, 0})), doctest::Contains("row 1"), FormatError);
}

TEST_CASE("CEF labels follow the vectors") {
  const EmbeddingSet set = decode_cef(cef_bytes(2, 2, {1, 0, 0, 1}, {4, 2}));
  REQUIRE(set.has_labels());
  CHECK(set.labels() == Labels{4, 2});
  const auto encoded = encode_cef(set);
  CHECK(encoded[12] == std::byte{1});
  CHECK(encoded.size() == kCefHeaderBytes + 2 * 2 * 4 + 2 * 4);
}

TEST_CASE("CEF save/load is byte-stable for a seeded random set") {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> normal;
  FloatMatrix m(10, 8);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  const EmbeddingSet set(m);
  test::TempDir dir;
  save_embeddings(set, dir / "a.cef");
  const EmbeddingSet loaded = load_embeddings(dir / "a.cef");
  CHECK(loaded == set);
  save_embeddings(loaded, dir / "b.cef");
  CHECK(read_text_file(dir / "a.cef") == read_text_file(dir / "b.cef"));
}

TEST_CASE("an empty set is a bare header") {
  const EmbeddingSet empty;
  const auto bytes = encode_cef(empty);
  CHECK(bytes.size() == kCefHeaderBytes);
  const EmbeddingSet back = decode_cef(bytes);
  CHECK(back.empty());
}

TEST_CASE("CSV embeddings with and without labels") {
  const EmbeddingSet plain = parse_embeddings_csv("a,b\n3,4\n0,2\n");
  CHECK(plain.count() == 2);
  CHECK_FALSE(plain.has_labels());
  CHECK(plain.row(0)(0) == doctest::Approx(0.6f));

  const EmbeddingSet labeled = parse_embeddings_csv("x0,x1,label\n1,0,1\n0,1,0\n");
  CHECK(labeled.labels() == Labels{1, 0});
  CHECK_THROWS_AS(parse_embeddings_csv("x0,x1\n1\n"), FormatError);
  CHECK_THROWS_AS(parse_embeddings_csv("x0,label\n1,-1\n"), FormatError);
}

TEST_CASE("load_embeddings dispatches on content") {
  test::TempDir dir;
  write_text_file(dir / "e.csv", "a,b\n1,0\n");
  CHECK(load_embeddings(dir / "e.csv").count() == 1);
  write_text_file(dir / "e.bin", "a,b\n1,0\n");
  CHECK_THROWS_WITH_AS(load_embeddings(dir / "e.bin"), doctest::Contains("bad magic"), FormatError);
}

TEST_CASE("prototype banks, labels and predictions round-trip") {
  test::TempDir dir;
  const PrototypeBank bank = PrototypeBank::from_directions(Eigen::MatrixXd::Identity(3, 2), PrototypeKind::Unseen);
  save_prototypes(bank, dir / "p.cef");
  CHECK(load_prototypes(dir / "p.cef") == bank);

  const Labels labels{3, 0, 7};
  save_labels_csv(labels, dir / "truth.csv");
  CHECK(load_labels_csv(dir / "truth.csv") == labels);

  const PredictionSet predictions{{1, 12, 0}, {0.5f, 0.123456789f, 1.0f}};
  save_predictions_csv(predictions, dir / "pred.csv");
  CHECK(load_predictions_csv(dir / "pred.csv") == predictions);
}
