#include "owdisc/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "owdisc/errors.hpp"

namespace owdisc {
namespace {

constexpr char kMagic[4] = {'C', 'E', 'F', '1'};

static_assert(std::numeric_limits<float>::is_iec559, "CEF requires IEEE-754 binary32 floats");

void put_u32(std::vector<std::byte>& out, std::uint32_t value) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::byte>((value >> shift) & 0xFFu));
}

std::uint32_t get_u32(std::span<const std::byte> bytes, std::size_t offset) {
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) value |= std::to_integer<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return value;
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line_no, std::string_view what) {
  T value{};
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw FormatError("line " + std::to_string(line_no) + ": cannot parse " + std::string(what) + " '" + text + "'");
  }
  return value;
}

std::uint32_t parse_label(const std::string& text, std::size_t line_no) {
  const auto value = parse_number<std::int64_t>(text, line_no, "label");
  if (value < 0 || value > static_cast<std::int64_t>(std::numeric_limits<std::uint32_t>::max())) {
    throw FormatError("line " + std::to_string(line_no) + ": label " + text + " out of u32 range");
  }
  return static_cast<std::uint32_t>(value);
}

std::vector<std::string> read_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

std::filesystem::path sidecar_path(const std::filesystem::path& cef_path) {
  auto sidecar = cef_path;
  sidecar.replace_extension(".json");
  return sidecar;
}

}  // namespace

std::vector<std::byte> encode_cef(const EmbeddingSet& set) {
  if (set.count() > std::numeric_limits<std::uint32_t>::max() || set.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("embedding set too large for CEF");
  }
  std::vector<std::byte> out;
  out.reserve(kCefHeaderBytes + set.count() * set.dim() * 4 + (set.has_labels() ? set.count() * 4 : 0));
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_u32(out, static_cast<std::uint32_t>(set.count()));
  put_u32(out, static_cast<std::uint32_t>(set.dim()));
  out.push_back(static_cast<std::byte>(set.has_labels() ? 1 : 0));
  const auto& vectors = set.vectors();
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) put_u32(out, std::bit_cast<std::uint32_t>(vectors(i, j)));
  }
  if (set.has_labels()) {
    for (auto label : set.labels()) put_u32(out, label);
  }
  return out;
}

EmbeddingSet decode_cef(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic at byte offset 0 (expected \"CEF1\")");
  }
  if (bytes.size() < kCefHeaderBytes) {
    throw FormatError("truncated header: " + std::to_string(bytes.size()) + " of " +
                      std::to_string(kCefHeaderBytes) + " bytes");
  }
  const std::uint64_t n = get_u32(bytes, 4);
  const std::uint64_t d = get_u32(bytes, 8);
  const auto flag = std::to_integer<std::uint8_t>(bytes[12]);
  if (flag > 1) throw FormatError("invalid has_labels flag " + std::to_string(flag) + " at byte offset 12");
  const bool has_labels = flag == 1;

  const std::uint64_t payload_end = kCefHeaderBytes + n * d * 4;
  const std::uint64_t expected = payload_end + (has_labels ? n * 4 : 0);
  if (bytes.size() < expected) {
    throw FormatError("truncated payload: expected " + std::to_string(expected) + " bytes, file ends at byte offset " +
                      std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw FormatError("trailing data after byte offset " + std::to_string(expected));
  }
  if (n > 0 && d == 0) throw FormatError("zero dimension with " + std::to_string(n) + " rows at byte offset 8");

  FloatMatrix vectors(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::size_t offset = kCefHeaderBytes;
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
      vectors(i, j) = std::bit_cast<float>(get_u32(bytes, offset));
      offset += 4;
    }
  }
  std::optional<Labels> labels;
  if (has_labels) {
    labels.emplace(n);
    for (std::size_t i = 0; i < n; ++i, offset += 4) (*labels)[i] = get_u32(bytes, offset);
  }
  if (auto zero = normalize_rows(vectors)) {
    throw FormatError("row " + std::to_string(*zero) + " (byte offset " +
                      std::to_string(kCefHeaderBytes + *zero * d * 4) + ") has zero or non-finite norm");
  }
  return EmbeddingSet(std::move(vectors), std::move(labels));
}

EmbeddingSet parse_embeddings_csv(const std::string& text) {
  const auto lines = read_lines(text);
  if (lines.empty()) throw FormatError("CSV is empty; a header row is required");
  const auto header = split_fields(lines.front());
  const bool has_labels = !header.empty() && header.back() == "label";
  const std::size_t d = header.size() - (has_labels ? 1 : 0);
  if (d == 0) throw FormatError("CSV header declares no feature columns");

  FloatMatrix vectors(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(d));
  std::optional<Labels> labels;
  if (has_labels) labels.emplace(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    if (fields.size() != header.size()) {
      throw FormatError("line " + std::to_string(r + 1) + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      vectors(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) =
          parse_number<float>(fields[j], r + 1, "float");
    }
    if (has_labels) (*labels)[r - 1] = parse_label(fields.back(), r + 1);
  }
  if (auto zero = normalize_rows(vectors)) {
    throw FormatError("row " + std::to_string(*zero) + " (line " + std::to_string(*zero + 2) +
                      ") has zero or non-finite norm");
  }
  return EmbeddingSet(std::move(vectors), std::move(labels));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  const auto* data = reinterpret_cast<const std::byte*>(content.data());
  const bool cef_magic = content.size() >= 4 && std::memcmp(content.data(), kMagic, 4) == 0;
  if (!cef_magic && path.extension() == ".csv") return parse_embeddings_csv(content);
  return decode_cef(std::span<const std::byte>(data, content.size()));
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  const auto bytes = encode_cef(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

void save_prototypes(const PrototypeBank& bank, const std::filesystem::path& cef_path) {
  FloatMatrix rows = bank.columns().transpose();
  if (bank.empty()) rows.resize(0, static_cast<Eigen::Index>(bank.dim()));
  save_embeddings(EmbeddingSet(std::move(rows)), cef_path);
  nlohmann::json sidecar = {{"kind", std::string(to_string(bank.kind()))},
                            {"count", bank.count()},
                            {"dim", bank.dim()}};
  write_text_file(sidecar_path(cef_path), sidecar.dump(2) + "\n");
}

PrototypeBank load_prototypes(const std::filesystem::path& cef_path) {
  const auto rows = load_embeddings(cef_path);
  const auto sidecar = nlohmann::json::parse(read_text_file(sidecar_path(cef_path)));
  const auto kind = parse_prototype_kind(sidecar.at("kind").get<std::string>());
  Eigen::MatrixXf columns = rows.vectors().transpose();
  if (rows.empty()) columns.resize(sidecar.at("dim").get<Eigen::Index>(), 0);
  return PrototypeBank(std::move(columns), kind);
}

void save_labels_csv(const Labels& labels, const std::filesystem::path& path) {
  std::string text = "sample_index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) text += std::to_string(i) + "," + std::to_string(labels[i]) + "\n";
  write_text_file(path, text);
}

Labels load_labels_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(read_text_file(path));
  if (lines.empty()) throw FormatError(path.string() + ": missing header row");
  Labels labels(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    if (fields.size() != 2) throw FormatError(path.string() + ": line " + std::to_string(r + 1) + " needs 2 fields");
    const auto index = parse_number<std::size_t>(fields[0], r + 1, "sample index");
    if (index != r - 1) throw FormatError(path.string() + ": line " + std::to_string(r + 1) + " out of order");
    labels[r - 1] = parse_label(fields[1], r + 1);
  }
  return labels;
}

void save_predictions_csv(const PredictionSet& predictions, const std::filesystem::path& path) {
  std::string text = "sample_index,class_id,confidence\n";
  char buffer[32];
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int len = std::snprintf(buffer, sizeof(buffer), "%.9g", static_cast<double>(predictions.confidences[i]));
    text += std::to_string(i) + "," + std::to_string(predictions.assignments[i]) + "," + std::string(buffer, len) + "\n";
  }
  write_text_file(path, text);
}

PredictionSet load_predictions_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(read_text_file(path));
  if (lines.empty()) throw FormatError(path.string() + ": missing header row");
  PredictionSet predictions;
  predictions.assignments.resize(lines.size() - 1);
  predictions.confidences.resize(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    if (fields.size() != 3) throw FormatError(path.string() + ": line " + std::to_string(r + 1) + " needs 3 fields");
    const auto index = parse_number<std::size_t>(fields[0], r + 1, "sample index");
    if (index != r - 1) throw FormatError(path.string() + ": line " + std::to_string(r + 1) + " out of order");
    predictions.assignments[r - 1] = parse_label(fields[1], r + 1);
    predictions.confidences[r - 1] = parse_number<float>(fields[2], r + 1, "confidence");
  }
  return predictions;
}

}  // namespace owdisc
