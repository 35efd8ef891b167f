#include "vqsel/feature_store.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace vqsel {

namespace {

using nlohmann::json;

std::vector<std::uint8_t> read_all_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("feature store: cannot open file: " + path.string());
  in.seekg(0, std::ios::end);
  std::streamoff len = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
  if (len > 0) in.read(reinterpret_cast<char*>(bytes.data()), len);
  if (!in) throw Error("feature store: failed reading file: " + path.string());
  return bytes;
}

float float_from_le(const std::uint8_t* p) {
  std::uint32_t u = static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
                    static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
  return std::bit_cast<float>(u);
}

void float_to_le(float v, std::uint8_t* p) {
  std::uint32_t u = std::bit_cast<std::uint32_t>(v);
  p[0] = static_cast<std::uint8_t>(u & 0xff);
  p[1] = static_cast<std::uint8_t>((u >> 8) & 0xff);
  p[2] = static_cast<std::uint8_t>((u >> 16) & 0xff);
  p[3] = static_cast<std::uint8_t>((u >> 24) & 0xff);
}

// Shortest round-trip decimal text for a double.
std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double_field(const std::string& s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("scores: malformed number '" + s + "' in " + context);
  }
  if (!std::isfinite(v)) throw Error("scores: non-finite value in " + context);
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

FeatureStore load_feature_store(const std::filesystem::path& manifest_path) {
  if (!std::filesystem::exists(manifest_path)) {
    throw Error("feature store: manifest not found: " + manifest_path.string());
  }
  std::ifstream in(manifest_path);
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("feature store: manifest parse error in " + manifest_path.string() + ": " + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("dim") || !manifest.contains("records")) {
    throw Error("feature store: manifest must contain \"dim\" and \"records\": " +
                manifest_path.string());
  }
  std::int64_t dim = manifest.at("dim").get<std::int64_t>();
  if (dim < 1) throw Error("feature store: manifest dim must be >= 1");

  std::filesystem::path blob_path = manifest_path.parent_path() / "features.bin";
  if (!std::filesystem::exists(blob_path)) {
    throw Error("feature store: feature blob not found: " + blob_path.string());
  }
  std::vector<std::uint8_t> blob = read_all_bytes(blob_path);

  FeatureStore store(static_cast<std::size_t>(dim));
  for (const json& entry : manifest.at("records")) {
    std::string id = entry.at("id").get<std::string>();
    std::int64_t num_frames = entry.at("num_frames").get<std::int64_t>();
    std::int64_t offset = entry.at("offset_bytes").get<std::int64_t>();
    if (num_frames < 1) throw Error("feature store: record '" + id + "' declares num_frames < 1");
    if (offset < 0) throw Error("feature store: record '" + id + "' declares a negative offset");

    std::size_t count = static_cast<std::size_t>(num_frames) * static_cast<std::size_t>(dim);
    std::size_t need = static_cast<std::size_t>(offset) + count * 4;
    if (need > blob.size()) {
      throw Error("feature store: record '" + id + "' truncated: blob has " +
                  std::to_string(blob.size()) + " bytes, record needs bytes up to " +
                  std::to_string(need));
    }

    FeatureMatrix m(static_cast<std::size_t>(num_frames), static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t byte_off = static_cast<std::size_t>(offset) + i * 4;
      float v = float_from_le(blob.data() + byte_off);
      if (!std::isfinite(v)) {
        throw Error("feature store: non-finite value in record '" + id + "' at byte offset " +
                    std::to_string(byte_off));
      }
      m.data()[i] = v;
    }
    store.add(VideoRecord{std::move(id), std::move(m), std::nullopt, std::nullopt});
  }
  return store;
}

void save_feature_store(const FeatureStore& store, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  json manifest;
  manifest["dim"] = store.dim();
  json records = json::array();
  std::size_t offset = 0;

  std::ofstream blob(dir / "features.bin", std::ios::binary);
  if (!blob) throw Error("feature store: cannot write " + (dir / "features.bin").string());
  std::vector<std::uint8_t> buf;
  for (const VideoRecord& rec : store) {
    json entry;
    entry["id"] = rec.id;
    entry["num_frames"] = rec.features.rows();
    entry["offset_bytes"] = offset;
    records.push_back(std::move(entry));

    buf.resize(rec.features.data().size() * 4);
    for (std::size_t i = 0; i < rec.features.data().size(); ++i) {
      float_to_le(rec.features.data()[i], buf.data() + i * 4);
    }
    blob.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    offset += buf.size();
  }
  blob.close();
  if (!blob) throw Error("feature store: failed writing " + (dir / "features.bin").string());
  manifest["records"] = std::move(records);

  std::ofstream mout(dir / "manifest.json");
  if (!mout) throw Error("feature store: cannot write " + (dir / "manifest.json").string());
  mout << manifest.dump(2) << "\n";
}

ScoreTable load_scores(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw Error("scores: cannot open file: " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("scores: empty file: " + csv_path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,mos,base_pred") {
    throw Error("scores: expected header 'id,mos,base_pred', got '" + line + "'");
  }
  ScoreTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw Error("scores: line " + std::to_string(line_no) + " has " +
                  std::to_string(fields.size()) + " fields, expected 3");
    }
    const std::string& id = fields[0];
    if (id.empty()) throw Error("scores: empty id on line " + std::to_string(line_no));
    ScoreRow row;
    if (!fields[1].empty()) row.mos = parse_double_field(fields[1], "mos for id '" + id + "'");
    if (!fields[2].empty()) {
      row.base_pred = parse_double_field(fields[2], "base_pred for id '" + id + "'");
    }
    if (!table.emplace(id, row).second) throw Error("scores: duplicate id '" + id + "'");
  }
  return table;
}

void apply_scores(FeatureStore& store, const ScoreTable& scores) {
  for (const auto& [id, row] : scores) {
    if (!store.contains(id)) throw Error("scores: id '" + id + "' is not in the feature store");
    store.set_mos(id, row.mos);
    store.set_base_pred(id, row.base_pred);
  }
}

void save_scores(const FeatureStore& store, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error("scores: cannot write file: " + csv_path.string());
  out << "id,mos,base_pred\n";
  for (const VideoRecord& rec : store) {
    if (rec.id.find_first_of(",\r\n\"") != std::string::npos) {
      throw Error("scores: id '" + rec.id + "' contains characters not representable in csv");
    }
    out << rec.id << ',';
    if (rec.mos) out << format_double(*rec.mos);
    out << ',';
    if (rec.base_pred) out << format_double(*rec.base_pred);
    out << '\n';
  }
}

}  // namespace vqsel
