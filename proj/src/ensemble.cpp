#include "nea/ensemble.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "nea/bytes.hpp"
#include "nea/error.hpp"
#include "json.hpp"

namespace nea {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(const Dims3& d) {
  return std::to_string(d.x) + "x" + std::to_string(d.y) + "x" + std::to_string(d.z);
}

Dims3 parse_dims(const std::string& text) {
  std::array<std::uint32_t, 3> v{};
  std::size_t pos = 0;
  for (int axis = 0; axis < 3; ++axis) {
    const auto sep = axis < 2 ? text.find('x', pos) : std::string::npos;
    const auto field = text.substr(pos, sep == std::string::npos ? std::string::npos : sep - pos);
    if (field.empty() || field.find_first_not_of("0123456789") != std::string::npos ||
        field.size() > 9) {
      fail(Errc::InvalidArgument, "expected dimensions of the form XxYxZ, got '" + text + "'");
    }
    v[axis] = static_cast<std::uint32_t>(std::stoul(field));
    if (v[axis] == 0) fail(Errc::InvalidArgument, "dimensions must be >= 1: '" + text + "'");
    if (axis < 2) {
      if (sep == std::string::npos) {
        fail(Errc::InvalidArgument, "expected dimensions of the form XxYxZ, got '" + text + "'");
      }
      pos = sep + 1;
    }
  }
  return {v[0], v[1], v[2]};
}

void EnsembleShape::validate() const {
  if (runs < 1 || timesteps < 1) fail(Errc::InvalidArgument, "ensemble needs at least 1 run and 1 timestep");
  if (volume_dims.x < 1 || volume_dims.y < 1 || volume_dims.z < 1) {
    fail(Errc::InvalidArgument, "volume dims must be >= 1");
  }
  if (!(value_peak > 0.0f) || !std::isfinite(value_peak)) {
    fail(Errc::InvalidArgument, "value_peak must be positive and finite");
  }
}

const ManifestEntry& EnsembleManifest::entry(EnsembleCoordinate c) const {
  auto it = entries.find(c);
  if (it == entries.end()) {
    fail(Errc::OutOfRange, "coordinate (" + std::to_string(c.r) + "," + std::to_string(c.t) +
                               ") outside the ensemble");
  }
  return it->second;
}

std::vector<EnsembleCoordinate> EnsembleManifest::coordinates() const {
  std::vector<EnsembleCoordinate> out;
  out.reserve(shape.volume_count());
  for (std::uint32_t r = 0; r < shape.runs; ++r)
    for (std::uint32_t t = 0; t < shape.timesteps; ++t) out.push_back({r, t});
  return out;
}

namespace {

std::uint32_t get_count(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number_integer()) {
    fail(Errc::ManifestMalformed, std::string("manifest field '") + key + "' missing or not an integer");
  }
  const auto v = doc[key].get<std::int64_t>();
  if (v < 1 || v > std::int64_t{1} << 31) {
    fail(Errc::ManifestMalformed, std::string("manifest field '") + key + "' out of range");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

EnsembleManifest parse_manifest(const std::string& text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(Errc::ManifestMalformed, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(Errc::ManifestMalformed, "manifest must be a JSON object");

  EnsembleManifest m;
  m.shape.runs = get_count(doc, "runs");
  m.shape.timesteps = get_count(doc, "timesteps");
  if (!doc.contains("dims") || !doc["dims"].is_array() || doc["dims"].size() != 3) {
    fail(Errc::ManifestMalformed, "manifest field 'dims' must be [X, Y, Z]");
  }
  std::array<std::uint32_t, 3> d{};
  for (int i = 0; i < 3; ++i) {
    const auto& v = doc["dims"][i];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1 || v.get<std::int64_t>() > (1 << 20)) {
      fail(Errc::ManifestMalformed, "manifest 'dims' entries must be positive integers");
    }
    d[i] = v.get<std::uint32_t>();
  }
  m.shape.volume_dims = {d[0], d[1], d[2]};
  if (!doc.contains("value_peak") || !doc["value_peak"].is_number()) {
    fail(Errc::ManifestMalformed, "manifest field 'value_peak' missing or not a number");
  }
  m.shape.value_peak = doc["value_peak"].get<float>();
  if (!(m.shape.value_peak > 0.0f) || !std::isfinite(m.shape.value_peak)) {
    fail(Errc::ManifestMalformed, "manifest 'value_peak' must be positive");
  }
  m.variable_name = doc.value("variable", std::string{});

  if (!doc.contains("entries") || !doc["entries"].is_array()) {
    fail(Errc::ManifestMalformed, "manifest field 'entries' missing or not an array");
  }
  for (const auto& e : doc["entries"]) {
    if (!e.is_object() || !e.contains("r") || !e.contains("t") || !e.contains("path") ||
        !e["r"].is_number_integer() || !e["t"].is_number_integer() || !e["path"].is_string()) {
      fail(Errc::ManifestMalformed, "manifest entry needs integer r, t and string path");
    }
    const auto r = e["r"].get<std::int64_t>();
    const auto t = e["t"].get<std::int64_t>();
    if (r < 0 || t < 0 || r >= m.shape.runs || t >= m.shape.timesteps) {
      fail(Errc::ManifestMalformed, "manifest entry (" + std::to_string(r) + "," + std::to_string(t) +
                                        ") outside the declared ensemble");
    }
    ManifestEntry entry;
    entry.path = fs::path(e["path"].get<std::string>());
    if (entry.path.is_relative()) entry.path = base_dir / entry.path;
    if (e.contains("offset")) {
      if (!e["offset"].is_number_unsigned()) fail(Errc::ManifestMalformed, "manifest 'offset' must be unsigned");
      entry.offset = e["offset"].get<std::uint64_t>();
    }
    EnsembleCoordinate c{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(t)};
    if (!m.entries.emplace(c, std::move(entry)).second) {
      fail(Errc::CoordinateDuplicate,
           "duplicate coordinate (" + std::to_string(r) + "," + std::to_string(t) + ")");
    }
  }
  for (const auto c : m.coordinates()) {
    if (!m.entries.contains(c)) {
      fail(Errc::CoordinateGap, "coordinate gap at (" + std::to_string(c.r) + "," + std::to_string(c.t) + ")");
    }
  }
  return m;
}

EnsembleManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ManifestMissing, "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), fs::absolute(path).parent_path());
}

void write_manifest(const EnsembleManifest& manifest, const fs::path& path) {
  const auto base = fs::absolute(path).parent_path();
  json doc;
  doc["runs"] = manifest.shape.runs;
  doc["timesteps"] = manifest.shape.timesteps;
  doc["dims"] = {manifest.shape.volume_dims.x, manifest.shape.volume_dims.y, manifest.shape.volume_dims.z};
  doc["value_peak"] = manifest.shape.value_peak;
  doc["variable"] = manifest.variable_name;
  auto entries = json::array();
  for (const auto& [c, e] : manifest.entries) {
    auto rel = e.path.lexically_relative(base);
    const bool inside = !rel.empty() && *rel.begin() != "..";
    entries.push_back({{"r", c.r}, {"t", c.t}, {"path", (inside ? rel : e.path).generic_string()},
                       {"offset", e.offset}});
  }
  doc["entries"] = std::move(entries);
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
  if (!out) fail(Errc::Io, "failed writing manifest " + path.string());
}

Volume read_volume_file(const fs::path& path, Dims3 dims, std::uint64_t offset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::VolumeOpen, "cannot open volume file " + path.string());
  const std::size_t expected = 4 * dims.volume();
  std::vector<std::byte> raw(expected);
  in.seekg(static_cast<std::streamoff>(offset));
  std::size_t got = 0;
  if (in) {
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(expected));
    got = static_cast<std::size_t>(in.gcount());
  }
  if (got != expected) {
    fail(Errc::ShortRead, path.string() + ": expected " + std::to_string(expected) + " bytes, got " +
                              std::to_string(got));
  }
  Volume v(dims);
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    v.data[i] = bytes::load_le<float>(raw.data() + 4 * i);
    if (!std::isfinite(v.data[i])) {
      const std::size_t x = i % dims.x, y = (i / dims.x) % dims.y, z = i / (std::size_t{dims.x} * dims.y);
      fail(Errc::NonFinite, path.string() + ": non-finite value at (" + std::to_string(x) + "," +
                                std::to_string(y) + "," + std::to_string(z) + ")");
    }
  }
  return v;
}

Volume read_volume(const EnsembleManifest& manifest, EnsembleCoordinate coord) {
  const auto& e = manifest.entry(coord);
  return read_volume_file(e.path, manifest.shape.volume_dims, e.offset);
}

void write_volume_file(const Volume& volume, const fs::path& path) {
  std::vector<std::byte> raw(4 * volume.data.size());
  for (std::size_t i = 0; i < volume.data.size(); ++i) bytes::store_le(raw.data() + 4 * i, volume.data[i]);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(Errc::Io, "failed writing volume " + path.string());
}

}  // namespace nea
