#include "bispec/io.hpp"

#include "bispec/error.hpp"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace bispec {

namespace {

std::uint64_t bswap64(std::uint64_t v) {
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
  return r;
}

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(Errc::data, std::string("manifest: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::data, std::string("manifest: field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_file, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::data, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::data, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_f64(const fs::path& path, const std::vector<double>& values) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::data, "cannot write " + path.string());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) {
      const auto b = bswap64(std::bit_cast<std::uint64_t>(v));
      out.write(reinterpret_cast<const char*>(&b), sizeof b);
    }
  }
}

std::vector<double> read_f64(const fs::path& path, bool big_endian) {
  if (!fs::exists(path)) throw Error(Errc::missing_file, "missing data file " + path.string());
  const auto bytes = fs::file_size(path);
  if (bytes % sizeof(double) != 0) {
    throw Error(Errc::shape_mismatch, path.string() + ": size is not a multiple of 8 bytes");
  }
  std::vector<double> v(bytes / sizeof(double));
  std::ifstream in(path, std::ios::binary);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw Error(Errc::data, "short read on " + path.string());
  const bool swap = big_endian != (std::endian::native == std::endian::big);
  if (swap) {
    for (auto& x : v) x = std::bit_cast<double>(bswap64(std::bit_cast<std::uint64_t>(x)));
  }
  return v;
}

json manifest_to_json(const DatasetManifest& m) {
  json j;
  j["version"] = m.version;
  j["fs"] = m.fs;
  j["n_trials"] = m.n_trials;
  j["n_channels"] = m.n_channels;
  j["n_samples"] = m.n_samples;
  j["channel_names"] = m.channel_names;
  if (!m.labels_file.empty()) j["labels"] = m.labels_file;
  else j["labels"] = m.labels;
  j["class_set"] = m.class_set;
  json st = json::object();
  for (const auto& s : m.stages) st[s.name] = {s.begin, s.end};
  j["stage_windows"] = st;
  j["data_file"] = m.data_file;
  j["endianness"] = m.endianness;
  j["dtype"] = m.dtype;
  j["provenance"] = m.provenance;
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::data, "manifest: not a JSON object");
  DatasetManifest m;
  m.version = get_field<int>(j, "version");
  m.fs = get_field<double>(j, "fs");
  m.n_trials = get_field<std::size_t>(j, "n_trials");
  m.n_channels = get_field<std::size_t>(j, "n_channels");
  m.n_samples = get_field<std::size_t>(j, "n_samples");
  m.channel_names = get_field<std::vector<std::string>>(j, "channel_names");
  if (!j.contains("labels")) throw Error(Errc::data, "manifest: missing field 'labels'");
  if (j["labels"].is_string()) m.labels_file = j["labels"].get<std::string>();
  else m.labels = get_field<std::vector<int>>(j, "labels");
  m.class_set = get_field<std::vector<int>>(j, "class_set");
  const auto st = get_field<json>(j, "stage_windows");
  if (!st.is_object()) throw Error(Errc::data, "manifest: stage_windows must be an object");
  for (const auto& [name, w] : st.items()) {
    if (!w.is_array() || w.size() != 2) {
      throw Error(Errc::data, "manifest: stage '" + name + "' must be [start, end]");
    }
    m.stages.push_back({name, w[0].get<std::size_t>(), w[1].get<std::size_t>()});
  }
  std::sort(m.stages.begin(), m.stages.end(),
            [](const auto& a, const auto& b) { return a.begin < b.begin; });
  m.data_file = get_field<std::string>(j, "data_file");
  m.endianness = j.value("endianness", std::string("little"));
  m.dtype = j.value("dtype", std::string("float64"));
  if (j.contains("provenance")) m.provenance = j["provenance"];
  return m;
}

EpochedRecording load_dataset(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) {
    throw Error(Errc::missing_file, "missing manifest " + manifest_path.string());
  }
  const auto m = manifest_from_json(read_json(manifest_path));
  if (m.dtype != "float64" && m.dtype != "f64" && m.dtype != "<f8") {
    throw Error(Errc::unknown_dtype, "manifest: unsupported dtype '" + m.dtype + "'");
  }
  if (m.endianness != "little" && m.endianness != "big") {
    throw Error(Errc::data, "manifest: endianness must be 'little' or 'big'");
  }
  const auto base = manifest_path.parent_path();

  EpochedRecording rec;
  rec.fs = m.fs;
  rec.n_trials = m.n_trials;
  rec.n_channels = m.n_channels;
  rec.n_samples = m.n_samples;
  rec.channel_names = m.channel_names;
  rec.class_set = m.class_set;
  rec.stages = m.stages;
  if (!m.labels_file.empty()) {
    std::istringstream in(read_text(base / m.labels_file));
    int v;
    while (in >> v) rec.labels.push_back(v);
    if (!in.eof()) throw Error(Errc::label, "labels file: non-integer entry");
  } else {
    rec.labels = m.labels;
  }

  const auto data_path = base / m.data_file;
  if (!fs::exists(data_path)) throw Error(Errc::missing_file, "missing data file " + data_path.string());
  const auto expected = m.n_trials * m.n_channels * m.n_samples * sizeof(double);
  const auto actual = fs::file_size(data_path);
  if (actual != expected) {
    throw Error(Errc::shape_mismatch, "data file holds " + std::to_string(actual) +
                                          " bytes, declared shape needs " + std::to_string(expected));
  }
  rec.data = read_f64(data_path, m.endianness == "big");
  rec.validate();
  return rec;
}

fs::path save_dataset(const EpochedRecording& rec, const fs::path& dir, const std::string& stem,
                      const json& provenance) {
  rec.validate();
  DatasetManifest m;
  m.fs = rec.fs;
  m.n_trials = rec.n_trials;
  m.n_channels = rec.n_channels;
  m.n_samples = rec.n_samples;
  m.channel_names = rec.channel_names;
  m.labels = rec.labels;
  m.class_set = rec.class_set;
  m.stages = rec.stages;
  m.data_file = stem + ".f64";
  m.provenance = provenance;
  fs::create_directories(dir);
  write_f64(dir / m.data_file, rec.data);
  const auto path = dir / (stem + ".json");
  write_json(path, manifest_to_json(m));
  return path;
}

json standardizer_to_json(const Standardizer& s) {
  json j;
  j["mean"] = s.mean;
  j["sd"] = s.sd;
  j["constant"] = s.constant;
  j["population"] = s.population;
  j["provenance"] = s.provenance;
  return j;
}

Standardizer standardizer_from_json(const json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::array<double, kFeatureCount>>();
  s.sd = j.at("sd").get<std::array<double, kFeatureCount>>();
  s.constant = j.at("constant").get<std::array<bool, kFeatureCount>>();
  s.population = j.at("population").get<std::array<std::size_t, kFeatureCount>>();
  s.provenance = j.value("provenance", std::string());
  return s;
}

fs::path save_feature_tensor(const FeatureTensor& t, const fs::path& dir, const std::string& stem,
                             const json& provenance) {
  json j;
  j["shape"] = {t.n_trials, t.n_channels, kBandPairCount, kFeatureCount};
  j["layout"] = "row-major (trial, channel, band_pair, feature), little-endian float64";
  j["data_file"] = stem + ".f64";
  j["channel_names"] = t.channel_names;
  j["labels"] = t.labels;
  j["stage"] = t.stage;
  std::vector<std::string> pairs;
  for (std::size_t p = 0; p < kBandPairCount; ++p) pairs.push_back(BandPair::from_index(p).name());
  j["band_pairs"] = pairs;
  j["features"] = std::vector<std::string>(feature_names().begin(), feature_names().end());
  j["standardization"] = t.standardization ? standardizer_to_json(*t.standardization) : json(nullptr);
  j["provenance"] = provenance;
  fs::create_directories(dir);
  write_f64(dir / (stem + ".f64"), t.values);
  const auto path = dir / (stem + ".json");
  write_json(path, j);
  return path;
}

FeatureTensor load_feature_tensor(const fs::path& sidecar_path) {
  const auto j = read_json(sidecar_path);
  FeatureTensor t;
  std::vector<std::size_t> shape;
  try {
    shape = j.at("shape").get<std::vector<std::size_t>>();
    t.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    t.labels = j.at("labels").get<std::vector<int>>();
    t.stage = j.value("stage", std::string());
  } catch (const json::exception& e) {
    throw Error(Errc::data, sidecar_path.string() + ": " + e.what());
  }
  if (shape.size() != 4 || shape[2] != kBandPairCount || shape[3] != kFeatureCount) {
    throw Error(Errc::shape_mismatch, "feature tensor: unexpected shape");
  }
  t.n_trials = shape[0];
  t.n_channels = shape[1];
  t.values = read_f64(sidecar_path.parent_path() / j.at("data_file").get<std::string>());
  if (t.values.size() != t.n_trials * t.row_width() || t.channel_names.size() != t.n_channels ||
      t.labels.size() != t.n_trials) {
    throw Error(Errc::shape_mismatch, "feature tensor: data disagrees with sidecar shape");
  }
  if (j.contains("standardization") && !j["standardization"].is_null()) {
    t.standardization = standardizer_from_json(j["standardization"]);
  }
  return t;
}

void write_matrix_csv(const fs::path& path, const ComplexMatrix& m, const FreqGrid& grid) {
  if (m.rows != grid.f1_bins.size() || m.cols != grid.f2_bins.size()) {
    throw Error(Errc::shape_mismatch, "matrix csv: matrix and grid disagree");
  }
  std::string out = "f1,f2,re,im\n";
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      const auto v = m.at(i, j);
      out += format_double(grid.f1_hz(i)) + "," + format_double(grid.f2_hz(j)) + "," +
             format_double(v.real()) + "," + format_double(v.imag()) + "\n";
    }
  }
  write_text(path, out);
}

ComplexMatrix read_matrix_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  if (line != "f1,f2,re,im") throw Error(Errc::data, path.string() + ": bad header");
  std::vector<double> f1s, f2s;
  std::vector<std::complex<double>> vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double f[4];
    std::size_t pos = 0;
    for (int k = 0; k < 4; ++k) {
      const auto next = line.find(',', pos);
      const auto tok = line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), f[k]);
      if (ec != std::errc()) throw Error(Errc::data, path.string() + ": bad number '" + tok + "'");
      pos = next + 1;
    }
    if (std::find(f1s.begin(), f1s.end(), f[0]) == f1s.end()) f1s.push_back(f[0]);
    if (std::find(f2s.begin(), f2s.end(), f[1]) == f2s.end()) f2s.push_back(f[1]);
    vals.emplace_back(f[2], f[3]);
  }
  ComplexMatrix m(f1s.size(), f2s.size());
  if (vals.size() != m.values.size()) throw Error(Errc::shape_mismatch, path.string() + ": ragged grid");
  m.values = std::move(vals);
  return m;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::data, "sha256 failed");
  }
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return ss.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

}  // namespace bispec
