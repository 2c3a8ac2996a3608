#include "spectemp/matio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace spectemp::matio {

namespace {

constexpr char kEmbfMagic[4] = {'E', 'M', 'B', 'F'};
constexpr char kModelMagic[4] = {'S', 'T', 'M', '1'};
constexpr std::uint32_t kEmbfVersion = 1;
constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint8_t kDtypeFloat32 = 1;

constexpr bool kHostLittleEndian = std::endian::native == std::endian::little;

template <typename T>
void byte_swap(T& value) {
  auto* bytes = reinterpret_cast<unsigned char*>(&value);
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
    std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
}

template <typename T>
void write_le(std::ostream& out, T value) {
  if constexpr (!kHostLittleEndian) byte_swap(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* field) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw format_error(std::string("truncated input while reading ") + field);
  if constexpr (!kHostLittleEndian) byte_swap(value);
  return value;
}

void write_f32_block(std::ostream& out, const float* data, std::size_t count) {
  if constexpr (kHostLittleEndian) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 4));
  } else {
    for (std::size_t i = 0; i < count; ++i) write_le(out, data[i]);
  }
}

void write_f64_block(std::ostream& out, const double* data, std::size_t count) {
  if constexpr (kHostLittleEndian) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 8));
  } else {
    for (std::size_t i = 0; i < count; ++i) write_le(out, data[i]);
  }
}

void read_f64_block(std::istream& in, double* data, std::size_t count, const char* field) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * 8));
  if (!in) throw format_error(std::string("truncated input while reading ") + field);
  if constexpr (!kHostLittleEndian) {
    for (std::size_t i = 0; i < count; ++i) byte_swap(data[i]);
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path + " for writing");
  return out;
}

void check_magic(std::istream& in, const char (&expected)[4], const char* what) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, expected, 4) != 0) {
    throw format_error(std::string("not a ") + what + " file (bad magic)");
  }
}

// Declared payload size must match the bytes actually present before any
// allocation happens, so corrupt headers cannot trigger huge allocations.
void check_payload_bytes(const std::string& path, std::uint64_t header_bytes,
                         std::uint64_t payload_bytes, const char* what) {
  std::error_code ec;
  const std::uintmax_t actual = std::filesystem::file_size(path, ec);
  if (ec) throw io_error("cannot stat " + path);
  if (actual != header_bytes + payload_bytes) {
    throw format_error(std::string(what) + " payload size mismatch: header declares " +
                       std::to_string(payload_bytes) + " bytes, file holds " +
                       std::to_string(actual - std::min<std::uintmax_t>(actual, header_bytes)));
  }
}

}  // namespace

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream in = open_input(path);
  check_magic(in, kEmbfMagic, "EMBF");

  const auto version = read_le<std::uint32_t>(in, "version");
  if (version != kEmbfVersion) {
    throw format_error("unsupported EMBF version " + std::to_string(version));
  }
  const auto n = read_le<std::uint64_t>(in, "row count");
  const auto d = read_le<std::uint64_t>(in, "column count");
  const auto dtype = read_le<std::uint8_t>(in, "dtype code");
  if (dtype != kDtypeFloat32) {
    throw format_error("unsupported EMBF dtype code " + std::to_string(dtype));
  }
  if (n == 0 || d == 0) throw format_error("EMBF header declares an empty matrix");
  if (n > std::numeric_limits<std::uint64_t>::max() / d ||
      n * d > std::numeric_limits<std::uint64_t>::max() / 4) {
    throw format_error("EMBF header overflows n*d");
  }
  constexpr std::uint64_t kEmbfHeaderBytes = 4 + 4 + 8 + 8 + 1;
  check_payload_bytes(path, kEmbfHeaderBytes, n * d * 4, "EMBF");

  EmbeddingMatrix m(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
  m.label = path;
  const std::size_t count = m.data.size();
  in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(count * 4));
  if (static_cast<std::size_t>(in.gcount()) != count * 4) {
    throw format_error("EMBF payload size mismatch: expected " + std::to_string(count) +
                       " float32 values");
  }
  if constexpr (!kHostLittleEndian) {
    for (float& v : m.data) byte_swap(v);
  }
  for (std::size_t i = 0; i < m.rows; ++i) {
    const float* row = m.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(row[j])) {
        throw data_error("non-finite value in row " + std::to_string(i) + " of " + path);
      }
    }
  }
  return m;
}

void save_embeddings(const EmbeddingMatrix& m, const std::string& path) {
  m.require_valid();
  std::ofstream out = open_output(path);
  out.write(kEmbfMagic, 4);
  write_le(out, kEmbfVersion);
  write_le(out, static_cast<std::uint64_t>(m.rows));
  write_le(out, static_cast<std::uint64_t>(m.cols));
  write_le(out, kDtypeFloat32);
  write_f32_block(out, m.data.data(), m.data.size());
  out.flush();
  if (!out) throw io_error("failed writing " + path);
}

void save_model(const tempering::SpectralModel& model, const std::string& path) {
  const std::size_t d = model.dim();
  std::ofstream out = open_output(path);
  out.write(kModelMagic, 4);
  write_le(out, kModelVersion);
  write_le(out, static_cast<std::uint64_t>(d));
  write_le(out, static_cast<std::uint64_t>(model.spectrum.sample_count));
  write_le(out, static_cast<std::uint64_t>(model.sample_cap));
  write_le(out, model.spectrum.sample_seed);
  write_le(out, model.profile.tail_fraction);
  write_le(out, model.profile.noise_floor);
  write_le(out, static_cast<std::uint64_t>(model.profile.knee_index));
  write_le(out, model.profile.reference_snr);
  write_f64_block(out, model.spectrum.mean.data(), d);
  write_f64_block(out, model.spectrum.eigenvalues.data(), d);
  write_f64_block(out, model.spectrum.eigenvectors.data(), d * d);
  write_f64_block(out, model.profile.snr.data(), d);
  out.flush();
  if (!out) throw io_error("failed writing " + path);
}

tempering::SpectralModel load_model(const std::string& path) {
  std::ifstream in = open_input(path);
  check_magic(in, kModelMagic, "STM1");

  const auto version = read_le<std::uint32_t>(in, "version");
  if (version != kModelVersion) {
    throw format_error("unsupported STM1 version " + std::to_string(version));
  }
  const auto d64 = read_le<std::uint64_t>(in, "dimension");
  if (d64 == 0 || d64 > (1u << 20)) {
    throw format_error("STM1 declares implausible dimension " + std::to_string(d64));
  }
  const auto d = static_cast<std::size_t>(d64);
  constexpr std::uint64_t kModelHeaderBytes = 4 + 4 + 8 * 8;
  check_payload_bytes(path, kModelHeaderBytes, 8 * (3 * d64 + d64 * d64), "STM1");

  tempering::SpectralModel model;
  model.spectrum.dim = d;
  model.spectrum.sample_count =
      static_cast<std::size_t>(read_le<std::uint64_t>(in, "sample count"));
  model.sample_cap = static_cast<std::size_t>(read_le<std::uint64_t>(in, "sample cap"));
  model.spectrum.sample_seed = read_le<std::uint64_t>(in, "seed");
  model.profile.tail_fraction = read_le<double>(in, "tail fraction");
  model.profile.noise_floor = read_le<double>(in, "noise floor");
  model.profile.knee_index =
      static_cast<std::size_t>(read_le<std::uint64_t>(in, "knee index"));
  model.profile.reference_snr = read_le<double>(in, "reference snr");

  model.spectrum.mean.resize(d);
  model.spectrum.eigenvalues.resize(d);
  model.spectrum.eigenvectors.resize(d * d);
  model.profile.snr.resize(d);
  read_f64_block(in, model.spectrum.mean.data(), d, "mean");
  read_f64_block(in, model.spectrum.eigenvalues.data(), d, "eigenvalues");
  read_f64_block(in, model.spectrum.eigenvectors.data(), d * d, "eigenvectors");
  read_f64_block(in, model.profile.snr.data(), d, "snr profile");

  for (std::size_t i = 1; i < d; ++i) {
    if (model.spectrum.eigenvalues[i] > model.spectrum.eigenvalues[i - 1]) {
      throw format_error("STM1 corruption: eigenvalues not sorted descending at rank " +
                         std::to_string(i + 1));
    }
  }
  if (model.profile.knee_index > d) {
    throw format_error("STM1 corruption: knee index out of range");
  }
  return model;
}

QrelsTable load_qrels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path + " for reading");

  QrelsTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;

    std::string qid;
    std::string docid;
    std::string rel_text;
    if (tokens.size() == 3) {
      qid = tokens[0];
      docid = tokens[1];
      rel_text = tokens[2];
    } else if (tokens.size() == 4 && tokens[1] == "0") {
      qid = tokens[0];
      docid = tokens[2];
      rel_text = tokens[3];
    } else {
      throw format_error("qrels parse error at line " + std::to_string(line_no) +
                         ": expected `qid docid rel` or `qid 0 docid rel`");
    }

    int rel = 0;
    try {
      std::size_t pos = 0;
      rel = std::stoi(rel_text, &pos);
      if (pos != rel_text.size()) throw std::invalid_argument(rel_text);
    } catch (const std::exception&) {
      throw format_error("qrels parse error at line " + std::to_string(line_no) +
                         ": relevance `" + rel_text + "` is not an integer");
    }
    if (rel < 0) {
      throw format_error("qrels parse error at line " + std::to_string(line_no) +
                         ": negative relevance");
    }

    auto& docs = table.entries[qid];
    for (const auto& [existing, _] : docs) {
      if (existing == docid) {
        throw data_error("duplicate qrels pair (" + qid + ", " + docid + ") at line " +
                         std::to_string(line_no));
      }
    }
    docs.emplace_back(docid, rel);
  }

  // Keep only queries with at least one positive judgment.
  for (auto it = table.entries.begin(); it != table.entries.end();) {
    const bool has_positive =
        std::any_of(it->second.begin(), it->second.end(),
                    [](const auto& p) { return p.second > 0; });
    if (has_positive) {
      ++it;
    } else {
      it = table.entries.erase(it);
      ++table.dropped_queries;
    }
  }
  return table;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << contents;
  out.flush();
  if (!out) throw io_error("failed writing " + path);
}

}  // namespace spectemp::matio
