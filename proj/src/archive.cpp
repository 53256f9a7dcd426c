#include "pirec/archive.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pirec {

namespace {

constexpr char kMagic[8] = {'P', 'I', 'R', 'E', 'C', 'A', 'R', 'C'};

template <typename Scalar>
const char* dtype_of();
template <>
const char* dtype_of<float>() {
  return "f32";
}
template <>
const char* dtype_of<double>() {
  return "f64";
}

template <typename T>
void append_pod(std::string& out, T v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw std::runtime_error("archive truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

template <typename Scalar>
void Archive::put(const std::string& name, const RowMatrix<Scalar>& m) {
  Entry e;
  e.dtype = dtype_of<Scalar>();
  e.rows = m.rows();
  e.cols = m.cols();
  e.bytes.resize(static_cast<std::size_t>(m.size()) * sizeof(Scalar));
  if (!e.bytes.empty()) std::memcpy(e.bytes.data(), m.data(), e.bytes.size());
  entries_[name] = std::move(e);
}

template <typename Scalar>
RowMatrix<Scalar> Archive::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("archive has no tensor '" + name + "'");
  const Entry& e = it->second;
  if (e.dtype == "f32") {
    RowMatrix<float> m(e.rows, e.cols);
    if (!e.bytes.empty()) std::memcpy(m.data(), e.bytes.data(), e.bytes.size());
    return m.template cast<Scalar>();
  }
  if (e.dtype == "f64") {
    RowMatrix<double> m(e.rows, e.cols);
    if (!e.bytes.empty()) std::memcpy(m.data(), e.bytes.data(), e.bytes.size());
    return m.template cast<Scalar>();
  }
  throw std::runtime_error("archive tensor '" + name + "' has unknown dtype " + e.dtype);
}

std::vector<std::string> Archive::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

void Archive::save(const std::string& path) const {
  nlohmann::json header;
  header["meta"] = meta_;
  nlohmann::json table = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, e] : entries_) {
    table.push_back({{"name", name}, {"dtype", e.dtype}, {"rows", e.rows}, {"cols", e.cols}, {"offset", offset},
                     {"bytes", e.bytes.size()}});
    offset += e.bytes.size();
  }
  header["tensors"] = table;
  const std::string header_text = header.dump();

  std::string out;
  out.reserve(32 + header_text.size() + offset);
  out.append(kMagic, sizeof(kMagic));
  append_pod<std::uint32_t>(out, kFormatVersion);
  append_pod<std::uint64_t>(out, header_text.size());
  out += header_text;
  for (const auto& [_, e] : entries_) out.append(reinterpret_cast<const char*>(e.bytes.data()), e.bytes.size());
  write_file_atomic(path, out);
}

Archive Archive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open archive " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  if (data.size() < sizeof(kMagic) || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error(path + " is not a pirec archive");
  std::size_t pos = sizeof(kMagic);
  const auto version = read_pod<std::uint32_t>(data, pos);
  if (version != kFormatVersion)
    throw std::runtime_error("unsupported archive version " + std::to_string(version) + " in " + path);
  const auto header_len = read_pod<std::uint64_t>(data, pos);
  if (pos + header_len > data.size()) throw std::runtime_error("archive header truncated");
  const auto header = nlohmann::json::parse(data.substr(pos, header_len));
  pos += header_len;

  Archive a;
  a.meta_ = header.at("meta");
  for (const auto& t : header.at("tensors")) {
    Entry e;
    e.dtype = t.at("dtype").get<std::string>();
    e.rows = t.at("rows").get<Eigen::Index>();
    e.cols = t.at("cols").get<Eigen::Index>();
    const auto off = t.at("offset").get<std::size_t>();
    const auto n = t.at("bytes").get<std::size_t>();
    if (pos + off + n > data.size()) throw std::runtime_error("archive payload truncated");
    e.bytes.assign(data.begin() + static_cast<std::ptrdiff_t>(pos + off),
                   data.begin() + static_cast<std::ptrdiff_t>(pos + off + n));
    a.entries_[t.at("name").get<std::string>()] = std::move(e);
  }
  return a;
}

template void Archive::put(const std::string&, const RowMatrix<float>&);
template void Archive::put(const std::string&, const RowMatrix<double>&);
template RowMatrix<float> Archive::get(const std::string&) const;
template RowMatrix<double> Archive::get(const std::string&) const;

}  // namespace pirec
