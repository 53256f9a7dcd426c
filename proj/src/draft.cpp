#include "pirec/draft.hpp"

#include "pirec/image.hpp"

#include <zlib.h>

#include <cstdint>
#include <stdexcept>

namespace pirec {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50, kCentralSig = 0x02014b50, kEndSig = 0x06054b50;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01, keeps exports reproducible

void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}
void put32(std::string& s, std::uint32_t v) {
  put16(s, static_cast<std::uint16_t>(v & 0xffff));
  put16(s, static_cast<std::uint16_t>(v >> 16));
}

std::uint16_t get16(const std::string& s, std::size_t at) {
  if (at + 2 > s.size()) throw std::runtime_error("zip: truncated archive");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(s[at]) | (static_cast<unsigned char>(s[at + 1]) << 8));
}
std::uint32_t get32(const std::string& s, std::size_t at) {
  return get16(s, at) | (static_cast<std::uint32_t>(get16(s, at + 2)) << 16);
}

std::uint32_t crc_of(const std::string& data) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

std::string inflate_raw(const std::string& in, std::size_t expected) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw std::runtime_error("zip: inflate init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected) throw std::runtime_error("zip: corrupt deflate stream");
  return out;
}

}  // namespace

std::string zip_files(const std::map<std::string, std::string>& files) {
  std::string body, central;
  for (const auto& [name, data] : files) {
    const auto offset = static_cast<std::uint32_t>(body.size());
    const std::uint32_t crc = crc_of(data);
    const auto size = static_cast<std::uint32_t>(data.size());
    put32(body, kLocalSig);
    put16(body, 20);
    put16(body, 0);
    put16(body, 0);  // stored
    put16(body, 0);
    put16(body, kDosDate);
    put32(body, crc);
    put32(body, size);
    put32(body, size);
    put16(body, static_cast<std::uint16_t>(name.size()));
    put16(body, 0);
    body += name;
    body += data;

    put32(central, kCentralSig);
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, static_cast<std::uint16_t>(name.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central += name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(body.size());
  body += central;
  put32(body, kEndSig);
  put16(body, 0);
  put16(body, 0);
  put16(body, static_cast<std::uint16_t>(files.size()));
  put16(body, static_cast<std::uint16_t>(files.size()));
  put32(body, static_cast<std::uint32_t>(central.size()));
  put32(body, cd_offset);
  put16(body, 0);
  return body;
}

std::map<std::string, std::string> unzip_files(const std::string& zip) {
  if (zip.size() < 22) throw std::runtime_error("zip: archive too small");
  std::size_t end = std::string::npos;
  for (std::size_t i = zip.size() - 22 + 1; i-- > 0;) {
    if (get32(zip, i) == kEndSig) {
      end = i;
      break;
    }
    if (zip.size() - i > 22 + 0xffff) break;
  }
  if (end == std::string::npos) throw std::runtime_error("zip: end of central directory not found");
  const std::uint16_t count = get16(zip, end + 10);
  std::size_t at = get32(zip, end + 16);
  std::map<std::string, std::string> files;
  for (std::uint16_t k = 0; k < count; ++k) {
    if (get32(zip, at) != kCentralSig) throw std::runtime_error("zip: bad central directory entry");
    const std::uint16_t method = get16(zip, at + 10);
    const std::uint32_t crc = get32(zip, at + 16);
    const std::uint32_t csize = get32(zip, at + 20), usize = get32(zip, at + 24);
    const std::uint16_t nlen = get16(zip, at + 28), xlen = get16(zip, at + 30), clen = get16(zip, at + 32);
    const std::uint32_t local = get32(zip, at + 42);
    if (at + 46 + nlen > zip.size()) throw std::runtime_error("zip: truncated archive");
    const std::string name = zip.substr(at + 46, nlen);
    at += 46 + nlen + xlen + clen;

    if (get32(zip, local) != kLocalSig) throw std::runtime_error("zip: bad local header for " + name);
    const std::size_t data_at = local + 30 + get16(zip, local + 26) + get16(zip, local + 28);
    if (data_at + csize > zip.size()) throw std::runtime_error("zip: truncated entry " + name);
    const std::string raw = zip.substr(data_at, csize);
    std::string data;
    if (method == 0)
      data = raw;
    else if (method == 8)
      data = inflate_raw(raw, usize);
    else
      throw std::runtime_error("zip: unsupported compression method for " + name);
    if (crc_of(data) != crc) throw std::runtime_error("zip: checksum mismatch in " + name);
    files[name] = std::move(data);
  }
  return files;
}

std::string export_draft(const Draft& draft) {
  if (draft.edge.channels() != 1 || draft.color.channels() != 3)
    throw std::invalid_argument("draft: expected a 1-channel edge layer and a 3-channel color layer");
  if (!draft.edge.same_spatial(draft.color)) throw std::invalid_argument("draft: layer sizes differ");
  nlohmann::json meta = draft.meta;
  meta["format"] = "pirec-draft";
  meta["version"] = kDraftVersion;
  meta["width"] = draft.edge.width();
  meta["height"] = draft.edge.height();
  meta["edge"] = "edge.png";
  meta["color_domain"] = "color_domain.png";
  return zip_files({{"draft.json", meta.dump(2)},
                    {"edge.png", encode_png(binarize(draft.edge))},
                    {"color_domain.png", encode_png(draft.color)}});
}

Draft import_draft(const std::string& zip_bytes) {
  const auto files = unzip_files(zip_bytes);
  auto need = [&](const std::string& n) -> const std::string& {
    const auto it = files.find(n);
    if (it == files.end()) throw std::runtime_error("draft: missing " + n);
    return it->second;
  };
  Draft d;
  d.meta = nlohmann::json::parse(need("draft.json"));
  if (d.meta.value("format", "") != "pirec-draft") throw std::runtime_error("draft: not a draft archive");
  if (d.meta.value("version", 0) > kDraftVersion) throw std::runtime_error("draft: unsupported version");
  d.edge = binarize(decode_image(need(d.meta.value("edge", "edge.png"))));
  d.color = decode_image(need(d.meta.value("color_domain", "color_domain.png")));
  if (!d.edge.same_spatial(d.color)) throw std::runtime_error("draft: layer sizes differ");
  if (d.meta.contains("width") && (d.meta.at("width") != d.edge.width() || d.meta.at("height") != d.edge.height()))
    throw std::runtime_error("draft: layer size does not match draft.json");
  for (const char* k : {"format", "version", "width", "height", "edge", "color_domain"}) d.meta.erase(k);
  return d;
}

}  // namespace pirec
