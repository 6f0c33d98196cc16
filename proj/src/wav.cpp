#include <cstdint>
#include <cstring>
#include <string>

#include "avsync/av_offset.hpp"
#include "file_io.hpp"

namespace avsync {
namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

std::uint16_t get_u16(const std::string& buf, std::size_t at) {
  return static_cast<std::uint16_t>(
      static_cast<unsigned char>(buf[at]) |
      (static_cast<unsigned char>(buf[at + 1]) << 8));
}

std::uint32_t get_u32(const std::string& buf, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + 1]))
          << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + 2]))
          << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + 3]))
          << 24);
}

}  // namespace

void write_wav(const PcmAudio& audio, const std::string& path) {
  if (audio.channels <= 0 || audio.sample_rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "malformed audio");
  }
  if (audio.samples.size() % static_cast<std::size_t>(audio.channels) != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "sample count not divisible by channel count");
  }
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(audio.samples.size() * 2);
  const std::uint16_t block_align =
      static_cast<std::uint16_t>(audio.channels * 2);

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, static_cast<std::uint16_t>(audio.channels));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * block_align);
  put_u16(out, block_align);
  put_u16(out, 16);  // bits per sample
  out += "data";
  put_u32(out, data_size);
  for (std::int16_t s : audio.samples) {
    put_u16(out, static_cast<std::uint16_t>(s));
  }
  detail::atomic_write_file(path, out);
}

PcmAudio read_wav(const std::string& path) {
  const std::string buf = detail::read_file(path);
  auto fail = [&path](const std::string& why) -> Error {
    return Error(ErrorCode::kParseError, path + ": " + why);
  };
  if (buf.size() < 12 || buf.compare(0, 4, "RIFF") != 0 ||
      buf.compare(8, 4, "WAVE") != 0) {
    throw fail("not a RIFF WAVE file");
  }

  PcmAudio audio;
  bool have_fmt = false;
  std::size_t at = 12;
  while (at + 8 <= buf.size()) {
    std::string id = buf.substr(at, 4);
    std::uint32_t size = get_u32(buf, at + 4);
    std::size_t body = at + 8;
    if (body + size > buf.size()) throw fail("truncated chunk " + id);

    if (id == "fmt ") {
      if (size < 16) throw fail("short fmt chunk");
      std::uint16_t format = get_u16(buf, body);
      audio.channels = get_u16(buf, body + 2);
      audio.sample_rate = static_cast<int>(get_u32(buf, body + 4));
      std::uint16_t bits = get_u16(buf, body + 14);
      if (format != 1 || bits != 16) {
        throw fail("only 16-bit integer PCM is supported");
      }
      if (audio.channels <= 0 || audio.sample_rate <= 0) {
        throw fail("bad fmt values");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw fail("data chunk before fmt");
      if (size % 2 != 0) throw fail("odd data chunk size");
      audio.samples.resize(size / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i) {
        audio.samples[i] =
            static_cast<std::int16_t>(get_u16(buf, body + 2 * i));
      }
      if (audio.samples.size() %
              static_cast<std::size_t>(audio.channels) != 0) {
        throw fail("sample count not divisible by channel count");
      }
      return audio;
    }
    at = body + size + (size % 2);  // chunks are word aligned
  }
  throw fail(have_fmt ? "missing data chunk" : "missing fmt chunk");
}

}  // namespace avsync
