#include "prosign/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "prosign/error.hpp"
#include "prosign/io.hpp"

namespace prosign {

namespace {

std::uint32_t le32(std::string_view b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t le16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

Audio parse_wav(std::string_view b) {
  if (b.size() < 12 || b.substr(0, 4) != "RIFF" || b.substr(8, 4) != "WAVE")
    throw ParseError("not a RIFF/WAVE file");
  std::size_t pos = 12;
  int channels = 0;
  int rate = 0;
  int bits = 0;
  bool have_fmt = false;
  while (pos + 8 <= b.size()) {
    auto id = b.substr(pos, 4);
    std::size_t len = le32(b, pos + 4);
    std::size_t body = pos + 8;
    if (body + len > b.size()) len = b.size() - body;
    if (id == "fmt ") {
      if (len < 16) throw ParseError("short fmt chunk");
      auto format = le16(b, body);
      channels = le16(b, body + 2);
      rate = static_cast<int>(le32(b, body + 4));
      bits = le16(b, body + 14);
      if (format != 1 || bits != 16) throw ParseError("only 16-bit PCM WAV is supported");
      if (channels < 1) throw ParseError("WAV without channels");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw ParseError("data chunk before fmt chunk");
      Audio a;
      a.sample_rate = rate;
      std::size_t frames = len / (2 * static_cast<std::size_t>(channels));
      a.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c)
          acc += static_cast<std::int16_t>(le16(b, body + 2 * (i * channels + c)));
        a.samples[i] = acc / channels / 32768.0;
      }
      return a;
    }
    pos = body + len + (len & 1);
  }
  throw ParseError("WAV without data chunk");
}

Audio read_wav(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  try {
    return parse_wav(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string encode_wav(const Audio& a) {
  std::string out;
  auto data_len = static_cast<std::uint32_t>(a.samples.size() * 2);
  out += "RIFF";
  put32(out, 36 + data_len);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(a.sample_rate));
  put32(out, static_cast<std::uint32_t>(a.sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, data_len);
  for (double s : a.samples) {
    auto q = static_cast<long>(std::lround(std::clamp(s, -1.0, 1.0) * 32767.0));
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const Audio& audio) {
  write_file_atomic(path, encode_wav(audio));
}

}  // namespace prosign
