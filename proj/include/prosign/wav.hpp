#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace prosign {

// Mono audio with samples scaled to [-1, 1).
struct Audio {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// RIFF/WAVE, 16-bit PCM. Multi-channel input is averaged to mono.
Audio parse_wav(std::string_view bytes);
Audio read_wav(const std::filesystem::path& path);

std::string encode_wav(const Audio& audio);
void write_wav(const std::filesystem::path& path, const Audio& audio);

}  // namespace prosign
