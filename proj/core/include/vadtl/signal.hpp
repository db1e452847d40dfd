#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vadtl {

/// Mono audio with amplitudes in [-1, 1].
struct AudioSignal {
  std::vector<double> samples;
  int sample_rate = 8000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

inline constexpr int kProtocolSampleRate = 8000;
inline constexpr double kFrameLengthSeconds = 0.025;
inline constexpr double kFrameShiftSeconds = 0.010;

/// Fixed-length analysis windows; frame k starts at sample k * frame_shift.
/// Frames share the backing sample buffer.
class FrameSequence {
 public:
  FrameSequence(std::vector<double> samples, std::size_t frame_length,
                std::size_t frame_shift);

  std::size_t size() const { return count_; }
  std::size_t frame_length() const { return frame_length_; }
  std::size_t frame_shift() const { return frame_shift_; }
  std::size_t frame_start(std::size_t k) const { return k * frame_shift_; }

  std::span<const double> frame(std::size_t k) const {
    return {samples_.data() + k * frame_shift_, frame_length_};
  }

  std::span<const double> samples() const { return samples_; }

 private:
  std::vector<double> samples_;
  std::size_t frame_length_;
  std::size_t frame_shift_;
  std::size_t count_;
};

enum class WavErrorKind { malformed_header, unsupported_encoding, multichannel };

class WavError : public std::runtime_error {
 public:
  WavError(WavErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  WavErrorKind kind() const { return kind_; }

 private:
  WavErrorKind kind_;
};

/// Reads 16-bit PCM mono WAV; samples scaled by 1/32768.
AudioSignal read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono WAV; samples outside [-1, 1] are clamped.
void write_wav(const std::filesystem::path& path, const AudioSignal& signal);

/// Splits into 25 ms frames with a 10 ms shift (200/80 samples at 8 kHz);
/// trailing samples that do not fill a frame are dropped. Throws
/// std::invalid_argument if the signal is shorter than one frame.
FrameSequence frame_signal(const AudioSignal& signal);

struct MixResult {
  AudioSignal signal;
  std::size_t clipped_samples = 0;  // samples clamped to [-1, 1] after mixing
  double noise_gain = 0.0;
};

/// clean + g * noise with g chosen so the clean-to-noise power ratio over
/// the clean extent equals snr_db. Noise shorter than clean is tiled;
/// longer noise is truncated. Throws on rate mismatch or all-zero inputs.
MixResult mix_at_snr(const AudioSignal& clean, const AudioSignal& noise,
                     double snr_db);

enum class FrameLabel : std::uint8_t { nonspeech = 0, speech = 1 };

inline constexpr double kDefaultLabelThresholdDb = 35.0;

/// Energy ground-truth labels: a frame is speech iff its log-energy exceeds
/// the utterance's maximum frame log-energy minus threshold_db. An utterance
/// whose peak frame energy sits at the silence floor is all nonspeech.
std::vector<FrameLabel> frame_labels_from_clean(
    const AudioSignal& clean, double threshold_db = kDefaultLabelThresholdDb);

/// Sidecar label file: one character per frame, '1' speech / '0' nonspeech,
/// newline-terminated.
void write_labels(const std::filesystem::path& path,
                  const std::vector<FrameLabel>& labels);
std::vector<FrameLabel> read_labels(const std::filesystem::path& path);

}  // namespace vadtl
