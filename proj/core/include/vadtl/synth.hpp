#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vadtl/signal.hpp"

namespace vadtl {

/// Clean-speech surrogate: concatenated harmonic tone bursts separated by
/// silence, with soft attack/decay ramps. Deterministic given the seed.
AudioSignal synth_clean_utterance(double duration_s, std::uint64_t seed,
                                  int sample_rate = kProtocolSampleRate);

/// Built-in noise generators, each with a distinct spectral shape:
///   white   - flat spectrum
///   pink    - 1/f-shaped spectrum
///   rumble  - low band (<= 700 Hz)
///   hiss    - high band (2.2-3.8 kHz)
///   hum     - 50 Hz harmonic series plus weak broadband noise
///   babble  - sum of surrogate-speech streams
///   machine - amplitude-modulated mid band (0.8-2.0 kHz)
/// plus parametric band noise "band:<lo_hz>:<hi_hz>".
std::vector<std::string> noise_kinds();

AudioSignal synth_noise(const std::string& kind, double duration_s,
                        std::uint64_t seed,
                        int sample_rate = kProtocolSampleRate);

}  // namespace vadtl
