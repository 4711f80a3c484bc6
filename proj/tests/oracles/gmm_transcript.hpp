#pragma once

// Single-pixel mixture transcript, K=2, alpha=0.1, produced by
// gmm_transcript.py next to this file.

namespace n2d::oracle {

struct GmmTranscriptRow {
  int step;
  double modes[2][3];  // weight, mean, variance
};

inline constexpr GmmTranscriptRow kGmmTranscript[] = {};

inline constexpr float kGmmTranscriptInput[] = {128 / 256.f, 134 / 256.f, 231 / 256.f, 128 / 256.f,
                                                229 / 256.f, 25 / 256.f,  129 / 256.f};

}  // namespace n2d::oracle
