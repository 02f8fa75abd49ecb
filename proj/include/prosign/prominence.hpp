#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prosign/corpus.hpp"
#include "prosign/wav.hpp"

namespace prosign {

// A frame-rate signal. Frame i is centred at start_s + i * frame_shift_s.
// `voiced` is filled only for f0 tracks.
struct FrameTrack {
  std::vector<double> values;
  double frame_shift_s = 0.005;
  double start_s = 0.0;
  std::vector<bool> voiced;

  std::size_t size() const { return values.size(); }
  double time(std::size_t i) const { return start_s + static_cast<double>(i) * frame_shift_s; }
};

struct FramingConfig {
  double window_s = 0.025;
  double shift_s = 0.005;
};

struct F0Config {
  double min_hz = 100.0;
  double max_hz = 400.0;
  // Normalized cross-correlation a frame needs to be considered voiced.
  double voicing_threshold = 0.5;
  // Frames quieter than this many dB below the loudest frame are unvoiced.
  double silence_db = 40.0;
  // Cost per octave of frame-to-frame f0 change.
  double octave_cost = 0.5;
  // Preference for shorter lags, which suppresses sub-octave picks.
  double lag_weight = 0.1;
  double voicing_transition_cost = 0.2;
  int max_candidates = 6;
};

struct EnergyConfig {
  double floor_below_peak_db = 60.0;
  double absolute_floor_db = -120.0;
};

struct CombineWeights {
  double f0 = 1.0;
  double energy = 1.0;
  double duration = 1.0;
};

struct CwtConfig {
  int n_scales = 12;
  double base_scale_s = 0.02;
  // Word-to-phrase band summed into the salience curve.
  double band_lo_s = 0.08;
  double band_hi_s = 0.6;
};

struct ProminenceConfig {
  FramingConfig framing;
  F0Config f0;
  EnergyConfig energy;
  CombineWeights weights;
  CwtConfig cwt;
};

// Unknown keys are rejected. Keys: window_s, shift_s, f0_min_hz, f0_max_hz,
// voicing_threshold, silence_db, octave_cost, lag_weight, energy_floor_db,
// w_f0, w_energy, w_duration, n_scales, base_scale_s, band_lo_s, band_hi_s.
ProminenceConfig prominence_config_from(const std::map<std::string, std::string>& kv);

// Normalized cross-correlation pitch tracker with a Viterbi pass over
// per-frame candidates. Returns an empty track when the audio is shorter
// than one window.
FrameTrack extract_f0(const Audio& audio, const FramingConfig& framing = {},
                      const F0Config& cfg = {});

// Hann-weighted RMS level in dB per frame, floored at
// max(peak - floor_below_peak_db, absolute_floor_db).
FrameTrack extract_energy(const Audio& audio, const FramingConfig& framing = {},
                          const EnergyConfig& cfg = {});

// Each phone contributes its duration at its temporal centre; frames are
// linearly interpolated between centres and held constant beyond the ends.
// Silence phones and silence words are excluded. A word without phones acts
// as one unit. Throws ValidationError when nothing remains.
FrameTrack duration_signal(std::span<const WordAlignment> alignment, double start_s,
                           double frame_shift_s, std::size_t n_frames);

// f0 in semitones (re 1 Hz) with unvoiced stretches linearly interpolated
// and edges held. All zeros when no frame is voiced.
std::vector<double> interpolated_semitones(const FrameTrack& f0);

// Population z-score. A (numerically) constant input yields zeros.
std::vector<double> zscore(std::span<const double> values);

FrameTrack combine_signals(const FrameTrack& f0, const FrameTrack& energy, const FrameTrack& duration,
                           const CombineWeights& weights = {});

struct Scalogram {
  // coefficients[k][n]: scale k, frame n.
  std::vector<std::vector<double>> coefficients;
  std::vector<double> scales_s;
  double frame_shift_s = 0.005;
  double start_s = 0.0;

  std::size_t n_frames() const { return coefficients.empty() ? 0 : coefficients.front().size(); }
};

// Mexican-hat wavelet, (2 / (sqrt(3) pi^(1/4))) (1 - t^2) exp(-t^2 / 2).
double ricker(double t);

// Scales base * 2^(k/2); coefficient(k, n) = sum_j x[n + j] * s_k^(-1/2) *
// ricker(j * shift / s_k) with mirror (whole-sample symmetric) padding. The
// kernel is truncated at |t| = 10 s_k. Throws ValidationError for fewer than 8
// frames.
Scalogram cwt(const FrameTrack& signal, int n_scales = 12, double base_scale_s = 0.02);

// Sum of coefficients over scales within [lo_s, hi_s].
std::vector<double> salience_curve(const Scalogram& scalogram, double lo_s, double hi_s);

struct WordValue {
  std::size_t alignment_index = 0;
  double value = 0.0;
};

// Per non-silence alignment word, the maximum of the salience curve over
// frames centred inside [start_s, end_s] (the nearest frame when none is).
// Continuous, never quantized.
std::vector<WordValue> word_prominence(const Scalogram& scalogram,
                                       std::span<const WordAlignment> alignment, double lo_s = 0.08,
                                       double hi_s = 0.6);

struct WordProsody {
  std::string segment_id;
  int word_index = 0;
  std::string word;
  double prominence = 0.0;
  double duration_s = 0.0;
  double f0_mean = 0.0;
  double f0_sd = 0.0;
  double intensity_mean = 0.0;
  double intensity_sd = 0.0;
  // False when f0 statistics come from the interpolated track.
  bool voiced = true;

  bool operator==(const WordProsody&) const = default;
};

// Word-level signal statistics per non-silence alignment word, in alignment
// order. f0 is z-scored in the semitone domain over the utterance's voiced
// frames; intensity is the energy track z-scored over the utterance.
// `word_index` holds the alignment index; prominence is left at 0.
std::vector<WordProsody> word_measures(const FrameTrack& f0, const FrameTrack& energy,
                                       std::span<const WordAlignment> alignment);

struct UtteranceAnalysis {
  FrameTrack f0;
  FrameTrack energy;
  FrameTrack duration;
  FrameTrack composite;
  Scalogram scalogram;
  // Alignment order, silence excluded, prominence filled in.
  std::vector<WordProsody> words;
};

UtteranceAnalysis analyze_utterance(const Audio& audio, std::span<const WordAlignment> alignment,
                                    const ProminenceConfig& config = {});

// Rows keyed by the transcription's word index (see split_words), joined to
// the alignment with match_words. Unmatched words produce no row.
std::vector<WordProsody> segment_prosody(const Segment& segment, const Audio& audio,
                                         std::span<const WordAlignment> alignment,
                                         const ProminenceConfig& config = {});

// segment_id,word_index,word,prominence,duration_s,f0_mean,f0_sd,int_mean,int_sd,voiced_flag
std::string prosody_to_csv(std::span<const WordProsody> rows);
std::vector<WordProsody> prosody_from_csv(std::string_view text);

}  // namespace prosign
