#include "prosign/prominence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "prosign/error.hpp"
#include "prosign/io.hpp"
#include "prosign/text.hpp"

namespace prosign {

namespace {

// Kernel support in scale units; the Ricker tail beyond it is below 1e-20.
constexpr double kKernelReach = 10.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Framing {
  std::size_t win = 0;
  std::size_t hop = 0;
  std::size_t n_frames = 0;
  double shift_s = 0.0;
  double start_s = 0.0;
};

Framing frame_layout(const Audio& audio, const FramingConfig& cfg) {
  if (audio.sample_rate < 16000)
    throw ValidationError("sample rate " + std::to_string(audio.sample_rate) +
                          " Hz is below 16 kHz");
  if (audio.samples.empty()) throw ValidationError("empty audio");
  Framing f;
  const double sr = audio.sample_rate;
  f.win = static_cast<std::size_t>(std::lround(cfg.window_s * sr));
  f.hop = static_cast<std::size_t>(std::lround(cfg.shift_s * sr));
  if (f.win < 2 || f.hop < 1) throw ValidationError("frame window/shift too small");
  f.shift_s = static_cast<double>(f.hop) / sr;
  f.start_s = static_cast<double>(f.win) / 2.0 / sr;
  const auto n = audio.samples.size();
  f.n_frames = n >= f.win ? 1 + (n - f.win) / f.hop : 0;
  return f;
}

// Frame range whose centres fall inside [start, end]; nearest frame to the
// interval centre when none does. Requires a non-empty track.
std::pair<std::size_t, std::size_t> frames_within(double start_s, double shift_s, std::size_t n,
                                                  double begin, double end) {
  auto lo = std::ceil((begin - start_s) / shift_s - 1e-9);
  auto hi = std::floor((end - start_s) / shift_s + 1e-9);
  lo = std::max(lo, 0.0);
  hi = std::min(hi, static_cast<double>(n) - 1.0);
  if (lo <= hi) return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
  auto c = std::lround((0.5 * (begin + end) - start_s) / shift_s);
  auto k = static_cast<std::size_t>(std::clamp<long>(c, 0, static_cast<long>(n) - 1));
  return {k, k};
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_sd(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

bool negligible_spread(double sd, std::span<const double> v) {
  double scale = 1.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  return sd <= 1e-12 * scale;
}

struct Candidate {
  double lag = 0.0;
  double peak = 0.0;
};

}  // namespace

ProminenceConfig prominence_config_from(const std::map<std::string, std::string>& kv) {
  ProminenceConfig c;
  std::unordered_map<std::string, double*> reals = {
      {"window_s", &c.framing.window_s},       {"shift_s", &c.framing.shift_s},
      {"f0_min_hz", &c.f0.min_hz},            {"f0_max_hz", &c.f0.max_hz},
      {"voicing_threshold", &c.f0.voicing_threshold},
      {"silence_db", &c.f0.silence_db},       {"octave_cost", &c.f0.octave_cost},
      {"lag_weight", &c.f0.lag_weight},       {"energy_floor_db", &c.energy.floor_below_peak_db},
      {"w_f0", &c.weights.f0},                {"w_energy", &c.weights.energy},
      {"w_duration", &c.weights.duration},    {"base_scale_s", &c.cwt.base_scale_s},
      {"band_lo_s", &c.cwt.band_lo_s},        {"band_hi_s", &c.cwt.band_hi_s},
  };
  for (const auto& [key, value] : kv) {
    if (key == "n_scales") {
      c.cwt.n_scales = static_cast<int>(parse_int(value));
      continue;
    }
    auto it = reals.find(key);
    if (it == reals.end()) throw ValidationError("unknown prominence setting '" + key + "'");
    *it->second = parse_double(value);
  }
  if (!(c.f0.min_hz > 0 && c.f0.min_hz < c.f0.max_hz))
    throw ValidationError("need 0 < f0_min_hz < f0_max_hz");
  if (c.cwt.n_scales < 1 || !(c.cwt.base_scale_s > 0))
    throw ValidationError("need n_scales >= 1 and base_scale_s > 0");
  if (!(c.cwt.band_lo_s <= c.cwt.band_hi_s)) throw ValidationError("need band_lo_s <= band_hi_s");
  return c;
}

FrameTrack extract_f0(const Audio& audio, const FramingConfig& framing, const F0Config& cfg) {
  auto fl = frame_layout(audio, framing);
  FrameTrack track;
  track.frame_shift_s = fl.shift_s;
  track.start_s = fl.start_s;
  if (fl.n_frames == 0) return track;

  const double sr = audio.sample_rate;
  const auto& x = audio.samples;
  const auto lag_min = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(sr / cfg.max_hz)));
  const auto lag_max = static_cast<std::size_t>(std::ceil(sr / cfg.min_hz));
  const double candidate_floor = std::min(0.3, cfg.voicing_threshold);

  std::vector<double> frame_db(fl.n_frames);
  double peak_db = -kInf;
  for (std::size_t f = 0; f < fl.n_frames; ++f) {
    double e = 0.0;
    for (std::size_t n = 0; n < fl.win; ++n) e += x[f * fl.hop + n] * x[f * fl.hop + n];
    frame_db[f] = e > 0.0 ? 10.0 * std::log10(e / static_cast<double>(fl.win)) : -kInf;
    peak_db = std::max(peak_db, frame_db[f]);
  }

  std::vector<std::vector<Candidate>> cands(fl.n_frames);
  std::vector<bool> silent(fl.n_frames);
  std::vector<double> seg(fl.win + lag_max + 2);
  std::vector<double> r(lag_max + 2);
  for (std::size_t f = 0; f < fl.n_frames; ++f) {
    silent[f] = !(frame_db[f] > peak_db - cfg.silence_db);
    if (silent[f]) continue;
    const auto o = f * fl.hop;
    double mean = 0.0;
    for (std::size_t n = 0; n < fl.win; ++n) mean += x[o + n];
    mean /= static_cast<double>(fl.win);
    for (std::size_t n = 0; n < seg.size(); ++n) seg[n] = o + n < x.size() ? x[o + n] - mean : 0.0;

    double e0 = 0.0;
    for (std::size_t n = 0; n < fl.win; ++n) e0 += seg[n] * seg[n];
    if (e0 <= 0.0) {
      silent[f] = true;
      continue;
    }
    double et = 0.0;
    const auto first = lag_min - 1;
    for (std::size_t n = 0; n < fl.win; ++n) et += seg[n + first] * seg[n + first];
    for (std::size_t lag = first; lag <= lag_max + 1; ++lag) {
      if (lag > first) et += seg[lag - 1 + fl.win] * seg[lag - 1 + fl.win] - seg[lag - 1] * seg[lag - 1];
      double cross = 0.0;
      for (std::size_t n = 0; n < fl.win; ++n) cross += seg[n] * seg[n + lag];
      r[lag] = et > 0.0 ? cross / std::sqrt(e0 * et) : 0.0;
    }
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      if (!(r[lag] >= r[lag - 1] && r[lag] > r[lag + 1] && r[lag] > candidate_floor)) continue;
      double a = r[lag - 1], b = r[lag], c = r[lag + 1];
      double denom = a - 2.0 * b + c;
      double delta = denom < 0.0 ? std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) : 0.0;
      cands[f].push_back({static_cast<double>(lag) + delta, b - 0.25 * (a - c) * delta});
    }
    auto& cf = cands[f];
    std::sort(cf.begin(), cf.end(), [](const Candidate& p, const Candidate& q) {
      return p.peak > q.peak || (p.peak == q.peak && p.lag < q.lag);
    });
    if (cf.size() > static_cast<std::size_t>(cfg.max_candidates)) cf.resize(cfg.max_candidates);
  }

  // Viterbi over {unvoiced} + candidates. State 0 is unvoiced.
  auto local = [&](std::size_t f, std::size_t s) {
    if (s == 0) return silent[f] ? 0.0 : 1.0 - cfg.voicing_threshold;
    const auto& c = cands[f][s - 1];
    return 1.0 - c.peak + cfg.lag_weight * c.lag / static_cast<double>(lag_max);
  };
  auto transition = [&](std::size_t f, std::size_t from, std::size_t to) {
    if (from == 0 && to == 0) return 0.0;
    if (from == 0 || to == 0) return cfg.voicing_transition_cost;
    return cfg.octave_cost * std::abs(std::log2(cands[f][to - 1].lag / cands[f - 1][from - 1].lag));
  };

  std::vector<std::vector<double>> cost(fl.n_frames);
  std::vector<std::vector<std::size_t>> back(fl.n_frames);
  for (std::size_t f = 0; f < fl.n_frames; ++f) {
    const auto n_states = cands[f].size() + 1;
    cost[f].assign(n_states, kInf);
    back[f].assign(n_states, 0);
    for (std::size_t s = 0; s < n_states; ++s) {
      if (f == 0) {
        cost[f][s] = local(f, s);
        continue;
      }
      for (std::size_t p = 0; p < cost[f - 1].size(); ++p) {
        double c = cost[f - 1][p] + transition(f, p, s);
        if (c < cost[f][s]) {
          cost[f][s] = c;
          back[f][s] = p;
        }
      }
      cost[f][s] += local(f, s);
    }
  }
  track.values.assign(fl.n_frames, 0.0);
  track.voiced.assign(fl.n_frames, false);
  const auto& last = cost.back();
  std::size_t state = static_cast<std::size_t>(std::min_element(last.begin(), last.end()) - last.begin());
  for (std::size_t f = fl.n_frames; f-- > 0;) {
    if (state > 0) {
      track.voiced[f] = true;
      track.values[f] = sr / cands[f][state - 1].lag;
    }
    state = back[f][state];
  }
  return track;
}

FrameTrack extract_energy(const Audio& audio, const FramingConfig& framing, const EnergyConfig& cfg) {
  auto fl = frame_layout(audio, framing);
  FrameTrack track;
  track.frame_shift_s = fl.shift_s;
  track.start_s = fl.start_s;
  if (fl.n_frames == 0) return track;

  std::vector<double> window(fl.win);
  double wsum = 0.0;
  for (std::size_t n = 0; n < fl.win; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(n) + 0.5) /
                                     static_cast<double>(fl.win));
    wsum += window[n];
  }
  track.values.resize(fl.n_frames);
  double peak = -kInf;
  for (std::size_t f = 0; f < fl.n_frames; ++f) {
    double p = 0.0;
    for (std::size_t n = 0; n < fl.win; ++n) {
      double s = audio.samples[f * fl.hop + n];
      p += window[n] * s * s;
    }
    p /= wsum;
    track.values[f] = p > 0.0 ? 10.0 * std::log10(p) : -kInf;
    peak = std::max(peak, track.values[f]);
  }
  const double floor = std::max(peak - cfg.floor_below_peak_db, cfg.absolute_floor_db);
  for (auto& v : track.values) v = std::max(v, floor);
  return track;
}

FrameTrack duration_signal(std::span<const WordAlignment> alignment, double start_s,
                           double frame_shift_s, std::size_t n_frames) {
  std::vector<std::pair<double, double>> points;  // (centre, duration)
  for (const auto& w : alignment) {
    if (is_silence_label(w.word)) continue;
    if (w.phones.empty()) {
      points.emplace_back(0.5 * (w.start_s + w.end_s), w.end_s - w.start_s);
      continue;
    }
    for (const auto& p : w.phones) {
      if (is_silence_label(p.label)) continue;
      points.emplace_back(0.5 * (p.start_s + p.end_s), p.end_s - p.start_s);
    }
  }
  if (points.empty()) throw ValidationError("duration signal needs at least one non-silence phone");

  FrameTrack track;
  track.frame_shift_s = frame_shift_s;
  track.start_s = start_s;
  track.values.resize(n_frames);
  std::size_t j = 0;
  for (std::size_t n = 0; n < n_frames; ++n) {
    const double t = track.time(n);
    if (t <= points.front().first) {
      track.values[n] = points.front().second;
      continue;
    }
    if (t >= points.back().first) {
      track.values[n] = points.back().second;
      continue;
    }
    while (j + 1 < points.size() && points[j + 1].first < t) ++j;
    const auto& [t0, v0] = points[j];
    const auto& [t1, v1] = points[j + 1];
    track.values[n] = t1 > t0 ? v0 + (v1 - v0) * (t - t0) / (t1 - t0) : v1;
  }
  return track;
}

std::vector<double> interpolated_semitones(const FrameTrack& f0) {
  const auto n = f0.size();
  std::vector<double> out(n, 0.0);
  std::vector<std::size_t> voiced;
  for (std::size_t i = 0; i < n; ++i)
    if (i < f0.voiced.size() && f0.voiced[i] && f0.values[i] > 0.0) {
      out[i] = 12.0 * std::log2(f0.values[i]);
      voiced.push_back(i);
    }
  if (voiced.empty()) return out;
  for (std::size_t i = 0; i < voiced.front(); ++i) out[i] = out[voiced.front()];
  for (std::size_t i = voiced.back() + 1; i < n; ++i) out[i] = out[voiced.back()];
  for (std::size_t k = 0; k + 1 < voiced.size(); ++k) {
    auto a = voiced[k], b = voiced[k + 1];
    for (auto i = a + 1; i < b; ++i)
      out[i] = out[a] + (out[b] - out[a]) * static_cast<double>(i - a) / static_cast<double>(b - a);
  }
  return out;
}

std::vector<double> zscore(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const double m = mean_of(values);
  const double sd = population_sd(values, m);
  if (negligible_spread(sd, values)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - m) / sd;
  return out;
}

FrameTrack combine_signals(const FrameTrack& f0, const FrameTrack& energy, const FrameTrack& duration,
                           const CombineWeights& weights) {
  const auto n = f0.size();
  if (energy.size() != n || duration.size() != n)
    throw ValidationError("tracks differ in length: f0 " + std::to_string(n) + ", energy " +
                          std::to_string(energy.size()) + ", duration " +
                          std::to_string(duration.size()));
  auto same_grid = [&](const FrameTrack& t) {
    return std::abs(t.frame_shift_s - f0.frame_shift_s) < 1e-12 && std::abs(t.start_s - f0.start_s) < 1e-9;
  };
  if (!same_grid(energy) || !same_grid(duration)) throw ValidationError("tracks do not share framing");

  auto zf = zscore(interpolated_semitones(f0));
  auto ze = zscore(energy.values);
  auto zd = zscore(duration.values);
  FrameTrack out;
  out.frame_shift_s = f0.frame_shift_s;
  out.start_s = f0.start_s;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] = weights.f0 * zf[i] + weights.energy * ze[i] + weights.duration * zd[i];
  return out;
}

double ricker(double t) {
  static const double norm = 2.0 / (std::sqrt(3.0) * std::pow(std::numbers::pi, 0.25));
  return norm * (1.0 - t * t) * std::exp(-0.5 * t * t);
}

Scalogram cwt(const FrameTrack& signal, int n_scales, double base_scale_s) {
  const auto n = signal.size();
  if (n < 8) throw ValidationError("cwt needs at least 8 frames, got " + std::to_string(n));
  if (n_scales < 1 || !(base_scale_s > 0.0)) throw ValidationError("invalid cwt scales");
  const double dt = signal.frame_shift_s;
  const auto period = static_cast<long>(2 * (n - 1));
  auto reflect = [&](long i) {
    long m = i % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < static_cast<long>(n) ? m : period - m);
  };

  Scalogram sg;
  sg.frame_shift_s = dt;
  sg.start_s = signal.start_s;
  for (int k = 0; k < n_scales; ++k) {
    const double s = base_scale_s * std::pow(2.0, 0.5 * k);
    const auto half = static_cast<long>(std::floor(kKernelReach * s / dt + 1e-9));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    for (long j = -half; j <= half; ++j)
      kernel[static_cast<std::size_t>(j + half)] = ricker(static_cast<double>(j) * dt / s) / std::sqrt(s);

    std::vector<double> row(n);
    for (std::size_t t = 0; t < n; ++t) {
      double acc = 0.0;
      for (long j = -half; j <= half; ++j)
        acc += signal.values[reflect(static_cast<long>(t) + j)] * kernel[static_cast<std::size_t>(j + half)];
      row[t] = acc;
    }
    sg.scales_s.push_back(s);
    sg.coefficients.push_back(std::move(row));
  }
  return sg;
}

std::vector<double> salience_curve(const Scalogram& sg, double lo_s, double hi_s) {
  std::vector<double> curve(sg.n_frames(), 0.0);
  bool any = false;
  for (std::size_t k = 0; k < sg.scales_s.size(); ++k) {
    const double s = sg.scales_s[k];
    if (s < lo_s * (1.0 - 1e-9) || s > hi_s * (1.0 + 1e-9)) continue;
    any = true;
    for (std::size_t t = 0; t < curve.size(); ++t) curve[t] += sg.coefficients[k][t];
  }
  if (!any)
    throw ValidationError("no wavelet scale within [" + format_exact(lo_s) + ", " +
                          format_exact(hi_s) + "] s");
  return curve;
}

std::vector<WordValue> word_prominence(const Scalogram& sg, std::span<const WordAlignment> alignment,
                                       double lo_s, double hi_s) {
  auto curve = salience_curve(sg, lo_s, hi_s);
  const auto n = curve.size();
  const double first = sg.start_s;
  const double last = sg.start_s + static_cast<double>(n - 1) * sg.frame_shift_s;
  std::vector<WordValue> out;
  for (std::size_t i = 0; i < alignment.size(); ++i) {
    const auto& w = alignment[i];
    if (is_silence_label(w.word)) continue;
    if (w.start_s > last + sg.frame_shift_s || w.end_s < first - sg.frame_shift_s)
      throw ValidationError("word '" + w.word + "' [" + format_exact(w.start_s) + ", " +
                            format_exact(w.end_s) + "] lies outside the signal");
    auto [lo, hi] = frames_within(first, sg.frame_shift_s, n, w.start_s, w.end_s);
    double best = curve[lo];
    for (auto t = lo + 1; t <= hi; ++t) best = std::max(best, curve[t]);
    out.push_back({i, best});
  }
  return out;
}

std::vector<WordProsody> word_measures(const FrameTrack& f0, const FrameTrack& energy,
                                       std::span<const WordAlignment> alignment) {
  if (f0.size() != energy.size() || f0.size() == 0)
    throw ValidationError("f0 and energy tracks must be non-empty and equally long");

  std::vector<double> voiced_st;
  for (std::size_t i = 0; i < f0.size(); ++i)
    if (f0.voiced[i] && f0.values[i] > 0.0) voiced_st.push_back(12.0 * std::log2(f0.values[i]));
  double st_mean = 0.0, st_sd = 0.0;
  if (!voiced_st.empty()) {
    st_mean = mean_of(voiced_st);
    st_sd = population_sd(voiced_st, st_mean);
    if (negligible_spread(st_sd, voiced_st)) st_sd = 0.0;
  }
  auto z_st = [&](double st) { return st_sd > 0.0 ? (st - st_mean) / st_sd : 0.0; };
  const auto interp = interpolated_semitones(f0);
  const auto intensity = zscore(energy.values);

  std::vector<WordProsody> out;
  for (std::size_t i = 0; i < alignment.size(); ++i) {
    const auto& w = alignment[i];
    if (is_silence_label(w.word)) continue;
    WordProsody p;
    p.word_index = static_cast<int>(i);
    p.word = w.word;
    p.duration_s = w.end_s - w.start_s;
    auto [lo, hi] = frames_within(f0.start_s, f0.frame_shift_s, f0.size(), w.start_s, w.end_s);

    std::vector<double> fz, iz;
    for (auto t = lo; t <= hi; ++t) {
      iz.push_back(intensity[t]);
      if (f0.voiced[t] && f0.values[t] > 0.0) fz.push_back(z_st(12.0 * std::log2(f0.values[t])));
    }
    if (fz.empty()) {
      p.voiced = false;
      if (!voiced_st.empty())
        for (auto t = lo; t <= hi; ++t) fz.push_back(z_st(interp[t]));
      else
        fz.push_back(0.0);
    }
    p.f0_mean = mean_of(fz);
    p.f0_sd = population_sd(fz, p.f0_mean);
    p.intensity_mean = mean_of(iz);
    p.intensity_sd = population_sd(iz, p.intensity_mean);
    out.push_back(std::move(p));
  }
  return out;
}

UtteranceAnalysis analyze_utterance(const Audio& audio, std::span<const WordAlignment> alignment,
                                    const ProminenceConfig& config) {
  UtteranceAnalysis a;
  a.f0 = extract_f0(audio, config.framing, config.f0);
  if (a.f0.size() < 8) throw ValidationError("audio too short for prominence analysis");
  a.energy = extract_energy(audio, config.framing, config.energy);
  a.duration = duration_signal(alignment, a.f0.start_s, a.f0.frame_shift_s, a.f0.size());
  a.composite = combine_signals(a.f0, a.energy, a.duration, config.weights);
  a.scalogram = cwt(a.composite, config.cwt.n_scales, config.cwt.base_scale_s);
  auto prom = word_prominence(a.scalogram, alignment, config.cwt.band_lo_s, config.cwt.band_hi_s);
  a.words = word_measures(a.f0, a.energy, alignment);
  for (std::size_t i = 0; i < a.words.size(); ++i) a.words[i].prominence = prom[i].value;
  return a;
}

std::vector<WordProsody> segment_prosody(const Segment& segment, const Audio& audio,
                                         std::span<const WordAlignment> alignment,
                                         const ProminenceConfig& config) {
  auto analysis = analyze_utterance(audio, alignment, config);
  std::unordered_map<std::size_t, const WordProsody*> by_alignment;
  for (const auto& w : analysis.words) by_alignment[static_cast<std::size_t>(w.word_index)] = &w;

  const std::vector<WordAlignment> aligned(alignment.begin(), alignment.end());
  auto match = match_words(segment.text, aligned);
  auto words = split_words(segment.text);
  std::vector<WordProsody> rows;
  for (const auto& m : match.pairs) {
    WordProsody p = *by_alignment.at(m.alignment_index);
    p.segment_id = segment.id;
    p.word_index = static_cast<int>(m.text_index);
    p.word = words[m.text_index].surface;
    rows.push_back(std::move(p));
  }
  return rows;
}

std::string prosody_to_csv(std::span<const WordProsody> rows) {
  CsvWriter csv({"segment_id", "word_index", "word", "prominence", "duration_s", "f0_mean", "f0_sd",
                 "int_mean", "int_sd", "voiced_flag"});
  for (const auto& r : rows)
    csv.row({r.segment_id, std::to_string(r.word_index), r.word, format_exact(r.prominence),
             format_exact(r.duration_s), format_exact(r.f0_mean), format_exact(r.f0_sd),
             format_exact(r.intensity_mean), format_exact(r.intensity_sd), r.voiced ? "1" : "0"});
  return csv.str();
}

std::vector<WordProsody> prosody_from_csv(std::string_view text) {
  auto t = parse_csv(text);
  auto c_seg = t.column("segment_id"), c_idx = t.column("word_index"), c_word = t.column("word"),
       c_prom = t.column("prominence"), c_dur = t.column("duration_s"), c_fm = t.column("f0_mean"),
       c_fs = t.column("f0_sd"), c_im = t.column("int_mean"), c_is = t.column("int_sd"),
       c_v = t.column("voiced_flag");
  std::vector<WordProsody> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    try {
      WordProsody p;
      p.segment_id = f[c_seg];
      p.word_index = static_cast<int>(parse_int(f[c_idx]));
      p.word = f[c_word];
      p.prominence = parse_double(f[c_prom]);
      p.duration_s = parse_double(f[c_dur]);
      p.f0_mean = parse_double(f[c_fm]);
      p.f0_sd = parse_double(f[c_fs]);
      p.intensity_mean = parse_double(f[c_im]);
      p.intensity_sd = parse_double(f[c_is]);
      p.voiced = f[c_v] == "1";
      rows.push_back(std::move(p));
    } catch (const Error& e) {
      throw ParseError(e.what(), t.lines[i]);
    }
  }
  return rows;
}

}  // namespace prosign
