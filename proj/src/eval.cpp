// Copyright 2026 The neurotext Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "neurotext/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "neurotext/arpa.hpp"
#include "neurotext/errors.hpp"

namespace neurotext {

template <class T>
EditCounts edit_distance(const std::vector<T>& ref, const std::vector<T>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1), at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  EditCounts c;
  c.distance = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++c.sub;
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++c.del;
      --i;
    } else {
      ++c.ins;
      --j;
    }
  }
  return c;
}

template EditCounts edit_distance<std::string>(const std::vector<std::string>&, const std::vector<std::string>&);
template EditCounts edit_distance<char>(const std::vector<char>&, const std::vector<char>&);
template EditCounts edit_distance<int>(const std::vector<int>&, const std::vector<int>&);

namespace {

template <class Split>
ErrorRate corpus_rate(const std::vector<std::string>& refs, const std::vector<std::string>& hyps, Split split) {
  if (refs.size() != hyps.size()) {
    throw DimensionError("error rate: " + std::to_string(refs.size()) + " references vs " +
                         std::to_string(hyps.size()) + " hypotheses");
  }
  ErrorRate r;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto a = split(refs[i]), b = split(hyps[i]);
    const EditCounts c = edit_distance(a, b);
    r.edits.distance += c.distance;
    r.edits.sub += c.sub;
    r.edits.del += c.del;
    r.edits.ins += c.ins;
    r.ref_tokens += a.size();
  }
  if (r.ref_tokens > 0) {
    r.rate = static_cast<double>(r.edits.distance) / static_cast<double>(r.ref_tokens);
  } else {
    r.rate = r.edits.distance > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return r;
}

std::vector<char> chars_of(const std::string& s) { return {s.begin(), s.end()}; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

ErrorRate wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
  return corpus_rate(refs, hyps, [](const std::string& s) { return split_words(s); });
}

ErrorRate cer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
  return corpus_rate(refs, hyps, chars_of);
}

std::vector<Transcript> decode_utterances(const Model& model, const Dataset& data,
                                          const std::vector<std::size_t>& indices,
                                          const DecodeConfig& config, double max_jitter_s) {
  std::vector<Transcript> out;
  for (std::size_t i : indices) {
    const Utterance u = nominal_window(data.utterances.at(i), max_jitter_s);
    const auto hyps = beam_decode(posteriors(model, u.neural), config);
    Transcript t;
    t.index = i;
    t.session = u.session_id;
    t.reference = u.text;
    t.hypothesis = hyps.empty() ? std::string() : hyps.front().text;
    t.score = hyps.empty() ? 0.0 : hyps.front().score;
    out.push_back(std::move(t));
  }
  return out;
}

ErrorRate transcript_wer(const std::vector<Transcript>& ts) {
  std::vector<std::string> r, h;
  for (const auto& t : ts) {
    r.push_back(t.reference);
    h.push_back(t.hypothesis);
  }
  return wer(r, h);
}

ErrorRate transcript_cer(const std::vector<Transcript>& ts) {
  std::vector<std::string> r, h;
  for (const auto& t : ts) {
    r.push_back(t.reference);
    h.push_back(t.hypothesis);
  }
  return cer(r, h);
}

CutoffCurve cutoff_curve(const Model& model, const Dataset& data, const std::vector<std::size_t>& indices,
                         CutoffSide side, const std::vector<double>& steps_s,
                         const DecodeConfig& config, double max_jitter_s) {
  CutoffCurve curve;
  curve.side = side;
  const std::size_t min_len = model.spec.encoder.min_frames();
  std::vector<Utterance> trials;
  for (std::size_t i : indices) trials.push_back(nominal_window(data.utterances.at(i), max_jitter_s));
  for (double c : steps_s) {
    if (!(c >= 0.0)) throw ParameterError("cutoff durations must be >= 0");
    CutoffPoint p;
    p.cutoff_s = c;
    std::vector<std::string> refs, hyps;
    for (const Utterance& u : trials) {
      refs.push_back(u.text);
      const auto cut = static_cast<std::size_t>(std::llround(c * u.sample_rate));
      if (cut >= u.frames() || u.frames() - cut < min_len) {
        ++p.skipped;
        hyps.emplace_back();
        continue;
      }
      const std::size_t b = side == CutoffSide::kOnset ? cut : 0;
      const std::size_t e = side == CutoffSide::kOnset ? u.frames() : u.frames() - cut;
      const std::size_t row = u.neural.size() / u.frames();
      Shape s = u.neural.shape();
      s[0] = e - b;
      const Tensor x(s, std::vector<double>(u.neural.values().begin() + static_cast<long>(b * row),
                                            u.neural.values().begin() + static_cast<long>(e * row)));
      const auto h = beam_decode(posteriors(model, x), config);
      hyps.push_back(h.empty() ? std::string() : h.front().text);
      ++p.decoded;
    }
    p.wer = wer(refs, hyps).rate;
    curve.points.push_back(p);
  }
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    if (curve.points[k].wer < curve.points[k - 1].wer) ++curve.decreases;
  }
  return curve;
}

IncrementalTrial incremental_trial(const Model& model, const Utterance& whole, const DecodeConfig& config,
                                   double step_s, double max_jitter_s) {
  if (!(step_s > 0.0)) throw ParameterError("step_s must be > 0");
  const Utterance u = nominal_window(whole, max_jitter_s);
  const PosteriorSequence post = posteriors(model, u.neural);
  const double frame_rate = u.sample_rate / static_cast<double>(model.spec.encoder.inception.temporal_stride());
  const auto chunk = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(step_s * frame_rate)));
  IncrementalTrial trial;
  trial.reference = u.text;
  StreamDecoder dec(config);
  for (std::size_t b = 0; b < post.frames(); b += chunk) {
    const std::size_t e = std::min(post.frames(), b + chunk);
    dec.feed(post.slice(b, e));
    IncrementalRow row;
    row.time_s = static_cast<double>(e) / frame_rate;
    if (e == post.frames()) {
      const auto final_hyps = dec.flush();
      row.text = final_hyps.empty() ? std::string() : final_hyps.front().text;
    } else {
      row.text = dec.best_text();
    }
    trial.rows.push_back(std::move(row));
  }
  return trial;
}

std::string series_csv(const std::vector<Series>& series, const std::string& x_name) {
  std::ostringstream out;
  out << "series," << x_name << ",value\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) out << s.name << ',' << fmt(s.x[i]) << ',' << fmt(s.y[i]) << '\n';
  }
  return out.str();
}

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series) {
  const double W = 640, H = 400, L = 70, R = 150, T = 40, B = 60;
  double x0 = 1e300, x1 = -1e300, y0 = 0.0, y1 = -1e300;
  for (const auto& s : series) {
    for (double x : s.x) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
    }
    for (double y : s.y) {
      if (std::isfinite(y)) y1 = std::max(y1, y);
    }
  }
  if (!(x1 > x0)) {
    x0 = x0 > 1e299 ? 0.0 : x0 - 0.5;
    x1 = x0 + 1.0;
  }
  if (!(y1 > y0)) y1 = 1.0;
  y1 *= 1.05;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title) << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0, yv = y0 + (y1 - y0) * k / 5.0;
    o << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
    o << "<text x=\"" << L - 8 << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << fmt(py(yv)) << "\" x2=\"" << W - R << "\" y2=\"" << fmt(py(yv))
      << "\" stroke=\"#ddd\"/>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";
  o << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << (T + H - B) / 2 << ")\">" << escape_xml(y_label) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* c = colors[i % 6];
    o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (std::isfinite(s.y[k])) o << fmt(px(s.x[k])) << ',' << fmt(py(s.y[k])) << ' ';
    }
    o << "\"/>\n";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (std::isfinite(s.y[k])) o << "<circle cx=\"" << fmt(px(s.x[k])) << "\" cy=\"" << fmt(py(s.y[k])) << "\" r=\"3\" fill=\"" << c << "\"/>\n";
    }
    const double ly = T + 10 + 20.0 * static_cast<double>(i);
    o << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
      << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\">" << escape_xml(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace neurotext
