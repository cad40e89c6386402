#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "nqr/error.hpp"
#include "nqr/metrics.hpp"

namespace nqr {

std::optional<double> InteractionTrace::av_pa() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : steps) {
    if (s.pa) {
      sum += *s.pa;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

double InteractionTrace::av_mrr() const {
  if (steps.empty()) return base.mrr;
  double sum = 0.0;
  for (const auto& s : steps) sum += s.metrics.mrr;
  return sum / static_cast<double>(steps.size());
}

std::vector<Preference> reveal_order(const PreferenceSet& p, std::size_t max_steps) {
  std::vector<Preference> pos, neg;
  for (const auto& pair : p.pairs) (pair.label == 1 ? pos : neg).push_back(pair);
  std::vector<Preference> out;
  const std::size_t T = std::min(max_steps, p.pairs.size());
  std::size_t ip = 0, in = 0;
  while (out.size() < T) {
    const bool want_pos = out.size() % 2 == 0;
    if ((want_pos && ip < pos.size()) || in >= neg.size()) {
      out.push_back(pos[ip++]);
    } else {
      out.push_back(neg[in++]);
    }
  }
  return out;
}

InteractionTrace run_protocol(const Reranker& reranker, const QueryInstance& instance, std::size_t set_index,
                              std::span<const double> base, const ProtocolOptions& options) {
  if (set_index >= instance.preference_sets.size()) {
    fail(ErrorCode::kInvalidArgument, "query " + std::to_string(instance.id) + " has no preference set " +
                                          std::to_string(set_index));
  }
  const PreferenceSet& full = instance.preference_sets[set_index];
  const auto positives = full.positives();
  const auto negatives = full.negatives();
  const bool has_pa = !positives.empty() && !negatives.empty();
  const auto& answers = instance.answers.answers;

  InteractionTrace trace;
  trace.query = instance.id;
  trace.structure = instance.query.structure;
  trace.set_index = set_index;
  if (has_pa) trace.base_pa = pairwise_accuracy(base, positives, negatives);
  trace.base = ranking_metrics(base, answers);

  PreferenceSet revealed;
  std::size_t t = 0;
  for (const auto& pair : reveal_order(full, options.max_steps)) {
    revealed.pairs.push_back(pair);
    const auto scores = reranker.rerank(base, revealed);
    TraceStep step;
    step.t = ++t;
    step.revealed = pair;
    if (has_pa) step.pa = pairwise_accuracy(scores, positives, negatives);
    step.metrics = ranking_metrics(scores, answers);
    trace.steps.push_back(step);
  }
  return trace;
}

std::vector<InteractionTrace> run_protocol_all(const Reranker& reranker,
                                               const std::vector<const QueryInstance*>& instances,
                                               const ScoreMatrix& scores, const ProtocolOptions& options) {
  std::vector<InteractionTrace> out;
  for (const auto* inst : instances) {
    const auto base = scores.at(inst->id);
    for (std::size_t s = 0; s < inst->preference_sets.size(); ++s) {
      out.push_back(run_protocol(reranker, *inst, s, base, options));
    }
  }
  return out;
}

namespace {

void add_trace(MetricSummary& m, const InteractionTrace& t) {
  ++m.traces;
  m.av_mrr += t.av_mrr();
  m.base_mrr += t.base.mrr;
  if (auto pa = t.av_pa()) {
    ++m.pa_traces;
    m.av_pa += *pa;
    m.base_pa += t.base_pa.value_or(0.0);
  }
}

void finish(MetricSummary& m) {
  if (m.traces) {
    m.av_mrr /= static_cast<double>(m.traces);
    m.base_mrr /= static_cast<double>(m.traces);
  }
  if (m.pa_traces) {
    m.av_pa /= static_cast<double>(m.pa_traces);
    m.base_pa /= static_cast<double>(m.pa_traces);
  }
}

}  // namespace

Aggregate aggregate(std::span<const InteractionTrace> traces) {
  Aggregate agg;
  for (const auto& t : traces) {
    add_trace(agg.overall, t);
    add_trace(agg.by_structure[structure_index(t.structure)], t);
    for (const auto& s : t.steps) {
      if (agg.curve.size() < s.t) {
        for (std::size_t k = agg.curve.size(); k < s.t; ++k) agg.curve.push_back(CurvePoint{k + 1});
      }
      auto& c = agg.curve[s.t - 1];
      ++c.count;
      c.mrr += s.metrics.mrr;
      c.hits1 += s.metrics.hits1;
      c.hits3 += s.metrics.hits3;
      c.hits10 += s.metrics.hits10;
      if (s.pa) {
        ++c.pa_count;
        c.pa += *s.pa;
      }
    }
  }
  finish(agg.overall);
  for (auto& m : agg.by_structure) finish(m);
  for (auto& c : agg.curve) {
    if (c.count) {
      const double n = static_cast<double>(c.count);
      c.mrr /= n;
      c.hits1 /= n;
      c.hits3 /= n;
      c.hits10 /= n;
    }
    if (c.pa_count) c.pa /= static_cast<double>(c.pa_count);
  }
  return agg;
}

void to_json(nlohmann::json& j, const InteractionTrace& t) {
  auto metrics = [](const RankingMetrics& m) {
    return nlohmann::json{{"mrr", m.mrr}, {"hits1", m.hits1}, {"hits3", m.hits3}, {"hits10", m.hits10}};
  };
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) {
    nlohmann::json js = metrics(s.metrics);
    js["t"] = s.t;
    js["entity"] = s.revealed.entity;
    js["label"] = s.revealed.label;
    js["pa"] = s.pa ? nlohmann::json(*s.pa) : nlohmann::json(nullptr);
    steps.push_back(std::move(js));
  }
  j = nlohmann::json{{"query", t.query},
                     {"structure", to_string(t.structure)},
                     {"set", t.set_index},
                     {"base_pa", t.base_pa ? nlohmann::json(*t.base_pa) : nlohmann::json(nullptr)},
                     {"base", metrics(t.base)},
                     {"steps", steps}};
}

void from_json(const nlohmann::json& j, InteractionTrace& t) {
  auto metrics = [](const nlohmann::json& m) {
    return RankingMetrics{m.at("mrr").get<double>(), m.at("hits1").get<double>(), m.at("hits3").get<double>(),
                          m.at("hits10").get<double>()};
  };
  try {
    t = {};
    t.query = j.at("query").get<QueryId>();
    t.structure = parse_structure(j.at("structure").get<std::string>());
    t.set_index = j.at("set").get<std::size_t>();
    if (!j.at("base_pa").is_null()) t.base_pa = j.at("base_pa").get<double>();
    t.base = metrics(j.at("base"));
    for (const auto& js : j.at("steps")) {
      TraceStep s;
      s.t = js.at("t").get<std::size_t>();
      s.revealed = {js.at("entity").get<EntityId>(), js.at("label").get<std::uint8_t>()};
      if (!js.at("pa").is_null()) s.pa = js.at("pa").get<double>();
      s.metrics = metrics(js);
      t.steps.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed trace: ") + e.what());
  }
}

void write_traces(std::ostream& out, std::span<const InteractionTrace> traces) {
  for (const auto& t : traces) out << nlohmann::json(t).dump() << '\n';
}

std::vector<InteractionTrace> read_traces(std::istream& in) {
  std::vector<InteractionTrace> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<InteractionTrace>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_structure_csv(std::ostream& out, const Aggregate& agg) {
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < agg.by_structure.size(); ++i) {
    if (agg.by_structure[i].traces) present.push_back(i);
  }
  out << "metric";
  for (auto i : present) out << ',' << to_string(kAllStructures[i]);
  out << ",avg\n";
  auto row = [&](const char* name, auto get) {
    out << name;
    double sum = 0.0;
    std::size_t n = 0;
    for (auto i : present) {
      const auto& m = agg.by_structure[i];
      const auto v = get(m);
      if (v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", *v);
        out << ',' << buf;
        sum += *v;
        ++n;
      } else {
        out << ',';
      }
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", n ? sum / static_cast<double>(n) : 0.0);
    out << ',' << buf << '\n';
  };
  row("AvPA", [](const MetricSummary& m) -> std::optional<double> {
    if (!m.pa_traces) return std::nullopt;
    return m.av_pa;
  });
  row("AvMRR", [](const MetricSummary& m) -> std::optional<double> { return m.av_mrr; });
  row("BaseMRR", [](const MetricSummary& m) -> std::optional<double> { return m.base_mrr; });
}

void write_curve_csv(std::ostream& out, const Aggregate& agg) {
  out << "t,count,pa,mrr,hits1,hits3,hits10\n";
  for (const auto& c : agg.curve) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n", c.t, c.count, c.pa, c.mrr, c.hits1, c.hits3,
                  c.hits10);
    out << buf;
  }
}

void write_curve_svg(std::ostream& out, const std::vector<std::pair<std::string, Aggregate>>& series) {
  constexpr int kPanelW = 360, kPanelH = 240, kPad = 40;
  constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::size_t max_t = 1;
  for (const auto& [_, agg] : series) max_t = std::max(max_t, agg.curve.size());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * kPanelW + 3 * kPad << "\" height=\""
      << kPanelH + 2 * kPad + 20 * series.size() << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int panel = 0; panel < 2; ++panel) {
    const int x0 = kPad + panel * (kPanelW + kPad);
    const int y0 = kPad;
    out << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << kPanelW << "\" height=\"" << kPanelH
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
    out << "<text x=\"" << x0 + kPanelW / 2 << "\" y=\"" << y0 - 8 << "\" text-anchor=\"middle\">"
        << (panel == 0 ? "Pairwise accuracy" : "MRR") << " vs t</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
      const auto& curve = series[s].second.curve;
      out << "<polyline fill=\"none\" stroke=\"" << kColors[s % std::size(kColors)] << "\" points=\"";
      for (const auto& c : curve) {
        const double v = panel == 0 ? c.pa : c.mrr;
        const double x = x0 + (max_t > 1 ? (static_cast<double>(c.t) - 1.0) / (max_t - 1) : 0.5) * kPanelW;
        const double y = y0 + (1.0 - std::clamp(v, 0.0, 1.0)) * kPanelH;
        out << x << ',' << y << ' ';
      }
      out << "\"/>\n";
    }
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const int y = kPanelH + 2 * kPad + 14 * static_cast<int>(s);
    out << "<text x=\"" << kPad << "\" y=\"" << y << "\" fill=\"" << kColors[s % std::size(kColors)] << "\">"
        << series[s].first << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace nqr
