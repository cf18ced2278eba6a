#include "nsrl/report.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace nsrl {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

nlohmann::ordered_json stats_json(const SummaryStats& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"median", s.median}, {"count", s.count}};
}

nlohmann::ordered_json pr_json(long window, const PrecisionRecall& p) {
  return {{"window", window},           {"precision", p.precision}, {"recall", p.recall},
          {"true_positives", p.true_positives}, {"detected", p.detected}, {"truth", p.truth}};
}

std::string mean_sd(const SummaryStats& s) { return num(s.mean) + " +- " + num(s.sd); }

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string report_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "agent,run,seed,tau_star,reward,discounted_reward,regret,eval_reward,detections\n";
  for (const auto& r : report.records) {
    out << r.agent << ',' << r.run << ',' << r.seed << ',';
    if (auto t = r.tau_star()) out << *t;
    out << ',' << num(r.reward) << ',' << num(r.discounted_reward) << ',' << num(r.regret) << ','
        << num(r.eval_reward) << ',';
    for (std::size_t i = 0; i < r.detections.size(); ++i) out << (i ? ";" : "") << r.detections[i];
    out << '\n';
  }
  out << "\nagent,statistic,tau_star,reward,discounted_reward,regret,eval_reward\n";
  for (const auto& a : report.aggregates) {
    auto row = [&](const char* name, auto pick) {
      out << a.agent << ',' << name << ',';
      if (a.tau_star) out << num(pick(*a.tau_star));
      out << ',' << num(pick(a.reward)) << ',' << num(pick(a.discounted_reward)) << ',';
      if (a.regret) out << num(pick(*a.regret));
      out << ',';
      if (a.eval_reward) out << num(pick(*a.eval_reward));
      out << '\n';
    };
    row("mean", [](const SummaryStats& s) { return s.mean; });
    row("sd", [](const SummaryStats& s) { return s.sd; });
    row("median", [](const SummaryStats& s) { return s.median; });
  }
  return out.str();
}

std::string report_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["name"] = report.name;
  j["seed"] = report.seed;
  j["runs"] = report.runs;
  j["precision_windows"] = report.precision_windows;
  auto& records = j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : report.records) {
    nlohmann::ordered_json rec{{"agent", r.agent},           {"run", r.run},
                               {"seed", r.seed},             {"detections", r.detections},
                               {"reward", r.reward},         {"discounted_reward", r.discounted_reward},
                               {"q_tables", r.q_tables}};
    rec["tau_star"] = r.tau_star() ? nlohmann::ordered_json(*r.tau_star()) : nlohmann::ordered_json();
    rec["regret"] = r.regret ? nlohmann::ordered_json(*r.regret) : nlohmann::ordered_json();
    rec["eval_reward"] = r.eval_reward ? nlohmann::ordered_json(*r.eval_reward) : nlohmann::ordered_json();
    auto& pr = rec["precision"] = nlohmann::ordered_json::array();
    for (std::size_t w = 0; w < r.precision.size(); ++w) pr.push_back(pr_json(report.precision_windows[w], r.precision[w]));
    records.push_back(std::move(rec));
  }
  auto& aggs = j["aggregates"] = nlohmann::ordered_json::array();
  for (const auto& a : report.aggregates) {
    nlohmann::ordered_json agg{{"agent", a.agent},
                               {"reward", stats_json(a.reward)},
                               {"discounted_reward", stats_json(a.discounted_reward)},
                               {"runs_with_detection", a.runs_with_detection}};
    agg["tau_star"] = a.tau_star ? stats_json(*a.tau_star) : nlohmann::ordered_json();
    agg["regret"] = a.regret ? stats_json(*a.regret) : nlohmann::ordered_json();
    agg["eval_reward"] = a.eval_reward ? stats_json(*a.eval_reward) : nlohmann::ordered_json();
    auto& pr = agg["precision"] = nlohmann::ordered_json::array();
    for (std::size_t w = 0; w < a.precision.size(); ++w) pr.push_back(pr_json(report.precision_windows[w], a.precision[w]));
    aggs.push_back(std::move(agg));
  }
  return j.dump(2) + "\n";
}

std::string format_table(const MetricsReport& report, TableLayout layout) {
  std::ostringstream out;
  constexpr std::size_t kw = 20;
  out << report.name << " (" << report.runs << " runs, seed " << report.seed << ")\n";
  switch (layout) {
    case TableLayout::detection_delay:
      out << pad("method", kw) << pad("mean tau*", kw) << pad("sd tau*", kw) << pad("median tau*", kw)
          << "runs detected\n";
      for (const auto& a : report.aggregates) {
        out << pad(a.agent, kw);
        if (a.tau_star) {
          out << pad(num(a.tau_star->mean), kw) << pad(num(a.tau_star->sd), kw) << pad(num(a.tau_star->median), kw);
        } else {
          out << pad("-", kw) << pad("-", kw) << pad("-", kw);
        }
        out << a.runs_with_detection << "\n";
      }
      break;
    case TableLayout::precision_recall:
      out << pad("method", kw) << pad("W", 8) << pad("precision", kw) << "recall\n";
      for (const auto& a : report.aggregates) {
        for (std::size_t w = 0; w < a.precision.size(); ++w) {
          out << pad(a.agent, kw) << pad(std::to_string(report.precision_windows[w]), 8)
              << pad(num(a.precision[w].precision), kw) << num(a.precision[w].recall) << "\n";
        }
      }
      break;
    case TableLayout::reward:
      out << pad("method", kw) << pad("reward (mean +- sd)", 2 * kw) << "median\n";
      for (const auto& a : report.aggregates) {
        out << pad(a.agent, kw) << pad(mean_sd(a.reward), 2 * kw) << num(a.reward.median) << "\n";
      }
      break;
    case TableLayout::regret:
      out << pad("method", kw) << pad("regret (mean +- sd)", 2 * kw) << "median\n";
      for (const auto& a : report.aggregates) {
        out << pad(a.agent, kw);
        if (a.regret) {
          out << pad(mean_sd(*a.regret), 2 * kw) << num(a.regret->median);
        } else {
          out << "-";
        }
        out << "\n";
      }
      break;
    case TableLayout::cost:
      out << pad("method", kw) << pad("cost (mean +- sd)", 2 * kw) << "median\n";
      for (const auto& a : report.aggregates) {
        const SummaryStats& s = a.eval_reward ? *a.eval_reward : a.reward;
        SummaryStats cost{-s.mean, s.sd, -s.median, s.count};
        out << pad(a.agent, kw) << pad(mean_sd(cost), 2 * kw) << num(cost.median) << "\n";
      }
      break;
  }
  return out.str();
}

}  // namespace nsrl
