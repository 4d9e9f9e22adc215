#include "manta/diagnostics/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace manta::diagnostics {

using sim::kPwmMax;
using sim::kPwmMin;
using sim::kPwmNeutral;
using sim::ThrusterHealth;

Result<StatusWindow> StatusWindow::from_samples(const std::vector<sim::VehicleStatus>& samples) {
  if (samples.size() != kWindowLength) {
    return make_error("bad_window", "window requires exactly 10 samples");
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].t <= samples[i - 1].t) {
      return make_error("bad_window", "window timestamps must strictly increase");
    }
  }
  StatusWindow w;
  std::copy(samples.begin(), samples.end(), w.samples.begin());
  return w;
}

sim::PwmArray expected_pwm(const sim::Wrench& commanded_wrench,
                           const sim::AllocationModel& allocation) {
  return sim::pwm_for_wrench(commanded_wrench, allocation);
}

FaultLabel classify(const StatusWindow& window, const Thresholds& th) {
  FaultLabel labels{};
  for (std::size_t i = 0; i < kNumThrusters; ++i) {
    std::size_t flat = 0;        // obs stuck at neutral
    std::size_t active = 0;      // cmd meaningfully away from neutral
    std::size_t deviating = 0;   // obs far from cmd
    bool out_of_bounds = false;
    for (const auto& s : window.samples) {
      const double cmd = s.thrusters[i].pwm_cmd;
      const double obs = s.thrusters[i].pwm_obs;
      if (std::abs(obs - kPwmNeutral) <= th.dead_epsilon_us) ++flat;
      if (std::abs(cmd - kPwmNeutral) >= th.activity_gate_us) ++active;
      if (std::abs(obs - cmd) > th.deviation_us) ++deviating;
      if (obs < kPwmMin || obs > kPwmMax) out_of_bounds = true;
    }
    const bool dead = flat == kWindowLength && active >= th.activity_min_samples;
    const bool out_of_range = out_of_bounds || deviating >= th.deviation_min_samples;
    if (dead) {
      labels[i] = ThrusterHealth::dead;  // precedence over out_of_range
    } else if (out_of_range) {
      labels[i] = ThrusterHealth::out_of_range;
    } else {
      labels[i] = ThrusterHealth::ok;
    }
  }
  return labels;
}

namespace {

std::string id_list(const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(ids[i]);
  }
  return out;
}

}  // namespace

Diagnosis diagnose(const StatusWindow& window, const Thresholds& thresholds) {
  Diagnosis d;
  d.labels = classify(window, thresholds);

  std::vector<int> dead_ids, oor_ids;
  int nominal = 0;
  for (std::size_t i = 0; i < kNumThrusters; ++i) {
    switch (d.labels[i]) {
      case ThrusterHealth::ok: ++nominal; break;
      case ThrusterHealth::dead: dead_ids.push_back(static_cast<int>(i)); break;
      case ThrusterHealth::out_of_range: oor_ids.push_back(static_cast<int>(i)); break;
    }
  }

  if (dead_ids.empty() && oor_ids.empty()) {
    d.issue = "ISSUE: none";
    d.action = "ACTION: continue mission";
  } else {
    std::vector<std::string> segments;
    if (!dead_ids.empty()) segments.push_back("thrusters " + id_list(dead_ids) + " dead");
    if (!oor_ids.empty()) segments.push_back("thrusters " + id_list(oor_ids) + " out_of_range");
    d.issue = "ISSUE: " + segments[0];
    for (std::size_t i = 1; i < segments.size(); ++i) d.issue += "; " + segments[i];
    // dead dominates the suggested action when both kinds are present.
    d.action = !dead_ids.empty()
                   ? "ACTION: reduce DOF demands; replan with degraded allocation"
                   : "ACTION: clamp commands; inspect thruster";
  }
  d.status = "STATUS: " + std::to_string(nominal) + "/8 thrusters nominal";
  return d;
}

bool parses_as_report(const std::vector<std::string>& lines) {
  if (lines.size() != 3) return false;
  if (!lines[0].starts_with("ISSUE: ")) return false;
  if (!lines[1].starts_with("STATUS: ")) return false;
  if (!lines[2].starts_with("ACTION: ")) return false;
  // STATUS body must be "k/8 thrusters nominal" with k in 0..8.
  const std::string body = lines[1].substr(8);
  const auto slash = body.find("/8 thrusters nominal");
  if (slash == std::string::npos) return false;
  const std::string k = body.substr(0, slash);
  if (k.empty() || k.size() > 1 || k[0] < '0' || k[0] > '8') return false;
  // ISSUE body is "none" or "; "-joined segments "thrusters <ids> <kind>".
  const std::string issue = lines[0].substr(7);
  if (issue == "none") return true;
  std::size_t pos = 0;
  while (pos < issue.size()) {
    auto end = issue.find("; ", pos);
    const std::string seg = issue.substr(pos, end == std::string::npos ? end : end - pos);
    if (!seg.starts_with("thrusters ")) return false;
    const auto last_space = seg.rfind(' ');
    const std::string kind = seg.substr(last_space + 1);
    if (kind != "dead" && kind != "out_of_range") return false;
    const std::string ids = seg.substr(10, last_space - 10);
    int prev = -1;
    for (const auto& tok : [&] {
           std::vector<std::string> parts;
           std::string cur;
           for (char c : ids) {
             if (c == ',') {
               parts.push_back(cur);
               cur.clear();
             } else {
               cur.push_back(c);
             }
           }
           parts.push_back(cur);
           return parts;
         }()) {
      if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) return false;
      const int v = std::stoi(tok);
      if (v < 0 || v > 7 || v <= prev) return false;  // ascending ids
      prev = v;
    }
    if (end == std::string::npos) break;
    pos = end + 2;
  }
  return true;
}

Result<std::optional<Diagnosis>> Monitor::push(const sim::VehicleStatus& sample) {
  if (!window_.empty() && sample.t <= window_.back().t) {
    return make_error("stream_fault", "out-of-order or duplicate status timestamp");
  }
  window_.push_back(sample);
  while (window_.size() > kWindowLength) window_.pop_front();
  if (window_.size() < kWindowLength) return std::optional<Diagnosis>{};
  StatusWindow w;
  std::copy(window_.begin(), window_.end(), w.samples.begin());
  return std::optional<Diagnosis>{diagnose(w, thresholds_)};
}

}  // namespace manta::diagnostics
