#include "probirm/events.hpp"

#include "probirm/error.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>

namespace probirm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename F>
void split(std::string_view text, char sep, F&& f) {
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      f(text.substr(start));
      return;
    }
    f(text.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

Alphabet::Alphabet(const std::vector<std::string>& names) {
  for (const auto& n : names) {
    if (find(n)) throw ParseError("duplicate proposition name '" + n + "'");
    add(n);
  }
}

PropId Alphabet::add(std::string_view name) {
  if (auto existing = find(name)) return *existing;
  if (name.empty()) throw ParseError("empty proposition name");
  if (names_.size() >= kMaxPropositions) {
    throw ParseError("alphabet exceeds " + std::to_string(kMaxPropositions) + " propositions");
  }
  auto id = static_cast<PropId>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), id);
  return id;
}

std::optional<PropId> Alphabet::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

PropId Alphabet::id(std::string_view name) const {
  if (auto p = find(name)) return *p;
  throw ParseError("unknown proposition '" + std::string(name) + "'");
}

Label Alphabet::full() const {
  return Label(static_cast<std::uint16_t>((1u << names_.size()) - 1u));
}

ProbLabel::ProbLabel(Eigen::VectorXd p) : probs(std::move(p)) {
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0)) {
      throw ContractViolation("probability label entry outside [0,1]");
    }
  }
}

ProbLabel ProbLabel::certain(Label label, std::size_t alphabet_size) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(alphabet_size));
  label.for_each([&](PropId id) { p[id] = 1.0; });
  return ProbLabel(std::move(p));
}

std::optional<Label> ProbLabel::crisp() const {
  Label out;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] == 1.0) {
      out.insert(static_cast<PropId>(i));
    } else if (probs[i] != 0.0) {
      return std::nullopt;
    }
  }
  return out;
}

char outcome_code(TraceOutcome o) {
  switch (o) {
    case TraceOutcome::Goal: return 'G';
    case TraceOutcome::DeadEnd: return 'D';
    case TraceOutcome::Incomplete: return 'I';
  }
  return '?';
}

TraceOutcome parse_outcome(char code) {
  switch (code) {
    case 'G': return TraceOutcome::Goal;
    case 'D': return TraceOutcome::DeadEnd;
    case 'I': return TraceOutcome::Incomplete;
    default: throw ParseError(std::string("unknown outcome code '") + code + "'");
  }
}

const char* outcome_name(TraceOutcome o) {
  switch (o) {
    case TraceOutcome::Goal: return "goal";
    case TraceOutcome::DeadEnd: return "dead-end";
    case TraceOutcome::Incomplete: return "incomplete";
  }
  return "?";
}

SymbolicTrace compress(const SymbolicTrace& trace) {
  SymbolicTrace out;
  out.reserve(trace.size());
  for (Label l : trace) {
    if (out.empty() || out.back() != l) out.push_back(l);
  }
  return out;
}

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("invalid number '" + std::string(text) + "'");
  }
  return v;
}

std::string format_label(Label label, const Alphabet& alphabet) {
  if (label.empty()) return "-";
  std::string out;
  label.for_each([&](PropId p) {
    if (!out.empty()) out += ',';
    out += alphabet.name(p);
  });
  return out;
}

std::string format_prob_label(const ProbLabel& pl, const Alphabet& alphabet) {
  std::string out;
  for (std::size_t i = 0; i < pl.size(); ++i) {
    if (pl.probs[static_cast<Eigen::Index>(i)] == 0.0) continue;
    if (!out.empty()) out += ',';
    out += alphabet.name(static_cast<PropId>(i));
    out += ':';
    out += format_double(pl.probs[static_cast<Eigen::Index>(i)]);
  }
  return out.empty() ? "-" : out;
}

std::string format_symbolic_steps(const SymbolicTrace& trace, const Alphabet& alphabet) {
  std::string out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i) out += '|';
    out += format_label(trace[i], alphabet);
  }
  return out;
}

std::string format_noisy_steps(const NoisyTrace& trace, const Alphabet& alphabet) {
  std::string out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i) out += '|';
    out += format_prob_label(trace[i], alphabet);
  }
  return out;
}

std::string format_symbolic_line(TraceOutcome outcome, const SymbolicTrace& trace,
                                 const Alphabet& alphabet) {
  return std::string(1, outcome_code(outcome)) + ';' + format_symbolic_steps(trace, alphabet);
}

std::string format_noisy_line(TraceOutcome outcome, const NoisyTrace& trace,
                              const Alphabet& alphabet) {
  return std::string(1, outcome_code(outcome)) + ';' + format_noisy_steps(trace, alphabet);
}

SymbolicTrace TraceRecord::symbolic() const {
  SymbolicTrace out;
  out.reserve(steps.size());
  for (const auto& pl : steps) {
    Label l;
    for (std::size_t i = 0; i < pl.size(); ++i) {
      if (pl.probs[static_cast<Eigen::Index>(i)] > 0.5) l.insert(static_cast<PropId>(i));
    }
    out.push_back(l);
  }
  return out;
}

void resize_to_alphabet(NoisyTrace& trace, std::size_t alphabet_size) {
  for (auto& pl : trace) {
    auto old = pl.probs.size();
    if (static_cast<std::size_t>(old) < alphabet_size) {
      pl.probs.conservativeResize(static_cast<Eigen::Index>(alphabet_size));
      pl.probs.tail(static_cast<Eigen::Index>(alphabet_size) - old).setZero();
    }
  }
}

NoisyTrace parse_steps(std::string_view steps, Alphabet& alphabet) {
  steps = trim(steps);
  if (steps.empty()) return {};
  std::vector<std::vector<std::pair<PropId, double>>> raw;
  split(steps, '|', [&](std::string_view step) {
    step = trim(step);
    auto& entries = raw.emplace_back();
    if (step == "-") return;
    if (step.empty()) throw ParseError("empty step (use '-' for the empty label)");
    split(step, ',', [&](std::string_view item) {
      item = trim(item);
      auto colon = item.find(':');
      std::string_view name = trim(item.substr(0, colon));
      double prob = 1.0;
      if (colon != std::string_view::npos) prob = parse_double(item.substr(colon + 1));
      if (!(prob >= 0.0 && prob <= 1.0)) {
        throw ParseError("probability outside [0,1] in step '" + std::string(step) + "'");
      }
      entries.emplace_back(alphabet.add(name), prob);
    });
  });
  NoisyTrace out;
  out.reserve(raw.size());
  for (const auto& entries : raw) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(alphabet.size()));
    for (auto [id, prob] : entries) p[id] = prob;
    out.emplace_back(std::move(p));
  }
  return out;
}

TraceRecord parse_trace_line(std::string_view line, Alphabet& alphabet) {
  line = trim(line);
  auto sep = line.find(';');
  if (sep == std::string_view::npos || sep != 1) {
    throw ParseError("trace line must start with 'G;', 'D;' or 'I;': '" + std::string(line) + "'");
  }
  TraceRecord rec;
  rec.outcome = parse_outcome(line[0]);
  rec.steps = parse_steps(line.substr(2), alphabet);
  return rec;
}

std::vector<TraceRecord> read_traces(std::istream& in, Alphabet& alphabet) {
  std::vector<TraceRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.push_back(parse_trace_line(t, alphabet));
  }
  for (auto& rec : out) resize_to_alphabet(rec.steps, alphabet.size());
  return out;
}

}  // namespace probirm
