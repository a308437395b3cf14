#include "tabgan/optimizer.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "tabgan/errors.hpp"
#include "tabgan/text_util.hpp"

namespace tabgan {

Trajectory rescore(Trajectory trajectory, const DiscriminatorModel& model,
                   const Table& real_test, const FeatureEncoder& encoder) {
  for (auto& candidate : trajectory.candidates) {
    candidate.adjusted_score = score_theta(model, candidate.synthetic_cache, real_test, encoder);
  }
  return trajectory;
}

namespace {

// Later position in the chronological list means newer; ties in score are
// resolved toward keeping/deprioritizing accordingly.
bool better_for_keeping(const Trajectory& t, size_t a, size_t b) {
  const auto& ca = t.candidates[a];
  const auto& cb = t.candidates[b];
  if (ca.adjusted_score != cb.adjusted_score) return ca.adjusted_score < cb.adjusted_score;
  if (ca.created_iteration != cb.created_iteration) {
    return ca.created_iteration > cb.created_iteration;
  }
  return a > b;  // newer in list order
}

}  // namespace

Trajectory prune(Trajectory trajectory) {
  if (trajectory.k <= 0) throw InvalidArgument("trajectory capacity must be positive");
  const size_t n = trajectory.candidates.size();
  if (n <= static_cast<size_t>(trajectory.k)) return trajectory;

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return better_for_keeping(trajectory, a, b); });
  order.resize(trajectory.k);
  std::sort(order.begin(), order.end());  // back to chronological order

  Trajectory out;
  out.k = trajectory.k;
  out.candidates.reserve(order.size());
  for (size_t idx : order) out.candidates.push_back(std::move(trajectory.candidates[idx]));
  return out;
}

ChatRequest build_optimizer_prompt(const Trajectory& trajectory,
                                   const std::vector<std::string>& columns,
                                   const std::optional<double>& target_hint) {
  if (trajectory.candidates.empty()) {
    throw InvalidArgument("optimizer prompt needs at least one candidate");
  }

  std::vector<std::string> quoted;
  quoted.reserve(columns.size());
  for (const auto& name : columns) quoted.push_back("'" + name + "'");

  ChatRequest request;
  request.temperature = 1.0;
  request.system =
      "Your task is to optimize prompts for generating high-quality synthetic data. Aim to "
      "lower the scores associated with each casual structure and prompt, where a lower score "
      "reflects better quality. Here are the steps:\n"
      "1. Examine the existing prompt-score pairs.\n"
      "2. Adjust the causal graph to better represent the underlying relationships by adding or "
      "removing connections, and consider incorporating new features from the list [" +
      join(quoted, ", ") +
      "].\n"
      "3. Modify the prompt guidance to align with the revised causal graph, ensuring it aids "
      "in reducing the score.";

  // Most desirable (lowest score) last; equal scores put the newer one later.
  std::vector<size_t> order(trajectory.candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return trajectory.candidates[a].adjusted_score > trajectory.candidates[b].adjusted_score;
  });

  double best = trajectory.candidates[order.back()].adjusted_score;
  double aim = target_hint ? *target_hint * 100.0 : std::max(50.0, best * 100.0 - 5.0);

  std::ostringstream user;
  for (size_t idx : order) {
    const auto& candidate = trajectory.candidates[idx];
    user << "<pair>\n"
         << "Here is the causal graph of the data, where a tuple (A, B) indicates A causes B:\n"
         << to_pairs_text(candidate.theta.causal) << "\n"
         << candidate.theta.task << "\n"
         << "Set your aim to achieve a score below " << format_fixed2(aim) << "%\n"
         << "Score: " << format_fixed2(candidate.adjusted_score * 100.0) << "%\n"
         << "</pair>\n\n";
  }
  user << "Your updated prompt should explicitly include any modifications to the causal graph "
          "and guidance. The aim is to create a prompt that leads to the lowest possible "
          "score.\n\nThe updated prompt:";
  request.user = user.str();
  return request;
}

ThetaUpdate parse_theta_update(const std::string& text, const Schema& schema,
                               const DataGenProcess& previous) {
  ThetaUpdate out;
  out.theta = previous;

  size_t prose_from = std::string::npos;

  if (auto block = extract_tag_block(text, "causal structure")) {
    try {
      out.theta.causal = parse_pairs_text(*block, schema);
      out.structure_updated = true;
      size_t close = to_lower(text).find("</causal structure>");
      if (close != std::string::npos) prose_from = close + std::string("</causal structure>").size();
    } catch (const ParseError&) {
    }
  }
  if (!out.structure_updated) {
    try {
      out.theta.causal = parse_pairs_text(text, schema);
      out.structure_updated = true;
      size_t bracket = text.rfind(']');
      if (bracket != std::string::npos) prose_from = bracket + 1;
    } catch (const ParseError&) {
    }
  }

  if (auto block = extract_tag_block(text, "task")) {
    std::string task = trim(*block);
    if (!task.empty()) {
      out.theta.task = task;
      out.task_updated = true;
    }
  }
  if (!out.task_updated && prose_from != std::string::npos && prose_from < text.size()) {
    std::string trailing = trim(text.substr(prose_from));
    if (!trailing.empty()) {
      out.theta.task = trailing;
      out.task_updated = true;
    }
  }

  if (!out.structure_updated && !out.task_updated) {
    out.parse_failed = true;
    out.theta = previous;
  }
  return out;
}

}  // namespace tabgan
