#include "spanie/spanspace.hpp"

#include <algorithm>
#include <cmath>

namespace spanie {

int SpanSpace::position_of(int start, int end) const {
  Span probe{start, end, 0};
  auto it = std::lower_bound(spans.begin(), spans.end(), probe,
                             [](const Span& a, const Span& b) {
                               return std::pair(a.start, a.end) <
                                      std::pair(b.start, b.end);
                             });
  if (it == spans.end() || it->start != start || it->end != end) return -1;
  return int(it - spans.begin());
}

SpanSpace enumerate_spans(const Document& doc, int max_width) {
  if (max_width < 1) {
    throw ConfigError("max span width must be >= 1, got " +
                      std::to_string(max_width));
  }
  SpanSpace space;
  space.max_width = max_width;

  int offset = 0;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const int len = int(doc.sentences[s].size());
    const int first = space.size();
    for (int start = 0; start < len; ++start) {
      int max_end = std::min(len - 1, start + max_width - 1);
      for (int end = start; end <= max_end; ++end) {
        space.spans.push_back(Span{offset + start, offset + end, int(s)});
      }
    }
    space.sentence_ranges.emplace_back(first, space.size());
    offset += len;
  }
  return space;
}

Beam prune(const SpanSpace& space, const std::vector<double>& scores,
           double lambda_ratio, int num_tokens, BeamKind kind) {
  if (!(lambda_ratio > 0.0 && lambda_ratio <= 1.0)) {
    throw ConfigError("beam ratio must lie in (0, 1], got " +
                      std::to_string(lambda_ratio));
  }
  if (int(scores.size()) != space.size()) {
    throw ValidationError("beam scores not aligned with span space");
  }

  Beam beam;
  beam.kind = kind;
  beam.capacity = std::max(1, int(std::floor(lambda_ratio * num_tokens)));

  std::vector<int> order(space.size());
  for (int i = 0; i < space.size(); ++i) order[i] = i;
  // Ties break toward the canonically earlier span. stable_sort stays
  // in bounds even when scores hold NaN (a diverging model must reach
  // the trainer's finiteness check, not crash here).
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  int keep = std::min<int>(beam.capacity, space.size());
  beam.members.assign(order.begin(), order.begin() + keep);
  std::sort(beam.members.begin(), beam.members.end());
  return beam;
}

std::vector<std::pair<int, int>> pair_candidates(const SpanSpace& space,
                                                 const Beam& beam) {
  if (beam.kind != BeamKind::Relation) {
    throw ValidationError("pair_candidates requires a relation beam");
  }
  std::vector<std::pair<int, int>> pairs;
  for (int i : beam.members) {
    for (int j : beam.members) {
      if (i == j) continue;
      if (space.spans[i].sentence != space.spans[j].sentence) continue;
      pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

}  // namespace spanie
