#pragma once

#include <utility>
#include <vector>

#include "spanie/corpus.hpp"
#include "spanie/types.hpp"

namespace spanie {

enum class BeamKind { Coref, Relation };

// Top-capacity subset of span positions under a per-span score, re-sorted
// into canonical span order. Ties go to the canonically earlier span.
struct Beam {
  BeamKind kind = BeamKind::Coref;
  std::vector<int> members;  // positions into SpanSpace::spans
  int capacity = 0;
};

// All within-sentence candidate spans up to the width cap, in canonical
// order (start ascending, then end ascending).
struct SpanSpace {
  std::vector<Span> spans;
  int max_width = 0;

  // [first, last) span positions per sentence.
  std::vector<std::pair<int, int>> sentence_ranges;

  int size() const { return int(spans.size()); }
  // Position of (start, end), or -1 if not enumerated.
  int position_of(int start, int end) const;
};

// Enumerates every within-sentence span of width 1..max_width exactly once.
// Throws ConfigError if max_width < 1.
SpanSpace enumerate_spans(const Document& doc, int max_width);

// Keeps the max(1, floor(lambda_ratio * num_tokens)) highest-scored spans.
// scores must align with space.spans. Throws ConfigError when lambda_ratio
// is outside (0, 1].
Beam prune(const SpanSpace& space, const std::vector<double>& scores,
           double lambda_ratio, int num_tokens, BeamKind kind);

// All ordered same-sentence pairs (i, j), i != j, of beam members, in
// deterministic order. Requires a relation beam.
std::vector<std::pair<int, int>> pair_candidates(const SpanSpace& space,
                                                 const Beam& beam);

}  // namespace spanie
