#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "modcap/error.hpp"
#include "modcap/space.hpp"

namespace modcap::detail {

/// Split of a family into members that carry a real constraint and the
/// degenerate ones handled before any optimisation.
struct Prepared {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> vanishing;
  bool has_zero = false;
};

inline Prepared prepare_members(std::span<const double> ground,
                                std::span<const DiscreteMeasure> measures) {
  Prepared out;
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const DiscreteMeasure& mu = measures[i];
    if (mu.is_zero()) {
      out.has_zero = true;
      continue;
    }
    if (mu.max_index() >= ground.size()) {
      fail(ErrorCode::invalid_input, "member " + std::to_string(i) + " charges index " +
                                         std::to_string(mu.max_index()) +
                                         " outside the ground set");
    }
    bool vanishing = false;
    for (const Atom& a : mu.atoms()) vanishing = vanishing || ground[a.index] == 0.0;
    (vanishing ? out.vanishing : out.kept).push_back(i);
  }
  return out;
}

}  // namespace modcap::detail
