#pragma once

#include <compare>
#include <cstdint>

namespace nqr {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using QueryId = std::uint64_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  auto operator<=>(const Triple&) const = default;
};

}  // namespace nqr
