#pragma once

#include <memory>

#include "nqr/dataset.hpp"
#include "nqr/synth.hpp"

namespace nqr::testing {

// Small synthetic benchmark with preference sets attached. Cheap enough for
// unit tests that train or run the protocol.
struct TinyWorld {
  SynthBenchmark synth;
  Dataset dataset;
  std::shared_ptr<const EmbeddingTable> qa;
};

TinyWorld tiny_world(std::uint64_t seed = 1, std::size_t num_entities = 200);

}  // namespace nqr::testing
