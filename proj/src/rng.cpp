#include "isac/rng.hpp"

namespace isac {

std::string_view to_string(StreamPurpose purpose) {
  switch (purpose) {
    case StreamPurpose::payload: return "payload";
    case StreamPurpose::noise: return "noise";
    case StreamPurpose::geometry_jitter: return "geometry-jitter";
  }
  return "unknown";
}

RngStream derive_rng_stream(std::uint64_t master_seed, std::uint64_t trial_index,
                            StreamPurpose purpose, std::uint32_t substream) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(master_seed & 0xffffffffu),
      static_cast<std::uint32_t>(master_seed >> 32),
      static_cast<std::uint32_t>(trial_index & 0xffffffffu),
      static_cast<std::uint32_t>(trial_index >> 32),
      static_cast<std::uint32_t>(purpose),
      substream,
  };
  return RngStream(seq);
}

}  // namespace isac
