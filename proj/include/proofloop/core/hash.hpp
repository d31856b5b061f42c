#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace proofloop {

std::string sha256_hex(std::string_view data);

// Deterministic per-unit seed derived from a run seed and a label.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index);

}  // namespace proofloop
