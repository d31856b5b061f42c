#pragma once

#include "proofloop/cli/settings.hpp"
#include "proofloop/core/loop.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace proofloop::cli {

inline constexpr int kExitProved = 0;
inline constexpr int kExitExhausted = 1;
inline constexpr int kExitError = 2;
inline constexpr int kExitUsage = 64;

// Backends built from settings, plus the bundle that points at them.
struct ServiceSet {
    std::vector<std::shared_ptr<void>> owned;
    ServiceBundle bundle;
};

// Secrets come only from the environment variables named in the settings.
// Throws ConfigError for incomplete settings.
ServiceSet build_services(const Settings& settings, const ProverConfig& config);

// Fails with MissingPrice when prices are configured but miss a model the
// run will bill.
void check_prices(const PriceTable& prices, const ProverConfig& config, bool reviewer_llm);

// Entry point; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace proofloop::cli
