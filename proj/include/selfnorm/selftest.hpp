#pragma once

#include <ostream>

namespace selfnorm {

/// Runs the built-in oracle suite (analytic identities, metric unit values,
/// determinism). Prints one line per check; returns the number of failures.
int run_selftest(std::ostream& os);

}  // namespace selfnorm
