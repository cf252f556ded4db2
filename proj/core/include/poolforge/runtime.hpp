#pragma once

namespace poolforge {

// Verification mode: 64-bit, strictly sequential, bit-reproducible execution.
// Initialised from POOLFORGE_VERIFY=1 in the environment on first use.
bool verify_mode();
void set_verify_mode(bool enabled);

// Worker threads available to embarrassingly parallel stages (evaluation).
// Always 1 in verification mode.
unsigned worker_threads();

}  // namespace poolforge
