#pragma once

namespace polegrad {

// Buffer element type. The default build is 64-bit; configure with
// -DPOLEGRAD_SINGLE_PRECISION=ON for a 32-bit variant.
#ifdef POLEGRAD_SINGLE_PRECISION
using real = float;
#else
using real = double;
#endif

}  // namespace polegrad
