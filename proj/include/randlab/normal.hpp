#pragma once

namespace randlab {

// Inverse standard normal CDF, Wichura's algorithm AS 241 (PPND16).
// Absolute error below 1e-9 over (0, 1); pinned by unit tests against
// published quantiles. Used both for confidence-interval quantiles and as
// the uniform-to-gaussian transform of the sampler.
double normal_quantile(double p);

}  // namespace randlab
