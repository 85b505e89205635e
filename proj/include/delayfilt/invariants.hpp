#pragma once

namespace delayfilt {

/// Counters of invariant violations collected while filters and channels run.
/// A healthy campaign reports all zeros.
struct InvariantCounts {
  long weight_normalization = 0;  // |sum w - 1| >= 1e-10 after a measurement step
  long group_closure = 0;         // realized delay groups do not add up to N_s
  long exclusion = 0;             // a particle re-consumed an already explained measurement
  long channel_repetition = 0;    // a source measurement was delivered twice
  long covariance = 0;            // asymmetric or non-factorable Gaussian covariance
  long mixture_bound = 0;         // mixture weight below its largest weighted component

  long total() const {
    return weight_normalization + group_closure + exclusion + channel_repetition + covariance + mixture_bound;
  }
  InvariantCounts& operator+=(const InvariantCounts& o) {
    weight_normalization += o.weight_normalization;
    group_closure += o.group_closure;
    exclusion += o.exclusion;
    channel_repetition += o.channel_repetition;
    covariance += o.covariance;
    mixture_bound += o.mixture_bound;
    return *this;
  }
  bool operator==(const InvariantCounts&) const = default;
};

}  // namespace delayfilt
