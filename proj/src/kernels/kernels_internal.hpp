#pragma once

#include "fsolink/kernels.hpp"

namespace fsolink::kernels {

// Fixed combination tree shared by every variant; matches the pairwise
// reduction of two 4-wide accumulators. Internal linkage keeps the copies
// compiled for wider ISAs out of the scalar code.
static inline double combine_lanes(const double* p) {
    const double s0 = p[0] + p[4];
    const double s1 = p[1] + p[5];
    const double s2 = p[2] + p[6];
    const double s3 = p[3] + p[7];
    return (s0 + s2) + (s1 + s3);
}

}  // namespace fsolink::kernels
