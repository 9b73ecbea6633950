#pragma once

#include "mfatt/kernels/kernels.hpp"

namespace mfatt::kernels {

#ifdef MFATT_HAVE_AVX2
const Backend& avx2_backend();
#endif

} // namespace mfatt::kernels
