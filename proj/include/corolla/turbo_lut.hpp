#pragma once

#include <array>

namespace corolla {

// Published 256-entry turbo colormap, sRGB triplets in [0,1].
extern const std::array<std::array<double, 3>, 256> kTurboLut;

}  // namespace corolla
