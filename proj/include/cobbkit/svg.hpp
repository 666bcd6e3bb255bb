#pragma once

#include <string>

#include "cobbkit/cacm.hpp"
#include "cobbkit/landmarks.hpp"

namespace cobbkit {

// Self-contained SVG document: one polygon per vertebra, extended endplate
// lines through the extreme-tilt vertebrae of every window, boxes around
// inflection vertebrae (labelled 1-based), and the three angles annotated to
// one decimal. Deterministic output for identical inputs.
std::string render_svg(const CobbReport& report, const SpineLandmarks& sl);

}  // namespace cobbkit
