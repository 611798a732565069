// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "qrsnap/eval.hpp"

namespace qrsnap {

/// SVG 1.1 document with one accuracy (%) vs level chart per distortion
/// family and one polyline per model. Clean rows are drawn as dashed
/// reference lines.
std::string render_sweep_svg(const std::vector<SweepRow>& rows);

}  // namespace qrsnap
