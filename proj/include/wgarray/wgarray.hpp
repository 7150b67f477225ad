// Copyright 2026 The wgarray Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "wgarray/analysis.hpp"
#include "wgarray/calibration.hpp"
#include "wgarray/compiler.hpp"
#include "wgarray/device_model.hpp"
#include "wgarray/errors.hpp"
#include "wgarray/evolution.hpp"
#include "wgarray/io.hpp"
#include "wgarray/photon_stats.hpp"
#include "wgarray/subcircuits.hpp"

namespace wgarray {
inline constexpr const char* kVersion = "0.1.0";
}
