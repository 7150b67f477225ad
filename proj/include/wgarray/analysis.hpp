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

#include <string>

#include "wgarray/errors.hpp"

namespace wgarray {

inline constexpr double kDefaultMziLossDb = 0.2;
inline constexpr double kDefaultPropagationLossDbPerCm = 0.1;

struct ClementsLoss {
    int mzi_count;
    int depth;
    double total_db;
};

/// Universal N-mode Clements mesh: N(N-1)/2 MZIs, depth N, and a photon
/// crosses one MZI per layer.
inline ClementsLoss clements_loss(int n_modes, double per_mzi_db = kDefaultMziLossDb) {
    if (n_modes < 2) throw ValidationError("a mesh needs at least 2 modes");
    if (per_mzi_db < 0) throw ValidationError("per-MZI loss must be non-negative");
    return {n_modes * (n_modes - 1) / 2, n_modes, n_modes * per_mzi_db};
}

/// Propagation-only loss of a continuously coupled array.
inline double wa_loss(double length_cm, double db_per_cm = kDefaultPropagationLossDbPerCm) {
    if (length_cm < 0) throw ValidationError("length must be non-negative");
    if (db_per_cm < 0) throw ValidationError("loss rate must be non-negative");
    return length_cm * db_per_cm;
}

struct LossReport {
    int n_modes = 0;
    int mzi_count = 0;
    int mzi_depth = 0;
    double per_mzi_db = kDefaultMziLossDb;
    double clements_loss_db = 0.0;
    double wa_length_cm = 0.0;
    double db_per_cm = kDefaultPropagationLossDbPerCm;
    double wa_loss_db = 0.0;
    std::string note =
        "WA scheme: same depth N as Clements with half the bending sections per photon; bend loss not quantified";
};

inline LossReport loss_report(int n_modes, double wa_length_cm, double per_mzi_db = kDefaultMziLossDb,
                              double db_per_cm = kDefaultPropagationLossDbPerCm) {
    const auto mesh = clements_loss(n_modes, per_mzi_db);
    LossReport r;
    r.n_modes = n_modes;
    r.mzi_count = mesh.mzi_count;
    r.mzi_depth = mesh.depth;
    r.per_mzi_db = per_mzi_db;
    r.clements_loss_db = mesh.total_db;
    r.wa_length_cm = wa_length_cm;
    r.db_per_cm = db_per_cm;
    r.wa_loss_db = wa_loss(wa_length_cm, db_per_cm);
    return r;
}

}  // namespace wgarray
