/*
 * Copyright 2026 The cdiag Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Umbrella header.

#pragma once

#include "cdiag/brute_force.hpp"
#include "cdiag/dataset.hpp"
#include "cdiag/diagnosis.hpp"
#include "cdiag/error.hpp"
#include "cdiag/graph.hpp"
#include "cdiag/ingest.hpp"
#include "cdiag/rebalance.hpp"
#include "cdiag/report.hpp"
#include "cdiag/synth.hpp"
