// Copyright 2026 The semrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "semrl/benchmark.hpp"
#include "semrl/config.hpp"
#include "semrl/error.hpp"
#include "semrl/format.hpp"
#include "semrl/fp_growth.hpp"
#include "semrl/hho.hpp"
#include "semrl/ingestion.hpp"
#include "semrl/neural_core.hpp"
#include "semrl/pipeline.hpp"
#include "semrl/rule_extraction.hpp"
#include "semrl/rule_model.hpp"
#include "semrl/semantic_model.hpp"
#include "semrl/synth.hpp"
#include "semrl/transactions.hpp"
