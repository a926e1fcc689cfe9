// Copyright 2026 The claimscope Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include "claimscope/attribution.hpp"
#include "claimscope/calendar.hpp"
#include "claimscope/classifier.hpp"
#include "claimscope/corpus.hpp"
#include "claimscope/csv.hpp"
#include "claimscope/evalmetrics.hpp"
#include "claimscope/lexstats.hpp"
#include "claimscope/parallel.hpp"
#include "claimscope/remote.hpp"
#include "claimscope/taxonomy.hpp"
#include "claimscope/textproc.hpp"
#include "claimscope/trends.hpp"
