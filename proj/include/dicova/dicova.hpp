// Copyright 2026 The dicova-bench Authors. All Rights Reserved.
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

#include "dicova/audio.hpp"
#include "dicova/common.hpp"
#include "dicova/corpus.hpp"
#include "dicova/eval.hpp"
#include "dicova/features.hpp"
#include "dicova/fusion.hpp"
#include "dicova/leaderboard.hpp"
#include "dicova/models.hpp"
#include "dicova/pipeline.hpp"
