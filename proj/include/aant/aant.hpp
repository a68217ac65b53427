// Copyright 2026 The AANT Authors.
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

#ifndef AANT_AANT_HPP_
#define AANT_AANT_HPP_

#include "aant/alert_feedback.hpp"
#include "aant/autograd.hpp"
#include "aant/checkpoint.hpp"
#include "aant/config.hpp"
#include "aant/data_model.hpp"
#include "aant/error.hpp"
#include "aant/evaluation.hpp"
#include "aant/fusion.hpp"
#include "aant/pipeline.hpp"
#include "aant/report_corpus.hpp"
#include "aant/rng.hpp"
#include "aant/robustness.hpp"
#include "aant/selfcheck.hpp"
#include "aant/text_branch.hpp"
#include "aant/training.hpp"
#include "aant/visual_branch.hpp"

#endif  // AANT_AANT_HPP_
