// Copyright 2026 The hybsem Authors
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

#ifndef HYBSEM_HYBSEM_HPP
#define HYBSEM_HYBSEM_HPP

#include "hybsem/analytic_belief.hpp"
#include "hybsem/estimators.hpp"
#include "hybsem/gaussian_factor_graph.hpp"
#include "hybsem/harness/brute_force.hpp"
#include "hybsem/harness/experiment.hpp"
#include "hybsem/harness/oracle_check.hpp"
#include "hybsem/harness/results.hpp"
#include "hybsem/hybrid_belief.hpp"
#include "hybsem/hypothesis.hpp"
#include "hybsem/methods.hpp"
#include "hybsem/numeric.hpp"
#include "hybsem/particle_filter.hpp"
#include "hybsem/planner.hpp"
#include "hybsem/random.hpp"
#include "hybsem/rao_blackwell.hpp"
#include "hybsem/roadmap.hpp"
#include "hybsem/samplers.hpp"
#include "hybsem/scenario.hpp"
#include "hybsem/weight_recursion.hpp"

#endif  // HYBSEM_HYBSEM_HPP
