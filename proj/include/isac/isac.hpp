// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef ISAC_ISAC_HPP
#define ISAC_ISAC_HPP

#include "isac/constellation.hpp"
#include "isac/core_model.hpp"
#include "isac/experiments.hpp"
#include "isac/metrics.hpp"
#include "isac/mmse_receiver.hpp"
#include "isac/rng.hpp"
#include "isac/sic_receiver.hpp"
#include "isac/types.hpp"
#include "isac/validation.hpp"

#endif
