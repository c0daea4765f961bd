// Copyright (c) 2026 The poivox Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header: synthetic-speech detection by speaker verification.

#ifndef POIVOX_POIVOX_HPP_
#define POIVOX_POIVOX_HPP_

#include "poivox/augment.hpp"      // IWYU pragma: export
#include "poivox/config.hpp"       // IWYU pragma: export
#include "poivox/embedding.hpp"    // IWYU pragma: export
#include "poivox/error.hpp"        // IWYU pragma: export
#include "poivox/frontend.hpp"     // IWYU pragma: export
#include "poivox/manifest.hpp"     // IWYU pragma: export
#include "poivox/metrics.hpp"      // IWYU pragma: export
#include "poivox/protocol.hpp"     // IWYU pragma: export
#include "poivox/rng.hpp"          // IWYU pragma: export
#include "poivox/synthetic.hpp"    // IWYU pragma: export
#include "poivox/verification.hpp" // IWYU pragma: export
#include "poivox/waveform.hpp"     // IWYU pragma: export

#endif  // POIVOX_POIVOX_HPP_
