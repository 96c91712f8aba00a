// Copyright 2026 The CamLens Authors.
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

#ifndef CAMLENS_CAMLENS_HPP
#define CAMLENS_CAMLENS_HPP

#include "camlens/cam.hpp"
#include "camlens/capture_store.hpp"
#include "camlens/classify.hpp"
#include "camlens/fixtures.hpp"
#include "camlens/image.hpp"
#include "camlens/kernels.hpp"
#include "camlens/manifest.hpp"
#include "camlens/model.hpp"
#include "camlens/service.hpp"
#include "camlens/tensor.hpp"
#include "camlens/weights.hpp"

#endif  // CAMLENS_CAMLENS_HPP
