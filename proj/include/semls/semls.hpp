/* Copyright 2026 The semls Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Umbrella header for the library (the CLI lives in semls/cli.hpp).

#pragma once

#include "semls/acl.hpp"
#include "semls/bam.hpp"
#include "semls/core.hpp"
#include "semls/detector_numerics.hpp"
#include "semls/evaluator.hpp"
#include "semls/geometry3d.hpp"
#include "semls/io.hpp"
#include "semls/lcd.hpp"
#include "semls/refine.hpp"
#include "semls/repeatability.hpp"
#include "semls/selfcheck.hpp"
#include "semls/tensor.hpp"
