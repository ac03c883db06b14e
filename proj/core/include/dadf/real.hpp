// Copyright 2026 The DADF Authors. All rights reserved.
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

// Build-wide scalar type. The f64 flavour of the library is compiled with
// DADF_REAL_F64 and lives in a distinct inline namespace, so both flavours
// can be linked into one binary without symbol clashes.

#if defined(DADF_REAL_F64)
#define DADF_NAMESPACE_BEGIN \
  namespace dadf {           \
  inline namespace f64 {
#else
#define DADF_NAMESPACE_BEGIN \
  namespace dadf {           \
  inline namespace f32 {
#endif
#define DADF_NAMESPACE_END \
  }                        \
  }

DADF_NAMESPACE_BEGIN

#if defined(DADF_REAL_F64)
using Real = double;
inline constexpr bool kRealIsDouble = true;
#else
using Real = float;
inline constexpr bool kRealIsDouble = false;
#endif

DADF_NAMESPACE_END
