// Copyright 2026 The Sentry Authors. All rights reserved.
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

#include <string>

#include "sentry/camera_model.hpp"

namespace sentry {

/// Baseline JPEG of a gray or RGB image. quality in [1, 100].
std::string encode_jpeg(const ImageBuffer& img, int quality = 80);

/// Decodes to RGB or gray as stored. Throws ParseError on corrupt data.
ImageBuffer decode_jpeg(const std::string& bytes);

}  // namespace sentry
