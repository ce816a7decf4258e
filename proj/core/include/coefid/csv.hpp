// Copyright 2026 The coefid Authors. All Rights Reserved.
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
#include <string_view>
#include <vector>

namespace coefid::csv {

/// `%.17g`: lossless, locale-independent '.' decimal separator.
std::string format(double v);

std::vector<std::string> split(std::string_view line);

/// Strict parse of a full field; throws InvalidInput on trailing garbage.
double parse_double(std::string_view field);

}  // namespace coefid::csv
