// Copyright 2026 The cootest Authors
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

#ifndef COOTEST__BASE64_HPP_
#define COOTEST__BASE64_HPP_

#include <string>
#include <string_view>

namespace cootest
{

std::string base64_encode(std::string_view bytes);
/// Throws FormatError on characters outside the standard alphabet or bad padding.
std::string base64_decode(std::string_view text);

}  // namespace cootest

#endif  // COOTEST__BASE64_HPP_
