// asem/format.h

// Copyright 2026  The asem authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ASEM_FORMAT_H_
#define ASEM_FORMAT_H_

#include <string>
#include <string_view>
#include <vector>

namespace asem {

/// Shortest decimal that parses back to the same value.
std::string FormatShortest(double value);
std::string FormatShortest(float value);

/// Strict parse of a whole field; throws a data error naming `what`.
double ParseDouble(std::string_view text, std::string_view what);
float ParseFloat(std::string_view text, std::string_view what);

std::vector<std::string_view> SplitOn(std::string_view text, char sep);

}  // namespace asem

#endif  // ASEM_FORMAT_H_
