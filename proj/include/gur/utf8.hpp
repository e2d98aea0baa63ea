// Copyright 2026 The GUR Authors
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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gur {

// Decodes UTF-8 into code points. Invalid byte sequences decode to U+FFFD,
// one replacement per rejected byte, so decoding never fails and the total
// is always recoverable by encode().
std::vector<char32_t> utf8_decode(std::string_view s);

std::string utf8_encode(const std::vector<char32_t>& cps);
void utf8_append(std::string& out, char32_t cp);

// Code point count of a UTF-8 string without materializing the decode.
std::size_t utf8_length(std::string_view s);

// CJK unified ideographs (URO + extension A) plus the compatibility block.
bool is_cjk(char32_t cp);

// ASCII [A-Za-z0-9].
bool is_latin_alnum(char32_t cp);

bool is_ascii_space(char32_t cp);

// Punctuation stripped by normalize(): ASCII punctuation plus common
// full-width CJK marks (。，！？、；：「」『』（）《》【】 and friends).
bool is_punct(char32_t cp);

// Sentence terminators. ASCII .!? end a sentence only when followed by
// whitespace or end of text; the full-width 。！？… always end one.
bool is_ascii_terminator(char32_t cp);
bool is_cjk_terminator(char32_t cp);

}  // namespace gur
