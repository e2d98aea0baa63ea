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

#include <string>
#include <string_view>
#include <vector>

namespace gur {

// Rule-based sentence splitter. ASCII . ! ? end a sentence when followed by
// whitespace or end of text; full-width 。！？… end one unconditionally
// (CJK text carries no spaces). Sentences are trimmed; empties are dropped.
std::vector<std::string> split_sentences(std::string_view doc_text);

// Lowercases ASCII letters, deletes punctuation, collapses whitespace runs
// to single spaces and trims. Idempotent.
std::string normalize(std::string_view sentence);

}  // namespace gur
