// Copyright 2026 The CR-FS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRFS_COMMON_H_
#define CRFS_COMMON_H_

#include <stdexcept>
#include <string>

namespace crfs {

// All library failures surface as crfs::Error. The harness prefixes the
// message with the pipeline stage that raised it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Formats a double with 17 significant digits, the precision used by every
// CSV and JSON artifact so that values round-trip exactly.
std::string FormatDouble(double value);

}  // namespace crfs

#endif  // CRFS_COMMON_H_
