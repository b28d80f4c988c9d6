// Copyright 2026 The IFTS Emulator Authors
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

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ifts {

// The rfm operator tool. `args` excludes the program name. `env_state` is
// the RFM_STATE value, if set. Returns the process exit status.
int rfm_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             std::optional<std::string> env_state = std::nullopt);

}  // namespace ifts
