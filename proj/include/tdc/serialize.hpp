#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tdc/matrix.hpp"

namespace tdc {

// Named-tensor blob: raw little-endian doubles with shape headers. Raw
// doubles round-trip exactly, which is what makes save/load reproduce
// inference bit-compatibly.
void save_named_tensors(const std::string& path,
                        const std::vector<std::pair<std::string, const Matrix*>>& tensors);
std::map<std::string, Matrix> load_named_tensors(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace tdc
