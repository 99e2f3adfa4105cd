#pragma once

#include <string>

namespace tda {

// Shortest round-trip decimal form; identical bytes on every run.
std::string fmt_num(double v);

}  // namespace tda
