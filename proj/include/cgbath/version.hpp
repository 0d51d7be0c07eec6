// version.hpp

#pragma once

namespace cgbath {

inline const char* version() { return "0.1.0"; }

} // namespace cgbath
