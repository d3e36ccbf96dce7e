#ifndef MLKF_VERSION_HPP
#define MLKF_VERSION_HPP

namespace mlkf {

#ifdef MLKF_VERSION
inline constexpr const char* version = MLKF_VERSION;
#else
inline constexpr const char* version = "0.1.0";
#endif

}  // namespace mlkf

#endif  // MLKF_VERSION_HPP
