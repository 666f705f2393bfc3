#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace vsg {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <class T, class... Rest>
void format_into(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  format_into(os, rest...);
}
}  // namespace detail

template <class Err = std::runtime_error, class... Parts>
[[noreturn]] void fail(const Parts&... parts) {
  std::ostringstream os;
  detail::format_into(os, parts...);
  throw Err(os.str());
}

}  // namespace vsg

#define VSG_CHECK(cond, ...)                      \
  do {                                            \
    if (!(cond)) ::vsg::fail(__VA_ARGS__);        \
  } while (0)

#define VSG_CHECK_SHAPE(cond, ...)                                \
  do {                                                            \
    if (!(cond)) ::vsg::fail<::vsg::ShapeError>(__VA_ARGS__);     \
  } while (0)
