#include "dragprof/errors.hpp"

#include <fmt/format.h>

namespace dragprof {

OutOfMemory::OutOfMemory(std::size_t requested, std::size_t capacity)
    : Error(fmt::format("out of memory: {} slot(s) requested, heap capacity {} slots",
                        requested, capacity)),
      requested_(requested) {}

LogFormatError::LogFormatError(std::size_t line, const std::string& what)
    : Error(fmt::format("line {}: {}", line, what)), line_(line) {}

SyntaxError::SyntaxError(std::size_t line, std::size_t column, const std::string& what)
    : Error(fmt::format("{}:{}: {}", line, column, what)), line_(line), column_(column) {}

}  // namespace dragprof
