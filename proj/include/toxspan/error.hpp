#pragma once

#include <stdexcept>
#include <string>

namespace toxspan {

/// Base error for everything the toolkit can reject: malformed files,
/// invalid configs, contract violations. Messages name the offending
/// row/id/field where one exists.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace toxspan
