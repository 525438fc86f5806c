#pragma once

#include <stdexcept>
#include <string>

namespace qfl {

/// Bad or inconsistent experiment configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A pipeline stage was invoked before the stage it depends on. CLI exit code 3.
class MissingPrerequisite : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An on-disk artifact no longer matches its recorded digest. CLI exit code 4.
class IntegrityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace qfl
